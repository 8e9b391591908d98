#pragma once

#include <span>
#include <vector>

#include "educhain/chain/chain_state.hpp"
#include "educhain/chain/events.hpp"
#include "educhain/ledger/block.hpp"
#include "educhain/state/final_state_db.hpp"

namespace educhain::chain {

// validate_block plus the per-transaction admission rules (nonce, shape,
// permission) run in order against `state`, which advances past every
// admissible tx. A block with any violation must be rejected whole.
std::vector<ledger::Violation> validate_block_against(const ledger::Block& block, const ledger::BlockHeader& parent,
                                                      const ledger::ChainConfig& config, ChainState& state);

// One event per transaction, in block order.
std::vector<ChainEvent> events_of(const ledger::Block& block);

// Both throw Error(InvalidChain) unless chain[0] is the configured genesis
// and every later block validates against its predecessor. An empty span
// folds to the genesis state.
ChainState replay_chain(std::span<const ledger::Block> chain, const ledger::ChainConfig& config);
// Fresh final-state database folded from the chain's events: the audit's
// adjudication oracle. The resulting op log is replay-local.
state::FinalStateDb replay_state(std::span<const ledger::Block> chain, const ledger::ChainConfig& config);

}  // namespace educhain::chain
