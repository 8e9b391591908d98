#pragma once

#include <cstdint>
#include <variant>

#include "educhain/ledger/digest.hpp"
#include "educhain/ledger/keys.hpp"
#include "educhain/ledger/record_op.hpp"

namespace educhain::chain {

// One per applied transaction, emitted in chain order.
struct ChainEvent {
    std::uint64_t blockHeight = 0;
    ledger::Hash256 txHash;
    ledger::RecordOp op;
    ledger::AccountId actor;
    std::uint64_t timestamp = 0;
};

// Emitted on reorg: every event above `toHeight` is void. Consumers restore
// their state from the chain prefix [0, toHeight].
struct RollbackEvent {
    std::uint64_t toHeight = 0;
};

using NodeEvent = std::variant<ChainEvent, RollbackEvent>;

}  // namespace educhain::chain
