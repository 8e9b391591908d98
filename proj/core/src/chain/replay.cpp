#include "educhain/chain/replay.hpp"

namespace educhain::chain {

using ledger::Block;
using ledger::Violation;
using ledger::ViolationKind;

std::vector<Violation> validate_block_against(const Block& block, const ledger::BlockHeader& parent,
                                              const ledger::ChainConfig& config, ChainState& state) {
    auto violations =
        ledger::validate_block(block, parent, config, [&](const ledger::AccountId& id) { return state.key_of(id); });
    bool signatures_ok = true;
    for (const auto& v : violations)
        if (v.kind == ViolationKind::BadTxSignature || v.kind == ViolationKind::UnknownSigner) signatures_ok = false;
    if (!signatures_ok) return violations;

    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        const auto& tx = block.txs[i];
        if (auto rejection = state.check(tx, /*verify_signature=*/false)) {
            violations.push_back({ViolationKind::BadTx, i,
                                  std::string(to_string(rejection->code)) + ": " + rejection->reason});
            continue;
        }
        state.apply(tx);
    }
    return violations;
}

std::vector<ChainEvent> events_of(const Block& block) {
    std::vector<ChainEvent> out;
    out.reserve(block.txs.size());
    for (const auto& tx : block.txs)
        out.push_back({block.header.height, tx.hash(), tx.op, tx.sender, tx.timestamp});
    return out;
}

namespace {

template <class OnBlock>
ChainState fold_chain(std::span<const Block> chain, const ledger::ChainConfig& config, OnBlock&& on_block) {
    if (chain.empty()) return ChainState(config);
    if (chain[0] != ledger::make_genesis(config)) throw Error(Errc::InvalidChain, "genesis differs from config");
    ChainState state(config);
    for (std::size_t h = 1; h < chain.size(); ++h) {
        auto violations = validate_block_against(chain[h], chain[h - 1].header, config, state);
        if (!violations.empty())
            throw Error(Errc::InvalidChain, "block " + std::to_string(h) + ": " + violations.front().to_string());
        on_block(chain[h]);
    }
    return state;
}

}  // namespace

ChainState replay_chain(std::span<const Block> chain, const ledger::ChainConfig& config) {
    return fold_chain(chain, config, [](const Block&) {});
}

state::FinalStateDb replay_state(std::span<const Block> chain, const ledger::ChainConfig& config) {
    state::FinalStateDb db;
    fold_chain(chain, config, [&](const Block& b) {
        for (const auto& ev : events_of(b)) db.apply_event(ev);
    });
    return db;
}

}  // namespace educhain::chain
