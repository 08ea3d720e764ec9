#include "krlab/attack/surrogate.hpp"

#include <algorithm>

#include "krlab/krl/train.hpp"

namespace krlab::attack {

AttackerView make_surrogate(const kg::KnowledgeGraph& g_visible,
                            const std::vector<kg::EntityQuery>& train_queries,
                            const krl::EntityModel& victim, const AttackConfig& cfg,
                            uint64_t seed) {
    AttackerView view;
    view.victim = &victim;
    if (cfg.encoder_known && cfg.operator_known) return view;  // full knowledge

    krl::ModelSpec spec = victim.spec();
    if (!cfg.encoder_known && !cfg.operator_known) {
        spec.dim = cfg.surrogate.dim;
        spec.depth = cfg.surrogate.depth;
        krl::TrainResult tr = krl::train_entity_model(g_visible, train_queries, spec, seed);
        view.surrogate = std::make_unique<krl::EntityModel>(std::move(tr.model));
        return view;
    }

    // Partial knowledge: the copied block must fit the victim's layout.
    require(cfg.surrogate.dim == victim.dim() && cfg.surrogate.depth == spec.depth,
            "surrogate: copying a known block requires the victim's architecture");
    require(victim.n_entities() == g_visible.num_entities() &&
                victim.n_relations() == g_visible.num_relations(),
            "surrogate: victim was trained on a different vocabulary");

    // Seed derivations mirror the standalone trainer so the fresh block's
    // stream is independent of which block was copied.
    krl::EntityModel m(spec, victim.n_entities(), victim.n_relations(),
                       derive_seed(seed, "model_init"));
    size_t eb = m.entity_block_size();
    krl::TrainOptions opts;
    if (cfg.encoder_known) {
        std::copy(victim.params().begin(), victim.params().begin() + ptrdiff_t(eb),
                  m.params().begin());
        opts.freeze_entities = true;  // train the operators around the known table
    } else {
        std::copy(victim.params().begin() + ptrdiff_t(eb), victim.params().end(),
                  m.params().begin() + ptrdiff_t(eb));
        opts.freeze_operators = true;  // fit an entity table to the known operators
    }

    std::vector<krl::TrainQuery> tq;
    tq.reserve(train_queries.size());
    for (const kg::EntityQuery& q : train_queries)
        tq.push_back(krl::lower_for_training(g_visible, q));
    krl::Trainer t(g_visible, m, std::move(tq), opts, derive_seed(seed, "train"));
    for (uint32_t e = 0; e < spec.epochs; ++e) t.run_epoch();

    view.surrogate = std::make_unique<krl::EntityModel>(std::move(m));
    return view;
}

}  // namespace krlab::attack
