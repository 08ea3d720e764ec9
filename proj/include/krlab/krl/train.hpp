#pragma once

#include <span>
#include <vector>

#include "krlab/kg/compute_graph.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"
#include "krlab/krl/ops.hpp"

namespace krlab::krl {

struct TrainOptions {
    bool freeze_entities = false;   // train operators only
    bool freeze_operators = false;  // train the entity table only
};

// One ranking example with explicit negatives; the loss is
//   softplus(d(pos, box) - margin) + (1/k) * sum_j softplus(margin - d(neg_j, box)).
struct LossExample {
    const kg::ComputeGraph* cg = nullptr;
    kg::EIdx positive = 0;
    std::vector<kg::EIdx> negatives;
};

// Returns the example loss and accumulates `scale` times its gradient into
// `gs`. Pass a sink with null targets for a loss-only evaluation.
double margin_loss_and_grad(const ParamSource& ps, const LossExample& ex, double scale,
                            GradSink& gs);

// A query lowered for training: compute graph, answer set (negative-sampling
// exclusions), and the sink category supplying candidates.
struct TrainQuery {
    kg::ComputeGraph cg;
    std::vector<kg::EIdx> answers;  // sorted
    kg::CIdx sink_cat = 0;
};

TrainQuery lower_for_training(const kg::KnowledgeGraph& g, const kg::EntityQuery& q);

struct TrainReport {
    std::vector<double> epoch_loss;  // mean item loss per epoch
    uint64_t steps = 0;              // optimizer steps taken
};

// Margin-loss trainer over a fixed query set with dense Adam updates.
// Deterministic for a fixed seed: epoch e shuffles and samples negatives from
// a stream derived only from (seed, e), so callers that inject per-epoch
// extras from their own streams do not disturb the base schedule.
class Trainer {
public:
    Trainer(const kg::KnowledgeGraph& g, EntityModel& model,
            std::vector<TrainQuery> queries, TrainOptions opts, uint64_t seed);

    // One pass over the base queries plus `extra` (this epoch only). Every
    // (query, answer) pair contributes one item.
    void run_epoch(std::span<const TrainQuery> extra = {});

    const TrainReport& report() const { return report_; }
    uint32_t epoch() const { return epoch_; }
    const EntityModel& model() const { return *model_; }

private:
    const kg::KnowledgeGraph* g_;
    EntityModel* model_;
    std::vector<TrainQuery> queries_;
    TrainOptions opts_;
    uint64_t seed_;
    uint32_t epoch_ = 0;
    uint64_t step_ = 0;
    Vec grad_, m_, v_;
    TrainReport report_;

    void adam_step(double lr);
};

// Initializes a model and trains it for spec.epochs passes. The model's
// initialization stream and the batch schedule derive from `seed` alone.
struct TrainResult {
    EntityModel model;
    TrainReport report;
};

TrainResult train_entity_model(const kg::KnowledgeGraph& g,
                               const std::vector<kg::EntityQuery>& queries,
                               const ModelSpec& spec, uint64_t seed,
                               TrainOptions opts = {});

// Continues training an existing model for `epochs` extra passes (surrogate
// refits between attack rounds).
TrainReport refit_entity_model(const kg::KnowledgeGraph& g, EntityModel& model,
                               const std::vector<kg::EntityQuery>& queries, uint32_t epochs,
                               uint64_t seed, TrainOptions opts = {});

}  // namespace krlab::krl
