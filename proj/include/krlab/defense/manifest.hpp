#pragma once

#include <cstdint>

#include <json.hpp>

#include "krlab/defense/defense.hpp"
#include "krlab/kg/graph.hpp"

namespace krlab::defense {

// Reproducible (ordered-key) JSON reports for defense runs; the harness
// attaches pre/post ranking metrics around these.
nlohmann::ordered_json defense_config_json(const DefenseConfig& cfg);
nlohmann::ordered_json prune_json(const kg::KnowledgeGraph& g, const PruneResult& res);
nlohmann::ordered_json advtrain_json(const AdvTrainResult& res);
nlohmann::ordered_json defense_manifest(const kg::KnowledgeGraph& g, const DefenseConfig& cfg,
                                        uint64_t seed, const IntegratedResult& res);

}  // namespace krlab::defense
