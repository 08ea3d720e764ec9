#pragma once

#include <string>

#include "krlab/krl/model.hpp"
#include "krlab/krl/relation.hpp"

namespace krlab::krl {

// Versioned little-endian binary checkpoints. Doubles are stored by bit
// pattern, so save/load round-trips are exact.
void save_entity_model(const EntityModel& m, const std::string& path);
EntityModel load_entity_model(const std::string& path);

void save_relation_scorer(const RelationScorer& s, const std::string& path);
RelationScorer load_relation_scorer(const std::string& path);

}  // namespace krlab::krl
