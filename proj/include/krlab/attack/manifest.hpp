#pragma once

#include <json.hpp>

#include "krlab/attack/co.hpp"
#include "krlab/attack/kp.hpp"
#include "krlab/attack/qp.hpp"
#include "krlab/kg/graph.hpp"

namespace krlab::attack {

// JSON records of an attack run — config echo, seeds, poison facts,
// perturbation paths, loss traces — consumed by the defense audit and the
// scenario reports. All objects use ordered keys so dumps are reproducible
// byte for byte.
nlohmann::ordered_json config_json(const AttackConfig& cfg, const kg::KnowledgeGraph& g);
nlohmann::ordered_json poison_json(const kg::KnowledgeGraph& g, const PoisonSet& ps);
nlohmann::ordered_json kp_manifest(const kg::KnowledgeGraph& g, const AttackConfig& cfg,
                                   uint64_t seed, const KpResult& res);
nlohmann::ordered_json qp_manifest(const kg::KnowledgeGraph& g, const AttackConfig& cfg,
                                   const kg::EntityQuery& original, const QpResult& res);
nlohmann::ordered_json co_manifest(const kg::KnowledgeGraph& g, const AttackConfig& cfg,
                                   uint64_t seed, std::span<const kg::EntityQuery> originals,
                                   const CoResult& res);

}  // namespace krlab::attack
