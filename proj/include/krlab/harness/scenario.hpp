#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "krlab/attack/config.hpp"
#include "krlab/defense/defense.hpp"
#include "krlab/harness/report.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"

namespace krlab::harness {

// Fully declarative experiment description. Every stage derives its own
// randomness from the run seed, so a scenario plus a seed pins the entire
// pipeline: KG -> trigger -> queries -> holdout -> training -> attack ->
// defense -> reports.
struct ScenarioConfig {
    std::string name = "scenario";

    // KG source: a directory wins over the generator preset.
    std::string kg_dir;
    double kg_scale = 0.05;

    // Query sampling.
    uint32_t n_target = 8;
    uint32_t n_rest = 24;
    kg::StructureTag tag{2, 2};
    std::string sink_category = "mitigation";
    std::vector<std::string> anchor_categories;  // empty -> all anchor-eligible
    uint32_t max_answers = 50;

    // Trigger pattern: n_anchors entities sampled from anchor_category, plus
    // a fixed relation path ending at the sink category.
    std::string trigger_anchor_category = "product";
    std::vector<std::string> trigger_rels = {"vulnerable_to", "fixable_by"};
    uint32_t trigger_n_anchors = 1;

    // Holdout: "none", "facts" (witness-path fact removal), or
    // "answer_entities" (zero-day style category removal).
    std::string holdout_mode = "none";
    double holdout_fraction = 0.0;
    std::string holdout_category = "cve";

    krl::ModelSpec model;  // desk-scale defaults installed by the constructor

    // Attack: "none", "kp", "qp", or "co".
    std::string attack_vector = "none";
    attack::AttackConfig attack;  // trigger/target filled per seed
    std::string target_entity = "auto";  // entity id, or "auto" to sample

    // Defense: "none", "filter", "advtrain", or "both".
    std::string defense_mode = "none";
    defense::DefenseConfig defense;

    uint32_t k_ndcg = 5;
    uint32_t k_hit = 1;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    uint32_t workers = 1;

    ScenarioConfig();

    std::string attack_objective_string() const;
    void validate() const;
    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig from_file(const std::filesystem::path& file);
    nlohmann::ordered_json to_json() const;

    // Flat overrides using the standard config key names: dim, lr, batch,
    // epochs, n_kp, n_qp, n_iter, n_qp_d, m, lambda, alpha, K.
    void apply_flat_overrides(const nlohmann::json& j);
};

// Everything one seed produced, kept in memory for aggregation and written
// to <out>/seed_<seed>/run.json.
struct SeedRun {
    uint64_t seed = 0;
    RankingReport baseline, attacked;
    bool has_defense = false;
    RankingReport defended;
    nlohmann::ordered_json record;  // full artifact json
};

SeedRun run_seed(const ScenarioConfig& c, uint64_t seed);

// Runs every seed, writes per-seed artifacts, scenario echo, and the
// cross-seed summary (per-metric per-seed values plus medians and deltas)
// into `out`. Returns the summary json.
nlohmann::ordered_json run_scenario(const ScenarioConfig& c, const std::filesystem::path& out);

// One column of a surrogate-knowledge comparison grid.
struct SurrogateVariant {
    std::string label;
    bool encoder_known = false;
    bool operator_known = false;
    attack::SurrogateSpec spec;
};

// Repeats attack crafting per variant against the same per-seed victim and
// reports the attacked metrics side by side. Writes grid.json into `out`.
nlohmann::ordered_json surrogate_grid(const ScenarioConfig& c,
                                      std::span<const SurrogateVariant> variants,
                                      const std::filesystem::path& out);

// Poison-budget x perturbation-budget sweep on the targeted co pipeline
// (one round: poison, retrain victim, perturb). The poisoning and victim
// retraining are shared across the n_qp axis. Writes sweep.json into `out`.
nlohmann::ordered_json budget_sweep(const ScenarioConfig& c, std::span<const uint32_t> n_kps,
                                    std::span<const uint32_t> n_qps,
                                    const std::filesystem::path& out);

double median(std::vector<double> v);

}  // namespace krlab::harness
