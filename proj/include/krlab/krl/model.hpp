#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "krlab/common.hpp"
#include "krlab/kg/graph.hpp"

namespace krlab::krl {

// Axis-aligned box in embedding space: center plus nonnegative offset.
struct Box {
    Vec center;
    Vec offset;

    explicit Box(size_t d = 0) : center(d, 0.0), offset(d, 0.0) {}
};

// Defaults are the full-scale values (dim 400, lr 1e-3, batch 512, Adam,
// 2-layer operator networks); desk-scale runs shrink dim/batch/epochs via
// config. `epochs` counts passes over the training query set.
struct ModelSpec {
    uint32_t dim = 400;
    uint32_t depth = 2;        // fully-connected layers per operator network
    double alpha = 0.2;        // inside-distance weight
    double margin = 12.0;      // ranking margin gamma_m
    double lr = 1e-3;
    uint32_t batch = 512;
    uint32_t epochs = 400;
    uint32_t neg_k = 16;       // negatives per positive
    double init_scale = 0.5;   // entity embeddings ~ U(-init_scale, init_scale)
};

// Offsets of one operator network inside the flat parameter vector.
// Layer 0 maps the 2d box encoding to d; layers 1..depth-2 map d to d; two
// heads (center, offset) read the last hidden layer. With depth == 1 there
// are no hidden layers and the heads read the 2d encoding directly.
struct OperatorLayout {
    std::vector<size_t> layer_w;  // depth-1 hidden weight blocks
    std::vector<size_t> layer_b;
    size_t head_c = 0;            // d x head_in
    size_t head_o = 0;            // d x head_in
    size_t head_in = 0;           // d, or 2d when depth == 1
};

struct ProjectionLayout : OperatorLayout {
    size_t center_bias = 0;  // per-relation translation t_r
    size_t offset_bias = 0;  // per-relation offset growth w_r
};

// Box-embedding query model: an entity table plus per-relation projection
// networks and one shared intersection network, all in one flat parameter
// vector so the optimizer and serialization stay trivial.
class EntityModel {
public:
    EntityModel() = default;
    EntityModel(const ModelSpec& spec, uint32_t n_entities, uint32_t n_relations,
                uint64_t init_seed);

    const ModelSpec& spec() const { return spec_; }
    uint32_t dim() const { return spec_.dim; }
    uint32_t n_entities() const { return n_entities_; }
    uint32_t n_relations() const { return n_relations_; }

    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    const double* entity(kg::EIdx v) const { return params_.data() + size_t(v) * spec_.dim; }
    double* entity_mut(kg::EIdx v) { return params_.data() + size_t(v) * spec_.dim; }
    size_t entity_offset(kg::EIdx v) const { return size_t(v) * spec_.dim; }
    size_t entity_block_size() const { return size_t(n_entities_) * spec_.dim; }

    const ProjectionLayout& projection(kg::RIdx r) const { return proj_layout_[r]; }
    const OperatorLayout& intersection() const { return inter_layout_; }

    uint64_t init_seed() const { return init_seed_; }

private:
    ModelSpec spec_;
    uint32_t n_entities_ = 0;
    uint32_t n_relations_ = 0;
    uint64_t init_seed_ = 0;
    Vec params_;
    std::vector<ProjectionLayout> proj_layout_;
    OperatorLayout inter_layout_;

    void init_params();
};

}  // namespace krlab::krl
