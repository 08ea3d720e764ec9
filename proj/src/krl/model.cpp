#include "krlab/krl/model.hpp"

#include <cmath>

namespace krlab::krl {

namespace {

// Allocates one operator network and returns its layout.
template <typename L>
L alloc_operator(size_t& cursor, uint32_t d, uint32_t depth) {
    L lay{};
    uint32_t in = 2 * d;
    for (uint32_t k = 0; k + 1 < depth; ++k) {
        lay.layer_w.push_back(cursor);
        cursor += size_t(d) * in;
        lay.layer_b.push_back(cursor);
        cursor += d;
        in = d;
    }
    lay.head_in = in;
    lay.head_c = cursor;
    cursor += size_t(d) * in;
    lay.head_o = cursor;
    cursor += size_t(d) * in;
    return lay;
}

}  // namespace

EntityModel::EntityModel(const ModelSpec& spec, uint32_t n_entities, uint32_t n_relations,
                         uint64_t init_seed)
    : spec_(spec), n_entities_(n_entities), n_relations_(n_relations), init_seed_(init_seed) {
    require(spec.dim >= 1 && spec.depth >= 1, "model needs dim >= 1 and depth >= 1");
    size_t cursor = size_t(n_entities) * spec.dim;
    proj_layout_.reserve(n_relations);
    for (uint32_t r = 0; r < n_relations; ++r) {
        auto lay = alloc_operator<ProjectionLayout>(cursor, spec.dim, spec.depth);
        lay.center_bias = cursor;
        cursor += spec.dim;
        lay.offset_bias = cursor;
        cursor += spec.dim;
        proj_layout_.push_back(lay);
    }
    inter_layout_ = alloc_operator<OperatorLayout>(cursor, spec.dim, spec.depth);
    params_.assign(cursor, 0.0);
    init_params();
}

void EntityModel::init_params() {
    Rng rng = make_rng(derive_seed(init_seed_, "model_init"));
    uint32_t d = spec_.dim;

    for (size_t i = 0; i < entity_block_size(); ++i)
        params_[i] = rand_uniform(rng, -spec_.init_scale, spec_.init_scale);

    // Hidden layers get small uniform weights; both heads start at zero so an
    // untrained projection moves a center by exactly its relation translation
    // and an untrained intersection is a plain attention-free average.
    auto init_operator = [&](const OperatorLayout& lay) {
        uint32_t in = 2 * d;
        for (size_t k = 0; k < lay.layer_w.size(); ++k) {
            double bound = 1.0 / std::sqrt(double(in));
            for (size_t i = 0; i < size_t(d) * in; ++i)
                params_[lay.layer_w[k] + i] = rand_uniform(rng, -bound, bound);
            in = d;
        }
    };
    for (uint32_t r = 0; r < n_relations_; ++r) {
        const ProjectionLayout& lay = proj_layout_[r];
        init_operator(lay);
        for (uint32_t i = 0; i < d; ++i)
            params_[lay.center_bias + i] = rand_uniform(rng, -spec_.init_scale, spec_.init_scale);
        // softplus(-1) ~ 0.31: untrained boxes grow modestly per hop
        for (uint32_t i = 0; i < d; ++i)
            params_[lay.offset_bias + i] = -1.0 + 0.1 * rand_uniform(rng, -1.0, 1.0);
    }
    init_operator(inter_layout_);
}

}  // namespace krlab::krl
