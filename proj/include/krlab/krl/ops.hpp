#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "krlab/kg/compute_graph.hpp"
#include "krlab/krl/model.hpp"

namespace krlab::krl {

// Parameter view: the model plus an optional overlay of entity rows. Attack
// optimizers edit overlaid rows while the model itself stays untouched.
struct ParamSource {
    const EntityModel* model = nullptr;
    const std::map<kg::EIdx, Vec>* entity_overlay = nullptr;

    const double* entity(kg::EIdx v) const {
        if (entity_overlay) {
            auto it = entity_overlay->find(v);
            if (it != entity_overlay->end()) return it->second.data();
        }
        return model->entity(v);
    }
    uint32_t dim() const { return model->dim(); }
    const ModelSpec& spec() const { return model->spec(); }
};

// Gradient routing: operator parameters and plain entity rows accumulate into
// `dense` (param-aligned, may be null when frozen); overlaid entity rows
// accumulate into `entity_overlay` (may be null).
struct GradSink {
    Vec* dense = nullptr;
    std::map<kg::EIdx, Vec>* entity_overlay = nullptr;

    void add_param(size_t offset, const double* g, size_t n);
    void add_entity(const ParamSource& ps, kg::EIdx v, const double* g, size_t n);
};

struct ProjTape {
    kg::RIdx rel = 0;
    Box in;
    std::vector<Vec> hidden;  // post-tanh activations, one per hidden layer
    Vec pre_offset;           // offset head pre-softplus
    Box out;
};

struct InterTape {
    std::vector<uint32_t> perm;  // canonical position -> caller position
    std::vector<Box> in;         // canonical order
    std::vector<std::vector<Vec>> hidden;  // per input, per layer
    std::vector<Vec> ac, ao;     // attention head outputs per input
    std::vector<Vec> alpha, beta;
    Box out;
};

Box anchor_box(const ParamSource& ps, kg::EIdx v);

void project_forward(const ParamSource& ps, kg::RIdx r, const Box& in, ProjTape& t);
// Adds parameter gradients to `gs` and input-box gradients to dc_in/do_in.
void project_backward(const ParamSource& ps, const ProjTape& t, const Vec& dc, const Vec& dz,
                      GradSink& gs, Vec& dc_in, Vec& do_in);

// Permutation-invariant bitwise: inputs are canonicalized by content before
// any accumulation; a singleton passes through exactly.
void intersect_forward(const ParamSource& ps, const std::vector<const Box*>& ins, InterTape& t);
// d_ins are per caller-position input gradients (accumulated into).
void intersect_backward(const ParamSource& ps, const InterTape& t, const Vec& dc, const Vec& dz,
                        GradSink& gs, std::vector<Vec>& dc_ins, std::vector<Vec>& do_ins);

// dist(p, box) = sum(max(0, |p-c|-o)) + alpha * sum(min(|p-c|, o))
double box_distance(const ParamSource& ps, const double* point, const Box& b);
void box_distance_backward(const ParamSource& ps, const double* point, const Box& b, double dd,
                           double* dpoint, double* dc, double* dz);

struct QueryTape {
    std::vector<Box> slot;          // box per compute-graph slot
    std::vector<ProjTape> proj;     // per project step, in step order
    std::vector<InterTape> inter;   // per intersect step, in step order
};

// Executes the compute graph; the query embedding is tape.slot[cg.out_slot].
QueryTape eval_query(const ParamSource& ps, const kg::ComputeGraph& cg);
const Box& query_box(const QueryTape& t, const kg::ComputeGraph& cg);

// Backpropagates a gradient on the sink box through the whole graph.
void query_backward(const ParamSource& ps, const kg::ComputeGraph& cg, const QueryTape& t,
                    const Vec& dc_out, const Vec& do_out, GradSink& gs);

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// x = softplus_inv(softplus(x)); clamps tiny inputs for the zero-offset case.
inline double softplus_inv(double y) {
    double v = std::max(y, 1e-9);
    if (v > 30.0) return v;
    return std::log(std::expm1(v));
}

}  // namespace krlab::krl
