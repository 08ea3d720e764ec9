#include "krlab/krl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "krlab/simd/kernels.hpp"

namespace krlab::krl {

namespace s = krlab::simd;

void GradSink::add_param(size_t offset, const double* g, size_t n) {
    if (dense) s::axpy(1.0, g, dense->data() + offset, n);
}

void GradSink::add_entity(const ParamSource& ps, kg::EIdx v, const double* g, size_t n) {
    if (ps.entity_overlay && ps.entity_overlay->count(v)) {
        if (entity_overlay) {
            Vec& row = (*entity_overlay)[v];
            if (row.empty()) row.assign(n, 0.0);
            s::axpy(1.0, g, row.data(), n);
        }
        return;
    }
    if (dense) s::axpy(1.0, g, dense->data() + ps.model->entity_offset(v), n);
}

Box anchor_box(const ParamSource& ps, kg::EIdx v) {
    uint32_t d = ps.dim();
    Box b(d);
    const double* e = ps.entity(v);
    std::copy(e, e + d, b.center.begin());
    return b;  // zero offset: an entity is a point box
}

namespace {

// Shared hidden-chain forward: u (2d) -> tanh layers -> activations.
// Returns a pointer to the final features (u itself when there are none).
const Vec* run_hidden(const ParamSource& ps, const OperatorLayout& lay, const Vec& u,
                      std::vector<Vec>& hidden) {
    uint32_t d = ps.dim();
    const Vec& P = ps.model->params();
    const Vec* prev = &u;
    uint32_t in = 2 * d;
    hidden.clear();
    hidden.reserve(lay.layer_w.size());
    for (size_t k = 0; k < lay.layer_w.size(); ++k) {
        Vec h(d, 0.0);
        std::copy(P.begin() + lay.layer_b[k], P.begin() + lay.layer_b[k] + d, h.begin());
        s::matvec_acc(P.data() + lay.layer_w[k], prev->data(), h.data(), d, in);
        for (uint32_t i = 0; i < d; ++i) h[i] = std::tanh(h[i]);
        hidden.push_back(std::move(h));
        prev = &hidden.back();
        in = d;
    }
    return prev;
}

// Backward through the hidden chain: dz is the gradient on the final
// features; gradients on u are accumulated into du.
void hidden_backward(const ParamSource& ps, const OperatorLayout& lay, const Vec& u,
                     const std::vector<Vec>& hidden, Vec dz, GradSink& gs, Vec& du) {
    uint32_t d = ps.dim();
    const Vec& P = ps.model->params();
    for (size_t k = lay.layer_w.size(); k-- > 0;) {
        const Vec& h = hidden[k];
        Vec dpre(d);
        for (uint32_t i = 0; i < d; ++i) dpre[i] = dz[i] * (1.0 - h[i] * h[i]);
        const Vec& prev = (k == 0) ? u : hidden[k - 1];
        uint32_t in = (k == 0) ? 2 * d : d;
        if (gs.dense) {
            s::ger_acc(gs.dense->data() + lay.layer_w[k], dpre.data(), prev.data(), d, in);
            s::axpy(1.0, dpre.data(), gs.dense->data() + lay.layer_b[k], d);
        }
        Vec dprev(in, 0.0);
        s::matvec_t_acc(P.data() + lay.layer_w[k], dpre.data(), dprev.data(), d, in);
        if (k == 0) {
            s::axpy(1.0, dprev.data(), du.data(), 2 * d);
            return;
        }
        dz = std::move(dprev);
    }
    // No hidden layers: final features are u itself.
    s::axpy(1.0, dz.data(), du.data(), 2 * d);
}

Vec concat_box(const Box& b) {
    Vec u(b.center.size() * 2);
    std::copy(b.center.begin(), b.center.end(), u.begin());
    std::copy(b.offset.begin(), b.offset.end(), u.begin() + b.center.size());
    return u;
}

}  // namespace

void project_forward(const ParamSource& ps, kg::RIdx r, const Box& in, ProjTape& t) {
    uint32_t d = ps.dim();
    const ProjectionLayout& lay = ps.model->projection(r);
    const Vec& P = ps.model->params();

    t.rel = r;
    t.in = in;
    Vec u = concat_box(in);
    const Vec* z = run_hidden(ps, lay, u, t.hidden);

    t.out = Box(d);
    // center' = center + t_r + Hc z
    std::copy(in.center.begin(), in.center.end(), t.out.center.begin());
    s::axpy(1.0, P.data() + lay.center_bias, t.out.center.data(), d);
    s::matvec_acc(P.data() + lay.head_c, z->data(), t.out.center.data(), d, lay.head_in);
    // offset' = softplus(offset + w_r + Ho z)
    t.pre_offset.assign(in.offset.begin(), in.offset.end());
    s::axpy(1.0, P.data() + lay.offset_bias, t.pre_offset.data(), d);
    s::matvec_acc(P.data() + lay.head_o, z->data(), t.pre_offset.data(), d, lay.head_in);
    for (uint32_t i = 0; i < d; ++i) t.out.offset[i] = softplus(t.pre_offset[i]);
}

void project_backward(const ParamSource& ps, const ProjTape& t, const Vec& dc, const Vec& dz,
                      GradSink& gs, Vec& dc_in, Vec& do_in) {
    uint32_t d = ps.dim();
    const ProjectionLayout& lay = ps.model->projection(t.rel);
    const Vec& P = ps.model->params();

    Vec dpre(d);
    for (uint32_t i = 0; i < d; ++i) dpre[i] = dz[i] * sigmoid(t.pre_offset[i]);

    // direct paths: center identity + t_r, offset identity + w_r
    s::axpy(1.0, dc.data(), dc_in.data(), d);
    s::axpy(1.0, dpre.data(), do_in.data(), d);
    if (gs.dense) {
        s::axpy(1.0, dc.data(), gs.dense->data() + lay.center_bias, d);
        s::axpy(1.0, dpre.data(), gs.dense->data() + lay.offset_bias, d);
    }

    // head paths
    Vec u = concat_box(t.in);
    const Vec* z = t.hidden.empty() ? &u : &t.hidden.back();
    if (gs.dense) {
        s::ger_acc(gs.dense->data() + lay.head_c, dc.data(), z->data(), d, lay.head_in);
        s::ger_acc(gs.dense->data() + lay.head_o, dpre.data(), z->data(), d, lay.head_in);
    }
    Vec dzfeat(lay.head_in, 0.0);
    s::matvec_t_acc(P.data() + lay.head_c, dc.data(), dzfeat.data(), d, lay.head_in);
    s::matvec_t_acc(P.data() + lay.head_o, dpre.data(), dzfeat.data(), d, lay.head_in);

    Vec du(2 * d, 0.0);
    hidden_backward(ps, lay, u, t.hidden, std::move(dzfeat), gs, du);
    s::axpy(1.0, du.data(), dc_in.data(), d);
    s::axpy(1.0, du.data() + d, do_in.data(), d);
}

void intersect_forward(const ParamSource& ps, const std::vector<const Box*>& ins, InterTape& t) {
    require(!ins.empty(), "intersection of zero boxes");
    uint32_t d = ps.dim();
    size_t n = ins.size();
    const OperatorLayout& lay = ps.model->intersection();
    const Vec& P = ps.model->params();

    // Canonical input order: lexicographic by (center, offset) values. Makes
    // the accumulation order, and therefore the result, permutation-stable.
    t.perm.resize(n);
    std::iota(t.perm.begin(), t.perm.end(), 0u);
    std::sort(t.perm.begin(), t.perm.end(), [&](uint32_t a, uint32_t b) {
        const Box& A = *ins[a];
        const Box& B = *ins[b];
        if (A.center != B.center) return A.center < B.center;
        return A.offset < B.offset;
    });

    t.in.clear();
    t.in.reserve(n);
    for (uint32_t p : t.perm) t.in.push_back(*ins[p]);

    t.hidden.assign(n, {});
    t.ac.assign(n, Vec(d, 0.0));
    t.ao.assign(n, Vec(d, 0.0));
    for (size_t i = 0; i < n; ++i) {
        Vec u = concat_box(t.in[i]);
        const Vec* z = run_hidden(ps, lay, u, t.hidden[i]);
        s::matvec_acc(P.data() + lay.head_c, z->data(), t.ac[i].data(), d, lay.head_in);
        s::matvec_acc(P.data() + lay.head_o, z->data(), t.ao[i].data(), d, lay.head_in);
    }

    // Per-dimension attention over inputs; offset logits are biased by -o so
    // tighter boxes dominate, keeping the output inside the input hull.
    t.alpha.assign(n, Vec(d));
    t.beta.assign(n, Vec(d));
    t.out = Box(d);
    for (uint32_t k = 0; k < d; ++k) {
        double mc = -1e300, mo = -1e300;
        for (size_t i = 0; i < n; ++i) {
            mc = std::max(mc, t.ac[i][k]);
            mo = std::max(mo, t.ao[i][k] - t.in[i].offset[k]);
        }
        double sc = 0.0, so = 0.0;
        for (size_t i = 0; i < n; ++i) {
            t.alpha[i][k] = std::exp(t.ac[i][k] - mc);
            sc += t.alpha[i][k];
            t.beta[i][k] = std::exp(t.ao[i][k] - t.in[i].offset[k] - mo);
            so += t.beta[i][k];
        }
        double c = 0.0, o = 0.0;
        for (size_t i = 0; i < n; ++i) {
            t.alpha[i][k] /= sc;
            t.beta[i][k] /= so;
            c += t.alpha[i][k] * t.in[i].center[k];
            o += t.beta[i][k] * t.in[i].offset[k];
        }
        t.out.center[k] = c;
        t.out.offset[k] = o;
    }
    if (n == 1) t.out = t.in[0];  // singleton identity, exactly
}

void intersect_backward(const ParamSource& ps, const InterTape& t, const Vec& dc, const Vec& dz,
                        GradSink& gs, std::vector<Vec>& dc_ins, std::vector<Vec>& do_ins) {
    uint32_t d = ps.dim();
    size_t n = t.in.size();
    const OperatorLayout& lay = ps.model->intersection();
    const Vec& P = ps.model->params();

    std::vector<Vec> dac(n, Vec(d, 0.0)), dao(n, Vec(d, 0.0));
    std::vector<Vec> dcin(n, Vec(d, 0.0)), doin(n, Vec(d, 0.0));

    for (uint32_t k = 0; k < d; ++k) {
        // center head: out_c = sum_i alpha_i c_i
        double dot_a = 0.0;
        for (size_t i = 0; i < n; ++i) {
            dcin[i][k] += dc[k] * t.alpha[i][k];
            dot_a += t.alpha[i][k] * (dc[k] * t.in[i].center[k]);
        }
        for (size_t i = 0; i < n; ++i)
            dac[i][k] = t.alpha[i][k] * (dc[k] * t.in[i].center[k] - dot_a);
        // offset head: out_o = sum_i beta_i o_i, logits = ao_i - o_i
        double dot_b = 0.0;
        for (size_t i = 0; i < n; ++i) {
            doin[i][k] += dz[k] * t.beta[i][k];
            dot_b += t.beta[i][k] * (dz[k] * t.in[i].offset[k]);
        }
        for (size_t i = 0; i < n; ++i) {
            double dlogit = t.beta[i][k] * (dz[k] * t.in[i].offset[k] - dot_b);
            dao[i][k] = dlogit;
            doin[i][k] -= dlogit;  // logit depends on -o_i
        }
    }

    for (size_t i = 0; i < n; ++i) {
        Vec u = concat_box(t.in[i]);
        const Vec* z = t.hidden[i].empty() ? &u : &t.hidden[i].back();
        if (gs.dense) {
            s::ger_acc(gs.dense->data() + lay.head_c, dac[i].data(), z->data(), d, lay.head_in);
            s::ger_acc(gs.dense->data() + lay.head_o, dao[i].data(), z->data(), d, lay.head_in);
        }
        Vec dzfeat(lay.head_in, 0.0);
        s::matvec_t_acc(P.data() + lay.head_c, dac[i].data(), dzfeat.data(), d, lay.head_in);
        s::matvec_t_acc(P.data() + lay.head_o, dao[i].data(), dzfeat.data(), d, lay.head_in);
        Vec du(2 * d, 0.0);
        hidden_backward(ps, lay, u, t.hidden[i], std::move(dzfeat), gs, du);
        s::axpy(1.0, du.data(), dcin[i].data(), d);
        s::axpy(1.0, du.data() + d, doin[i].data(), d);
    }

    // Undo the canonical permutation: caller position t.perm[i] owns input i.
    for (size_t i = 0; i < n; ++i) {
        s::axpy(1.0, dcin[i].data(), dc_ins[t.perm[i]].data(), d);
        s::axpy(1.0, doin[i].data(), do_ins[t.perm[i]].data(), d);
    }
}

double box_distance(const ParamSource& ps, const double* point, const Box& b) {
    double outside = 0.0, inside = 0.0;
    s::box_dist_terms(point, b.center.data(), b.offset.data(), b.center.size(), &outside,
                      &inside);
    return outside + ps.spec().alpha * inside;
}

void box_distance_backward(const ParamSource& ps, const double* point, const Box& b, double dd,
                           double* dpoint, double* dc, double* dz) {
    double alpha = ps.spec().alpha;
    size_t d = b.center.size();
    for (size_t i = 0; i < d; ++i) {
        double u = point[i] - b.center[i];
        double a = std::fabs(u);
        double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
        double da = 0.0, dof = 0.0;
        if (a > b.offset[i]) {  // strictly outside on this axis
            da += 1.0;
            dof += alpha - 1.0;  // min(a, o) = o here
        } else if (a < b.offset[i]) {
            da += alpha;  // min(a, o) = a
        } else {
            dof += alpha;  // tie: attribute min(a, o) to the offset
        }
        if (dpoint) dpoint[i] += dd * da * sign;
        if (dc) dc[i] -= dd * da * sign;
        if (dz) dz[i] += dd * dof;
    }
}

QueryTape eval_query(const ParamSource& ps, const kg::ComputeGraph& cg) {
    QueryTape t;
    t.slot.resize(cg.num_slots);
    for (const kg::ComputeStep& st : cg.steps) {
        switch (st.op) {
            case kg::ComputeStep::Op::anchor:
                t.slot[st.out] = anchor_box(ps, st.entity);
                break;
            case kg::ComputeStep::Op::project: {
                t.proj.emplace_back();
                project_forward(ps, st.rel, t.slot[st.in], t.proj.back());
                t.slot[st.out] = t.proj.back().out;
                break;
            }
            case kg::ComputeStep::Op::intersect: {
                std::vector<const Box*> ins;
                ins.reserve(st.ins.size());
                for (uint32_t s : st.ins) ins.push_back(&t.slot[s]);
                t.inter.emplace_back();
                intersect_forward(ps, ins, t.inter.back());
                t.slot[st.out] = t.inter.back().out;
                break;
            }
        }
    }
    return t;
}

const Box& query_box(const QueryTape& t, const kg::ComputeGraph& cg) {
    return t.slot[cg.out_slot];
}

void query_backward(const ParamSource& ps, const kg::ComputeGraph& cg, const QueryTape& t,
                    const Vec& dc_out, const Vec& do_out, GradSink& gs) {
    uint32_t d = ps.dim();
    std::vector<Vec> dc(cg.num_slots, Vec(d, 0.0)), dz(cg.num_slots, Vec(d, 0.0));
    dc[cg.out_slot] = dc_out;
    dz[cg.out_slot] = do_out;

    size_t pi = t.proj.size(), ii = t.inter.size();
    for (size_t k = cg.steps.size(); k-- > 0;) {
        const kg::ComputeStep& st = cg.steps[k];
        switch (st.op) {
            case kg::ComputeStep::Op::anchor:
                gs.add_entity(ps, st.entity, dc[st.out].data(), d);
                break;  // anchor offset is the constant zero
            case kg::ComputeStep::Op::project:
                --pi;
                project_backward(ps, t.proj[pi], dc[st.out], dz[st.out], gs, dc[st.in],
                                 dz[st.in]);
                break;
            case kg::ComputeStep::Op::intersect: {
                --ii;
                std::vector<Vec> dcs(st.ins.size(), Vec(d, 0.0));
                std::vector<Vec> dos(st.ins.size(), Vec(d, 0.0));
                intersect_backward(ps, t.inter[ii], dc[st.out], dz[st.out], gs, dcs, dos);
                for (size_t j = 0; j < st.ins.size(); ++j) {
                    simd::axpy(1.0, dcs[j].data(), dc[st.ins[j]].data(), d);
                    simd::axpy(1.0, dos[j].data(), dz[st.ins[j]].data(), d);
                }
                break;
            }
        }
    }
}

}  // namespace krlab::krl
