#include "tsdcp/learning.hpp"

#include <cmath>

namespace tsdcp {

Hyperparams Hyperparams::init(const std::array<Index, 4>& dims, double v0, double gamma)
{
    Hyperparams hp;
    // A positive transition factor with an all-off previous support gives a
    // sparse initial prior (llr = -2 m); zero would mean P(s)=1/2 everywhere
    // and the complete Doppler dictionary then overfits the pilots.
    hp.m_hat = Tensor4r::constant(dims, 1.5);
    hp.l_hat = Tensor4r::constant(dims, 0.5);
    hp.v_bar = Tensor4r::constant(dims, std::max(v0, kVarFloor));
    hp.v_hat = hp.v_bar;
    hp.gamma = gamma;
    return hp;
}

LearningWorkspace LearningWorkspace::make(const std::array<Index, 4>& dims)
{
    LearningWorkspace ws;
    ws.dims = dims;
    ws.k_m_sum = Tensor4r(dims);
    ws.first_q_sq = Tensor4r(dims);
    ws.q_sq_sum = Tensor4r(dims);
    ws.e_q_sum = Tensor4r(dims);
    ws.cross_sum = Tensor4r(dims);
    ws.prev_sq_sum = Tensor4r(dims);
    ws.dq_sq_sum = Tensor4r(dims);
    ws.s_prev = Tensor4r(dims);
    ws.q_prev = Tensor4c(dims);
    ws.e_q_prev = Tensor4r(dims);
    return ws;
}

void LearningWorkspace::accumulate_frame(const Tensor4r& s_hat, const Tensor4c& q_hat,
                                         const Tensor4r& e_q)
{
    detail::require_same_dims(dims, s_hat.dims());
    for (Index i = 0; i < s_hat.size(); ++i) {
        k_m_sum[i] += (2.0 * s_hat[i] - 1.0) * (2.0 * s_prev[i] - 1.0);
        if (frames == 0) {
            first_q_sq[i] = std::norm(q_hat[i]) + e_q[i];
        } else {
            double qq = std::norm(q_hat[i]) + e_q[i];
            double pq = std::norm(q_prev[i]) + e_q_prev[i];
            Cplx d = q_hat[i] - q_prev[i];
            q_sq_sum[i] += qq;
            e_q_sum[i] += e_q[i];
            cross_sum[i] += (std::conj(q_prev[i]) * q_hat[i]).real();
            prev_sq_sum[i] += pq;
            dq_sq_sum[i] += std::norm(d) + e_q[i] + e_q_prev[i];
        }
    }
    s_prev = s_hat;
    q_prev = q_hat;
    e_q_prev = e_q;
    ++frames;
}

LearningWorkspace LearningWorkspace::with_frame(const Tensor4r& s_hat, const Tensor4c& q_hat,
                                                const Tensor4r& e_q) const
{
    LearningWorkspace ws = *this;
    ws.accumulate_frame(s_hat, q_hat, e_q);
    return ws;
}

Tensor4r learn_transition_factor(const LearningWorkspace& ws)
{
    Tensor4r m(ws.dims);
    if (ws.frames < 1) return m;
    const double inv_nf = 1.0 / static_cast<double>(ws.frames);
    for (Index i = 0; i < m.size(); ++i) {
        double k = ws.k_m_sum[i] * inv_nf;
        double v;
        if (k >= 1.0)
            v = kMCap;
        else if (k <= -1.0)
            v = -kMCap;
        else
            v = std::atanh(k);
        m[i] = std::min(kMCap, std::max(-kMCap, v));
    }
    return m;
}

Tensor4r learn_temporal_factor(const LearningWorkspace& ws, const Tensor4r& v_bar,
                               const Tensor4r& l_prev)
{
    Tensor4r l = l_prev;
    if (ws.frames < 2) return l;
    const double nf1 = static_cast<double>(ws.frames - 1);
    for (Index i = 0; i < l.size(); ++i) {
        double a = nf1 * std::max(v_bar[i], kVarFloor);
        double b = ws.prev_sq_sum[i] - ws.cross_sum[i];             // K_{L,1}
        double c = -(ws.dq_sq_sum[i]);                               // K_{L,0}
        double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) continue;  // keep previous estimate
        double sq = std::sqrt(disc);
        double r1 = (-b + sq) / (2.0 * a);
        double r2 = (-b - sq) / (2.0 * a);
        double root;
        bool in1 = r1 > 0.0 && r1 <= 1.0;
        bool in2 = r2 > 0.0 && r2 <= 1.0;
        if (in1)
            root = r1;
        else if (in2)
            root = r2;
        else
            root = std::abs(r1 - 0.5) <= std::abs(r2 - 0.5) ? r1 : r2;
        l[i] = std::min(1.0, std::max(kLMin, root));
    }
    return l;
}

std::pair<Tensor4r, Tensor4r> learn_value_variance(const LearningWorkspace& ws,
                                                   const Tensor4r& l_hat, double gamma,
                                                   const std::vector<std::array<long, 4>>& offsets)
{
    Tensor4r v_bar(ws.dims);
    if (ws.frames < 1) {
        v_bar = Tensor4r::constant(ws.dims, kVarFloor);
    } else {
        const double inv_nf = 1.0 / static_cast<double>(ws.frames);
        for (Index i = 0; i < v_bar.size(); ++i) {
            double l = std::max(l_hat[i], kLMin);
            double one_m = 1.0 - l;
            // AR-residual energy of frames 2..N divided by L^2, plus the
            // first-frame energy (prior variance V itself).
            double resid = ws.q_sq_sum[i] - 2.0 * one_m * ws.cross_sum[i] +
                           one_m * one_m * ws.prev_sq_sum[i];
            double v = (ws.first_q_sq[i] + resid / (l * l)) * inv_nf;
            v_bar[i] = std::max(v, kVarFloor);
        }
    }
    Tensor4r v_hat = v_bar;
    for (const auto& r : offsets) v_hat = v_hat + gamma * cyclic_shift(v_bar, r);
    for (Index i = 0; i < v_hat.size(); ++i) v_hat[i] = std::max(v_hat[i], kVarFloor);
    return {v_bar, v_hat};
}

namespace {

int mode_of(Domain d) { return static_cast<int>(d) + 1; }

/// Partial contraction over the three other modes (perturbed factors),
/// leaving mode d untouched.
Tensor4c partial_synth(const Tensor4c& g, const FactorSet& f, int skip_mode)
{
    Tensor4c x = g;
    for (int d = 0; d < 4; ++d)
        if (d + 1 != skip_mode) x = mode_multiply(x, f[d], d + 1);
    return x;
}

Tensor4r partial_var(const Tensor4r& e, const std::array<MatrixXr, 4>& m2, int skip_mode)
{
    Tensor4r x = e;
    for (int d = 0; d < 4; ++d)
        if (d + 1 != skip_mode) x = mode_multiply(x, m2[static_cast<std::size_t>(d)], d + 1);
    return x;
}

}  // namespace

PerturbQuadratic build_perturbation_quadratic(Domain domain, const Tensor4c& g_hat,
                                              const Tensor4r& e_g, const Tensor4c& h_hat,
                                              const GridSet& grids, const SystemDims& dims)
{
    const int md = mode_of(domain);
    const std::size_t di = static_cast<std::size_t>(domain);
    const double scale = domain_scale(domain, grids.delta_f, grids.delta_t);
    const Index len = dims.phys()[di];

    FactorSet f = build_factors(grids, dims);
    auto m2 = magnitude_sq_factors(f);

    // Own-domain factor and derivative at the current perturbation, so the
    // solve yields an increment and repeated passes refine Gauss-Newton style.
    MatrixXc a0 = build_factor_matrix(domain, grids.base[di], grids.pert[di], len, scale);
    MatrixXc da = build_derivative_matrix(domain, grids.base[di], grids.pert[di], len, scale);

    Tensor4c g_partial = partial_synth(g_hat, f, md);
    Tensor4r e_partial = partial_var(e_g, m2, md);
    Tensor4c residual = h_hat - mode_multiply(g_partial, a0, md);

    MatrixXc gm = mode_matricize(g_partial, md);   // K_d x M fibers
    MatrixXr em = mode_matricize(e_partial, md);
    MatrixXc dm = mode_matricize(residual, md);    // N_d x M fibers

    VectorXr e_row = em.rowwise().sum();
    MatrixXc dada = da.adjoint() * da;
    MatrixXc gram = gm * gm.adjoint();

    PerturbQuadratic q;
    q.pi = (dada.conjugate().cwiseProduct(gram)).real();
    q.pi += e_row.cwiseProduct(dada.diagonal().real()).asDiagonal();

    MatrixXc proj = da.adjoint() * dm;  // K_d x M
    q.mu = (proj.cwiseProduct(gm.conjugate())).real().rowwise().sum();
    q.mu -= (da.adjoint() * a0).diagonal().real().cwiseProduct(e_row);
    return q;
}

VectorXr solve_perturbation(const PerturbQuadratic& q, double box, bool* singular)
{
    const Index k = q.mu.size();
    if (singular) *singular = false;
    double tr = q.pi.trace();
    if (!(tr > 0.0)) {
        if (singular) *singular = true;
        return VectorXr::Zero(k);
    }
    MatrixXr reg = q.pi + (1e-6 * tr / static_cast<double>(k)) * MatrixXr::Identity(k, k);
    Eigen::LDLT<MatrixXr> ldlt(reg);
    if (ldlt.info() != Eigen::Success) {
        if (singular) *singular = true;
        return VectorXr::Zero(k);
    }
    VectorXr d = ldlt.solve(q.mu);
    if (!d.allFinite()) {
        if (singular) *singular = true;
        return VectorXr::Zero(k);
    }
    for (Index i = 0; i < k; ++i) d[i] = std::min(box, std::max(-box, d[i]));
    return d;
}

double perturbation_objective(Domain domain, const VectorXr& pert_d, const Tensor4c& g_hat,
                              const Tensor4r& e_g, const Tensor4c& h_hat, const GridSet& grids,
                              const SystemDims& dims)
{
    const int md = mode_of(domain);
    const std::size_t di = static_cast<std::size_t>(domain);
    const double scale = domain_scale(domain, grids.delta_f, grids.delta_t);
    const Index len = dims.phys()[di];

    FactorSet f = build_factors(grids, dims);
    auto m2 = magnitude_sq_factors(f);
    MatrixXc ad = build_factor_matrix(domain, grids.base[di], pert_d, len, scale);

    Tensor4c g_partial = partial_synth(g_hat, f, md);
    Tensor4r e_partial = partial_var(e_g, m2, md);

    Tensor4c fit = h_hat - mode_multiply(g_partial, ad, md);
    double f1 = frobenius_norm(fit);
    f1 *= f1;

    // Variance-weighted energy term: column norms of the own-domain factor
    // against the propagated element variances.
    MatrixXr em = mode_matricize(e_partial, md);
    VectorXr col_sq = ad.colwise().squaredNorm();
    double f2 = col_sq.dot(em.rowwise().sum());
    return f1 + f2;
}

int perturbation_pass(const Tensor4c& g_hat, const Tensor4r& e_g, const Tensor4c& h_hat,
                      GridSet& grids, const SystemDims& dims)
{
    int accepted = 0;
    for (Domain d : {Domain::Horizontal, Domain::Vertical, Domain::Delay, Domain::Doppler}) {
        const std::size_t di = static_cast<std::size_t>(d);
        PerturbQuadratic q = build_perturbation_quadratic(d, g_hat, e_g, h_hat, grids, dims);
        bool singular = false;
        const double box = grids.pert_box(d);
        VectorXr step = solve_perturbation(q, box, &singular);
        if (singular) continue;
        VectorXr cand = grids.pert[di] + step;
        for (Index i = 0; i < cand.size(); ++i)
            cand[i] = std::min(box, std::max(-box, cand[i]));
        double f_old =
            perturbation_objective(d, grids.pert[di], g_hat, e_g, h_hat, grids, dims);
        double f_new = perturbation_objective(d, cand, g_hat, e_g, h_hat, grids, dims);
        if (f_new <= f_old) {
            grids.pert[di] = cand;
            ++accepted;
        }
    }
    return accepted;
}

std::vector<Index> dominant_cells(const Tensor4c& g_hat, double rel_threshold)
{
    const auto d = g_hat.dims();
    double peak = 0.0;
    for (Index i = 0; i < g_hat.size(); ++i) peak = std::max(peak, std::abs(g_hat[i]));
    const double bar = rel_threshold * peak;

    std::vector<Index> out;
    std::array<Index, 4> xi{}, yi{};
    for (Index i = 0; i < g_hat.size(); ++i) {
        double mag = std::abs(g_hat[i]);
        if (!(mag >= bar) || mag == 0.0) continue;
        g_hat.unflat(i, xi);
        bool is_max = true;
        for (int m = 0; m < 4 && is_max; ++m) {
            Index n = d[static_cast<std::size_t>(m)];
            if (n < 2) continue;
            for (long s : {+1L, -1L}) {
                yi = xi;
                yi[static_cast<std::size_t>(m)] =
                    (xi[static_cast<std::size_t>(m)] + n + s) % n;
                if (std::abs(g_hat(yi[0], yi[1], yi[2], yi[3])) > mag) {
                    is_max = false;
                    break;
                }
            }
        }
        if (is_max) out.push_back(i);
    }
    return out;
}

Tensor4c refit_gains(const Tensor4c& y, const std::vector<Index>& cells,
                     const GridSet& grids, const SystemDims& dims)
{
    Tensor4c out(dims.grid());
    if (cells.empty()) return out;
    FactorSet f = build_factors(grids, dims);

    const Index n_tot = dims.n_total();
    MatrixXc a(n_tot, static_cast<Index>(cells.size()));
    std::array<Index, 4> ki{};
    for (std::size_t c = 0; c < cells.size(); ++c) {
        out.unflat(cells[c], ki);
        Index col = 0;
        for (Index i4 = 0; i4 < dims.n_sym; ++i4)
            for (Index i3 = 0; i3 < dims.n_sc; ++i3)
                for (Index i2 = 0; i2 < dims.n_v; ++i2)
                    for (Index i1 = 0; i1 < dims.n_h; ++i1)
                        a(col++, static_cast<Index>(c)) = f[0](i1, ki[0]) * f[1](i2, ki[1]) *
                                                         f[2](i3, ki[2]) * f[3](i4, ki[3]);
    }
    VectorXc x = a.colPivHouseholderQr().solve(y.vec());
    if (!x.allFinite()) return out;
    for (std::size_t c = 0; c < cells.size(); ++c) out[cells[c]] = x[static_cast<Index>(c)];
    return out;
}

}  // namespace tsdcp
