#include "tsdcp/predictor.hpp"

#include <cmath>
#include <numbers>

namespace tsdcp {

FrameState FrameState::init(const PredictorConfig& cfg)
{
    FrameState st;
    st.cfg = cfg;
    st.grids = uniform_grids(cfg.dims, cfg.delta_f, cfg.delta_t);
    const auto kd = cfg.dims.grid();
    st.hp = Hyperparams::init(kd, 1.0, cfg.gamma);
    st.ws = LearningWorkspace::make(kd);
    st.s_prev = Tensor4r(kd);
    st.q_prev = Tensor4c(kd);
    st.e_q_prev = Tensor4r(kd);
    return st;
}

namespace {

/// Iteration stride for grid-offset updates within a frame.
constexpr int kPertStride = 4;

/// Signal-power heuristic for the initial value variance.
double initial_variance(const Tensor4c& y, double sigma_z_sq)
{
    double p = frobenius_norm(y);
    p = p * p / static_cast<double>(y.size()) - sigma_z_sq;
    return std::max(p, kVarFloor);
}

}  // namespace

PredictionResult run_frame(const Tensor4c& y, double sigma_z_sq, FrameState& state)
{
    const PredictorConfig& cfg = state.cfg;
    const auto kd = cfg.dims.grid();
    reset_degenerate_count();

    if (!state.hp_initialized) {
        state.hp = Hyperparams::init(kd, initial_variance(y, sigma_z_sq), cfg.gamma);
        state.hp_initialized = true;
    }

    MrfState mrf = MrfState::make(kd, cfg.gamma);
    MoState mo(cfg.damping);
    const bool first_frame = state.ws.frames == 0;

    Tensor4r u_lik(kd);
    GaussianMessage q_lik = GaussianMessage::uninformative(kd);
    SupportBelief s_belief{Tensor4r(kd)};
    ValueBelief q_belief{Tensor4c(kd), Tensor4r(kd)};

    PredictionResult out;
    Tensor4c g_last(kd);
    bool have_last = false;
    std::vector<Index> sparse_cells;

    for (int t = 1; t <= cfg.max_iters; ++t) {
        Tensor4r u_tc = temporal_support_message(state.s_prev, state.hp.m_hat);
        GaussianMessage q_prior;
        if (first_frame) {
            q_prior.mean = Tensor4c(kd);
            q_prior.variance = state.hp.v_hat;
            q_prior.clamp();
        } else {
            q_prior = value_temporal_prior(state.q_prev, state.hp.l_hat, state.hp.v_hat);
        }

        auto [u_mrf, prior_llr] = mrf_iteration(u_lik, u_tc, mrf);
        s_belief = support_posterior(u_lik, prior_llr);
        q_belief = value_posterior(q_lik, q_prior);

        GaussianMessage g_prior = assemble_g_prior(s_belief, q_belief).moment_matched();
        FactorSet factors = build_factors(state.grids, cfg.dims);
        MoResult res = mo_iteration(y, sigma_z_sq, g_prior, factors, mo);
        if (!res.g_hat.vec().allFinite() || !res.h_hat.vec().allFinite()) {
            out.aborted = true;
            break;
        }

        auto [nu_lik, nq_lik] = decouple_g_likelihood(res.g_likelihood, s_belief, q_belief,
                                                      cfg.threshold);
        u_lik = nu_lik;
        q_lik = nq_lik;

        // Offsets persist across frames and the scene drifts slowly, so a
        // few Gauss-Newton updates per frame are enough to track it; the
        // quadratic build dominates the iteration cost otherwise.
        const bool pert_turn = cfg.learn_perturbations && t >= cfg.pert_start_iter &&
                               (t - cfg.pert_start_iter) % kPertStride == 0;
        if (pert_turn) {
            // Fit the grid offsets with only the dominant atoms against the
            // raw observation. The full posterior is a complete representation
            // that leaves no residual to learn from; restricting to the local
            // peaks of |G| exposes the off-grid leakage, and the leakage cells
            // then deactivate on their own once the atoms are aligned.
            auto cells = dominant_cells(res.g_hat, 0.2);
            sparse_cells = cells;
            if (!cells.empty()) {
                // Drop stale offsets of cells no longer backing an atom.
                std::array<std::vector<bool>, 4> used;
                for (int d = 0; d < 4; ++d)
                    used[static_cast<std::size_t>(d)]
                        .assign(static_cast<std::size_t>(kd[static_cast<std::size_t>(d)]),
                                false);
                std::array<Index, 4> ki{};
                for (Index c : cells) {
                    res.g_hat.unflat(c, ki);
                    for (int d = 0; d < 4; ++d)
                        used[static_cast<std::size_t>(d)]
                            [static_cast<std::size_t>(ki[static_cast<std::size_t>(d)])] =
                                true;
                }
                for (int d = 0; d < 4; ++d)
                    for (Index k = 0; k < state.grids.pert[static_cast<std::size_t>(d)].size();
                         ++k)
                        if (!used[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)])
                            state.grids.pert[static_cast<std::size_t>(d)][k] = 0.0;

                Tensor4r e_sel(kd);
                for (Index c : cells) e_sel[c] = res.g_var[c];
                for (int pass = 0; pass < 1; ++pass) {
                    Tensor4c g_fit = refit_gains(y, cells, state.grids, cfg.dims);
                    perturbation_pass(g_fit, e_sel, y, state.grids, cfg.dims);
                }
            }
        }

        if (cfg.learn_hyperparams && state.ws.frames >= 1) {
            LearningWorkspace preview =
                state.ws.with_frame(s_belief.prob(), q_belief.mean, q_belief.variance);
            state.hp.m_hat = learn_transition_factor(preview);
            state.hp.l_hat = learn_temporal_factor(preview, state.hp.v_bar, state.hp.l_hat);
            auto [vb, vh] = learn_value_variance(preview, state.hp.l_hat, cfg.gamma, mrf.offsets);
            state.hp.v_bar = vb;
            state.hp.v_hat = vh;
        }

        out.g_hat = res.g_hat;
        out.g_var = res.g_var;
        out.h_hat = res.h_hat;
        out.iterations = t;
        if (have_last) {
            double denom = frobenius_norm(g_last);
            double change = frobenius_norm(res.g_hat - g_last);
            double rel = denom > 0.0 ? change / denom : change;
            out.g_change_trace.push_back(rel);
            if (rel < cfg.tol) break;
        }
        g_last = res.g_hat;
        have_last = true;
    }

    if (!out.aborted && out.iterations > 0) {
        // Extrapolate the sparse aligned model when available: the dense
        // posterior fits the pilots but the aligned atoms carry the Doppler
        // structure the forecast depends on. Fall back to E[S] .* E[Q].
        Tensor4r p = s_belief.prob();
        if (cfg.learn_perturbations && !sparse_cells.empty()) {
            Tensor4c g_sparse = refit_gains(y, sparse_cells, state.grids, cfg.dims);
            out.predicted = predict_channel(g_sparse, state.grids, cfg.dims, cfg.horizons);
        } else {
            Tensor4c g_pred(kd);
            for (Index i = 0; i < g_pred.size(); ++i) g_pred[i] = p[i] * q_belief.mean[i];
            out.predicted = predict_channel(g_pred, state.grids, cfg.dims, cfg.horizons);
        }

        state.ws.accumulate_frame(p, q_belief.mean, q_belief.variance);
        state.s_prev = p;
        state.q_prev = q_belief.mean;
        state.e_q_prev = q_belief.variance;
        if (cfg.learn_hyperparams) {
            state.hp.m_hat = learn_transition_factor(state.ws);
            state.hp.l_hat = learn_temporal_factor(state.ws, state.hp.v_bar, state.hp.l_hat);
            auto [vb, vh] = learn_value_variance(state.ws, state.hp.l_hat, cfg.gamma, mrf.offsets);
            state.hp.v_bar = vb;
            state.hp.v_hat = vh;
        }
    }
    ++state.frame_index;
    out.degenerate = degenerate_count();
    return out;
}

std::vector<Tensor4c> predict_channel(const Tensor4c& g_hat, const GridSet& grids,
                                      const SystemDims& dims,
                                      const std::vector<double>& horizons)
{
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    FactorSet f = build_factors(grids, dims);
    const VectorXr& nu = grids.base[3];
    const VectorXr& dnu = grids.pert[3];

    std::vector<Tensor4c> out;
    out.reserve(horizons.size());
    for (double m : horizons) {
        double t = static_cast<double>(dims.n_sym - 1) + m;
        MatrixXc c_tilde(1, nu.size());
        for (Index k = 0; k < nu.size(); ++k)
            c_tilde(0, k) = std::polar(1.0, kTwoPi * grids.delta_t * (nu[k] + dnu[k]) * t);

        Tensor4c x = g_hat;
        for (int d = 0; d < 3; ++d) x = mode_multiply(x, f[d], d + 1);
        out.push_back(mode_multiply(x, c_tilde, 4));
    }
    return out;
}

std::pair<double, double> tnmse(const std::vector<Tensor4c>& predicted,
                                const std::vector<Tensor4c>& truth)
{
    if (predicted.size() != truth.size() || predicted.empty())
        throw std::invalid_argument("tnmse: mismatched frame lists");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double den = frobenius_norm(truth[i]);
        if (den == 0.0) throw std::invalid_argument("tnmse: zero-norm truth frame");
        double num = frobenius_norm(predicted[i] - truth[i]);
        acc += (num * num) / (den * den);
    }
    double lin = acc / static_cast<double>(predicted.size());
    double db = 10.0 * std::log10(std::max(lin, 1e-300));
    return {lin, db};
}

Tensor4c baseline_predict(const Tensor4c& y, double horizon)
{
    const Index n = y.dim(3);
    if (n < 2) throw std::invalid_argument("baseline_predict: need >= 2 pilot symbols");
    // Per-element complex linear LS fit over symbol index, extrapolated.
    const double t_eval = static_cast<double>(n - 1) + horizon;
    double sx = 0.0, sxx = 0.0;
    for (Index k = 0; k < n; ++k) {
        sx += static_cast<double>(k);
        sxx += static_cast<double>(k) * static_cast<double>(k);
    }
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;

    Tensor4c out(y.dim(0), y.dim(1), y.dim(2), 1);
    for (Index i3 = 0; i3 < y.dim(2); ++i3)
        for (Index i2 = 0; i2 < y.dim(1); ++i2)
            for (Index i1 = 0; i1 < y.dim(0); ++i1) {
                Cplx sy(0.0, 0.0), sxy(0.0, 0.0);
                for (Index k = 0; k < n; ++k) {
                    Cplx v = y(i1, i2, i3, k);
                    sy += v;
                    sxy += static_cast<double>(k) * v;
                }
                Cplx b = (nn * sxy - sx * sy) / det;
                Cplx a = (sy - b * sx) / nn;
                out(i1, i2, i3, 0) = a + b * t_eval;
            }
    return out;
}

}  // namespace tsdcp
