#include "tsdcp/sp.hpp"

#include <cmath>

namespace tsdcp {

GaussianMessage SpikeSlabPrior::moment_matched() const
{
    GaussianMessage g;
    g.mean = Tensor4c(prob.dims());
    g.variance = Tensor4r(prob.dims());
    for (Index i = 0; i < prob.size(); ++i) {
        double p = prob[i];
        Cplx mu = slab.mean[i];
        double e = slab.variance[i];
        Cplx m = p * mu;
        double second = p * (e + std::norm(mu));
        g.mean[i] = m;
        g.variance[i] = clamp_variance(second - std::norm(m));
    }
    return g;
}

std::vector<std::array<long, 4>> MrfState::default_offsets(const std::array<Index, 4>& dims)
{
    std::vector<std::array<long, 4>> out;
    for (int d = 0; d < 4; ++d) {
        if (dims[static_cast<std::size_t>(d)] < 2) continue;  // wraps onto self
        for (long s : {+1L, -1L}) {
            // In a dimension of exactly 2, -1 wraps onto the same neighbor
            // as +1; keep one edge, not a parallel pair.
            if (s == -1 && dims[static_cast<std::size_t>(d)] == 2) continue;
            std::array<long, 4> r{0, 0, 0, 0};
            r[static_cast<std::size_t>(d)] = s;
            out.push_back(r);
        }
    }
    return out;
}

MrfState MrfState::make(const std::array<Index, 4>& dims, double gamma)
{
    MrfState st;
    st.gamma = gamma;
    st.offsets = default_offsets(dims);
    st.messages.assign(st.offsets.size(), Tensor4r(dims));
    return st;
}

int MrfState::opposite(int r_index) const
{
    const auto& r = offsets[static_cast<std::size_t>(r_index)];
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        bool neg = true;
        for (int d = 0; d < 4; ++d)
            if (offsets[k][static_cast<std::size_t>(d)] != -r[static_cast<std::size_t>(d)]) {
                neg = false;
                break;
            }
        if (neg) return static_cast<int>(k);
    }
    return r_index;  // self-inverse offset (dimension of size 2)
}

Tensor4r temporal_support_message(const Tensor4r& s_prev_hat, const Tensor4r& m_hat)
{
    detail::require_same_dims(s_prev_hat.dims(), m_hat.dims());
    Tensor4r u(s_prev_hat.dims());
    for (Index i = 0; i < u.size(); ++i)
        u[i] = clamp_llr(2.0 * m_hat[i] * (2.0 * s_prev_hat[i] - 1.0));
    return u;
}

namespace {

/// Ising edge response in the LLR domain:
///   m(u) = ln(1 + exp(2*gamma + u)) - ln(exp(2*gamma) + exp(u)),
/// evaluated overflow-safe.
double ising_llr(double u, double two_gamma)
{
    auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
    // ln(e^a + e^b) = max + log1p(exp(-|a-b|))
    double a = softplus(two_gamma + u);                       // ln(1+e^{2g+u})
    double m = std::max(two_gamma, u);
    double b = m + std::log1p(std::exp(-std::abs(two_gamma - u)));  // ln(e^{2g}+e^u)
    return a - b;
}

}  // namespace

std::pair<Tensor4r, Tensor4r> mrf_iteration(const Tensor4r& u_lik, const Tensor4r& u_tc,
                                            MrfState& state)
{
    detail::require_same_dims(u_lik.dims(), u_tc.dims());
    const auto dims = u_lik.dims();
    const double two_gamma = 2.0 * state.gamma;

    // Total incoming field at each site from the previous sweep.
    Tensor4r total = u_lik + u_tc;
    for (const auto& m : state.messages) total = total + m;

    std::vector<Tensor4r> fresh;
    fresh.reserve(state.offsets.size());
    for (std::size_t k = 0; k < state.offsets.size(); ++k) {
        // Message arriving from the neighbor at offset r: the neighbor's
        // cavity field excludes what we sent it (the opposite-offset
        // message evaluated at the neighbor).
        int opp = state.opposite(static_cast<int>(k));
        Tensor4r cavity = total - state.messages[static_cast<std::size_t>(opp)];
        Tensor4r shifted = cyclic_shift(cavity, state.offsets[k]);
        Tensor4r msg(dims);
        for (Index i = 0; i < msg.size(); ++i)
            msg[i] = ising_llr(clamp_llr(shifted[i]), two_gamma);
        fresh.push_back(std::move(msg));
    }
    state.messages = std::move(fresh);

    Tensor4r u_mrf(dims);
    for (const auto& m : state.messages) u_mrf = u_mrf + m;
    Tensor4r prior(dims);
    for (Index i = 0; i < prior.size(); ++i) prior[i] = clamp_llr(u_tc[i] + u_mrf[i]);
    return {u_mrf, prior};
}

SupportBelief support_posterior(const Tensor4r& u_lik, const Tensor4r& prior_llr)
{
    detail::require_same_dims(u_lik.dims(), prior_llr.dims());
    SupportBelief b;
    b.llr = u_lik + prior_llr;
    return b;
}

GaussianMessage value_temporal_prior(const Tensor4c& q_prev_hat, const Tensor4r& l_hat,
                                     const Tensor4r& v_hat)
{
    detail::require_same_dims(q_prev_hat.dims(), l_hat.dims());
    detail::require_same_dims(q_prev_hat.dims(), v_hat.dims());
    GaussianMessage g;
    g.mean = Tensor4c(q_prev_hat.dims());
    g.variance = Tensor4r(q_prev_hat.dims());
    for (Index i = 0; i < g.mean.size(); ++i) {
        double l = l_hat[i];
        g.mean[i] = (1.0 - l) * q_prev_hat[i];
        g.variance[i] = clamp_variance(l * l * v_hat[i]);
    }
    return g;
}

ValueBelief value_posterior(const GaussianMessage& q_lik, const GaussianMessage& q_prior)
{
    GaussianMessage b = gaussian_combine(q_lik, q_prior);
    return ValueBelief{b.mean, b.variance};
}

std::pair<Tensor4r, GaussianMessage> decouple_g_likelihood(const GaussianMessage& g_lik,
                                                           const SupportBelief& s_belief,
                                                           const ValueBelief& q_belief,
                                                           double threshold)
{
    detail::require_same_dims(g_lik.mean.dims(), q_belief.mean.dims());
    const auto dims = g_lik.mean.dims();
    Tensor4r u_lik(dims);
    GaussianMessage q_lik;
    q_lik.mean = Tensor4c(dims);
    q_lik.variance = Tensor4r(dims);
    Tensor4r p = s_belief.prob();

    for (Index i = 0; i < u_lik.size(); ++i) {
        double vn = clamp_variance(g_lik.variance[i]);
        Cplx n = g_lik.mean[i];
        Cplx mu = q_belief.mean[i];
        double eq = q_belief.variance[i];
        // Two-hypothesis Gaussian LLR:
        //   s=1: n ~ CN(mu_q, e_q + v_n);  s=0: n ~ CN(0, v_n).
        double v1 = eq + vn;
        double u = std::norm(n) / vn - std::norm(n - mu) / v1 + std::log(vn / v1);
        u_lik[i] = clamp_llr(u);

        if (p[i] > threshold) {
            q_lik.mean[i] = n;
            q_lik.variance[i] = vn;
        } else {
            // Unobservable Q element: pass no information.
            q_lik.mean[i] = Cplx(0.0, 0.0);
            q_lik.variance[i] = kVarCap;
        }
    }
    return {u_lik, q_lik};
}

SpikeSlabPrior assemble_g_prior(const SupportBelief& s_belief, const ValueBelief& q_belief)
{
    SpikeSlabPrior pr;
    pr.prob = s_belief.prob();
    pr.slab.mean = q_belief.mean;
    pr.slab.variance = q_belief.variance;
    return pr;
}

}  // namespace tsdcp
