#pragma once

#include "tsdcp/gaussian.hpp"

#include <array>
#include <vector>

namespace tsdcp {

inline constexpr double kLlrClamp = 30.0;
inline constexpr double kProbFloor = 1e-8;

inline double clamp_llr(double u)
{
    if (u > kLlrClamp) return kLlrClamp;
    if (u < -kLlrClamp) return -kLlrClamp;
    return u;
}

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// Per-element support belief in log-likelihood-ratio form.
struct SupportBelief {
    Tensor4r llr;

    Tensor4r prob() const
    {
        Tensor4r p(llr.dims());
        for (Index i = 0; i < llr.size(); ++i) {
            double v = logistic(clamp_llr(llr[i]));
            p[i] = std::min(1.0 - kProbFloor, std::max(kProbFloor, v));
        }
        return p;
    }
};

/// Bernoulli-Gaussian (spike-and-slab) prior for the ADD coefficients.
struct SpikeSlabPrior {
    Tensor4r prob;          // P(s=1) per element
    GaussianMessage slab;   // CN(mu_q, e_q) slab component
    GaussianMessage moment_matched() const;
};

/// Hidden-value belief (slab statistics).
struct ValueBelief {
    Tensor4c mean;      // Q hat
    Tensor4r variance;  // E_Q
};

/// Loopy-BP state over the high-order neighbor graph. Offsets are signed
/// 4-vectors applied with cyclic wrap; the default set is +/-1 along each
/// mode, dropping offsets that wrap onto the element itself.
struct MrfState {
    std::vector<std::array<long, 4>> offsets;
    std::vector<Tensor4r> messages;  // one LLR tensor per offset
    double gamma = 0.3;

    static std::vector<std::array<long, 4>> default_offsets(const std::array<Index, 4>& dims);
    static MrfState make(const std::array<Index, 4>& dims, double gamma);
    int opposite(int r_index) const;
};

/// LLR induced on this frame's support by the previous frame's posterior
/// through the Ising transition coupling.
Tensor4r temporal_support_message(const Tensor4r& s_prev_hat, const Tensor4r& m_hat);

/// One Jacobi sweep of MRF message passing. Returns (sum of updated
/// per-neighbor messages, prior LLR = u_tc + that sum); updates state.
std::pair<Tensor4r, Tensor4r> mrf_iteration(const Tensor4r& u_lik, const Tensor4r& u_tc,
                                            MrfState& state);

/// Posterior LLR = likelihood + prior (additive in log domain).
SupportBelief support_posterior(const Tensor4r& u_lik, const Tensor4r& prior_llr);

/// AR(1)-style temporal prior for the hidden values.
GaussianMessage value_temporal_prior(const Tensor4c& q_prev_hat, const Tensor4r& l_hat,
                                     const Tensor4r& v_hat);

/// Fuse value likelihood with the temporal prior.
ValueBelief value_posterior(const GaussianMessage& q_lik, const GaussianMessage& q_prior);

/// Split the G likelihood into a support LLR and a value likelihood under
/// G = S .* Q (threshold-gated Gaussian-sum approximation).
std::pair<Tensor4r, GaussianMessage> decouple_g_likelihood(const GaussianMessage& g_lik,
                                                           const SupportBelief& s_belief,
                                                           const ValueBelief& q_belief,
                                                           double threshold);

/// Bernoulli-Gaussian prior from the current support/value beliefs.
SpikeSlabPrior assemble_g_prior(const SupportBelief& s_belief, const ValueBelief& q_belief);

}  // namespace tsdcp
