#include "tsdcp/mo.hpp"

namespace tsdcp {

GaussianMessage forward_pass(const GaussianMessage& g_belief, const FactorSet& factors,
                             const std::array<MatrixXr, 4>& mag_sq)
{
    GaussianMessage h;
    h.mean = tucker_synthesize(g_belief.mean, factors);
    h.variance = var_forward(g_belief.variance, mag_sq);
    h.clamp();
    return h;
}

GaussianMessage observation_fuse(const Tensor4c& y, double sigma_z_sq,
                                 const GaussianMessage& h_prior)
{
    GaussianMessage obs;
    obs.mean = y;
    obs.variance = Tensor4r::constant(y.dims(), clamp_variance(sigma_z_sq));
    return gaussian_combine(obs, h_prior);
}

namespace {

/// Extrinsic H message: remove the prior's contribution from the posterior
/// in precision space. With the fusion above this is algebraically the
/// observation Gaussian, but computing it by subtraction keeps the module
/// correct if the posterior is post-processed (e.g. clamped).
GaussianMessage extrinsic(const GaussianMessage& post, const GaussianMessage& prior)
{
    GaussianMessage ext;
    ext.mean = Tensor4c(post.mean.dims());
    ext.variance = Tensor4r(post.mean.dims());
    for (Index i = 0; i < post.mean.size(); ++i) {
        double pp = 1.0 / clamp_variance(post.variance[i]);
        double pq = 1.0 / clamp_variance(prior.variance[i]);
        double pe = pp - pq;
        if (pe < 1.0 / kVarCap) pe = 1.0 / kVarCap;  // keep message proper
        ext.variance[i] = clamp_variance(1.0 / pe);
        ext.mean[i] = (pp * post.mean[i] - pq * prior.mean[i]) / pe;
    }
    return ext;
}

}  // namespace

GaussianMessage backward_pass(const GaussianMessage& h_posterior,
                              const GaussianMessage& h_prior, const FactorSet& factors,
                              const std::array<MatrixXr, 4>& mag_sq)
{
    GaussianMessage ext = extrinsic(h_posterior, h_prior);

    // Precision-weighted adjoint projection onto the ADD grid.
    Tensor4r prec(ext.variance.dims());
    Tensor4c wmean(ext.mean.dims());
    for (Index i = 0; i < prec.size(); ++i) {
        double p = 1.0 / clamp_variance(ext.variance[i]);
        prec[i] = p;
        wmean[i] = p * ext.mean[i];
    }
    Tensor4r c = var_adjoint(prec, mag_sq);
    Tensor4c num = tucker_adjoint(wmean, factors);

    GaussianMessage lik;
    lik.mean = Tensor4c(c.dims());
    lik.variance = Tensor4r(c.dims());
    for (Index i = 0; i < c.size(); ++i) {
        double ci = c[i];
        if (ci < 1.0 / kVarCap) {
            note_degenerate();
            ci = 1.0 / kVarCap;
        }
        lik.variance[i] = clamp_variance(1.0 / ci);
        lik.mean[i] = num[i] / ci;
    }
    return lik;
}

MoResult mo_iteration(const Tensor4c& y, double sigma_z_sq, const GaussianMessage& g_prior,
                      const FactorSet& factors, MoState& state)
{
    const auto mag_sq = magnitude_sq_factors(factors);

    GaussianMessage h_prior = forward_pass(g_prior, factors, mag_sq);
    GaussianMessage h_post = observation_fuse(y, sigma_z_sq, h_prior);
    GaussianMessage lik = backward_pass(h_post, h_prior, factors, mag_sq);

    if (state.has_likelihood) {
        const double rho = state.damping;
        for (Index i = 0; i < lik.mean.size(); ++i) {
            lik.mean[i] = (1.0 - rho) * state.g_likelihood.mean[i] + rho * lik.mean[i];
            lik.variance[i] = clamp_variance((1.0 - rho) * state.g_likelihood.variance[i] +
                                             rho * lik.variance[i]);
        }
    }
    state.g_likelihood = lik;
    state.has_likelihood = true;
    ++state.iteration;

    MoResult out;
    out.g_likelihood = lik;
    GaussianMessage b_g = gaussian_combine(g_prior, lik);
    out.g_hat = b_g.mean;
    out.g_var = b_g.variance;
    out.h_hat = h_post.mean;
    return out;
}

}  // namespace tsdcp
