#pragma once

#include "tsdcp/gaussian.hpp"
#include "tsdcp/grids.hpp"

namespace tsdcp {

/// Sequential state of the multi-linear observation module: the damped
/// extrinsic likelihood carried between fixed-point iterations, plus
/// counters. Never shared between frames.
struct MoState {
    GaussianMessage g_likelihood;  // extrinsic message H -> G from the last pass
    bool has_likelihood = false;
    int iteration = 0;
    double damping = 0.7;

    explicit MoState(double rho = 0.7) : damping(rho) {}
};

struct MoResult {
    GaussianMessage g_likelihood;  // extrinsic likelihood for G
    Tensor4c h_hat;                // posterior mean of the SFT channel
    Tensor4c g_hat;                // fused posterior mean of the ADD channel
    Tensor4r g_var;                // fused posterior variance of G
};

/// ADD belief -> SFT-space Gaussian prior for H (mean via Tucker synthesis,
/// variance via magnitude-squared mode products).
GaussianMessage forward_pass(const GaussianMessage& g_belief, const FactorSet& factors,
                             const std::array<MatrixXr, 4>& mag_sq);

/// Fuse the H prior with the observation Gaussian (mean Y, variance sigma_z^2).
GaussianMessage observation_fuse(const Tensor4c& y, double sigma_z_sq,
                                 const GaussianMessage& h_prior);

/// Posterior H belief -> extrinsic likelihood message for G (adjoint
/// propagation of the extrinsic H statistics through the factor matrices).
GaussianMessage backward_pass(const GaussianMessage& h_posterior,
                              const GaussianMessage& h_prior, const FactorSet& factors,
                              const std::array<MatrixXr, 4>& mag_sq);

/// One fixed-point iteration: forward -> fuse -> backward -> damped
/// likelihood -> final fuse with the prior.
MoResult mo_iteration(const Tensor4c& y, double sigma_z_sq, const GaussianMessage& g_prior,
                      const FactorSet& factors, MoState& state);

}  // namespace tsdcp
