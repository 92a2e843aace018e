#pragma once

#include "tsdcp/tensor.hpp"

#include <array>
#include <vector>

namespace tsdcp {

using MatrixXc = Eigen::MatrixXcd;
using MatrixXr = Eigen::MatrixXd;
using VectorXc = Eigen::VectorXcd;
using VectorXr = Eigen::VectorXd;

/// The four physical grid domains, in tensor-mode order.
enum class Domain { Horizontal = 0, Vertical = 1, Delay = 2, Doppler = 3 };

struct SystemDims {
    Index n_h = 1, n_v = 1, n_sc = 1, n_sym = 1;  // antennas H/V, subcarriers, pilot symbols
    Index k_h = 1, k_v = 1, k_de = 1, k_do = 1;   // grid counts per domain

    std::array<Index, 4> phys() const { return {n_h, n_v, n_sc, n_sym}; }
    std::array<Index, 4> grid() const { return {k_h, k_v, k_de, k_do}; }
    Index n_total() const { return n_h * n_v * n_sc * n_sym; }
    Index k_total() const { return k_h * k_v * k_de * k_do; }
};

/// Per-domain sampling grids plus per-frame perturbations.
/// Directional-cosine grids tile [-1/2, 1/2); delay [0, 1/delta_f);
/// Doppler is centered on [-1/(2 delta_T), 1/(2 delta_T)).
struct GridSet {
    std::array<VectorXr, 4> base;    // theta_bar, phi_bar, tau_bar, nu_bar
    std::array<VectorXr, 4> pert;    // current perturbations, same lengths
    double delta_f = 1.0;            // pilot subcarrier spacing (Hz)
    double delta_t = 1.0;            // pilot symbol interval (s)

    const VectorXr& grid(Domain d) const { return base[static_cast<std::size_t>(d)]; }
    VectorXr& perturbation(Domain d) { return pert[static_cast<std::size_t>(d)]; }
    const VectorXr& perturbation(Domain d) const { return pert[static_cast<std::size_t>(d)]; }

    /// Uniform spacing of domain d's base grid (in that domain's units).
    double spacing(Domain d) const;
    /// Half-spacing box bound for perturbation learning.
    double pert_box(Domain d) const { return 0.5 * spacing(d); }
};

/// Phase scale per unit parameter: 1 for angles, delta_f for delay,
/// delta_t for Doppler. Doppler carries the opposite phase sign.
double domain_scale(Domain d, double delta_f, double delta_t);
double domain_sign(Domain d);

/// Element n (0-based) = exp(sign * j * 2*pi * n * scale * param).
VectorXc steering_vector(Domain kind, double param, Index length, double scale);

/// Uniform grids with zero perturbations.
GridSet uniform_grids(const SystemDims& dims, double delta_f, double delta_t);

/// Column k = steering vector at grid[k] + perturbation[k].
MatrixXc build_factor_matrix(Domain kind, const VectorXr& grid, const VectorXr& pert,
                             Index length, double scale);

/// Column k = d/dparam of the steering vector at grid[k] + perturbation[k].
MatrixXc build_derivative_matrix(Domain kind, const VectorXr& grid, const VectorXr& pert,
                                 Index length, double scale);

struct FactorSet {
    std::array<MatrixXc, 4> a;  // mode-1..4 factor matrices

    const MatrixXc& operator[](int i) const { return a[static_cast<std::size_t>(i)]; }
    MatrixXc& operator[](int i) { return a[static_cast<std::size_t>(i)]; }
};

/// Factor matrices for all four domains at the grids' current perturbations.
FactorSet build_factors(const GridSet& g, const SystemDims& dims);

/// Element-wise |.|^2 of each factor matrix (all-ones for steering columns).
std::array<MatrixXr, 4> magnitude_sq_factors(const FactorSet& f);

/// H = G x1 A_h x2 A_v x3 B x4 C.
Tensor4c tucker_synthesize(const Tensor4c& g, const FactorSet& f);

/// Adjoint map: X x1 A_h^H x2 A_v^H x3 B^H x4 C^H.
Tensor4c tucker_adjoint(const Tensor4c& x, const FactorSet& f);

/// Real-tensor mode products with the magnitude-squared factors (variance
/// propagation) and its adjoint (transposed factors).
Tensor4r var_forward(const Tensor4r& v, const std::array<MatrixXr, 4>& m2);
Tensor4r var_adjoint(const Tensor4r& v, const std::array<MatrixXr, 4>& m2);

}  // namespace tsdcp
