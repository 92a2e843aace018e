#pragma once

#include "tsdcp/grids.hpp"
#include "tsdcp/sp.hpp"

namespace tsdcp {

inline constexpr double kMCap = 5.0;
inline constexpr double kLMin = 0.01;

/// Learned model hyperparameters, all element-wise tensors over the ADD grid.
struct Hyperparams {
    Tensor4r m_hat;   // support transition factor
    Tensor4r l_hat;   // temporal correlation factor, in [l_min, 1]
    Tensor4r v_hat;   // neighbor-coupled value variance
    Tensor4r v_bar;   // base value variance
    double gamma = 0.3;

    static Hyperparams init(const std::array<Index, 4>& dims, double v0, double gamma);
};

/// Cross-frame accumulators for the hyperparameter learning rules.
/// All statistics are per-element tensors; commit once per frame.
struct LearningWorkspace {
    std::array<Index, 4> dims{1, 1, 1, 1};
    long frames = 0;

    Tensor4r k_m_sum;       // sum of (2S_n-1)(2S_{n-1}-1)
    Tensor4r first_q_sq;    // |Q_1|^2 + E_{Q,1}
    Tensor4r q_sq_sum;      // sum_{n>=2} |Q_n|^2
    Tensor4r e_q_sum;       // sum_{n>=2} E_{Q,n}
    Tensor4r cross_sum;     // sum_{n>=2} Re{conj(Q_{n-1}) Q_n}
    Tensor4r prev_sq_sum;   // sum_{n>=2} |Q_{n-1}|^2 + E_{Q,n-1}
    Tensor4r dq_sq_sum;     // sum_{n>=2} |Q_n - Q_{n-1}|^2

    Tensor4r s_prev;        // committed previous-frame posteriors
    Tensor4c q_prev;
    Tensor4r e_q_prev;

    static LearningWorkspace make(const std::array<Index, 4>& dims);

    /// Fold the current frame's posteriors into the running sums.
    void accumulate_frame(const Tensor4r& s_hat, const Tensor4c& q_hat, const Tensor4r& e_q);

    /// Copy with the given frame folded in but not committed (used for
    /// within-frame hyperparameter refreshes).
    LearningWorkspace with_frame(const Tensor4r& s_hat, const Tensor4c& q_hat,
                                 const Tensor4r& e_q) const;
};

Tensor4r learn_transition_factor(const LearningWorkspace& ws);
Tensor4r learn_temporal_factor(const LearningWorkspace& ws, const Tensor4r& v_bar,
                               const Tensor4r& l_prev);
std::pair<Tensor4r, Tensor4r> learn_value_variance(const LearningWorkspace& ws,
                                                   const Tensor4r& l_hat, double gamma,
                                                   const std::vector<std::array<long, 4>>& offsets);

/// Quadratic model of the perturbation objective for one domain:
/// minimize d^T Pi d - 2 mu^T d over the half-spacing box.
struct PerturbQuadratic {
    MatrixXr pi;
    VectorXr mu;
};

PerturbQuadratic build_perturbation_quadratic(Domain domain, const Tensor4c& g_hat,
                                              const Tensor4r& e_g, const Tensor4c& h_hat,
                                              const GridSet& grids, const SystemDims& dims);

VectorXr solve_perturbation(const PerturbQuadratic& q, double box, bool* singular = nullptr);

/// Exact objective the quadratic approximates: residual fit plus the
/// variance-weighted energy term, at the given own-domain perturbation.
double perturbation_objective(Domain domain, const VectorXr& pert_d, const Tensor4c& g_hat,
                              const Tensor4r& e_g, const Tensor4c& h_hat, const GridSet& grids,
                              const SystemDims& dims);

/// One safeguarded sequential pass over all four domains; updates
/// grids.pert in place. Returns number of accepted domain steps.
int perturbation_pass(const Tensor4c& g_hat, const Tensor4r& e_g, const Tensor4c& h_hat,
                      GridSet& grids, const SystemDims& dims);

/// Cells that are cyclic local maxima of |g| over the +/-1 neighborhood and
/// within rel_threshold of the global maximum.
std::vector<Index> dominant_cells(const Tensor4c& g_hat, double rel_threshold);

/// Least-squares gains for the given cells' (perturbed) atoms against the
/// observation; all other cells are zero.
Tensor4c refit_gains(const Tensor4c& y, const std::vector<Index>& cells,
                     const GridSet& grids, const SystemDims& dims);

}  // namespace tsdcp
