#pragma once

#include "tsdcp/learning.hpp"
#include "tsdcp/mo.hpp"

#include <vector>

namespace tsdcp {

struct PredictorConfig {
    SystemDims dims;
    double delta_f = 1.0;
    double delta_t = 1.0;
    int max_iters = 20;
    double tol = 1e-4;          // early exit on relative change of g_hat
    double damping = 0.7;
    double gamma = 0.3;
    double threshold = 0.1;     // Gaussian-sum gating threshold
    bool learn_perturbations = true;
    int pert_start_iter = 3;    // first outer iteration that runs perturbation learning
    bool learn_hyperparams = true;
    std::vector<double> horizons{1.0};  // pilot-symbol units, fractional allowed
};

/// Online state carried across frames.
struct FrameState {
    PredictorConfig cfg;
    GridSet grids;
    Hyperparams hp;
    LearningWorkspace ws;
    Tensor4r s_prev;
    Tensor4c q_prev;
    Tensor4r e_q_prev;
    Index frame_index = 0;
    bool hp_initialized = false;

    static FrameState init(const PredictorConfig& cfg);
};

struct PredictionResult {
    Tensor4c g_hat;                   // posterior ADD coefficient estimate
    Tensor4r g_var;
    Tensor4c h_hat;                   // posterior SFT estimate at the pilots
    std::vector<Tensor4c> predicted;  // one (Nh,Nv,Nsc,1) tensor per horizon
    std::vector<double> g_change_trace;
    int iterations = 0;
    std::int64_t degenerate = 0;
    bool aborted = false;
};

PredictionResult run_frame(const Tensor4c& y, double sigma_z_sq, FrameState& state);

std::vector<Tensor4c> predict_channel(const Tensor4c& g_hat, const GridSet& grids,
                                      const SystemDims& dims,
                                      const std::vector<double>& horizons);

/// Eq.-style time-averaged NMSE over frames; returns {linear, dB}.
std::pair<double, double> tnmse(const std::vector<Tensor4c>& predicted,
                                const std::vector<Tensor4c>& truth);

/// Per-element LS + linear extrapolation over the frame's pilot symbols.
Tensor4c baseline_predict(const Tensor4c& y, double horizon);

}  // namespace tsdcp
