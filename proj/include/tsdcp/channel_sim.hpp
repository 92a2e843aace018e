#pragma once

#include "tsdcp/grids.hpp"

#include <cstdint>
#include <vector>

namespace tsdcp {

struct Path {
    Cplx gain{0.0, 0.0};
    double theta = 0.0;  // horizontal directional cosine
    double phi = 0.0;    // vertical directional cosine
    double tau = 0.0;    // delay (s)
    double nu = 0.0;     // Doppler (Hz)
};

/// Per-frame path lists; paths drift smoothly across frames.
struct PathSet {
    std::vector<std::vector<Path>> frames;
};

struct ScenarioConfig {
    SystemDims dims;
    double delta_f = 120e3;    // pilot subcarrier spacing (Hz)
    double delta_t = 0.625e-3; // pilot symbol interval (s)
    Index n_frames = 1;
    int paths_min = 1;
    int paths_max = 3;
    double birth_death_prob = 0.0;   // per-path per-frame replacement probability
    double drift_angle = 0.0;        // max per-frame drift of directional cosines
    double drift_delay = 0.0;        // seconds per frame
    double drift_doppler = 0.0;      // Hz per frame
    double gain_drift = 0.0;         // relative complex-gain walk per frame
    double cluster_spread = 0.0;     // parameter spread when spawning clustered paths
    int cluster_size = 1;
    double sigma_z_sq = 0.0;
    double snr_db = 20.0;  // used by the harness when noise is SNR-specified
    std::uint64_t seed = 1;
    Index frame_advance_symbols = 1; // sliding-frame advance (pilot symbols)
    bool on_grid = false;            // snap path parameters to the inference grid
};

PathSet generate_paths(const ScenarioConfig& cfg);

/// H = sum_l g_l . a_h(theta) o a_v(phi) o b(tau) o c(nu) at pilot resources.
/// symbol_offset shifts the Doppler phase reference (sliding frames).
Tensor4c synthesize_sft_channel(const PathSet& paths, Index frame, const SystemDims& dims,
                                double delta_f, double delta_t, double symbol_offset = 0.0);

/// Y = H + Z with i.i.d. circular complex Gaussian noise (pilots all-ones).
Tensor4c observe(const Tensor4c& h, double sigma_z_sq, std::uint64_t seed);

/// Ground-truth SFT channel at future symbol offsets (last pilot symbol = 0).
std::vector<Tensor4c> prediction_target(const PathSet& paths, Index frame,
                                        const std::vector<double>& horizon_symbols,
                                        const SystemDims& dims, double delta_f, double delta_t,
                                        double symbol_offset = 0.0);

}  // namespace tsdcp
