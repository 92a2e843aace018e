#include "tsdcp/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tsdcp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reflecting walk step within [lo, hi).
double reflect(double x, double lo, double hi)
{
    double w = hi - lo;
    if (w <= 0.0) return lo;
    while (x < lo || x >= hi) {
        if (x < lo) x = 2.0 * lo - x;
        if (x >= hi) x = 2.0 * hi - x - 1e-12;
    }
    return x;
}

double snap(double x, const VectorXr& grid)
{
    Index best = 0;
    double bd = std::abs(x - grid[0]);
    for (Index i = 1; i < grid.size(); ++i) {
        double d = std::abs(x - grid[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return grid[best];
}

struct Bounds {
    double theta_lo, theta_hi, tau_lo, tau_hi, nu_lo, nu_hi;
};

Path spawn_path(std::mt19937_64& rng, const Bounds& b, const GridSet* grid_snap)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Path p;
    p.theta = b.theta_lo + u01(rng) * (b.theta_hi - b.theta_lo);
    p.phi = b.theta_lo + u01(rng) * (b.theta_hi - b.theta_lo);
    p.tau = b.tau_lo + u01(rng) * (b.tau_hi - b.tau_lo) * 0.5;  // early delays dominate
    p.nu = b.nu_lo + u01(rng) * (b.nu_hi - b.nu_lo);
    double mag = 0.5 + u01(rng);
    double ph = kTwoPi * u01(rng);
    p.gain = std::polar(mag, ph);
    if (grid_snap) {
        p.theta = snap(p.theta, grid_snap->grid(Domain::Horizontal));
        p.phi = snap(p.phi, grid_snap->grid(Domain::Vertical));
        p.tau = snap(p.tau, grid_snap->grid(Domain::Delay));
        p.nu = snap(p.nu, grid_snap->grid(Domain::Doppler));
    }
    return p;
}

}  // namespace

PathSet generate_paths(const ScenarioConfig& cfg)
{
    if (cfg.paths_min < 1 || cfg.paths_max < cfg.paths_min)
        throw std::invalid_argument("generate_paths: bad path-count range");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> ucount(cfg.paths_min, cfg.paths_max);

    Bounds b{-0.5, 0.5, 0.0, 1.0 / cfg.delta_f, -0.5 / cfg.delta_t, 0.5 / cfg.delta_t};
    GridSet grid = uniform_grids(cfg.dims, cfg.delta_f, cfg.delta_t);
    const GridSet* snap_to = cfg.on_grid ? &grid : nullptr;

    std::vector<Path> cur;
    int n0 = ucount(rng);
    for (int i = 0; i < n0; ++i) {
        Path center = spawn_path(rng, b, snap_to);
        cur.push_back(center);
        for (int c = 1; c < cfg.cluster_size; ++c) {
            Path p = center;
            p.theta = reflect(p.theta + cfg.cluster_spread * (2.0 * u01(rng) - 1.0), b.theta_lo, b.theta_hi);
            p.phi = reflect(p.phi + cfg.cluster_spread * (2.0 * u01(rng) - 1.0), b.theta_lo, b.theta_hi);
            p.gain *= std::polar(0.7, kTwoPi * u01(rng));
            cur.push_back(p);
        }
    }

    PathSet out;
    out.frames.reserve(static_cast<std::size_t>(cfg.n_frames));
    for (Index f = 0; f < cfg.n_frames; ++f) {
        if (f > 0) {
            for (auto& p : cur) {
                if (u01(rng) < cfg.birth_death_prob) {
                    p = spawn_path(rng, b, snap_to);
                    continue;
                }
                p.theta = reflect(p.theta + cfg.drift_angle * (2.0 * u01(rng) - 1.0), b.theta_lo, b.theta_hi);
                p.phi = reflect(p.phi + cfg.drift_angle * (2.0 * u01(rng) - 1.0), b.theta_lo, b.theta_hi);
                p.tau = reflect(p.tau + cfg.drift_delay * (2.0 * u01(rng) - 1.0), b.tau_lo, b.tau_hi);
                p.nu = reflect(p.nu + cfg.drift_doppler * (2.0 * u01(rng) - 1.0), b.nu_lo, b.nu_hi);
                if (cfg.gain_drift > 0.0)
                    p.gain *= std::polar(1.0, kTwoPi * cfg.gain_drift * (2.0 * u01(rng) - 1.0));
                if (snap_to) {
                    p.theta = snap(p.theta, snap_to->grid(Domain::Horizontal));
                    p.phi = snap(p.phi, snap_to->grid(Domain::Vertical));
                    p.tau = snap(p.tau, snap_to->grid(Domain::Delay));
                    p.nu = snap(p.nu, snap_to->grid(Domain::Doppler));
                }
            }
        }
        out.frames.push_back(cur);
    }
    return out;
}

Tensor4c synthesize_sft_channel(const PathSet& paths, Index frame, const SystemDims& dims,
                                double delta_f, double delta_t, double symbol_offset)
{
    const auto& fr = paths.frames.at(static_cast<std::size_t>(frame));
    Tensor4c h(dims.n_h, dims.n_v, dims.n_sc, dims.n_sym);
    for (const Path& p : fr) {
        VectorXc ah = steering_vector(Domain::Horizontal, p.theta, dims.n_h, 1.0);
        VectorXc av = steering_vector(Domain::Vertical, p.phi, dims.n_v, 1.0);
        VectorXc bt = steering_vector(Domain::Delay, p.tau, dims.n_sc, delta_f);
        VectorXc cv(dims.n_sym);
        for (Index n = 0; n < dims.n_sym; ++n)
            cv[n] = std::polar(1.0, kTwoPi * delta_t * p.nu * (static_cast<double>(n) + symbol_offset));
        for (Index i4 = 0; i4 < dims.n_sym; ++i4)
            for (Index i3 = 0; i3 < dims.n_sc; ++i3)
                for (Index i2 = 0; i2 < dims.n_v; ++i2)
                    for (Index i1 = 0; i1 < dims.n_h; ++i1)
                        h(i1, i2, i3, i4) += p.gain * ah[i1] * av[i2] * bt[i3] * cv[i4];
    }
    return h;
}

Tensor4c observe(const Tensor4c& h, double sigma_z_sq, std::uint64_t seed)
{
    if (sigma_z_sq < 0.0) throw std::invalid_argument("observe: negative noise variance");
    Tensor4c y = h;
    if (sigma_z_sq == 0.0) return y;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double s = std::sqrt(sigma_z_sq / 2.0);
    for (Index i = 0; i < y.size(); ++i) {
        double re = n01(rng);
        double im = n01(rng);
        y[i] += Cplx(s * re, s * im);
    }
    return y;
}

std::vector<Tensor4c> prediction_target(const PathSet& paths, Index frame,
                                        const std::vector<double>& horizon_symbols,
                                        const SystemDims& dims, double delta_f, double delta_t,
                                        double symbol_offset)
{
    const auto& fr = paths.frames.at(static_cast<std::size_t>(frame));
    std::vector<Tensor4c> out;
    out.reserve(horizon_symbols.size());
    for (double m : horizon_symbols) {
        Tensor4c h(dims.n_h, dims.n_v, dims.n_sc, 1);
        double t = static_cast<double>(dims.n_sym - 1) + m + symbol_offset;
        for (const Path& p : fr) {
            VectorXc ah = steering_vector(Domain::Horizontal, p.theta, dims.n_h, 1.0);
            VectorXc av = steering_vector(Domain::Vertical, p.phi, dims.n_v, 1.0);
            VectorXc bt = steering_vector(Domain::Delay, p.tau, dims.n_sc, delta_f);
            Cplx c = std::polar(1.0, kTwoPi * delta_t * p.nu * t);
            for (Index i3 = 0; i3 < dims.n_sc; ++i3)
                for (Index i2 = 0; i2 < dims.n_v; ++i2)
                    for (Index i1 = 0; i1 < dims.n_h; ++i1)
                        h(i1, i2, i3, 0) += p.gain * ah[i1] * av[i2] * bt[i3] * c;
        }
        out.push_back(std::move(h));
    }
    return out;
}

}  // namespace tsdcp
