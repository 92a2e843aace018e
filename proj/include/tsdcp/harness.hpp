#pragma once

#include "tsdcp/channel_sim.hpp"
#include "tsdcp/predictor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsdcp {

enum class SweepAxis { SnrDb, DopplerScale, Horizon };

struct ExperimentConfig {
    ScenarioConfig scenario;
    PredictorConfig algorithm;
    SweepAxis axis = SweepAxis::SnrDb;
    std::vector<double> sweep_values{20.0};
    int trials = 1;
    std::vector<std::uint64_t> seeds;  // explicit seeds; else base_seed + trial
    std::uint64_t base_seed = 1;
    std::string output_path;
    std::string output_format = "csv";
    bool report_wall_time = false;  // off by default so outputs stay byte-stable
};

struct ResultRow {
    double sweep = 0.0;
    std::string algorithm;
    double tnmse_db = 0.0;
    double horizon_nmse_db = 0.0;
    long iters = 0;
    long wall_ms = 0;
    long long degenerate = 0;
    std::uint64_t seed = 0;
    std::string error;  // nonempty when the trial failed
};

/// Strict parse: unknown keys rejected, defaults applied.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Effective configuration (defaults filled in), as canonical JSON text.
std::string config_manifest(const ExperimentConfig& cfg);

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, int threads = 1);

std::string format_results(const std::vector<ResultRow>& rows, const std::string& format);
void emit_results(const std::vector<ResultRow>& rows, const std::string& format,
                  const std::string& path);

/// Built-in tiny scenario used for golden regression.
ExperimentConfig golden_config();

}  // namespace tsdcp
