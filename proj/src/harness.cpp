#include "tsdcp/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tsdcp {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::runtime_error("config: unknown key \"" + it.key() + "\" in " + ctx);
    }
}

template <class T>
T get_or(const json& j, const char* key, T def)
{
    if (!j.contains(key)) return def;
    return j.at(key).get<T>();
}

std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

const char* axis_name(SweepAxis a)
{
    switch (a) {
        case SweepAxis::SnrDb: return "snr_db";
        case SweepAxis::DopplerScale: return "doppler_scale";
        case SweepAxis::Horizon: return "horizon";
    }
    return "snr_db";
}

SweepAxis axis_from(const std::string& s)
{
    if (s == "snr_db") return SweepAxis::SnrDb;
    if (s == "doppler_scale") return SweepAxis::DopplerScale;
    if (s == "horizon") return SweepAxis::Horizon;
    throw std::runtime_error("config: unknown sweep axis \"" + s + "\"");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: JSON parse error: ") + e.what());
    }

    ExperimentConfig cfg;
    check_keys(j,
               {"scenario", "algorithm", "sweep", "trials", "seeds", "base_seed", "output",
                "report_wall_time"},
               "top level");

    if (!j.contains("scenario")) throw std::runtime_error("config: missing \"scenario\"");
    const json& sc = j.at("scenario");
    check_keys(sc,
               {"dims", "delta_f", "delta_t", "n_frames", "paths_min", "paths_max",
                "birth_death_prob", "drift_angle", "drift_delay", "drift_doppler",
                "gain_drift", "cluster_spread", "cluster_size", "on_grid", "snr_db",
                "frame_advance_symbols"},
               "scenario");
    if (!sc.contains("dims")) throw std::runtime_error("config: missing \"scenario.dims\"");
    const json& dm = sc.at("dims");
    check_keys(dm, {"n_h", "n_v", "n_sc", "n_sym", "k_h", "k_v", "k_de", "k_do"},
               "scenario.dims");
    SystemDims& d = cfg.scenario.dims;
    d.n_h = get_or<Index>(dm, "n_h", 1);
    d.n_v = get_or<Index>(dm, "n_v", 1);
    d.n_sc = get_or<Index>(dm, "n_sc", 1);
    d.n_sym = get_or<Index>(dm, "n_sym", 1);
    if (d.n_h < 1 || d.n_v < 1 || d.n_sc < 1 || d.n_sym < 1)
        throw std::runtime_error("config: scenario.dims entries must be positive");
    d.k_h = get_or<Index>(dm, "k_h", d.n_h);
    d.k_v = get_or<Index>(dm, "k_v", d.n_v);
    d.k_de = get_or<Index>(dm, "k_de", d.n_sc);
    d.k_do = get_or<Index>(dm, "k_do", d.n_sym);

    cfg.scenario.delta_f = get_or<double>(sc, "delta_f", 120e3);
    cfg.scenario.delta_t = get_or<double>(sc, "delta_t", 0.625e-3);
    cfg.scenario.n_frames = get_or<Index>(sc, "n_frames", 1);
    cfg.scenario.paths_min = get_or<int>(sc, "paths_min", 1);
    cfg.scenario.paths_max = get_or<int>(sc, "paths_max", 3);
    cfg.scenario.birth_death_prob = get_or<double>(sc, "birth_death_prob", 0.0);
    cfg.scenario.drift_angle = get_or<double>(sc, "drift_angle", 0.0);
    cfg.scenario.drift_delay = get_or<double>(sc, "drift_delay", 0.0);
    cfg.scenario.drift_doppler = get_or<double>(sc, "drift_doppler", 0.0);
    cfg.scenario.gain_drift = get_or<double>(sc, "gain_drift", 0.0);
    cfg.scenario.cluster_spread = get_or<double>(sc, "cluster_spread", 0.0);
    cfg.scenario.cluster_size = get_or<int>(sc, "cluster_size", 1);
    cfg.scenario.on_grid = get_or<bool>(sc, "on_grid", false);
    cfg.scenario.snr_db = get_or<double>(sc, "snr_db", 20.0);
    cfg.scenario.frame_advance_symbols = get_or<Index>(sc, "frame_advance_symbols", 1);
    if (cfg.scenario.birth_death_prob < 0.0 || cfg.scenario.birth_death_prob > 1.0)
        throw std::runtime_error("config: birth_death_prob must be in [0,1]");

    if (j.contains("algorithm")) {
        const json& al = j.at("algorithm");
        check_keys(al,
                   {"max_iters", "tol", "damping", "gamma", "threshold",
                    "learn_perturbations", "pert_start_iter", "learn_hyperparams",
                    "horizons"},
                   "algorithm");
        cfg.algorithm.max_iters = get_or<int>(al, "max_iters", 20);
        cfg.algorithm.tol = get_or<double>(al, "tol", 1e-4);
        cfg.algorithm.damping = get_or<double>(al, "damping", 0.7);
        cfg.algorithm.gamma = get_or<double>(al, "gamma", 0.3);
        cfg.algorithm.threshold = get_or<double>(al, "threshold", 0.1);
        cfg.algorithm.learn_perturbations = get_or<bool>(al, "learn_perturbations", true);
        cfg.algorithm.pert_start_iter = get_or<int>(al, "pert_start_iter", 3);
        cfg.algorithm.learn_hyperparams = get_or<bool>(al, "learn_hyperparams", true);
        if (al.contains("horizons"))
            cfg.algorithm.horizons = al.at("horizons").get<std::vector<double>>();
    }
    if (cfg.algorithm.horizons.empty())
        throw std::runtime_error("config: algorithm.horizons must be nonempty");

    if (j.contains("sweep")) {
        const json& sw = j.at("sweep");
        check_keys(sw, {"axis", "values"}, "sweep");
        cfg.axis = axis_from(get_or<std::string>(sw, "axis", "snr_db"));
        if (sw.contains("values"))
            cfg.sweep_values = sw.at("values").get<std::vector<double>>();
    }
    if (cfg.sweep_values.empty())
        throw std::runtime_error("config: sweep.values must be nonempty");

    cfg.trials = get_or<int>(j, "trials", 1);
    if (cfg.trials < 1) throw std::runtime_error("config: trials must be >= 1");
    cfg.base_seed = get_or<std::uint64_t>(j, "base_seed", 1);
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.report_wall_time = get_or<bool>(j, "report_wall_time", false);

    if (j.contains("output")) {
        const json& out = j.at("output");
        check_keys(out, {"path", "format"}, "output");
        cfg.output_path = get_or<std::string>(out, "path", "");
        cfg.output_format = get_or<std::string>(out, "format", "csv");
    }
    if (cfg.output_format != "csv" && cfg.output_format != "json")
        throw std::runtime_error("config: output.format must be csv or json");

    // Fill seeds so the manifest echoes every effective value.
    if (cfg.seeds.empty())
        for (int t = 0; t < cfg.trials; ++t)
            cfg.seeds.push_back(cfg.base_seed + static_cast<std::uint64_t>(t));
    if (static_cast<int>(cfg.seeds.size()) != cfg.trials)
        throw std::runtime_error("config: seeds length must equal trials");
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_manifest(const ExperimentConfig& cfg)
{
    json j;
    j["scenario"] = {
        {"dims",
         {{"n_h", cfg.scenario.dims.n_h},
          {"n_v", cfg.scenario.dims.n_v},
          {"n_sc", cfg.scenario.dims.n_sc},
          {"n_sym", cfg.scenario.dims.n_sym},
          {"k_h", cfg.scenario.dims.k_h},
          {"k_v", cfg.scenario.dims.k_v},
          {"k_de", cfg.scenario.dims.k_de},
          {"k_do", cfg.scenario.dims.k_do}}},
        {"delta_f", cfg.scenario.delta_f},
        {"delta_t", cfg.scenario.delta_t},
        {"n_frames", cfg.scenario.n_frames},
        {"paths_min", cfg.scenario.paths_min},
        {"paths_max", cfg.scenario.paths_max},
        {"birth_death_prob", cfg.scenario.birth_death_prob},
        {"drift_angle", cfg.scenario.drift_angle},
        {"drift_delay", cfg.scenario.drift_delay},
        {"drift_doppler", cfg.scenario.drift_doppler},
        {"gain_drift", cfg.scenario.gain_drift},
        {"cluster_spread", cfg.scenario.cluster_spread},
        {"cluster_size", cfg.scenario.cluster_size},
        {"on_grid", cfg.scenario.on_grid},
        {"snr_db", cfg.scenario.snr_db},
        {"frame_advance_symbols", cfg.scenario.frame_advance_symbols}};
    j["algorithm"] = {{"max_iters", cfg.algorithm.max_iters},
                      {"tol", cfg.algorithm.tol},
                      {"damping", cfg.algorithm.damping},
                      {"gamma", cfg.algorithm.gamma},
                      {"threshold", cfg.algorithm.threshold},
                      {"learn_perturbations", cfg.algorithm.learn_perturbations},
                      {"pert_start_iter", cfg.algorithm.pert_start_iter},
                      {"learn_hyperparams", cfg.algorithm.learn_hyperparams},
                      {"horizons", cfg.algorithm.horizons}};
    j["sweep"] = {{"axis", axis_name(cfg.axis)}, {"values", cfg.sweep_values}};
    j["trials"] = cfg.trials;
    j["seeds"] = cfg.seeds;
    j["base_seed"] = cfg.base_seed;
    j["report_wall_time"] = cfg.report_wall_time;
    j["output"] = {{"path", cfg.output_path}, {"format", cfg.output_format}};
    return j.dump(2);
}

namespace {

struct TrialOutcome {
    ResultRow tsdcp;
    ResultRow baseline;
};

TrialOutcome run_trial(const ExperimentConfig& cfg, double sweep_value, std::uint64_t seed)
{
    TrialOutcome out;
    out.tsdcp.sweep = out.baseline.sweep = sweep_value;
    out.tsdcp.algorithm = "tsdcp";
    out.baseline.algorithm = "baseline";
    out.tsdcp.seed = out.baseline.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        ScenarioConfig sc = cfg.scenario;
        sc.seed = seed;
        PredictorConfig alg = cfg.algorithm;
        alg.dims = sc.dims;
        alg.delta_f = sc.delta_f;
        alg.delta_t = sc.delta_t;
        if (cfg.axis == SweepAxis::Horizon) alg.horizons = {sweep_value};

        PathSet paths = generate_paths(sc);
        if (cfg.axis == SweepAxis::DopplerScale) {
            const double lim = 0.5 / sc.delta_t;
            for (auto& fr : paths.frames)
                for (auto& p : fr)
                    p.nu = std::clamp(p.nu * sweep_value, -lim, lim * (1.0 - 1e-12));
        }

        const double snr_db = (cfg.axis == SweepAxis::SnrDb) ? sweep_value : sc.snr_db;
        Tensor4c h0 = synthesize_sft_channel(paths, 0, sc.dims, sc.delta_f, sc.delta_t, 0.0);
        double sig_power = frobenius_norm(h0);
        sig_power = sig_power * sig_power / static_cast<double>(h0.size());
        const double sigma_z_sq = sig_power * std::pow(10.0, -snr_db / 10.0);

        FrameState st = FrameState::init(alg);
        const std::size_t nh = alg.horizons.size();
        std::vector<std::vector<Tensor4c>> pred(nh), truth(nh), base(nh);
        long iters = 0;
        long long degen = 0;

        for (Index f = 0; f < sc.n_frames; ++f) {
            double offset =
                static_cast<double>(f) * static_cast<double>(sc.frame_advance_symbols);
            Tensor4c h = synthesize_sft_channel(paths, f, sc.dims, sc.delta_f, sc.delta_t,
                                                offset);
            Tensor4c y = observe(h, sigma_z_sq,
                                 seed * 1000003ull + static_cast<std::uint64_t>(f));
            auto tgt = prediction_target(paths, f, alg.horizons, sc.dims, sc.delta_f,
                                         sc.delta_t, offset);
            PredictionResult res = run_frame(y, sigma_z_sq, st);
            if (res.aborted || res.predicted.size() != nh)
                throw std::runtime_error("frame aborted (non-finite beliefs)");
            iters += res.iterations;
            degen += res.degenerate;
            for (std::size_t k = 0; k < nh; ++k) {
                pred[k].push_back(res.predicted[k]);
                truth[k].push_back(tgt[k]);
                base[k].push_back(baseline_predict(y, alg.horizons[k]));
            }
        }

        double ts_first = tnmse(pred[0], truth[0]).second;
        double bl_first = tnmse(base[0], truth[0]).second;
        double ts_all = 0.0, bl_all = 0.0;
        for (std::size_t k = 0; k < nh; ++k) {
            ts_all += tnmse(pred[k], truth[k]).second;
            bl_all += tnmse(base[k], truth[k]).second;
        }
        ts_all /= static_cast<double>(nh);
        bl_all /= static_cast<double>(nh);

        out.tsdcp.tnmse_db = ts_first;
        out.tsdcp.horizon_nmse_db = ts_all;
        out.tsdcp.iters = iters;
        out.tsdcp.degenerate = degen;
        out.baseline.tnmse_db = bl_first;
        out.baseline.horizon_nmse_db = bl_all;
    } catch (const std::exception& e) {
        out.tsdcp.error = e.what();
        out.baseline.error = e.what();
        out.tsdcp.tnmse_db = out.tsdcp.horizon_nmse_db = std::nan("");
        out.baseline.tnmse_db = out.baseline.horizon_nmse_db = std::nan("");
    }
    if (cfg.report_wall_time) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        out.tsdcp.wall_ms = static_cast<long>(ms);
    }
    return out;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, int threads)
{
    struct Task {
        double sweep;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double sv : cfg.sweep_values)
        for (int t = 0; t < cfg.trials; ++t)
            tasks.push_back({sv, cfg.seeds[static_cast<std::size_t>(t)]});

    std::vector<TrialOutcome> outcomes(tasks.size());
    if (threads < 1) threads = 1;
    threads = std::min<int>(threads, static_cast<int>(tasks.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            outcomes[i] = run_trial(cfg, tasks[i].sweep, tasks[i].seed);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<ResultRow> rows;
    rows.reserve(outcomes.size() * 2);
    for (auto& o : outcomes) {
        rows.push_back(std::move(o.tsdcp));
        rows.push_back(std::move(o.baseline));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.sweep != b.sweep) return a.sweep < b.sweep;
        if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
        return a.seed < b.seed;
    });
    return rows;
}

std::string format_results(const std::vector<ResultRow>& rows, const std::string& format)
{
    std::ostringstream os;
    if (format == "csv") {
        os << "sweep,algorithm,tnmse_db,horizon_nmse_db,iters,wall_ms,degenerate,seed\n";
        for (const auto& r : rows)
            os << fmt_double(r.sweep) << ',' << r.algorithm << ',' << fmt_double(r.tnmse_db)
               << ',' << fmt_double(r.horizon_nmse_db) << ',' << r.iters << ',' << r.wall_ms
               << ',' << r.degenerate << ',' << r.seed << '\n';
        return os.str();
    }
    if (format == "json") {
        os << "[\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            os << "  {\"sweep\": " << fmt_double(r.sweep) << ", \"algorithm\": \""
               << r.algorithm << "\", \"tnmse_db\": "
               << (std::isnan(r.tnmse_db) ? std::string("null") : fmt_double(r.tnmse_db))
               << ", \"horizon_nmse_db\": "
               << (std::isnan(r.horizon_nmse_db) ? std::string("null")
                                                 : fmt_double(r.horizon_nmse_db))
               << ", \"iters\": " << r.iters << ", \"wall_ms\": " << r.wall_ms
               << ", \"degenerate\": " << r.degenerate << ", \"seed\": " << r.seed << "}"
               << (i + 1 < rows.size() ? "," : "") << "\n";
        }
        os << "]\n";
        return os.str();
    }
    throw std::runtime_error("format_results: unknown format " + format);
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& format,
                  const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit_results: cannot open " + path);
    os << format_results(rows, format);
    if (!os) throw std::runtime_error("emit_results: write failed for " + path);
}

ExperimentConfig golden_config()
{
    ExperimentConfig cfg;
    cfg.scenario.dims = SystemDims{4, 2, 8, 4, 4, 2, 8, 4};
    cfg.scenario.delta_f = 120e3;
    cfg.scenario.delta_t = 0.625e-3;
    cfg.scenario.n_frames = 5;
    cfg.scenario.paths_min = 2;
    cfg.scenario.paths_max = 2;
    cfg.scenario.drift_angle = 0.002;
    cfg.scenario.gain_drift = 0.002;
    cfg.scenario.snr_db = 20.0;
    cfg.algorithm.max_iters = 10;
    cfg.axis = SweepAxis::SnrDb;
    cfg.sweep_values = {20.0};
    cfg.trials = 1;
    cfg.base_seed = 7;
    cfg.seeds = {7};
    return cfg;
}

}  // namespace tsdcp
