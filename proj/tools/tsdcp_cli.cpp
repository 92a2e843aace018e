#include "tsdcp/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int resolve_threads(int cli_threads)
{
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("TSDCP_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

int run_config(const std::string& config_path, const std::string& out_override,
               const std::string& format_override, int threads, std::uint64_t seed_override,
               bool have_seed)
{
    tsdcp::ExperimentConfig cfg;
    try {
        cfg = tsdcp::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (!out_override.empty()) cfg.output_path = out_override;
    if (!format_override.empty()) cfg.output_format = format_override;
    if (have_seed) {
        cfg.base_seed = seed_override;
        cfg.seeds.clear();
        for (int t = 0; t < cfg.trials; ++t)
            cfg.seeds.push_back(seed_override + static_cast<std::uint64_t>(t));
    }

    try {
        std::cerr << tsdcp::config_manifest(cfg) << "\n";
        auto rows = tsdcp::run_experiment(cfg, resolve_threads(threads));
        std::string text = tsdcp::format_results(rows, cfg.output_format);
        if (cfg.output_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream os(cfg.output_path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot open " + cfg.output_path);
            os << text;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int golden(bool update, const std::string& golden_path)
{
    try {
        auto cfg = tsdcp::golden_config();
        auto rows = tsdcp::run_experiment(cfg, 1);
        std::string text = tsdcp::format_results(rows, "csv");
        if (update) {
            std::ofstream os(golden_path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot open " + golden_path);
            os << text;
            std::cout << "golden file updated: " << golden_path << "\n";
            return 0;
        }
        std::ifstream is(golden_path, std::ios::binary);
        if (!is) throw std::runtime_error("cannot open " + golden_path);
        std::ostringstream ss;
        ss << is.rdbuf();
        if (ss.str() == text) {
            std::cout << "golden check: OK\n";
            return 0;
        }
        std::cerr << "golden check: MISMATCH\n--- expected ---\n"
                  << ss.str() << "--- actual ---\n"
                  << text;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"TS-DCP experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_path, format;
    int threads = 0;
    std::uint64_t seed = 0;
    bool have_seed = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", out_path, "output file (default: stdout)");
        cmd->add_option("--format", format, "csv|json")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--threads", threads, "worker threads (or TSDCP_THREADS)");
        cmd->add_option("--seed", seed, "override base seed")
            ->each([&](const std::string&) { have_seed = true; });
    };

    auto* run_cmd = app.add_subcommand("run", "run a single experiment config");
    add_common(run_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "run the config's sweep axis");
    add_common(sweep_cmd);

    auto* golden_cmd = app.add_subcommand("golden", "golden-file regression");
    bool check = false, update = false;
    std::string golden_path = "tests/golden/tiny.csv";
    golden_cmd->add_flag("--check", check, "compare against the checked-in golden file");
    golden_cmd->add_flag("--update", update, "rewrite the golden file");
    golden_cmd->add_option("--file", golden_path, "golden file path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run_cmd->parsed() || sweep_cmd->parsed())
        return run_config(config_path, out_path, format, threads, seed, have_seed);
    if (golden_cmd->parsed()) {
        if (!check && !update) {
            std::cerr << "error: golden requires --check or --update\n";
            return 2;
        }
        return golden(update, golden_path);
    }
    return 2;
}
