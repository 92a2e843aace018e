#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tsdcp/harness.hpp"

using namespace tsdcp;

namespace {

const char* kMinimalConfig = R"({
  "scenario": {"dims": {"n_h": 4, "n_v": 2, "n_sc": 8, "n_sym": 4}}
})";

}  // namespace

TEST_CASE("minimal config fills defaults and echoes a complete manifest")
{
    ExperimentConfig cfg = parse_config_text(kMinimalConfig);
    CHECK(cfg.scenario.dims.k_h == 4);
    CHECK(cfg.scenario.dims.k_de == 8);
    CHECK(cfg.algorithm.max_iters == 20);
    CHECK(cfg.algorithm.damping == doctest::Approx(0.7));
    CHECK(cfg.trials == 1);
    CHECK(cfg.seeds.size() == 1);
    CHECK(cfg.output_format == "csv");

    std::string manifest = config_manifest(cfg);
    for (const char* key :
         {"max_iters", "damping", "gamma", "threshold", "sweep", "seeds", "n_frames",
          "frame_advance_symbols", "horizons"})
        CHECK(manifest.find(key) != std::string::npos);
}

TEST_CASE("unknown keys are rejected by name")
{
    const char* bad = R"({"scenario": {"dims": {"n_h": 2}}, "foo": 1})";
    CHECK_THROWS_WITH_AS(parse_config_text(bad),
                         doctest::Contains("foo"), std::runtime_error);

    const char* bad_nested =
        R"({"scenario": {"dims": {"n_h": 2}, "wobble": 3}})";
    CHECK_THROWS_WITH_AS(parse_config_text(bad_nested),
                         doctest::Contains("wobble"), std::runtime_error);
}

TEST_CASE("config round-trips through the manifest")
{
    const char* text = R"({
      "scenario": {
        "dims": {"n_h": 4, "n_v": 2, "n_sc": 8, "n_sym": 4},
        "n_frames": 3, "drift_angle": 0.001, "snr_db": 15.0
      },
      "algorithm": {"max_iters": 7, "horizons": [1.0, 2.5]},
      "sweep": {"axis": "snr_db", "values": [10, 20]},
      "trials": 2,
      "base_seed": 42
    })";
    ExperimentConfig a = parse_config_text(text);
    ExperimentConfig b = parse_config_text(config_manifest(a));
    CHECK(config_manifest(a) == config_manifest(b));
    CHECK(b.algorithm.horizons.size() == 2);
    CHECK(b.sweep_values.size() == 2);
    CHECK(b.seeds == std::vector<std::uint64_t>{42, 43});
}

TEST_CASE("schema validation errors")
{
    CHECK_THROWS(parse_config_text("{"));
    CHECK_THROWS(parse_config_text("{}"));  // missing scenario
    CHECK_THROWS(parse_config_text(
        R"({"scenario": {"dims": {"n_h": 0}}})"));  // nonpositive dim
    CHECK_THROWS(parse_config_text(
        R"({"scenario": {"dims": {"n_h": 2}}, "sweep": {"axis": "nope"}})"));
    CHECK_THROWS(parse_config_text(
        R"({"scenario": {"dims": {"n_h": 2}}, "trials": 0})"));
    CHECK_THROWS(parse_config_text(
        R"({"scenario": {"dims": {"n_h": 2}}, "output": {"format": "xml"}})"));
}

TEST_CASE("result formatting")
{
    std::vector<ResultRow> rows;
    std::string empty = format_results(rows, "csv");
    CHECK(empty == "sweep,algorithm,tnmse_db,horizon_nmse_db,iters,wall_ms,degenerate,seed\n");

    ResultRow r;
    r.sweep = 20.0;
    r.algorithm = "tsdcp";
    r.tnmse_db = -17.123456789012;
    r.horizon_nmse_db = -16.5;
    r.iters = 42;
    r.seed = 7;
    rows.push_back(r);

    std::string csv = format_results(rows, "csv");
    CHECK(csv.find("tsdcp") != std::string::npos);
    CHECK(csv.find("-17.123456789") != std::string::npos);  // 12 significant digits
    // constant column count
    CHECK(std::count(csv.begin(), csv.end(), ',') == 2 * 7);

    std::string js = format_results(rows, "json");
    CHECK(js.find("\"tnmse_db\": -17.123456789") != std::string::npos);
    CHECK(js.find("\"seed\": 7") != std::string::npos);
}

TEST_CASE("tiny experiment: determinism and row cardinality")
{
    ExperimentConfig cfg = golden_config();
    cfg.sweep_values = {10.0, 20.0, 30.0};
    cfg.trials = 2;
    cfg.seeds = {5, 6};
    cfg.scenario.n_frames = 2;
    cfg.algorithm.max_iters = 4;

    auto rows1 = run_experiment(cfg, 1);
    CHECK(rows1.size() == 3 * 2 * 2);  // sweeps x algorithms x trials

    auto rows2 = run_experiment(cfg, 1);
    CHECK(format_results(rows1, "csv") == format_results(rows2, "csv"));

    // parallel execution canonicalizes to the same bytes
    auto rows4 = run_experiment(cfg, 4);
    CHECK(format_results(rows1, "csv") == format_results(rows4, "csv"));

    // rows sorted by (sweep, algorithm, seed)
    for (std::size_t i = 1; i < rows1.size(); ++i) {
        const auto& a = rows1[i - 1];
        const auto& b = rows1[i];
        bool ordered = a.sweep < b.sweep ||
                       (a.sweep == b.sweep &&
                        (a.algorithm < b.algorithm ||
                         (a.algorithm == b.algorithm && a.seed <= b.seed)));
        CHECK(ordered);
    }

    // same seed twice -> identical result values
    ExperimentConfig same = golden_config();
    same.scenario.n_frames = 2;
    same.algorithm.max_iters = 4;
    same.trials = 2;
    same.seeds = {9, 9};
    auto rows = run_experiment(same, 1);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].tnmse_db == rows[1].tnmse_db);  // baseline pair
    CHECK(rows[2].tnmse_db == rows[3].tnmse_db);  // tsdcp pair
}
