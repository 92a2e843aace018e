#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tsdcp/channel_sim.hpp"
#include "tsdcp/predictor.hpp"

using namespace tsdcp;

namespace {

constexpr double kPi = 3.14159265358979323846;

PredictorConfig small_config()
{
    PredictorConfig cfg;
    cfg.dims = SystemDims{8, 4, 8, 4, 8, 4, 8, 4};
    cfg.delta_f = 1.0;
    cfg.delta_t = 1.0;
    cfg.horizons = {1.0};
    return cfg;
}

}  // namespace

TEST_CASE("predict_channel: time-invariant and boundary cases")
{
    SystemDims dims{4, 2, 4, 4, 4, 2, 4, 4};
    GridSet g = uniform_grids(dims, 1.0, 1.0);

    Tensor4c core(dims.grid());
    core(1, 0, 2, 0) = Cplx(1.0, -0.3);

    SUBCASE("zero Doppler grid value makes all horizons equal")
    {
        // pick the core cell whose Doppler grid value is zero if present;
        // here force all Doppler grid values to 0
        g.base[3].setZero();
        auto p1 = predict_channel(core, g, dims, {0.0, 1.0, 5.5});
        for (std::size_t k = 1; k < p1.size(); ++k)
            CHECK((p1[k].vec() - p1[0].vec()).cwiseAbs().maxCoeff() < 1e-12);

        // and equals the Tucker synthesis at any pilot time
        FactorSet f = build_factors(g, dims);
        Tensor4c h = tucker_synthesize(core, f);
        for (Index i1 = 0; i1 < dims.n_h; ++i1)
            CHECK(std::abs(p1[0](i1, 0, 0, 0) - h(i1, 0, 0, 0)) < 1e-12);
    }

    SUBCASE("horizon 0 reproduces the last pilot slice")
    {
        auto p = predict_channel(core, g, dims, {0.0});
        FactorSet f = build_factors(g, dims);
        Tensor4c h = tucker_synthesize(core, f);
        for (Index i3 = 0; i3 < dims.n_sc; ++i3)
            for (Index i1 = 0; i1 < dims.n_h; ++i1)
                CHECK(std::abs(p[0](i1, 0, i3, 0) - h(i1, 0, i3, dims.n_sym - 1)) < 1e-12);
    }

    SUBCASE("single active cell advances by the Doppler phasor")
    {
        auto p0 = predict_channel(core, g, dims, {0.0});
        auto p2 = predict_channel(core, g, dims, {2.0});
        double nu = g.base[3][0];  // core active at Doppler index 0
        Cplx adv = std::polar(1.0, 2.0 * kPi * g.delta_t * nu * 2.0);
        for (Index i1 = 0; i1 < dims.n_h; ++i1)
            CHECK(std::abs(p2[0](i1, 0, 0, 0) - p0[0](i1, 0, 0, 0) * adv) < 1e-10);
    }
}

TEST_CASE("tnmse identities")
{
    Tensor4c a(2, 2, 2, 1);
    a(0, 0, 0, 0) = Cplx(1, 1);
    a(1, 1, 1, 0) = Cplx(-2, 0.5);
    std::vector<Tensor4c> truth{a};

    CHECK(tnmse({a}, truth).first == doctest::Approx(0.0));

    Tensor4c zero(2, 2, 2, 1);
    auto [lin0, db0] = tnmse({zero}, truth);
    CHECK(lin0 == doctest::Approx(1.0));
    CHECK(db0 == doctest::Approx(0.0));

    Tensor4c twice = 2.0 * a;
    CHECK(tnmse({twice}, truth).second == doctest::Approx(0.0));

    CHECK_THROWS(tnmse({zero}, {zero}));
}

TEST_CASE("baseline: exact on time-invariant channels, small error on drift")
{
    SystemDims dims{4, 2, 4, 4, 4, 2, 4, 4};
    ScenarioConfig sc;
    sc.dims = dims;
    sc.delta_f = 1.0;
    sc.delta_t = 1.0;
    sc.paths_min = sc.paths_max = 2;
    sc.seed = 4;
    PathSet ps = generate_paths(sc);
    for (auto& fr : ps.frames)
        for (auto& p : fr) p.nu = 0.0;
    Tensor4c h = synthesize_sft_channel(ps, 0, dims, 1.0, 1.0);
    Tensor4c pred = baseline_predict(h, 2.0);
    auto truth = prediction_target(ps, 0, {2.0}, dims, 1.0, 1.0);
    CHECK(tnmse({pred}, truth).first < 1e-20);

    // pure linear phase drift: small but nonzero extrapolation error
    PathSet ps2 = generate_paths(sc);
    for (auto& fr : ps2.frames) {
        fr.resize(1);
        fr[0].nu = 0.02;
    }
    Tensor4c h2 = synthesize_sft_channel(ps2, 0, dims, 1.0, 1.0);
    Tensor4c pred2 = baseline_predict(h2, 1.0);
    auto truth2 = prediction_target(ps2, 0, {1.0}, dims, 1.0, 1.0);
    double nmse = tnmse({pred2}, truth2).first;
    CHECK(nmse > 0.0);
    CHECK(nmse < 0.1);
}

TEST_CASE("run_frame: noiseless on-grid recovery below -60 dB")
{
    PredictorConfig cfg = small_config();
    cfg.learn_perturbations = false;  // exactly on grid
    FrameState st = FrameState::init(cfg);

    ScenarioConfig sc;
    sc.dims = cfg.dims;
    sc.delta_f = 1.0;
    sc.delta_t = 1.0;
    sc.paths_min = sc.paths_max = 2;
    sc.on_grid = true;
    sc.seed = 21;
    PathSet ps = generate_paths(sc);
    Tensor4c h = synthesize_sft_channel(ps, 0, cfg.dims, 1.0, 1.0);

    PredictionResult res = run_frame(h, 0.0, st);
    REQUIRE(!res.aborted);
    double err = frobenius_norm(res.h_hat - h) / frobenius_norm(h);
    CHECK(20.0 * std::log10(err + 1e-300) < -60.0);
}

TEST_CASE("run_frame: zero observation collapses to zero")
{
    PredictorConfig cfg = small_config();
    FrameState st = FrameState::init(cfg);
    Tensor4c y(cfg.dims.phys());
    PredictionResult res = run_frame(y, 0.1, st);
    REQUIRE(!res.aborted);
    CHECK(frobenius_norm(res.g_hat) < 1e-6);
    for (const auto& p : res.predicted) CHECK(frobenius_norm(p) < 1e-6);
}

TEST_CASE("run_frame: determinism")
{
    PredictorConfig cfg = small_config();
    ScenarioConfig sc;
    sc.dims = cfg.dims;
    sc.delta_f = 1.0;
    sc.delta_t = 1.0;
    sc.paths_min = sc.paths_max = 2;
    sc.seed = 8;
    PathSet ps = generate_paths(sc);
    Tensor4c h = synthesize_sft_channel(ps, 0, cfg.dims, 1.0, 1.0);
    Tensor4c y = observe(h, 0.01, 77);

    FrameState s1 = FrameState::init(cfg);
    FrameState s2 = FrameState::init(cfg);
    PredictionResult r1 = run_frame(y, 0.01, s1);
    PredictionResult r2 = run_frame(y, 0.01, s2);
    CHECK((r1.g_hat.vec() - r2.g_hat.vec()).norm() == 0.0);
    CHECK((r1.predicted[0].vec() - r2.predicted[0].vec()).norm() == 0.0);
    CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("hyperparameters settle on repeated identical frames")
{
    PredictorConfig cfg = small_config();
    cfg.dims = SystemDims{4, 2, 4, 4, 4, 2, 4, 4};
    cfg.max_iters = 8;
    FrameState st = FrameState::init(cfg);

    ScenarioConfig sc;
    sc.dims = cfg.dims;
    sc.delta_f = 1.0;
    sc.delta_t = 1.0;
    sc.paths_min = sc.paths_max = 2;
    sc.on_grid = true;
    sc.seed = 30;
    PathSet ps = generate_paths(sc);
    Tensor4c h = synthesize_sft_channel(ps, 0, cfg.dims, 1.0, 1.0);
    Tensor4c y = observe(h, 1e-4, 5);

    // Running-sum statistics settle at a 1/n rate: the per-frame change at
    // frame 50 should be well below the change at frame 10, and small.
    Tensor4r m_before(cfg.dims.grid()), l_before(cfg.dims.grid());
    double dm10 = 0.0, dl10 = 0.0, dm = 1.0, dl = 1.0;
    for (int f = 0; f < 50; ++f) {
        run_frame(y, 1e-4, st);
        if (f >= 1) {
            dm = (st.hp.m_hat - m_before).vec().cwiseAbs().maxCoeff();
            dl = (st.hp.l_hat - l_before).vec().cwiseAbs().maxCoeff();
        }
        if (f == 10) {
            dm10 = dm;
            dl10 = dl;
        }
        m_before = st.hp.m_hat;
        l_before = st.hp.l_hat;
    }
    CHECK(dm < 0.5 * dm10 + 1e-12);
    CHECK(dl < 0.5 * dl10 + 1e-12);
    CHECK(dm < 0.1);
    CHECK(dl < 0.1);
}
