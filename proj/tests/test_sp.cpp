#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tsdcp/sp.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace tsdcp;

namespace {

std::mt19937_64 rng(555);

/// Exact marginals P(s_x = 1) of the 2x2x2x2 Ising model
///   P(S) ∝ exp(sum_x (u_lik+u_tc)_x s_x) * prod_x prod_{r in N} exp(gamma (2s_x-1)(2s_{x+r}-1))
/// by enumeration over all 2^16 configurations. The neighbor multiset matches
/// MrfState::default_offsets on the same dims.
Tensor4r enumerate_marginals(const Tensor4r& field, double gamma)
{
    const auto dims = field.dims();
    const Index n = field.size();
    REQUIRE(n <= 16);
    auto offsets = MrfState::default_offsets(dims);

    std::vector<double> p1(static_cast<std::size_t>(n), 0.0);
    double z = 0.0;
    std::vector<int> s(static_cast<std::size_t>(n));
    std::array<Index, 4> xi{}, yi{};
    Tensor4r dummy(dims);
    for (long cfgm = 0; cfgm < (1L << n); ++cfgm) {
        for (Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = (cfgm >> i) & 1;
        double logw = 0.0;
        for (Index i = 0; i < n; ++i) logw += field[i] * s[static_cast<std::size_t>(i)];
        for (Index i = 0; i < n; ++i) {
            dummy.unflat(i, xi);
            for (const auto& r : offsets) {
                for (int d = 0; d < 4; ++d) {
                    long nd = static_cast<long>(dims[static_cast<std::size_t>(d)]);
                    yi[static_cast<std::size_t>(d)] = static_cast<Index>(
                        ((static_cast<long>(xi[static_cast<std::size_t>(d)]) +
                          r[static_cast<std::size_t>(d)]) %
                             nd +
                         nd) %
                        nd);
                }
                Index j = dummy.flat(yi[0], yi[1], yi[2], yi[3]);
                // each ordered pair counted once here; the BP model counts each
                // undirected edge twice (once per direction), same as this loop
                logw += 0.5 * gamma * (2.0 * s[static_cast<std::size_t>(i)] - 1.0) *
                        (2.0 * s[static_cast<std::size_t>(j)] - 1.0);
            }
        }
        double w = std::exp(logw);
        z += w;
        for (Index i = 0; i < n; ++i)
            if (s[static_cast<std::size_t>(i)]) p1[static_cast<std::size_t>(i)] += w;
    }
    Tensor4r out(dims);
    for (Index i = 0; i < n; ++i) out[i] = p1[static_cast<std::size_t>(i)] / z;
    return out;
}

}  // namespace

TEST_CASE("temporal support message closed forms")
{
    std::array<Index, 4> d{2, 2, 1, 1};
    Tensor4r s(d), m(d);
    Tensor4r u = temporal_support_message(s, m);
    CHECK(frobenius_norm(u) == 0.0);  // m = 0

    for (Index i = 0; i < 4; ++i) m[i] = 0.8;
    s[0] = 1.0;
    s[1] = 0.0;
    s[2] = 0.5;
    u = temporal_support_message(s, m);
    CHECK(u[0] == doctest::Approx(1.6));
    CHECK(u[1] == doctest::Approx(-1.6));
    CHECK(u[2] == doctest::Approx(0.0));
}

TEST_CASE("mrf: gamma=0 decouples the field")
{
    std::array<Index, 4> d{2, 2, 2, 2};
    MrfState st = MrfState::make(d, 0.0);
    Tensor4r u_lik(d), u_tc(d);
    for (Index i = 0; i < u_lik.size(); ++i) u_lik[i] = std::normal_distribution<double>(0, 1)(rng);
    auto [u_mrf, prior] = mrf_iteration(u_lik, u_tc, st);
    CHECK(frobenius_norm(u_mrf) == doctest::Approx(0.0));
    CHECK(frobenius_norm(prior - u_tc) == doctest::Approx(0.0));
}

TEST_CASE("mrf: symmetric zero field stays zero")
{
    std::array<Index, 4> d{2, 2, 2, 2};
    MrfState st = MrfState::make(d, 0.2);
    Tensor4r zero(d);
    for (int t = 0; t < 5; ++t) {
        auto [u_mrf, prior] = mrf_iteration(zero, zero, st);
        CHECK(frobenius_norm(u_mrf) == doctest::Approx(0.0));
    }
}

TEST_CASE("mrf: uniform field gives equal messages (shift equivariance)")
{
    std::array<Index, 4> d{2, 2, 2, 2};
    MrfState st = MrfState::make(d, 0.15);
    Tensor4r u_lik = Tensor4r::constant(d, 0.7);
    Tensor4r u_tc = Tensor4r::constant(d, -0.2);
    for (int t = 0; t < 4; ++t) mrf_iteration(u_lik, u_tc, st);
    for (const auto& m : st.messages) {
        double v0 = m[0];
        for (Index i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(v0));
        CHECK(m[0] == doctest::Approx(st.messages[0][0]));
    }
}

TEST_CASE("mrf marginals match exhaustive enumeration")
{
    std::array<Index, 4> d{2, 2, 2, 2};
    std::normal_distribution<double> n01(0.0, 1.0);
    for (double gamma : {0.0, 0.1, 0.2}) {
        Tensor4r u_lik(d), u_tc(d);
        for (Index i = 0; i < u_lik.size(); ++i) u_lik[i] = n01(rng);
        Tensor4r field = u_lik + u_tc;

        MrfState st = MrfState::make(d, gamma);
        SupportBelief belief{Tensor4r(d)};
        for (int t = 0; t < 50; ++t) {
            auto [u_mrf, prior] = mrf_iteration(u_lik, u_tc, st);
            belief = support_posterior(u_lik, prior);
        }
        Tensor4r bp = belief.prob();
        Tensor4r exact = enumerate_marginals(field, gamma);
        double max_err = 0.0;
        for (Index i = 0; i < bp.size(); ++i)
            max_err = std::max(max_err, std::abs(bp[i] - exact[i]));
        if (gamma == 0.0)
            CHECK(max_err < 1e-12);
        else
            CHECK(max_err < 0.05);
    }
}

TEST_CASE("support posterior additivity and saturation")
{
    std::array<Index, 4> d{2, 1, 1, 1};
    Tensor4r a(d), b(d);
    a[0] = 0.7;
    b[0] = -0.3;
    SupportBelief s = support_posterior(a, b);
    CHECK(s.llr[0] == doctest::Approx(0.4));
    CHECK(s.prob()[0] == doctest::Approx(logistic(0.4)));

    Tensor4r zero(d);
    CHECK(support_posterior(zero, zero).prob()[0] == doctest::Approx(0.5));

    Tensor4r big = Tensor4r::constant(d, 1e9);
    CHECK(support_posterior(big, zero).prob()[0] == doctest::Approx(1.0 - kProbFloor).epsilon(1e-3));

    // scalar Bernoulli oracle: additivity in log domain is exact Bayes
    double prior_llr = 0.9, lik_llr = -1.4;
    double p_prior = logistic(prior_llr);
    double post = p_prior * std::exp(lik_llr) / (p_prior * std::exp(lik_llr) + (1 - p_prior));
    Tensor4r pa = Tensor4r::constant(d, lik_llr), pb = Tensor4r::constant(d, prior_llr);
    CHECK(support_posterior(pa, pb).prob()[0] == doctest::Approx(post));
}

TEST_CASE("value temporal prior limits")
{
    std::array<Index, 4> d{2, 1, 1, 1};
    Tensor4c q(d);
    q[0] = Cplx(2.0, -1.0);
    q[1] = Cplx(0.5, 0.5);
    Tensor4r v = Tensor4r::constant(d, 3.0);

    Tensor4r l1 = Tensor4r::constant(d, 1.0);
    GaussianMessage g1 = value_temporal_prior(q, l1, v);
    CHECK(std::abs(g1.mean[0]) == 0.0);
    CHECK(g1.variance[0] == doctest::Approx(3.0));

    Tensor4r l0 = Tensor4r::constant(d, 1e-5);
    GaussianMessage g0 = value_temporal_prior(q, l0, v);
    CHECK(std::abs(g0.mean[0] - q[0]) < 1e-4);
    CHECK(g0.variance[0] < 1e-8);

    Tensor4r lm = Tensor4r::constant(d, 0.4);
    GaussianMessage gm = value_temporal_prior(q, lm, v);
    CHECK(std::abs(gm.mean[1] - 0.6 * q[1]) < 1e-12);
    CHECK(gm.variance[1] == doctest::Approx(0.16 * 3.0));
}

TEST_CASE("value posterior is a Gaussian fusion")
{
    std::array<Index, 4> d{2, 1, 1, 1};
    GaussianMessage lik(d, 0.5), prior(d, 2.0);
    lik.mean[0] = Cplx(1, 1);
    prior.mean[0] = Cplx(-1, 0);
    ValueBelief b = value_posterior(lik, prior);
    GaussianMessage ref = gaussian_combine(lik, prior);
    CHECK(std::abs(b.mean[0] - ref.mean[0]) < 1e-12);
    CHECK(b.variance[0] == doctest::Approx(ref.variance[0]));

    GaussianMessage vague = GaussianMessage::uninformative(d);
    ValueBelief bp = value_posterior(vague, prior);
    CHECK(std::abs(bp.mean[0] - prior.mean[0]) < 1e-6);
}

TEST_CASE("decoupling the G likelihood")
{
    std::array<Index, 4> d{2, 1, 1, 1};
    SupportBelief s{Tensor4r::constant(d, 2.0)};  // p ~ 0.88
    ValueBelief q{Tensor4c(d), Tensor4r::constant(d, 1.0)};
    q.mean[0] = Cplx(3.0, 0.0);

    GaussianMessage vague = GaussianMessage::uninformative(d);
    auto [u0, q0] = decouple_g_likelihood(vague, s, q, 0.1);
    CHECK(std::abs(u0[0]) < 1e-6);  // no evidence

    GaussianMessage lik(d, 0.1);
    lik.mean[0] = Cplx(3.0, 0.0);  // strong match to the slab mean
    lik.mean[1] = Cplx(0.0, 0.0);
    auto [u1, q1] = decouple_g_likelihood(lik, s, q, 0.1);
    CHECK(u1[0] > 0.0);
    // scalar two-hypothesis LLR oracle
    double vn = 0.1, eq = 1.0;
    double want = std::norm(Cplx(3, 0)) / vn - std::norm(Cplx(0, 0)) / (eq + vn) +
                  std::log(vn / (eq + vn));
    CHECK(u1[0] == doctest::Approx(clamp_llr(want)));
    CHECK(std::abs(q1.mean[0] - lik.mean[0]) < 1e-12);
    CHECK(q1.variance[0] == doctest::Approx(vn));

    // below-threshold support: value likelihood is uninformative
    SupportBelief off{Tensor4r::constant(d, -5.0)};
    auto [u2, q2] = decouple_g_likelihood(lik, off, q, 0.1);
    CHECK(q2.variance[0] == doctest::Approx(kVarCap));
}

TEST_CASE("spike-and-slab prior moments")
{
    std::array<Index, 4> d{1, 1, 1, 1};
    SupportBelief s{Tensor4r(d)};  // p = 0.5
    ValueBelief q{Tensor4c(d), Tensor4r::constant(d, 2.0)};
    SpikeSlabPrior pr = assemble_g_prior(s, q);
    GaussianMessage mm = pr.moment_matched();
    CHECK(std::abs(mm.mean[0]) == 0.0);
    CHECK(mm.variance[0] == doctest::Approx(1.0));

    // p = 1 -> slab exactly
    SupportBelief on{Tensor4r::constant(d, 100.0)};
    ValueBelief q2{Tensor4c(d), Tensor4r::constant(d, 0.7)};
    q2.mean[0] = Cplx(1.0, -2.0);
    GaussianMessage m2 = assemble_g_prior(on, q2).moment_matched();
    CHECK(std::abs(m2.mean[0] - q2.mean[0]) < 1e-5);
    CHECK(m2.variance[0] == doctest::Approx(0.7).epsilon(1e-3));

    // Monte Carlo moment check
    std::normal_distribution<double> n01(0.0, 1.0);
    SupportBelief half{Tensor4r::constant(d, 0.4)};
    ValueBelief q3{Tensor4c(d), Tensor4r::constant(d, 1.5)};
    q3.mean[0] = Cplx(0.8, 0.6);
    GaussianMessage m3 = assemble_g_prior(half, q3).moment_matched();
    double p = logistic(0.4);
    const int n_draw = 100000;
    Cplx acc(0, 0);
    double acc2 = 0.0;
    for (int i = 0; i < n_draw; ++i) {
        bool active = std::uniform_real_distribution<double>(0, 1)(rng) < p;
        Cplx v(0, 0);
        if (active)
            v = q3.mean[0] + std::sqrt(1.5 / 2.0) * Cplx(n01(rng), n01(rng));
        acc += v;
        acc2 += std::norm(v);
    }
    Cplx emp_mean = acc / static_cast<double>(n_draw);
    double emp_var = acc2 / n_draw - std::norm(emp_mean);
    CHECK(std::abs(emp_mean - m3.mean[0]) < 0.02);
    CHECK(std::abs(emp_var - m3.variance[0]) < 0.03);
}
