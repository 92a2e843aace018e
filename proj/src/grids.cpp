#include "tsdcp/grids.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tsdcp {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double domain_extent(Domain d, double delta_f, double delta_t)
{
    switch (d) {
        case Domain::Horizontal:
        case Domain::Vertical: return 1.0;           // directional cosine period
        case Domain::Delay: return 1.0 / delta_f;    // unambiguous delay range
        case Domain::Doppler: return 1.0 / delta_t;  // unambiguous Doppler range
    }
    throw std::invalid_argument("unknown domain");
}
}  // namespace

double domain_scale(Domain d, double delta_f, double delta_t)
{
    switch (d) {
        case Domain::Horizontal:
        case Domain::Vertical: return 1.0;
        case Domain::Delay: return delta_f;
        case Domain::Doppler: return delta_t;
    }
    throw std::invalid_argument("unknown domain");
}

double domain_sign(Domain d)
{
    // Doppler steering advances phase forward in time; the spatial and
    // delay responses carry the conjugate convention.
    return d == Domain::Doppler ? 1.0 : -1.0;
}

double GridSet::spacing(Domain d) const
{
    const auto& g = grid(d);
    double extent = domain_extent(d, delta_f, delta_t);
    return extent / static_cast<double>(g.size());
}

VectorXc steering_vector(Domain kind, double param, Index length, double scale)
{
    if (length < 1) throw std::invalid_argument("steering_vector: length must be >= 1");
    VectorXc v(length);
    const double w = domain_sign(kind) * kTwoPi * scale * param;
    for (Index n = 0; n < length; ++n)
        v[n] = std::polar(1.0, w * static_cast<double>(n));
    return v;
}

GridSet uniform_grids(const SystemDims& dims, double delta_f, double delta_t)
{
    GridSet g;
    g.delta_f = delta_f;
    g.delta_t = delta_t;
    const std::array<Index, 4> counts = dims.grid();
    for (int d = 0; d < 4; ++d) {
        Domain dom = static_cast<Domain>(d);
        Index k = counts[static_cast<std::size_t>(d)];
        if (k < 1) throw std::invalid_argument("uniform_grids: grid count must be >= 1");
        double extent = domain_extent(dom, delta_f, delta_t);
        double step = extent / static_cast<double>(k);
        // Angles and Doppler are centered at zero; delay starts at zero.
        double origin = (dom == Domain::Delay) ? 0.0 : -0.5 * extent;
        VectorXr v(k);
        for (Index i = 0; i < k; ++i) v[i] = origin + step * static_cast<double>(i);
        if (dom == Domain::Doppler && k > 1) {
            // Keep the Doppler grid symmetric about zero (centered convention).
            v.array() += 0.5 * step;
        }
        g.base[static_cast<std::size_t>(d)] = v;
        g.pert[static_cast<std::size_t>(d)] = VectorXr::Zero(k);
    }
    return g;
}

MatrixXc build_factor_matrix(Domain kind, const VectorXr& grid, const VectorXr& pert,
                             Index length, double scale)
{
    if (grid.size() != pert.size())
        throw std::invalid_argument("build_factor_matrix: grid/perturbation length mismatch");
    MatrixXc m(length, grid.size());
    for (Index k = 0; k < grid.size(); ++k)
        m.col(k) = steering_vector(kind, grid[k] + pert[k], length, scale);
    return m;
}

MatrixXc build_derivative_matrix(Domain kind, const VectorXr& grid, const VectorXr& pert,
                                 Index length, double scale)
{
    MatrixXc m = build_factor_matrix(kind, grid, pert, length, scale);
    const Cplx jw(0.0, domain_sign(kind) * kTwoPi * scale);
    for (Index n = 0; n < length; ++n)
        m.row(n) *= jw * static_cast<double>(n);
    return m;
}

FactorSet build_factors(const GridSet& g, const SystemDims& dims)
{
    const std::array<Index, 4> lens = dims.phys();
    FactorSet f;
    for (int d = 0; d < 4; ++d) {
        Domain dom = static_cast<Domain>(d);
        f[d] = build_factor_matrix(dom, g.base[static_cast<std::size_t>(d)],
                                   g.pert[static_cast<std::size_t>(d)],
                                   lens[static_cast<std::size_t>(d)],
                                   domain_scale(dom, g.delta_f, g.delta_t));
    }
    return f;
}

std::array<MatrixXr, 4> magnitude_sq_factors(const FactorSet& f)
{
    std::array<MatrixXr, 4> m2;
    for (int d = 0; d < 4; ++d) m2[static_cast<std::size_t>(d)] = f[d].cwiseAbs2();
    return m2;
}

Tensor4c tucker_synthesize(const Tensor4c& g, const FactorSet& f)
{
    Tensor4c x = g;
    for (int d = 0; d < 4; ++d) x = mode_multiply(x, f[d], d + 1);
    return x;
}

Tensor4c tucker_adjoint(const Tensor4c& x, const FactorSet& f)
{
    Tensor4c g = x;
    for (int d = 0; d < 4; ++d) {
        MatrixXc ah = f[d].adjoint();
        g = mode_multiply(g, ah, d + 1);
    }
    return g;
}

Tensor4r var_forward(const Tensor4r& v, const std::array<MatrixXr, 4>& m2)
{
    Tensor4r x = v;
    for (int d = 0; d < 4; ++d) x = mode_multiply(x, m2[static_cast<std::size_t>(d)], d + 1);
    return x;
}

Tensor4r var_adjoint(const Tensor4r& v, const std::array<MatrixXr, 4>& m2)
{
    Tensor4r x = v;
    for (int d = 0; d < 4; ++d) {
        MatrixXr t = m2[static_cast<std::size_t>(d)].transpose();
        x = mode_multiply(x, t, d + 1);
    }
    return x;
}

}  // namespace tsdcp
