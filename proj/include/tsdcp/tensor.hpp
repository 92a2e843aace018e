#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>

namespace tsdcp {

using Cplx = std::complex<double>;
using Eigen::Index;

/// Counter for degenerate-element events (division/log below the magnitude
/// floor). Thread-local so parallel trials do not race.
std::int64_t degenerate_count() noexcept;
void reset_degenerate_count() noexcept;
void note_degenerate(std::int64_t n = 1) noexcept;

inline constexpr double kMagFloor = 1e-30;

/// Dense order-4 tensor, first index fastest:
///   flat(i1,i2,i3,i4) = i1 + N1*(i2 + N2*(i3 + N3*i4)).
template <class Scalar>
class Tensor4 {
public:
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;

    Tensor4() : dims_{0, 0, 0, 0} {}

    Tensor4(Index n1, Index n2, Index n3, Index n4)
        : dims_{n1, n2, n3, n4}, data_(Vec::Zero(n1 * n2 * n3 * n4))
    {
        if (n1 <= 0 || n2 <= 0 || n3 <= 0 || n4 <= 0)
            throw std::invalid_argument("Tensor4: dims must be positive");
    }

    explicit Tensor4(const std::array<Index, 4>& d) : Tensor4(d[0], d[1], d[2], d[3]) {}

    static Tensor4 constant(const std::array<Index, 4>& d, Scalar v)
    {
        Tensor4 t(d);
        t.data_.setConstant(v);
        return t;
    }

    const std::array<Index, 4>& dims() const noexcept { return dims_; }
    Index dim(int d) const { return dims_[static_cast<std::size_t>(d)]; }
    Index size() const noexcept { return data_.size(); }

    Scalar& operator()(Index i1, Index i2, Index i3, Index i4)
    {
        return data_[flat(i1, i2, i3, i4)];
    }
    Scalar operator()(Index i1, Index i2, Index i3, Index i4) const
    {
        return data_[flat(i1, i2, i3, i4)];
    }

    Scalar& operator[](Index i) { return data_[i]; }
    Scalar operator[](Index i) const { return data_[i]; }

    Vec& vec() noexcept { return data_; }
    const Vec& vec() const noexcept { return data_; }

    bool same_dims(const Tensor4& o) const noexcept { return dims_ == o.dims_; }

    Index flat(Index i1, Index i2, Index i3, Index i4) const
    {
        return i1 + dims_[0] * (i2 + dims_[1] * (i3 + dims_[2] * i4));
    }

    void unflat(Index f, std::array<Index, 4>& idx) const
    {
        idx[0] = f % dims_[0];
        f /= dims_[0];
        idx[1] = f % dims_[1];
        f /= dims_[1];
        idx[2] = f % dims_[2];
        idx[3] = f / dims_[2];
    }

private:
    std::array<Index, 4> dims_;
    Vec data_;
};

using Tensor4c = Tensor4<Cplx>;
using Tensor4r = Tensor4<double>;

namespace detail {
inline void require_same_dims(const std::array<Index, 4>& a, const std::array<Index, 4>& b)
{
    if (a != b) throw std::invalid_argument("tensor dims mismatch");
}
}  // namespace detail

/// Mode-d matricization, d in [1,4]. Result has N_d rows; columns enumerate the
/// remaining modes in ascending order, first of them varying fastest.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
mode_matricize(const Tensor4<Scalar>& x, int d)
{
    if (d < 1 || d > 4) throw std::invalid_argument("mode index must be 1..4");
    const int m = d - 1;
    std::array<int, 3> rest{};
    for (int i = 0, j = 0; i < 4; ++i)
        if (i != m) rest[static_cast<std::size_t>(j++)] = i;

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
        x.dim(m), x.dim(rest[0]) * x.dim(rest[1]) * x.dim(rest[2]));
    std::array<Index, 4> idx{};
    for (Index c = 0; c < out.cols(); ++c) {
        Index f = c;
        idx[static_cast<std::size_t>(rest[0])] = f % x.dim(rest[0]);
        f /= x.dim(rest[0]);
        idx[static_cast<std::size_t>(rest[1])] = f % x.dim(rest[1]);
        idx[static_cast<std::size_t>(rest[2])] = f / x.dim(rest[1]);
        for (Index r = 0; r < out.rows(); ++r) {
            idx[static_cast<std::size_t>(m)] = r;
            out(r, c) = x(idx[0], idx[1], idx[2], idx[3]);
        }
    }
    return out;
}

/// Inverse of mode_matricize given the target dims.
template <class Scalar>
Tensor4<Scalar> mode_dematricize(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m, int d,
    const std::array<Index, 4>& dims)
{
    Tensor4<Scalar> out(dims);
    const int md = d - 1;
    std::array<int, 3> rest{};
    for (int i = 0, j = 0; i < 4; ++i)
        if (i != md) rest[static_cast<std::size_t>(j++)] = i;
    std::array<Index, 4> idx{};
    for (Index c = 0; c < m.cols(); ++c) {
        Index f = c;
        idx[static_cast<std::size_t>(rest[0])] = f % out.dim(rest[0]);
        f /= out.dim(rest[0]);
        idx[static_cast<std::size_t>(rest[1])] = f % out.dim(rest[1]);
        idx[static_cast<std::size_t>(rest[2])] = f / out.dim(rest[1]);
        for (Index r = 0; r < m.rows(); ++r) {
            idx[static_cast<std::size_t>(md)] = r;
            out(idx[0], idx[1], idx[2], idx[3]) = m(r, c);
        }
    }
    return out;
}

/// Mode-d tensor-matrix product: result dims equal x's with N_d replaced by
/// u.rows(); satisfies mode_matricize(result, d) == u * mode_matricize(x, d).
template <class Scalar>
Tensor4<Scalar> mode_multiply(
    const Tensor4<Scalar>& x,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& u, int d)
{
    if (d < 1 || d > 4) throw std::invalid_argument("mode index must be 1..4");
    if (u.cols() != x.dim(d - 1))
        throw std::invalid_argument("mode_multiply: factor cols != tensor dim");
    auto dims = x.dims();
    dims[static_cast<std::size_t>(d - 1)] = u.rows();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> y = u * mode_matricize(x, d);
    return mode_dematricize<Scalar>(y, d, dims);
}

template <class Scalar>
Tensor4<Scalar> hadamard(const Tensor4<Scalar>& x, const Tensor4<Scalar>& y)
{
    detail::require_same_dims(x.dims(), y.dims());
    Tensor4<Scalar> out(x.dims());
    out.vec() = x.vec().cwiseProduct(y.vec());
    return out;
}

template <class Scalar>
Tensor4<Scalar> hadamard_div(const Tensor4<Scalar>& x, const Tensor4<Scalar>& y)
{
    detail::require_same_dims(x.dims(), y.dims());
    Tensor4<Scalar> out(x.dims());
    for (Index i = 0; i < x.size(); ++i) {
        Scalar d = y[i];
        if (std::abs(d) < kMagFloor) {
            note_degenerate();
            d = (std::abs(d) == 0.0) ? Scalar(kMagFloor) : d / std::abs(d) * kMagFloor;
        }
        out[i] = x[i] / d;
    }
    return out;
}

/// Eq.-1 style inner product: conjugate-linear in the second argument.
template <class Scalar>
Scalar inner_product(const Tensor4<Scalar>& x, const Tensor4<Scalar>& y)
{
    detail::require_same_dims(x.dims(), y.dims());
    // Eigen's dot() conjugates the *first* argument.
    return y.vec().dot(x.vec());
}

template <class Scalar>
double frobenius_norm(const Tensor4<Scalar>& x)
{
    return x.vec().norm();
}

/// [out]_{n} = [x]_{(n + r) mod N}, per mode.
template <class Scalar>
Tensor4<Scalar> cyclic_shift(const Tensor4<Scalar>& x, const std::array<long, 4>& r)
{
    Tensor4<Scalar> out(x.dims());
    std::array<Index, 4> s{};
    for (int d = 0; d < 4; ++d) {
        long n = static_cast<long>(x.dim(d));
        s[static_cast<std::size_t>(d)] = static_cast<Index>(((r[static_cast<std::size_t>(d)] % n) + n) % n);
    }
    for (Index i4 = 0; i4 < x.dim(3); ++i4)
        for (Index i3 = 0; i3 < x.dim(2); ++i3)
            for (Index i2 = 0; i2 < x.dim(1); ++i2)
                for (Index i1 = 0; i1 < x.dim(0); ++i1)
                    out(i1, i2, i3, i4) = x((i1 + s[0]) % x.dim(0), (i2 + s[1]) % x.dim(1),
                                            (i3 + s[2]) % x.dim(2), (i4 + s[3]) % x.dim(3));
    return out;
}

template <class Scalar, class F>
Tensor4<Scalar> elementwise_map(const Tensor4<Scalar>& x, F&& f)
{
    Tensor4<Scalar> out(x.dims());
    for (Index i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

inline Tensor4c t_exp(const Tensor4c& x)
{
    return elementwise_map(x, [](Cplx v) { return std::exp(v); });
}

inline Tensor4c t_ln(const Tensor4c& x)
{
    return elementwise_map(x, [](Cplx v) {
        if (std::abs(v) < kMagFloor) {
            note_degenerate();
            v = Cplx(kMagFloor, 0.0);
        }
        return std::log(v);
    });
}

inline Tensor4c t_reciprocal(const Tensor4c& x)
{
    return elementwise_map(x, [](Cplx v) {
        if (std::abs(v) < kMagFloor) {
            note_degenerate();
            v = (std::abs(v) == 0.0) ? Cplx(kMagFloor, 0.0) : v / std::abs(v) * kMagFloor;
        }
        return 1.0 / v;
    });
}

inline Tensor4r abs_sq(const Tensor4c& x)
{
    Tensor4r out(x.dims());
    for (Index i = 0; i < x.size(); ++i) out[i] = std::norm(x[i]);
    return out;
}

inline Tensor4r real_part(const Tensor4c& x)
{
    Tensor4r out(x.dims());
    out.vec() = x.vec().real();
    return out;
}

inline Tensor4c to_complex(const Tensor4r& x)
{
    Tensor4c out(x.dims());
    out.vec() = x.vec().cast<Cplx>();
    return out;
}

template <class Scalar>
Tensor4<Scalar> operator+(const Tensor4<Scalar>& x, const Tensor4<Scalar>& y)
{
    detail::require_same_dims(x.dims(), y.dims());
    Tensor4<Scalar> out(x.dims());
    out.vec() = x.vec() + y.vec();
    return out;
}

template <class Scalar>
Tensor4<Scalar> operator-(const Tensor4<Scalar>& x, const Tensor4<Scalar>& y)
{
    detail::require_same_dims(x.dims(), y.dims());
    Tensor4<Scalar> out(x.dims());
    out.vec() = x.vec() - y.vec();
    return out;
}

template <class Scalar>
Tensor4<Scalar> operator*(Scalar a, const Tensor4<Scalar>& x)
{
    Tensor4<Scalar> out(x.dims());
    out.vec() = a * x.vec();
    return out;
}

inline Tensor4c operator*(double a, const Tensor4c& x)
{
    Tensor4c out(x.dims());
    out.vec() = Cplx(a, 0.0) * x.vec();
    return out;
}

}  // namespace tsdcp
