#pragma once

#include "tsdcp/tensor.hpp"

namespace tsdcp {

inline constexpr double kVarFloor = 1e-12;
inline constexpr double kVarCap = 1e8;

inline double clamp_variance(double v)
{
    if (!(v > kVarFloor)) {
        note_degenerate();
        return kVarFloor;
    }
    return v < kVarCap ? v : kVarCap;
}

/// Element-wise complex Gaussian message: mean tensor + per-element variance.
struct GaussianMessage {
    Tensor4c mean;
    Tensor4r variance;

    GaussianMessage() = default;
    GaussianMessage(const std::array<Index, 4>& dims, double var = 1.0)
        : mean(dims), variance(Tensor4r::constant(dims, var))
    {
    }

    static GaussianMessage uninformative(const std::array<Index, 4>& dims)
    {
        return GaussianMessage(dims, kVarCap);
    }

    void clamp()
    {
        for (Index i = 0; i < variance.size(); ++i)
            variance[i] = clamp_variance(variance[i]);
    }
};

/// Product of two Gaussian factors: precisions add, means precision-average.
inline GaussianMessage gaussian_combine(const GaussianMessage& a, const GaussianMessage& b)
{
    detail::require_same_dims(a.mean.dims(), b.mean.dims());
    GaussianMessage out;
    out.mean = Tensor4c(a.mean.dims());
    out.variance = Tensor4r(a.mean.dims());
    for (Index i = 0; i < out.mean.size(); ++i) {
        double pa = 1.0 / clamp_variance(a.variance[i]);
        double pb = 1.0 / clamp_variance(b.variance[i]);
        double p = pa + pb;
        out.variance[i] = clamp_variance(1.0 / p);
        out.mean[i] = (pa * a.mean[i] + pb * b.mean[i]) / p;
    }
    return out;
}

}  // namespace tsdcp
