#pragma once

#include "tsdcp/tensor.hpp"

#include <string>

namespace tsdcp {

// Binary dump format: little-endian header of 4×u64 dims, then interleaved
// (re, im) f64 pairs in the canonical first-index-fastest layout.
void save_tensor(const Tensor4c& x, const std::string& path);
Tensor4c load_tensor(const std::string& path);

}  // namespace tsdcp
