#include "tsdcp/tensor.hpp"

namespace tsdcp {

namespace {
thread_local std::int64_t g_degenerate = 0;
}

std::int64_t degenerate_count() noexcept { return g_degenerate; }
void reset_degenerate_count() noexcept { g_degenerate = 0; }
void note_degenerate(std::int64_t n) noexcept { g_degenerate += n; }

}  // namespace tsdcp
