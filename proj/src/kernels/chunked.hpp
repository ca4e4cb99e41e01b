#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace gqh::kernels::detail {

/// Anchors are cut into this many contiguous chunks regardless of the
/// thread count, and chunk partials are summed in chunk order, so the
/// floating-point result is the same for any OMP_NUM_THREADS.
inline constexpr std::size_t kChunks = 64;

template <class Body>
void chunked_accumulate(std::size_t n_anchors, std::span<double> out, Body&& body) {
    if (n_anchors == 0) {
        return;
    }
    const std::size_t n_chunks = std::min(kChunks, n_anchors);
    const std::size_t width = out.size();
    std::vector<double> partials(n_chunks * width, 0.0);
    const auto chunks = static_cast<long>(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (long c = 0; c < chunks; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        const std::size_t begin = n_anchors * uc / n_chunks;
        const std::size_t end = n_anchors * (uc + 1) / n_chunks;
        body(begin, end, std::span<double>(partials.data() + uc * width, width));
    }
    for (std::size_t c = 0; c < n_chunks; ++c) {
        const double* p = partials.data() + c * width;
        for (std::size_t k = 0; k < width; ++k) {
            out[k] += p[k];
        }
    }
}

} // namespace gqh::kernels::detail
