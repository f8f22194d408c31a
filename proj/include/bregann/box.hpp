#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bregann {

// Axis-parallel box. The low endpoint is always inclusive. The high endpoint is
// inclusive for dimension k unless bit k of `open_hi` is set; subdivision
// produces half-open children so that a boundary point belongs to one cell only.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
    std::uint32_t open_hi = 0;

    std::size_t dim() const noexcept { return lo.size(); }
    bool is_open_hi(std::size_t k) const noexcept { return (open_hi >> k) & 1u; }

    bool contains(std::span<const double> p) const noexcept {
        for (std::size_t k = 0; k < lo.size(); ++k) {
            if (p[k] < lo[k]) return false;
            if (is_open_hi(k) ? !(p[k] < hi[k]) : p[k] > hi[k]) return false;
        }
        return true;
    }

    // True when no real point can satisfy the membership test.
    bool empty() const noexcept {
        for (std::size_t k = 0; k < lo.size(); ++k) {
            if (lo[k] > hi[k]) return true;
            if (is_open_hi(k) && !(lo[k] < hi[k])) return true;
        }
        return false;
    }
};

}  // namespace bregann
