#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bregann/errors.hpp"

namespace bregann {

using PointId = std::uint32_t;

// Dense row-major point matrix. Point ids are row indices.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
        if (dim_ == 0) throw InvalidArgument("point dimension must be at least 1");
        if (coords_.size() % dim_ != 0) throw InvalidArgument("coordinate count is not a multiple of the dimension");
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const noexcept { return size() == 0; }

    std::span<const double> operator[](std::size_t i) const noexcept {
        return {coords_.data() + i * dim_, dim_};
    }
    double coord(std::size_t i, std::size_t k) const noexcept { return coords_[i * dim_ + k]; }
    const std::vector<double>& raw() const noexcept { return coords_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

}  // namespace bregann
