#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bregann/box.hpp"
#include "bregann/points.hpp"

namespace bregann {

// Static layered range tree answering "is this box empty, and if not which is
// the smallest id inside it". Each level is a balanced tree over the points
// sorted by one coordinate; internal nodes of non-final levels own a structure
// for the next coordinate, and the final level carries a range-minimum tree over
// ids so that the smallest id in a key range costs O(log n).
class RangeReporter {
public:
    RangeReporter() = default;

    static RangeReporter build(const PointSet& points);

    // Smallest id whose point lies in `box`, honoring the box's half-open flags.
    // `visits` (optional) accumulates the number of tree nodes touched.
    std::optional<PointId> witness_in_box(const Box& box, std::uint64_t* visits = nullptr) const;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return n_; }
    // Total number of (coordinate, id) entries stored across all levels.
    std::size_t node_count() const noexcept;

    void serialize(std::vector<std::uint8_t>& out) const;
    static RangeReporter deserialize(const std::uint8_t*& p, const std::uint8_t* end, const PointSet& points);

private:
    struct Level {
        std::uint32_t dim = 0;
        std::vector<double> keys;          // coordinate `dim` of each entry, ascending
        std::vector<PointId> ids;          // entry ids in key order
        std::vector<std::int32_t> assoc;   // heap-indexed child level per tree node, -1 if none
        std::vector<PointId> min_ids;      // bottom-up range-min tree over ids (final level only)
    };

    std::int32_t build_level(std::uint32_t dim, std::vector<PointId> ids_sorted);

    PointId query_level(std::int32_t level, const Box& box, std::uint64_t& visits) const;
    PointId query_nodes(const Level& level, std::size_t node, std::size_t l, std::size_t r, std::size_t ql,
                        std::size_t qr, const Box& box, std::uint64_t& visits) const;
    PointId min_in_range(const Level& level, std::size_t ql, std::size_t qr, std::uint64_t& visits) const;

    std::size_t dim_ = 0;
    std::size_t n_ = 0;
    std::vector<double> coords_;
    std::vector<Level> levels_;
};

inline constexpr PointId kNoPoint = 0xFFFFFFFFu;

}  // namespace bregann
