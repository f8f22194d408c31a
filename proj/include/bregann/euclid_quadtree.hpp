#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "bregann/quadtree_search.hpp"

namespace bregann {

// Implicit per-dimension interval hierarchy: level i splits the root interval
// [a, b] of one coordinate into 2^i equal Euclidean pieces.
class DimensionIntervals {
public:
    DimensionIntervals() = default;
    DimensionIntervals(double a, double b, std::uint32_t max_level) : a_(a), b_(b), max_level_(max_level) {}

    double lo() const noexcept { return a_; }
    double hi() const noexcept { return b_; }
    double width(std::uint32_t level) const noexcept { return (b_ - a_) / static_cast<double>(std::uint64_t{1} << level); }
    Interval interval(std::uint32_t level, std::uint64_t j) const noexcept;
    // Indices of level-`level` intervals meeting [x0, x1]; empty when disjoint.
    bool meeting(std::uint32_t level, double x0, double x1, std::uint64_t& j0, std::uint64_t& j1) const noexcept;
    // Quantized coordinate at the finest level.
    std::uint64_t quantize(double x) const noexcept;

private:
    double a_ = 0.0, b_ = 1.0;
    std::uint32_t max_level_ = 40;
};

// Compressed quadtree over a divergence-scaled enclosing cube, refined by
// Euclidean midpoints. Nodes are addressed by (level, per-dimension index).
class CompressedQuadtree {
public:
    static constexpr std::uint32_t kMaxLevel = 40;

    struct Node {
        std::uint32_t level = 0;
        std::int32_t first_child = -1;  // index into children()
        std::uint32_t child_count = 0;
        PointId rep = 0;                 // smallest id below this node
        std::uint32_t leaf_begin = 0;    // leaves only: range in leaf_ids()
        std::uint32_t leaf_count = 0;
        double side = 0.0;               // max rooted per-dimension side of the cell

        bool is_leaf() const noexcept { return leaf_count > 0; }
    };

    CompressedQuadtree() = default;

    static CompressedQuadtree build(const PointSet& points, const DivergenceSpec& spec, const StructuralConstants& c);

    std::size_t dim() const noexcept { return dim_; }
    double s() const noexcept { return s_; }
    double c0() const noexcept { return c0_; }
    // Rooted side of the root interval in each dimension; equals s() unless the
    // domain was too narrow to extend that dimension to s().
    const std::vector<double>& root_sides() const noexcept { return root_sides_; }
    const DimensionIntervals& intervals(std::size_t k) const noexcept { return dims_[k]; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<std::int32_t>& children() const noexcept { return children_; }
    const std::vector<PointId>& leaf_ids() const noexcept { return leaf_ids_; }
    std::span<const std::uint64_t> index_of(std::size_t node) const noexcept {
        return {idx_.data() + node * dim_, dim_};
    }
    std::span<const double> bbox_lo(std::size_t node) const noexcept { return {bbox_lo_.data() + node * dim_, dim_}; }
    std::span<const double> bbox_hi(std::size_t node) const noexcept { return {bbox_hi_.data() + node * dim_, dim_}; }
    Box cell_box(std::size_t node) const;

    // Level whose cells have rooted side at least r: floor(log2(s / (c0 r))),
    // clamped to [0, kMaxLevel].
    std::uint32_t level_for_radius(double r) const noexcept;

    // Existing nodes standing for the level-i cells that meet B(q, r). A level-i
    // cell lying on a compressed path is represented by the node below it.
    std::vector<std::int32_t> cells_at_level_for_ball(const DivergenceSpec& spec, std::span<const double> q,
                                                      double r, std::uint32_t* level_used = nullptr) const;

    // Node whose point set equals the points of cell (level, idx), or -1.
    std::int32_t lookup(std::uint32_t level, std::span<const std::uint64_t> idx) const;

    void serialize(std::vector<std::uint8_t>& out) const;
    static CompressedQuadtree deserialize(const std::uint8_t*& p, const std::uint8_t* end, const PointSet& points);

private:
    std::int32_t build_node(const PointSet& points, const DivergenceSpec& spec, std::vector<PointId>& ids,
                            std::size_t begin, std::size_t end, std::uint32_t min_level, bool force_root);
    std::int32_t new_node(const PointSet& points, const DivergenceSpec& spec, std::uint32_t level,
                          std::span<const std::uint64_t> cell_idx, const std::vector<PointId>& ids,
                          std::size_t begin, std::size_t end);
    void rebuild_map();

    struct KeyHash {
        std::size_t operator()(const std::vector<std::uint64_t>& key) const noexcept;
    };

    std::size_t dim_ = 0;
    double s_ = 0.0;
    double c0_ = 1.0;
    std::vector<double> root_sides_;
    std::vector<DimensionIntervals> dims_;
    std::vector<std::uint64_t> quantized_;  // n x d finest-level coordinates
    std::vector<Node> nodes_;
    std::vector<std::uint64_t> idx_;         // node x d cell indices at the node level
    std::vector<double> bbox_lo_, bbox_hi_;  // node x d tight bounding boxes
    std::vector<std::int32_t> children_;
    std::vector<PointId> leaf_ids_;
    std::unordered_map<std::vector<std::uint64_t>, std::int32_t, KeyHash> map_;
};

struct FastContext {
    SearchContext base;
    const CompressedQuadtree& tree;
};

// Side below which a cell is not expanded further: its representative is then
// within a (1 + eps) factor of every point in it, given the defectiveness bound.
double fast_side_cutoff(const DivergenceSpec& spec, double mu, double c0, double eps, double d_near);

NnResult query_fast(const FastContext& ctx, std::span<const double> q, double eps, QueryObserver* observer = nullptr);

}  // namespace bregann
