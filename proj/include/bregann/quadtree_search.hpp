#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bregann/box.hpp"
#include "bregann/divergence.hpp"
#include "bregann/numeric.hpp"
#include "bregann/points.hpp"
#include "bregann/range_report.hpp"
#include "bregann/ring_tree.hpp"

namespace bregann {

struct QueryStats {
    std::uint64_t cells_expanded = 0;
    std::uint64_t max_depth = 0;
    std::uint64_t witness_queries = 0;
    std::uint64_t witness_reused = 0;
    std::uint64_t distance_evals = 0;
    std::uint64_t pruned = 0;
    std::uint64_t max_queue = 0;
    std::uint64_t seeds = 0;
    std::uint64_t depth_cutoffs = 0;   // cells too small to split further
    std::uint64_t reporter_visits = 0;
    double rough_distance = 0.0;
    bool fast_path = false;
};

// A search cell: a box plus its range-report witness.
struct Cell {
    Box box;
    PointId rep = 0;
    std::uint32_t depth = 0;
};

// Per-dimension side D(lo, hi) in the divergence's units (natural argument order),
// maximized over dimensions.
double cell_max_side(const DivergenceSpec& spec, const Box& box);

// Corner whose ball of radius sqrt(d) * max_side covers the box: the low corner
// for right-sided queries and the high corner for left-sided ones.
std::vector<double> canonical_corner(const DivergenceSpec& spec, const Box& box);

// Up to 2^d half-open boxes, one per orthant around q, whose union covers the
// ball {x : dist(x, q) < r} intersected with the domain.
std::vector<Box> cover_ball_with_orthant_cubes(const DivergenceSpec& spec, double c0, std::span<const double> q,
                                               double r, Precision prec);

// Splits every dimension at its divergence bisection point. Dimensions too
// narrow to split are kept whole; an empty result means nothing could be split.
std::vector<Box> bisect_cell(const DivergenceSpec& spec, double c0, const Box& box, Precision prec);

// Greedy (1/eps)^d cover of a cell by sub-boxes of side about eps * side, per
// dimension via grid_interval.
std::vector<Box> cover_cell_with_cubes(const DivergenceSpec& spec, double c0, const Box& box, double eps,
                                       Precision prec);

enum class QueueOrder { Fifo, BestFirst };

// Instrumentation hooks for tests and diagnostics.
class QueryObserver {
public:
    virtual ~QueryObserver() = default;
    // `threshold` is (1 - eps/2) * D_near at the time of the decision.
    virtual void on_prune(const Box& /*box*/, double /*lower_bound*/, double /*threshold*/) {}
    virtual void on_expand(const Box& /*box*/, double /*max_side*/, double /*d_near*/) {}
    virtual void on_best(PointId /*id*/, double /*distance*/) {}
};

struct QueryOptions {
    QueueOrder order = QueueOrder::Fifo;
    double alpha = 0.0;  // 0 selects query_alpha(eps, d)
    QueryObserver* observer = nullptr;
};

struct SearchContext {
    const DivergenceSpec& spec;
    const PointSet& points;
    const RingTree& ring;
    const RangeReporter& reporter;
    StructuralConstants constants;
};

struct NnResult {
    PointId id = 0;
    double distance = 0.0;
    QueryStats stats;
    bool eps_clamped = false;
};

// Clamps eps into (0, 1]; throws for nonpositive or non-finite values.
double normalize_eps(double eps, bool& clamped);

// Generic (1 + eps)-approximate nearest neighbor via the witnessed-quadtree
// search over divergence-bisected cells.
NnResult query_approx_nn(const SearchContext& ctx, std::span<const double> q, double eps,
                         const QueryOptions& options = {});

}  // namespace bregann
