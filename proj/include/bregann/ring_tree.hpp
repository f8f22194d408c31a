#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bregann/divergence.hpp"
#include "bregann/points.hpp"
#include "bregann/rng.hpp"

namespace bregann {

// Ball B(center, radius) = {x : dist(center, x) < radius}, where dist is the
// divergence's query distance with the center in the data slot. `covered` counts the
// points at distance <= radius, which is at least ceil(m / c).
struct BallEstimate {
    PointId center = 0;
    double radius = 0.0;
    std::size_t covered = 0;
};

// Randomized approximate smallest ball holding ceil(m / c) of the given points:
// every point is sampled with probability c / m and the best sampled center wins.
// One round hits the optimal ball with probability about 1 - 1/e; `rounds`
// independent rounds keep the best. When rounds * c >= m, sampling would cost
// more than trying every center, so the exhaustive scan runs instead.
BallEstimate approx_min_ball(const PointSet& points, std::span<const PointId> ids, const DivergenceSpec& spec,
                             double c, Rng& rng, int rounds = 1);

// Exhaustive variant over every center in `ids`.
BallEstimate exact_center_min_ball(const PointSet& points, std::span<const PointId> ids, const DivergenceSpec& spec,
                                   double c);

// Zero fields are replaced by defaults at build time.
struct RingTreeParams {
    double t = 0.0;               // ring thickness, default 1 / log2 n
    double split_constant = 0.0;  // balance constant c, default see RingTree::default_split_constant
    std::uint64_t seed = 0;
    int max_retries = 0;          // default 3 ceil(ln n)
    std::size_t leaf_size = 8;
};

struct RoughAnswer {
    PointId id = 0;
    double distance = 0.0;
    std::uint64_t nodes_visited = 0;
    std::uint64_t distance_evals = 0;
};

class RingTree {
public:
    struct Node {
        PointId rep = 0;
        double inner_radius = 0.0;
        double outer_radius = 0.0;
        std::int32_t inner = -1;  // child indices, -1 for leaves
        std::int32_t outer = -1;
        std::uint32_t leaf_begin = 0;
        std::uint32_t leaf_count = 0;

        bool is_leaf() const noexcept { return inner < 0; }
    };

    RingTree() = default;

    // `mu` feeds the balance constant when the caller leaves it at zero.
    static RingTree build(const PointSet& points, const DivergenceSpec& spec, RingTreeParams params, double mu);

    // Balance constant used when the caller does not supply one. The textbook
    // constant 2(4(mu+1)sqrt(d))^d (squared exponent for asymmetric kinds) is
    // capped at max(8, min(16, n/4)) to keep construction near-linear.
    static double default_split_constant(std::size_t n, std::size_t d, double mu, bool symmetric);
    static double reference_split_constant(std::size_t d, double mu, bool symmetric);

    // Single root-to-leaf descent; see the header comment of ring_tree.cpp.
    RoughAnswer rough_nn(const PointSet& points, const DivergenceSpec& spec, std::span<const double> q) const;

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<PointId>& leaf_ids() const noexcept { return leaf_ids_; }
    const RingTreeParams& params() const noexcept { return params_; }
    std::size_t depth() const noexcept { return depth_; }
    // Point ids stored across all leaves; annulus points are counted per copy.
    std::size_t stored_ids() const noexcept { return leaf_ids_.size(); }
    std::size_t fallback_splits() const noexcept { return fallback_splits_; }

    void serialize(std::vector<std::uint8_t>& out) const;
    static RingTree deserialize(const std::uint8_t*& p, const std::uint8_t* end, std::size_t n);

private:
    std::int32_t build_node(const PointSet& points, const DivergenceSpec& spec, std::vector<PointId> ids,
                            std::size_t depth, Rng& rng);
    std::int32_t make_leaf(std::vector<PointId> ids, std::size_t depth);

    RingTreeParams params_;
    std::vector<Node> nodes_;
    std::vector<PointId> leaf_ids_;
    std::size_t depth_ = 0;
    std::size_t fallback_splits_ = 0;
};

}  // namespace bregann
