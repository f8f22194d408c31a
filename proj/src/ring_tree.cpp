// Ring-separator tree.
//
// Every internal node stores a center m (a data point), an inner radius r and
// an outer radius R >= (1 + t) r. Points closer than R go to the inner child,
// points farther than r go to the outer child, so points in the annulus are
// stored twice. A query descends once: into the inner child when
// dist(m, q) < (1 + t/2) r, otherwise into the outer child, remembering the best
// center seen on the way and scanning the final leaf. The first wrong turn costs
// at most a factor mu + 2 mu^2 / t, which is the rough-NN guarantee.

#include "bregann/ring_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "bregann/bytes.hpp"

namespace bregann {

namespace {

double ring_dist(const PointSet& pts, const DivergenceSpec& spec, PointId center, PointId x) {
    return spec.query_distance(pts[center], pts[x]);
}

std::size_t ball_count(std::size_t m, double c) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(m) / c)));
}

BallEstimate ball_at(const PointSet& pts, std::span<const PointId> ids, const DivergenceSpec& spec, PointId center,
                     std::size_t k, std::vector<double>& scratch) {
    scratch.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) scratch[i] = ring_dist(pts, spec, center, ids[i]);
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
    const double radius = scratch[k - 1];
    std::size_t covered = 0;
    for (double v : scratch) covered += v <= radius;
    return {center, radius, covered};
}

bool better_ball(const BallEstimate& a, const BallEstimate& b) {
    return a.radius < b.radius || (a.radius == b.radius && a.center < b.center);
}

}  // namespace

BallEstimate approx_min_ball(const PointSet& points, std::span<const PointId> ids, const DivergenceSpec& spec,
                             double c, Rng& rng, int rounds) {
    if (ids.empty()) throw EmptyInput("approx_min_ball needs at least one point");
    const std::size_t m = ids.size();
    rounds = std::max(rounds, 1);
    if (rounds > 1 && static_cast<double>(rounds) * c >= static_cast<double>(m))
        return exact_center_min_ball(points, ids, spec, c);
    const std::size_t k = ball_count(m, c);
    const double p = std::min(1.0, c / static_cast<double>(m));
    std::vector<double> scratch;
    std::optional<BallEstimate> best;
    for (int round = 0; round < rounds; ++round) {
        bool sampled = false;
        for (PointId id : ids) {
            if (rng.uniform() >= p) continue;
            sampled = true;
            const BallEstimate b = ball_at(points, ids, spec, id, k, scratch);
            if (!best || better_ball(b, *best)) best = b;
        }
        if (!sampled) {
            const BallEstimate b = ball_at(points, ids, spec, ids[rng.below(m)], k, scratch);
            if (!best || better_ball(b, *best)) best = b;
        }
    }
    return *best;
}

BallEstimate exact_center_min_ball(const PointSet& points, std::span<const PointId> ids, const DivergenceSpec& spec,
                                   double c) {
    if (ids.empty()) throw EmptyInput("exact_center_min_ball needs at least one point");
    const std::size_t k = ball_count(ids.size(), c);
    std::vector<double> scratch;
    BallEstimate best = ball_at(points, ids, spec, ids[0], k, scratch);
    for (std::size_t i = 1; i < ids.size(); ++i) {
        const BallEstimate b = ball_at(points, ids, spec, ids[i], k, scratch);
        if (better_ball(b, best)) best = b;
    }
    return best;
}

double RingTree::reference_split_constant(std::size_t d, double mu, bool symmetric) {
    const double base = 4.0 * (mu + 1.0) * std::sqrt(static_cast<double>(d));
    const double exponent = symmetric ? static_cast<double>(d) : 2.0 * static_cast<double>(d);
    return 2.0 * std::pow(base, exponent);
}

double RingTree::default_split_constant(std::size_t n, std::size_t d, double mu, bool symmetric) {
    const double cap = std::max(8.0, std::min(16.0, static_cast<double>(n) / 4.0));
    return std::min(reference_split_constant(d, mu, symmetric), cap);
}

namespace {

struct Split {
    PointId center = 0;
    double inner_radius = 0.0;
    double outer_radius = 0.0;
    std::vector<PointId> inner, outer;
};

// Distances from `center` to every id, paired with the ids in input order.
std::vector<double> distances_from(const PointSet& pts, const DivergenceSpec& spec, PointId center,
                                   std::span<const PointId> ids) {
    std::vector<double> d(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) d[i] = ring_dist(pts, spec, center, ids[i]);
    return d;
}

Split materialize(std::span<const PointId> ids, const std::vector<double>& dist, PointId center, double r_in,
                  double r_out) {
    Split s;
    s.center = center;
    s.inner_radius = r_in;
    s.outer_radius = r_out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const bool degenerate = r_out == 0.0;
        if (degenerate ? dist[i] == 0.0 : dist[i] < r_out) s.inner.push_back(ids[i]);
        if (dist[i] > r_in) s.outer.push_back(ids[i]);
    }
    return s;
}

struct Counts {
    std::size_t inner, outer;
};

Counts count_split(const std::vector<double>& sorted, double r_in, double r_out) {
    const auto inner = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), r_out) - sorted.begin());
    const auto outer =
        static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), r_in));
    return {inner, outer};
}

// Divides [r1, 2 r1] into K slabs of relative thickness at least t and keeps the
// balanced slab with the fewest annulus points, ties to the smallest index.
std::optional<Split> slab_split(std::span<const PointId> ids, const std::vector<double>& dist, PointId center,
                                double r1, double t, double c) {
    const std::size_t m = ids.size();
    const double limit = (1.0 - 1.0 / c) * static_cast<double>(m);
    if (r1 == 0.0) {
        std::size_t zeros = 0;
        for (double v : dist) zeros += v == 0.0;
        if (zeros == m) return std::nullopt;
        return materialize(ids, dist, center, 0.0, 0.0);
    }
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const int K = std::max(1, static_cast<int>(std::floor(1.0 / (2.0 * t))));
    std::optional<std::pair<double, double>> chosen;
    std::size_t best_annulus = m + 1;
    for (int j = 0; j < K; ++j) {
        const double r_in = r1 * (1.0 + static_cast<double>(j) / K);
        const double r_out = r1 * (1.0 + static_cast<double>(j + 1) / K);
        const Counts cnt = count_split(sorted, r_in, r_out);
        if (static_cast<double>(cnt.inner) > limit || static_cast<double>(cnt.outer) > limit) continue;
        if (cnt.inner == 0 || cnt.outer == 0) continue;
        const std::size_t annulus = cnt.inner + cnt.outer - m;
        if (annulus < best_annulus) best_annulus = annulus, chosen = std::make_pair(r_in, r_out);
    }
    if (!chosen) return std::nullopt;
    return materialize(ids, dist, center, chosen->first, chosen->second);
}

// Last resort: scan the distance quantiles for a balanced ring of thickness t.
std::optional<Split> quantile_split(std::span<const PointId> ids, const std::vector<double>& dist, PointId center,
                                    double t, double c) {
    const std::size_t m = ids.size();
    const double limit = (1.0 - 1.0 / c) * static_cast<double>(m);
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    std::optional<std::pair<double, double>> chosen;
    std::size_t best_annulus = m + 1;
    for (std::size_t i = 0; i < m; ++i) {
        const double r_in = sorted[i];
        if (r_in <= 0.0 || (i > 0 && sorted[i - 1] == r_in)) continue;
        const double r_out = (1.0 + t) * r_in;
        const Counts cnt = count_split(sorted, r_in, r_out);
        if (static_cast<double>(cnt.inner) > limit || static_cast<double>(cnt.outer) > limit) continue;
        if (cnt.inner == 0 || cnt.outer == 0) continue;
        const std::size_t annulus = cnt.inner + cnt.outer - m;
        if (annulus < best_annulus) best_annulus = annulus, chosen = std::make_pair(r_in, r_out);
    }
    if (!chosen) return std::nullopt;
    return materialize(ids, dist, center, chosen->first, chosen->second);
}

}  // namespace

RingTree RingTree::build(const PointSet& points, const DivergenceSpec& spec, RingTreeParams params, double mu) {
    if (points.empty()) throw EmptyInput("ring tree needs at least one point");
    const std::size_t n = points.size();
    if (params.t <= 0.0) params.t = n > 2 ? 1.0 / std::log2(static_cast<double>(n)) : 1.0;
    if (params.split_constant <= 0.0)
        params.split_constant = default_split_constant(n, spec.dim(), mu, spec.symmetric());
    if (params.split_constant < 2.0) throw InvalidArgument("ring tree split constant must be at least 2");
    if (params.max_retries <= 0)
        params.max_retries = std::max(1, 3 * static_cast<int>(std::ceil(std::log(static_cast<double>(n)))));
    if (params.leaf_size == 0) params.leaf_size = 1;

    RingTree tree;
    tree.params_ = params;
    Rng rng(params.seed, 0x52494E47);  // stream tag "RING"
    std::vector<PointId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<PointId>(i);
    tree.build_node(points, spec, std::move(ids), 0, rng);
    return tree;
}

std::int32_t RingTree::make_leaf(std::vector<PointId> ids, std::size_t depth) {
    Node node;
    node.rep = ids.front();
    node.leaf_begin = static_cast<std::uint32_t>(leaf_ids_.size());
    node.leaf_count = static_cast<std::uint32_t>(ids.size());
    leaf_ids_.insert(leaf_ids_.end(), ids.begin(), ids.end());
    nodes_.push_back(node);
    depth_ = std::max(depth_, depth);
    return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::int32_t RingTree::build_node(const PointSet& points, const DivergenceSpec& spec, std::vector<PointId> ids,
                                  std::size_t depth, Rng& rng) {
    const std::size_t m = ids.size();
    if (m <= params_.leaf_size) return make_leaf(std::move(ids), depth);
    const bool identical = std::all_of(ids.begin() + 1, ids.end(), [&](PointId id) {
        const auto a = points[id], b = points[ids[0]];
        return std::equal(a.begin(), a.end(), b.begin());
    });
    if (identical) return make_leaf(std::move(ids), depth);

    const double c = std::min(params_.split_constant, static_cast<double>(m));
    const double t = params_.t;
    std::optional<Split> split;
    PointId last_center = ids[0];
    for (int attempt = 0; attempt < params_.max_retries && !split; ++attempt) {
        const BallEstimate ball = approx_min_ball(points, ids, spec, c, rng);
        last_center = ball.center;
        split = slab_split(ids, distances_from(points, spec, ball.center, ids), ball.center, ball.radius, t, c);
    }
    if (!split && m <= 4096) {
        const BallEstimate ball = exact_center_min_ball(points, ids, spec, c);
        split = slab_split(ids, distances_from(points, spec, ball.center, ids), ball.center, ball.radius, t, c);
        if (split) ++fallback_splits_;
    }
    if (!split) {
        split = quantile_split(ids, distances_from(points, spec, last_center, ids), last_center, t, c);
        if (split) ++fallback_splits_;
    }
    if (!split || split->inner.size() >= m || split->outer.size() >= m) return make_leaf(std::move(ids), depth);

    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[index].rep = split->center;
    nodes_[index].inner_radius = split->inner_radius;
    nodes_[index].outer_radius = split->outer_radius;
    std::vector<PointId>().swap(ids);
    const std::int32_t inner = build_node(points, spec, std::move(split->inner), depth + 1, rng);
    const std::int32_t outer = build_node(points, spec, std::move(split->outer), depth + 1, rng);
    nodes_[index].inner = inner;
    nodes_[index].outer = outer;
    return index;
}

RoughAnswer RingTree::rough_nn(const PointSet& points, const DivergenceSpec& spec, std::span<const double> q) const {
    spec.check_point(q, "query");
    RoughAnswer best;
    best.distance = std::numeric_limits<double>::infinity();
    auto offer = [&](PointId id, double d) {
        if (d < best.distance || (d == best.distance && id < best.id)) best.id = id, best.distance = d;
    };
    std::int32_t v = 0;
    while (v >= 0) {
        const Node& node = nodes_[v];
        ++best.nodes_visited;
        if (node.is_leaf()) {
            for (std::uint32_t i = 0; i < node.leaf_count; ++i) {
                const PointId id = leaf_ids_[node.leaf_begin + i];
                ++best.distance_evals;
                offer(id, spec.query_distance(points[id], q));
            }
            break;
        }
        const double d = spec.query_distance(points[node.rep], q);
        ++best.distance_evals;
        offer(node.rep, d);
        if (d == 0.0) break;
        v = d < (1.0 + params_.t / 2.0) * node.inner_radius ? node.inner : node.outer;
    }
    return best;
}

void RingTree::serialize(std::vector<std::uint8_t>& out) const {
    bytes::put_f64(out, params_.t);
    bytes::put_f64(out, params_.split_constant);
    bytes::put_u64(out, params_.seed);
    bytes::put_u32(out, static_cast<std::uint32_t>(params_.max_retries));
    bytes::put_u64(out, params_.leaf_size);
    bytes::put_u64(out, depth_);
    bytes::put_u64(out, fallback_splits_);
    bytes::put_u64(out, nodes_.size());
    for (const Node& node : nodes_) {
        bytes::put_u32(out, node.rep);
        bytes::put_f64(out, node.inner_radius);
        bytes::put_f64(out, node.outer_radius);
        bytes::put_i32(out, node.inner);
        bytes::put_i32(out, node.outer);
        bytes::put_u32(out, node.leaf_begin);
        bytes::put_u32(out, node.leaf_count);
    }
    bytes::put_array(out, leaf_ids_);
}

RingTree RingTree::deserialize(const std::uint8_t*& p, const std::uint8_t* end, std::size_t n) {
    bytes::Reader in(p, end);
    RingTree tree;
    tree.params_.t = in.f64();
    tree.params_.split_constant = in.f64();
    tree.params_.seed = in.u64();
    tree.params_.max_retries = static_cast<int>(in.u32());
    tree.params_.leaf_size = in.u64();
    tree.depth_ = in.u64();
    tree.fallback_splits_ = in.u64();
    const std::uint64_t count = in.u64();
    if (count == 0 || count > static_cast<std::uint64_t>(end - p) / 36) throw FormatError("ring tree node count is corrupt");
    tree.nodes_.resize(count);
    for (Node& node : tree.nodes_) {
        node.rep = in.u32();
        node.inner_radius = in.f64();
        node.outer_radius = in.f64();
        node.inner = in.i32();
        node.outer = in.i32();
        node.leaf_begin = in.u32();
        node.leaf_count = in.u32();
    }
    tree.leaf_ids_ = in.array<PointId>();
    const auto limit = static_cast<std::int64_t>(count);
    for (std::int64_t i = 0; i < limit; ++i) {
        const Node& node = tree.nodes_[static_cast<std::size_t>(i)];
        // Children are always stored after their parent, which also rules out cycles.
        const bool bad_children = node.inner < 0 ? node.outer >= 0
                                                 : (node.inner <= i || node.outer <= i || node.inner >= limit ||
                                                    node.outer >= limit);
        if (node.rep >= n || bad_children ||
            std::uint64_t{node.leaf_begin} + node.leaf_count > tree.leaf_ids_.size())
            throw FormatError("ring tree node is corrupt");
    }
    for (PointId id : tree.leaf_ids_)
        if (id >= n) throw FormatError("ring tree id out of range");
    return tree;
}

}  // namespace bregann
