#include "bregann/euclid_quadtree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>

#include "bregann/bytes.hpp"

namespace bregann {

Interval DimensionIntervals::interval(std::uint32_t level, std::uint64_t j) const noexcept {
    const double w = width(level);
    const double lo = a_ + static_cast<double>(j) * w;
    const double hi = (j + 1 == (std::uint64_t{1} << level)) ? b_ : a_ + static_cast<double>(j + 1) * w;
    return {lo, hi};
}

bool DimensionIntervals::meeting(std::uint32_t level, double x0, double x1, std::uint64_t& j0,
                                 std::uint64_t& j1) const noexcept {
    if (x1 < a_ || x0 > b_ || x0 > x1) return false;
    const std::uint64_t count = std::uint64_t{1} << level;
    const double w = width(level);
    auto index = [&](double x) -> std::uint64_t {
        const double f = std::floor((x - a_) / w);
        if (f <= 0.0) return 0;
        if (f >= static_cast<double>(count - 1)) return count - 1;
        return static_cast<std::uint64_t>(f);
    };
    j0 = index(std::max(x0, a_));
    j1 = index(std::min(x1, b_));
    return true;
}

std::uint64_t DimensionIntervals::quantize(double x) const noexcept {
    const double scale = static_cast<double>(std::uint64_t{1} << max_level_);
    const double f = std::floor((x - a_) / (b_ - a_) * scale);
    if (!(f > 0.0)) return 0;
    const std::uint64_t top = (std::uint64_t{1} << max_level_) - 1;
    if (f >= static_cast<double>(top)) return top;
    return static_cast<std::uint64_t>(f);
}

std::size_t CompressedQuadtree::KeyHash::operator()(const std::vector<std::uint64_t>& key) const noexcept {
    std::uint64_t h = 0x84222325CBF29CE4ull;
    for (std::uint64_t v : key) {
        h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        h *= 0x100000001B3ull;
    }
    return static_cast<std::size_t>(h);
}

namespace {

double rooted_side(const DivergenceSpec& spec, std::size_t k, double lo, double hi) {
    return std::sqrt(spec.axis_raw(k, lo, hi));
}

}  // namespace

CompressedQuadtree CompressedQuadtree::build(const PointSet& points, const DivergenceSpec& spec,
                                             const StructuralConstants& c) {
    if (!spec.rooted()) throw NotRooted("the Euclidean quadtree fast path needs a square-rooted divergence");
    if (points.empty()) throw EmptyInput("quadtree needs at least one point");
    const std::size_t d = spec.dim();
    const std::size_t n = points.size();
    CompressedQuadtree t;
    t.dim_ = d;
    t.c0_ = c.c0;

    // Enclosing cube: per-dimension bounding interval, then every dimension is
    // extended to the largest rooted side s.
    std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], points.coord(i, k));
            hi[k] = std::max(hi[k], points.coord(i, k));
        }
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s = std::max(s, rooted_side(spec, k, lo[k], hi[k]));
    if (s == 0.0) {
        // All points coincide; use the domain as the root cube.
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = spec.domain().lo[k];
            hi[k] = spec.domain().hi[k];
            s = std::max(s, rooted_side(spec, k, lo[k], hi[k]));
        }
    }
    const Precision tight(1e-9);
    AxisDistance axis;
    for (std::size_t k = 0; k < d; ++k) {
        axis = spec.axis(k, c.c0);
        axis.rooted = true;
        if (rooted_side(spec, k, lo[k], hi[k]) < s) {
            const Placement up = point_at_distance(axis, Anchor::First, lo[k], s, Direction::Above, tight);
            if (!up.clipped) {
                hi[k] = std::max(hi[k], up.x);
            } else {
                const Placement down = point_at_distance(axis, Anchor::Second, hi[k], s, Direction::Below, tight);
                if (!down.clipped) {
                    lo[k] = std::min(lo[k], down.x);
                } else {
                    lo[k] = spec.domain().lo[k];
                    hi[k] = spec.domain().hi[k];
                }
            }
        }
        t.dims_.emplace_back(lo[k], hi[k], kMaxLevel);
        t.root_sides_.push_back(rooted_side(spec, k, lo[k], hi[k]));
    }
    t.s_ = s;

    t.quantized_.resize(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) t.quantized_[i * d + k] = t.dims_[k].quantize(points.coord(i, k));

    std::vector<PointId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<PointId>(i);
    t.build_node(points, spec, ids, 0, n, 0, true);
    t.rebuild_map();
    return t;
}

std::int32_t CompressedQuadtree::new_node(const PointSet& points, const DivergenceSpec& spec, std::uint32_t level,
                                          std::span<const std::uint64_t> cell_idx, const std::vector<PointId>& ids,
                                          std::size_t begin, std::size_t end) {
    const std::size_t d = dim_;
    const auto index = static_cast<std::int32_t>(nodes_.size());
    Node node;
    node.level = level;
    node.rep = *std::min_element(ids.begin() + static_cast<std::ptrdiff_t>(begin),
                                 ids.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t k = 0; k < d; ++k) {
        const Interval iv = dims_[k].interval(level, cell_idx[k]);
        node.side = std::max(node.side, rooted_side(spec, k, iv.lo, iv.hi));
        idx_.push_back(cell_idx[k]);
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (std::size_t i = begin; i < end; ++i) {
            mn = std::min(mn, points.coord(ids[i], k));
            mx = std::max(mx, points.coord(ids[i], k));
        }
        bbox_lo_.push_back(mn);
        bbox_hi_.push_back(mx);
    }
    nodes_.push_back(node);
    return index;
}

std::int32_t CompressedQuadtree::build_node(const PointSet& points, const DivergenceSpec& spec,
                                            std::vector<PointId>& ids, std::size_t begin, std::size_t end,
                                            std::uint32_t min_level, bool force_root) {
    const std::size_t d = dim_;
    const PointId first = ids[begin];
    int spread_bits = 0;
    for (std::size_t k = 0; k < d; ++k) {
        std::uint64_t diff = 0;
        const std::uint64_t g0 = quantized_[std::size_t{first} * d + k];
        for (std::size_t i = begin + 1; i < end; ++i) diff |= quantized_[std::size_t{ids[i]} * d + k] ^ g0;
        spread_bits = std::max(spread_bits, static_cast<int>(std::bit_width(diff)));
    }
    const auto common_level = static_cast<std::uint32_t>(static_cast<int>(kMaxLevel) - spread_bits);

    auto cell_at = [&](std::uint32_t level) {
        std::vector<std::uint64_t> idx(d);
        for (std::size_t k = 0; k < d; ++k) idx[k] = quantized_[std::size_t{first} * d + k] >> (kMaxLevel - level);
        return idx;
    };

    if (spread_bits == 0) {
        // One point, or points identical at the finest resolution: a leaf.
        const std::int32_t leaf = new_node(points, spec, min_level, cell_at(min_level), ids, begin, end);
        nodes_[leaf].leaf_begin = static_cast<std::uint32_t>(leaf_ids_.size());
        nodes_[leaf].leaf_count = static_cast<std::uint32_t>(end - begin);
        leaf_ids_.insert(leaf_ids_.end(), ids.begin() + static_cast<std::ptrdiff_t>(begin),
                         ids.begin() + static_cast<std::ptrdiff_t>(end));
        return leaf;
    }

    if (force_root && common_level > 0) {
        // The root is always the level-0 cube; it gets a single compressed child.
        const std::int32_t root = new_node(points, spec, 0, cell_at(0), ids, begin, end);
        const std::int32_t child = build_node(points, spec, ids, begin, end, 1, false);
        nodes_[root].first_child = static_cast<std::int32_t>(children_.size());
        nodes_[root].child_count = 1;
        children_.push_back(child);
        return root;
    }

    const std::uint32_t level = common_level;
    const std::int32_t self = new_node(points, spec, level, cell_at(level), ids, begin, end);
    const int shift = static_cast<int>(kMaxLevel - level - 1);
    auto quadrant = [&](PointId id) {
        std::uint32_t code = 0;
        for (std::size_t k = 0; k < d; ++k) code |= static_cast<std::uint32_t>((quantized_[std::size_t{id} * d + k] >> shift) & 1u) << k;
        return code;
    };
    std::stable_sort(ids.begin() + static_cast<std::ptrdiff_t>(begin), ids.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](PointId a, PointId b) { return quadrant(a) < quadrant(b); });
    std::vector<std::int32_t> kids;
    for (std::size_t i = begin; i < end;) {
        std::size_t j = i + 1;
        const std::uint32_t code = quadrant(ids[i]);
        while (j < end && quadrant(ids[j]) == code) ++j;
        kids.push_back(build_node(points, spec, ids, i, j, level + 1, false));
        i = j;
    }
    nodes_[self].first_child = static_cast<std::int32_t>(children_.size());
    nodes_[self].child_count = static_cast<std::uint32_t>(kids.size());
    children_.insert(children_.end(), kids.begin(), kids.end());
    return self;
}

void CompressedQuadtree::rebuild_map() {
    map_.clear();
    map_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        std::vector<std::uint64_t> key(dim_ + 1);
        key[0] = nodes_[i].level;
        const auto idx = index_of(i);
        std::copy(idx.begin(), idx.end(), key.begin() + 1);
        map_.emplace(std::move(key), static_cast<std::int32_t>(i));
    }
}

Box CompressedQuadtree::cell_box(std::size_t node) const {
    Box b;
    const auto idx = index_of(node);
    for (std::size_t k = 0; k < dim_; ++k) {
        const Interval iv = dims_[k].interval(nodes_[node].level, idx[k]);
        b.lo.push_back(iv.lo);
        b.hi.push_back(iv.hi);
    }
    return b;
}

std::uint32_t CompressedQuadtree::level_for_radius(double r) const noexcept {
    if (!(r > 0.0)) return kMaxLevel;
    const double ratio = s_ / (c0_ * r);
    if (!(ratio >= 1.0)) return 0;
    const double lv = std::floor(std::log2(ratio) + 1e-12);
    return static_cast<std::uint32_t>(std::min<double>(lv, kMaxLevel));
}

std::int32_t CompressedQuadtree::lookup(std::uint32_t level, std::span<const std::uint64_t> idx) const {
    if (nodes_.empty()) return -1;
    std::vector<std::uint64_t> key(dim_ + 1);
    key[0] = level;
    std::copy(idx.begin(), idx.end(), key.begin() + 1);
    if (auto it = map_.find(key); it != map_.end()) return it->second;

    auto contains = [&](std::size_t node) {
        // Does node's cell contain (or equal) cell (level, idx)?
        const std::uint32_t lv = nodes_[node].level;
        const auto own = index_of(node);
        for (std::size_t k = 0; k < dim_; ++k)
            if ((idx[k] >> (level - lv)) != own[k]) return false;
        return true;
    };
    auto inside = [&](std::size_t node) {
        // Is node's cell inside cell (level, idx)?
        const std::uint32_t lv = nodes_[node].level;
        const auto own = index_of(node);
        for (std::size_t k = 0; k < dim_; ++k)
            if ((own[k] >> (lv - level)) != idx[k]) return false;
        return true;
    };

    std::size_t u = 0;
    if (!contains(u)) return -1;
    for (;;) {
        const Node& node = nodes_[u];
        if (node.level == level || node.is_leaf()) return static_cast<std::int32_t>(u);
        std::int32_t next = -1;
        for (std::uint32_t c = 0; c < node.child_count; ++c) {
            const auto v = static_cast<std::size_t>(children_[static_cast<std::size_t>(node.first_child) + c]);
            if (nodes_[v].level <= level) {
                if (contains(v)) {
                    next = static_cast<std::int32_t>(v);
                    break;
                }
            } else if (inside(v)) {
                return static_cast<std::int32_t>(v);
            }
        }
        if (next < 0) return -1;
        u = static_cast<std::size_t>(next);
    }
}

std::vector<std::int32_t> CompressedQuadtree::cells_at_level_for_ball(const DivergenceSpec& spec,
                                                                      std::span<const double> q, double r,
                                                                      std::uint32_t* level_used) const {
    std::vector<std::int32_t> out;
    if (!(r > 0.0) || nodes_.empty()) return out;
    const std::uint32_t level = level_for_radius(r);
    if (level_used) *level_used = level;
    const Precision prec(1e-6);
    const double target = r / (1.0 - prec.alpha);
    const Anchor anchor = spec.side() == QuerySide::Right ? Anchor::Second : Anchor::First;
    std::vector<std::uint64_t> j0(dim_), j1(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
        const AxisDistance axis = spec.axis(k, c0_);
        const double below = point_at_distance(axis, anchor, q[k], target, Direction::Below, prec).x;
        const double above = point_at_distance(axis, anchor, q[k], target, Direction::Above, prec).x;
        if (!dims_[k].meeting(level, below, above, j0[k], j1[k])) return out;
    }
    // The per-dimension ranges form a box around the ball; its corner cells can
    // miss the ball entirely, so each cell is checked against the radius.
    std::vector<std::uint64_t> idx = j0;
    std::vector<double> cell_lo(dim_), cell_hi(dim_);
    for (;;) {
        for (std::size_t k = 0; k < dim_; ++k) {
            const Interval iv = dims_[k].interval(level, idx[k]);
            cell_lo[k] = iv.lo;
            cell_hi[k] = iv.hi;
        }
        if (spec.lower_bound_to_box_unchecked(q, cell_lo, cell_hi) <= target) {
            const std::int32_t node = lookup(level, idx);
            if (node >= 0) out.push_back(node);
        }
        std::size_t k = 0;
        while (k < dim_ && idx[k] == j1[k]) idx[k] = j0[k], ++k;
        if (k == dim_) break;
        ++idx[k];
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double fast_side_cutoff(const DivergenceSpec& spec, double mu, double c0, double eps, double d_near) {
    const double mus = kMuSafety * mu;
    const double root_d = std::sqrt(static_cast<double>(spec.dim()));
    // Asymmetric cells: the spread between two points of a cell may exceed the
    // natural-order side by up to c0, and the one-sided defectiveness argument
    // costs another (mu + 1); the larger of the two governs.
    const double extra = spec.symmetric() ? 1.0 : std::max(c0, mus + 1.0);
    return eps * d_near / (2.0 * mus * root_d * extra);
}

NnResult query_fast(const FastContext& ctx, std::span<const double> q, double eps, QueryObserver* observer) {
    const DivergenceSpec& spec = ctx.base.spec;
    if (!spec.rooted()) throw NotRooted("the fast path needs a square-rooted divergence");
    spec.check_point(q, "query");
    NnResult result;
    eps = normalize_eps(eps, result.eps_clamped);
    QueryStats& stats = result.stats;
    stats.fast_path = true;
    const CompressedQuadtree& tree = ctx.tree;
    const PointSet& points = ctx.base.points;

    const RoughAnswer rough = ctx.base.ring.rough_nn(points, spec, q);
    stats.distance_evals += rough.distance_evals;
    stats.rough_distance = rough.distance;
    result.id = rough.id;
    result.distance = rough.distance;
    if (observer) observer->on_best(result.id, result.distance);
    if (result.distance == 0.0) return result;

    const double keep = 1.0 - eps / 2.0;
    auto offer = [&](PointId id) {
        ++stats.distance_evals;
        const double dist = spec.query_distance(points[id], q);
        if (dist < result.distance || (dist == result.distance && id < result.id)) {
            result.id = id;
            result.distance = dist;
            if (observer) observer->on_best(id, dist);
        }
    };
    struct Item {
        std::int32_t node;
        double lb;
        std::uint32_t depth;
    };
    std::deque<Item> frontier;
    auto consider = [&](std::int32_t node, std::uint32_t depth) {
        offer(tree.nodes()[static_cast<std::size_t>(node)].rep);
        const double lb = spec.lower_bound_to_box_unchecked(q, tree.bbox_lo(static_cast<std::size_t>(node)),
                                                            tree.bbox_hi(static_cast<std::size_t>(node)));
        const double threshold = keep * result.distance;
        if (lb < threshold) {
            frontier.push_back({node, lb, depth});
            stats.max_queue = std::max<std::uint64_t>(stats.max_queue, frontier.size());
        } else {
            ++stats.pruned;
            if (observer) {
                Box b{std::vector<double>(tree.bbox_lo(static_cast<std::size_t>(node)).begin(),
                                          tree.bbox_lo(static_cast<std::size_t>(node)).end()),
                      std::vector<double>(tree.bbox_hi(static_cast<std::size_t>(node)).begin(),
                                          tree.bbox_hi(static_cast<std::size_t>(node)).end()),
                      0};
                observer->on_prune(b, lb, threshold);
            }
        }
    };

    for (std::int32_t node : tree.cells_at_level_for_ball(spec, q, rough.distance)) {
        ++stats.seeds;
        consider(node, 0);
    }

    const double mu = ctx.base.constants.mu;
    const double c0 = ctx.base.constants.c0;
    while (!frontier.empty() && result.distance > 0.0) {
        const Item item = frontier.front();
        frontier.pop_front();
        if (!(item.lb < keep * result.distance)) {
            ++stats.pruned;
            continue;
        }
        const CompressedQuadtree::Node& node = tree.nodes()[static_cast<std::size_t>(item.node)];
        ++stats.cells_expanded;
        stats.max_depth = std::max<std::uint64_t>(stats.max_depth, item.depth);
        if (observer) observer->on_expand(tree.cell_box(static_cast<std::size_t>(item.node)), node.side, result.distance);
        if (node.is_leaf()) {
            for (std::uint32_t i = 0; i < node.leaf_count; ++i) offer(tree.leaf_ids()[node.leaf_begin + i]);
            continue;
        }
        if (node.side < fast_side_cutoff(spec, mu, c0, eps, result.distance)) {
            ++stats.depth_cutoffs;
            continue;
        }
        for (std::uint32_t c = 0; c < node.child_count; ++c)
            consider(tree.children()[static_cast<std::size_t>(node.first_child) + c], item.depth + 1);
    }
    return result;
}

void CompressedQuadtree::serialize(std::vector<std::uint8_t>& out) const {
    bytes::put_u64(out, dim_);
    bytes::put_f64(out, s_);
    bytes::put_f64(out, c0_);
    bytes::put_array(out, root_sides_);
    for (const DimensionIntervals& iv : dims_) {
        bytes::put_f64(out, iv.lo());
        bytes::put_f64(out, iv.hi());
    }
    bytes::put_u64(out, nodes_.size());
    for (const Node& node : nodes_) {
        bytes::put_u32(out, node.level);
        bytes::put_i32(out, node.first_child);
        bytes::put_u32(out, node.child_count);
        bytes::put_u32(out, node.rep);
        bytes::put_u32(out, node.leaf_begin);
        bytes::put_u32(out, node.leaf_count);
        bytes::put_f64(out, node.side);
    }
    bytes::put_array(out, idx_);
    bytes::put_array(out, bbox_lo_);
    bytes::put_array(out, bbox_hi_);
    bytes::put_array(out, children_);
    bytes::put_array(out, leaf_ids_);
    bytes::put_array(out, quantized_);
}

CompressedQuadtree CompressedQuadtree::deserialize(const std::uint8_t*& p, const std::uint8_t* end,
                                                   const PointSet& points) {
    bytes::Reader in(p, end);
    CompressedQuadtree t;
    t.dim_ = in.u64();
    if (t.dim_ != points.dim()) throw FormatError("quadtree dimension does not match points");
    t.s_ = in.f64();
    t.c0_ = in.f64();
    t.root_sides_ = in.array<double>();
    if (t.root_sides_.size() != t.dim_) throw FormatError("quadtree root sides are corrupt");
    for (std::size_t k = 0; k < t.dim_; ++k) {
        const double a = in.f64();
        const double b = in.f64();
        if (!(a < b)) throw FormatError("quadtree root interval is corrupt");
        t.dims_.emplace_back(a, b, kMaxLevel);
    }
    const std::uint64_t count = in.u64();
    if (count == 0 || count > static_cast<std::uint64_t>(end - p) / 32) throw FormatError("quadtree node count is corrupt");
    t.nodes_.resize(count);
    for (Node& node : t.nodes_) {
        node.level = in.u32();
        node.first_child = in.i32();
        node.child_count = in.u32();
        node.rep = in.u32();
        node.leaf_begin = in.u32();
        node.leaf_count = in.u32();
        node.side = in.f64();
    }
    t.idx_ = in.array<std::uint64_t>();
    t.bbox_lo_ = in.array<double>();
    t.bbox_hi_ = in.array<double>();
    t.children_ = in.array<std::int32_t>();
    t.leaf_ids_ = in.array<PointId>();
    t.quantized_ = in.array<std::uint64_t>();
    const std::size_t nd = count * t.dim_;
    if (t.idx_.size() != nd || t.bbox_lo_.size() != nd || t.bbox_hi_.size() != nd ||
        t.quantized_.size() != points.size() * t.dim_)
        throw FormatError("quadtree arrays are corrupt");
    for (std::size_t i = 0; i < count; ++i) {
        const Node& node = t.nodes_[i];
        if (node.level > kMaxLevel || node.rep >= points.size() ||
            std::uint64_t{node.leaf_begin} + node.leaf_count > t.leaf_ids_.size())
            throw FormatError("quadtree node is corrupt");
        if (node.child_count > 0) {
            if (node.first_child < 0 ||
                static_cast<std::uint64_t>(node.first_child) + node.child_count > t.children_.size())
                throw FormatError("quadtree child range is corrupt");
            for (std::uint32_t c = 0; c < node.child_count; ++c) {
                const std::int32_t v = t.children_[static_cast<std::size_t>(node.first_child) + c];
                // Children are created after their parent and sit deeper.
                if (v <= static_cast<std::int32_t>(i) || static_cast<std::uint64_t>(v) >= count ||
                    t.nodes_[static_cast<std::size_t>(v)].level <= node.level)
                    throw FormatError("quadtree child link is corrupt");
            }
        }
    }
    for (PointId id : t.leaf_ids_)
        if (id >= points.size()) throw FormatError("quadtree id out of range");
    t.rebuild_map();
    return t;
}

}  // namespace bregann
