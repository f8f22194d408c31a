#include "bregann/quadtree_search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace bregann {

double cell_max_side(const DivergenceSpec& spec, const Box& box) {
    double side = 0.0;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        const double raw = spec.axis_raw(k, box.lo[k], box.hi[k]);
        side = std::max(side, spec.rooted() ? std::sqrt(raw) : raw);
    }
    return side;
}

std::vector<double> canonical_corner(const DivergenceSpec& spec, const Box& box) {
    return spec.side() == QuerySide::Right ? box.lo : box.hi;
}

namespace {

Anchor query_anchor(const DivergenceSpec& spec) {
    return spec.side() == QuerySide::Right ? Anchor::Second : Anchor::First;
}

}  // namespace

std::vector<Box> cover_ball_with_orthant_cubes(const DivergenceSpec& spec, double c0, std::span<const double> q,
                                               double r, Precision prec) {
    spec.check_point(q, "query");
    if (!(r > 0.0)) throw InvalidArgument("cover radius must be positive");
    const std::size_t d = spec.dim();
    // Aim slightly beyond r so the approximate placement never falls short.
    const double target = r / (1.0 - prec.alpha);
    const Anchor anchor = query_anchor(spec);
    std::vector<double> below(d), above(d);
    for (std::size_t k = 0; k < d; ++k) {
        const AxisDistance axis = spec.axis(k, c0);
        below[k] = point_at_distance(axis, anchor, q[k], target, Direction::Below, prec).x;
        above[k] = point_at_distance(axis, anchor, q[k], target, Direction::Above, prec).x;
    }
    std::vector<Box> out;
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
        Box b;
        b.lo.resize(d);
        b.hi.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            if (mask >> k & 1u) {
                b.lo[k] = q[k];
                b.hi[k] = above[k];
            } else {
                b.lo[k] = below[k];
                b.hi[k] = q[k];
                b.open_hi |= 1u << k;
            }
        }
        if (!b.empty()) out.push_back(std::move(b));
    }
    return out;
}

std::vector<Box> bisect_cell(const DivergenceSpec& spec, double c0, const Box& box, Precision prec) {
    const std::size_t d = spec.dim();
    std::vector<double> split(d);
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k < d; ++k) {
        const Bisection b = bisect_interval(spec.axis(k, c0), box.lo[k], box.hi[k], prec);
        if (!b.degenerate) {
            split[k] = b.x;
            dims.push_back(k);
        }
    }
    std::vector<Box> out;
    if (dims.empty()) return out;
    for (std::uint32_t mask = 0; mask < (1u << dims.size()); ++mask) {
        Box child = box;
        for (std::size_t j = 0; j < dims.size(); ++j) {
            const std::size_t k = dims[j];
            if (mask >> j & 1u) {
                child.lo[k] = split[k];
            } else {
                child.hi[k] = split[k];
                child.open_hi |= 1u << k;
            }
        }
        out.push_back(std::move(child));
    }
    return out;
}

std::vector<Box> cover_cell_with_cubes(const DivergenceSpec& spec, double c0, const Box& box, double eps,
                                       Precision prec) {
    const std::size_t d = spec.dim();
    std::vector<std::vector<double>> cuts(d);
    for (std::size_t k = 0; k < d; ++k) {
        if (box.lo[k] < box.hi[k])
            cuts[k] = grid_interval(spec.axis(k, c0), box.lo[k], box.hi[k], eps, prec).points;
        else
            cuts[k] = {box.lo[k], box.hi[k]};
    }
    std::vector<Box> out;
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        Box b;
        b.lo.resize(d);
        b.hi.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            b.lo[k] = cuts[k][idx[k]];
            b.hi[k] = cuts[k][idx[k] + 1];
            const bool last = idx[k] + 2 == cuts[k].size();
            if (!last || box.is_open_hi(k)) b.open_hi |= 1u << k;
        }
        out.push_back(std::move(b));
        std::size_t k = 0;
        while (k < d && ++idx[k] + 1 == cuts[k].size()) idx[k++] = 0;
        if (k == d) break;
    }
    return out;
}

double normalize_eps(double eps, bool& clamped) {
    clamped = false;
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be a positive finite number");
    if (eps > 1.0) {
        clamped = true;
        return 1.0;
    }
    return eps;
}

namespace {

struct Pending {
    Cell cell;
    double lower_bound;
};

struct ByLowerBound {
    bool operator()(const Pending& a, const Pending& b) const { return a.lower_bound > b.lower_bound; }
};

// FIFO or best-first container behind one interface.
class Frontier {
public:
    explicit Frontier(QueueOrder order) : order_(order) {}
    void push(Pending p) {
        if (order_ == QueueOrder::Fifo)
            fifo_.push_back(std::move(p));
        else
            heap_.push(std::move(p));
    }
    Pending pop() {
        if (order_ == QueueOrder::Fifo) {
            Pending p = std::move(fifo_.front());
            fifo_.pop_front();
            return p;
        }
        Pending p = heap_.top();
        heap_.pop();
        return p;
    }
    bool empty() const { return order_ == QueueOrder::Fifo ? fifo_.empty() : heap_.empty(); }
    std::size_t size() const { return order_ == QueueOrder::Fifo ? fifo_.size() : heap_.size(); }

private:
    QueueOrder order_;
    std::deque<Pending> fifo_;
    std::priority_queue<Pending, std::vector<Pending>, ByLowerBound> heap_;
};

}  // namespace

NnResult query_approx_nn(const SearchContext& ctx, std::span<const double> q, double eps,
                         const QueryOptions& options) {
    const DivergenceSpec& spec = ctx.spec;
    spec.check_point(q, "query");
    NnResult result;
    eps = normalize_eps(eps, result.eps_clamped);
    const double c0 = ctx.constants.c0;
    const Precision prec(options.alpha > 0.0 ? options.alpha : query_alpha(eps, spec.dim()));
    QueryObserver* obs = options.observer;
    QueryStats& stats = result.stats;

    const RoughAnswer rough = ctx.ring.rough_nn(ctx.points, spec, q);
    stats.distance_evals += rough.distance_evals;
    stats.rough_distance = rough.distance;
    result.id = rough.id;
    result.distance = rough.distance;
    if (obs) obs->on_best(result.id, result.distance);
    if (result.distance == 0.0) return result;

    const double keep = 1.0 - eps / 2.0;
    auto offer = [&](PointId id) {
        ++stats.distance_evals;
        const double dist = spec.query_distance(ctx.points[id], q);
        if (dist < result.distance || (dist == result.distance && id < result.id)) {
            result.id = id;
            result.distance = dist;
            if (obs) obs->on_best(id, dist);
        }
    };
    auto witness = [&](const Box& box) {
        ++stats.witness_queries;
        return ctx.reporter.witness_in_box(box, &stats.reporter_visits);
    };

    Frontier frontier(options.order);
    auto consider = [&](Box box, PointId rep, std::uint32_t depth) {
        offer(rep);
        const double lb = spec.lower_bound_to_box_unchecked(q, box.lo, box.hi);
        const double threshold = keep * result.distance;
        if (lb < threshold) {
            frontier.push({Cell{std::move(box), rep, depth}, lb});
            stats.max_queue = std::max<std::uint64_t>(stats.max_queue, frontier.size());
        } else {
            ++stats.pruned;
            if (obs) obs->on_prune(box, lb, threshold);
        }
    };

    for (Box& box : cover_ball_with_orthant_cubes(spec, c0, q, rough.distance, prec)) {
        const auto w = witness(box);
        if (!w) continue;
        ++stats.seeds;
        consider(std::move(box), *w, 0);
    }

    while (!frontier.empty() && result.distance > 0.0) {
        Pending current = frontier.pop();
        const double threshold = keep * result.distance;
        if (!(current.lower_bound < threshold)) {
            ++stats.pruned;
            if (obs) obs->on_prune(current.cell.box, current.lower_bound, threshold);
            continue;
        }
        ++stats.cells_expanded;
        stats.max_depth = std::max<std::uint64_t>(stats.max_depth, current.cell.depth);
        if (obs) obs->on_expand(current.cell.box, cell_max_side(spec, current.cell.box), result.distance);

        std::vector<Box> children = bisect_cell(spec, c0, current.cell.box, prec);
        if (children.empty()) {
            // No dimension has a representable midpoint, so every point in the
            // box sits on one of its corners. Points sharing coordinates share a
            // distance, so one witness per corner settles the cell exactly.
            ++stats.depth_cutoffs;
            const Box& box = current.cell.box;
            const std::size_t d = spec.dim();
            for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
                Box corner{box.lo, box.lo, 0};
                bool valid = true;
                for (std::size_t k = 0; k < d && valid; ++k) {
                    if (mask >> k & 1u) {
                        valid = box.lo[k] < box.hi[k] && !box.is_open_hi(k);
                        corner.lo[k] = corner.hi[k] = box.hi[k];
                    }
                }
                if (!valid) continue;
                if (const auto w = witness(corner)) offer(*w);
            }
            continue;
        }
        const auto rep_point = ctx.points[current.cell.rep];
        for (Box& child : children) {
            std::optional<PointId> w;
            if (child.contains(rep_point)) {
                // The parent's witness is the smallest id in the parent, hence in
                // any child containing it.
                w = current.cell.rep;
                ++stats.witness_reused;
            } else {
                w = witness(child);
            }
            if (!w) continue;
            consider(std::move(child), *w, current.cell.depth + 1);
        }
    }
    return result;
}

}  // namespace bregann
