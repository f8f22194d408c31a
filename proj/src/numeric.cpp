#include "bregann/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace bregann {

namespace {

double measure(const AxisDistance& dist, Anchor anchor, double q, double x) {
    const double v = anchor == Anchor::First ? dist(q, x) : dist(x, q);
    if (!std::isfinite(v)) throw NonFinite("generator " + dist.gen->name() + " produced a non-finite distance");
    return v;
}

}  // namespace

int iteration_budget(double mu, double c0, double alpha) {
    return static_cast<int>(std::ceil(std::log2(mu * c0 * c0 * c0 / alpha))) + 4;
}

double query_alpha(double eps, std::size_t dim) {
    return std::min(1e-3, eps / (8.0 * static_cast<double>(dim)));
}

Placement point_at_distance(const AxisDistance& dist, Anchor anchor, double q, double r, Direction direction,
                            Precision prec) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("target distance must be finite and nonnegative");
    Placement out;
    out.x = q;
    if (r == 0.0) return out;

    const double sign = direction == Direction::Above ? 1.0 : -1.0;
    const double edge = direction == Direction::Above ? dist.domain.hi : dist.domain.lo;
    if (sign * (edge - q) <= 0.0) {
        out.x = edge;
        out.clipped = true;
        return out;
    }

    // Rooted-equivalent target: the Lagrange form gives sqrt(D) = sqrt(phi''(xi)/2)|x - q|.
    const double rooted_r = dist.rooted ? r : std::sqrt(r);
    const double curvature = dist.gen->d2phi(q);
    if (!(curvature > 0.0) || !std::isfinite(curvature))
        throw NonFinite("phi'' is not positive and finite at the anchor");
    double offset = dist.c0 * rooted_r / std::sqrt(curvature / 2.0);

    auto clamp_to_edge = [&](double x) { return sign > 0 ? std::min(x, edge) : std::max(x, edge); };
    double far = clamp_to_edge(q + sign * offset);
    double dfar = measure(dist, anchor, q, far);
    while (dfar < r) {
        if (far == edge) {
            out.x = edge;
            out.clipped = true;
            return out;
        }
        offset *= 2.0;
        ++out.doublings;
        far = clamp_to_edge(q + sign * offset);
        dfar = measure(dist, anchor, q, far);
    }
    if (std::fabs(dfar - r) <= prec.alpha * r) {
        out.x = far;
        return out;
    }

    double near = q;
    for (;;) {
        const double mid = 0.5 * (near + far);
        ++out.iterations;
        if (mid == near || mid == far) {
            out.x = far;
            return out;
        }
        const double dm = measure(dist, anchor, q, mid);
        if (std::fabs(dm - r) <= prec.alpha * r) {
            out.x = mid;
            return out;
        }
        (dm < r ? near : far) = mid;
    }
}

Bisection bisect_interval(const AxisDistance& dist, double a, double b, Precision prec) {
    Bisection out;
    out.x = a;
    if (!(a < b)) {
        out.degenerate = true;
        return out;
    }
    double lo = a, hi = b;
    for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi) || !(mid > a && mid < b)) {
            out.x = a;
            out.degenerate = true;
            return out;
        }
        ++out.iterations;
        const double left = dist(a, mid);
        const double right = dist(mid, b);
        if (!std::isfinite(left) || !std::isfinite(right)) throw NonFinite("non-finite distance during bisection");
        if (right > (1.0 + prec.alpha) * left) {
            lo = mid;
        } else if (right < (1.0 - prec.alpha) * left) {
            hi = mid;
        } else if (right > (1.0 - prec.alpha) * left && right < (1.0 + prec.alpha) * left) {
            out.x = mid;
            return out;
        } else {
            // Exactly on a tolerance boundary; nudge toward the balance point.
            (right > left ? lo : hi) = mid;
        }
    }
}

Breakpoints grid_interval(const AxisDistance& dist, double a, double b, double eps, Precision prec) {
    if (!(a < b)) throw InvalidArgument("grid_interval needs a < b");
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("grid_interval needs 0 < eps <= 1");
    const double s = dist(a, b);
    if (!(s > 0.0)) throw InvalidArgument("grid_interval needs a positive interval length");
    Breakpoints out;
    out.target_step = eps * s;
    out.points.push_back(a);

    AxisDistance bounded = dist;
    bounded.domain = {a, b};
    double x = a;
    while (dist(x, b) > out.target_step * (1.0 + prec.alpha)) {
        const Placement p = point_at_distance(bounded, Anchor::First, x, out.target_step, Direction::Above, prec);
        if (p.clipped || !(p.x > x) || !(p.x < b)) break;
        out.points.push_back(p.x);
        x = p.x;
    }
    out.points.push_back(b);
    return out;
}

}  // namespace bregann
