#pragma once

#include <vector>

#include "bregann/divergence.hpp"

namespace bregann {

struct Precision {
    double alpha = 1e-6;

    explicit Precision(double a = 1e-6) : alpha(a) {
        if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("precision alpha must lie in (0, 1)");
    }
};

enum class Direction { Above, Below };

// Which argument slot the fixed point q occupies when measuring D between q and
// the point being placed: First means D(q, x), Second means D(x, q).
enum class Anchor { First, Second };

struct Placement {
    double x = 0.0;
    // The requested distance is not reachable inside the domain interval; x is
    // then the domain endpoint in the requested direction.
    bool clipped = false;
    int iterations = 0;  // halving steps after bracketing
    int doublings = 0;   // bracket expansions beyond the initial guess
};

// Finds x on the requested side of q with |D(q, x) - r| <= alpha r (argument
// order per `anchor`). The initial bracket comes from the Lagrange form of the
// divergence and the c0 bound stored in `dist`; the bracket is doubled when
// that guess falls short.
Placement point_at_distance(const AxisDistance& dist, Anchor anchor, double q, double r, Direction direction,
                            Precision prec);

struct Bisection {
    double x = 0.0;
    bool degenerate = false;
    int iterations = 0;
};

// Finds x in (a, b) with (1 - alpha) D(a, x) < D(x, b) < (1 + alpha) D(a, x).
// `degenerate` is set (and x = a) when the interval is too narrow to split.
Bisection bisect_interval(const AxisDistance& dist, double a, double b, Precision prec);

struct Breakpoints {
    std::vector<double> points;
    double target_step = 0.0;

    std::size_t pieces() const noexcept { return points.empty() ? 0 : points.size() - 1; }
};

// Greedy left-to-right packing of [a, b] into pieces of distance eps * D(a, b).
Breakpoints grid_interval(const AxisDistance& dist, double a, double b, double eps, Precision prec);

// Halving budget for point_at_distance after bracketing.
int iteration_budget(double mu, double c0, double alpha);

// Placement precision used by query paths so that the (1 + alpha)^d distortion
// stays well below eps.
double query_alpha(double eps, std::size_t dim);

}  // namespace bregann
