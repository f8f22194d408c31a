#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bregann/box.hpp"
#include "bregann/errors.hpp"

namespace bregann {

struct Interval {
    double lo;
    double hi;
};

// A strictly convex, twice differentiable function of one variable. The three
// builtins evaluate analytically; Custom carries user-supplied callables.
class ScalarGenerator {
public:
    enum class Kind { SquaredNorm, KL, ItakuraSaito, Custom };

    static ScalarGenerator squared_norm();
    static ScalarGenerator kl();
    static ScalarGenerator itakura_saito();
    static ScalarGenerator custom(std::string name, std::function<double(double)> phi,
                                  std::function<double(double)> dphi,
                                  std::function<double(double)> d2phi, Interval validity);
    // Accepts "sqeuclidean", "kl" and "itakura-saito".
    static ScalarGenerator by_name(const std::string& name);

    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    // Open interval on which phi is strictly convex and differentiable.
    Interval validity() const noexcept { return validity_; }

    double phi(double t) const;
    double dphi(double t) const;
    double d2phi(double t) const;

    // phi(x) - phi(y) - phi'(y)(x - y), evaluated without catastrophic
    // cancellation for the builtins when x is close to y.
    double bregman(double x, double y) const;
    // (1/2)(x - y)(phi'(x) - phi'(y)).
    double symmetrized(double x, double y) const;

private:
    ScalarGenerator(Kind kind, std::string name, Interval validity)
        : kind_(kind), name_(std::move(name)), validity_(validity) {}

    Kind kind_;
    std::string name_;
    Interval validity_;
    std::function<double(double)> phi_, dphi_, d2phi_;
};

struct DomainBox {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const noexcept { return lo.size(); }
};

enum class DivergenceKind { Primal, Symmetrized };

// Which argument slot the query occupies for an asymmetric divergence. With
// Right the nearest-neighbor problem minimizes D(p, q) over data points p and
// balls around a center m are {x : D(m, x) < r}; Left mirrors both.
enum class QuerySide { Right, Left };

const char* to_string(DivergenceKind kind) noexcept;
const char* to_string(QuerySide side) noexcept;

// One coordinate of a spec as a standalone 1-D distance in its natural argument
// order: value(x, y) is D(x, y), Ds(x, y) or their square roots.
struct AxisDistance {
    const ScalarGenerator* gen = nullptr;
    DivergenceKind kind = DivergenceKind::Symmetrized;
    bool rooted = true;
    Interval domain{0.0, 1.0};
    double c0 = 1.0;

    double raw(double x, double y) const {
        return kind == DivergenceKind::Primal ? gen->bregman(x, y) : gen->symmetrized(x, y);
    }
    double operator()(double x, double y) const {
        const double v = raw(x, y);
        return rooted ? std::sqrt(v) : v;
    }
    // Satisfies the reverse triangle inequality on ordered triples.
    bool has_rti() const noexcept { return !(rooted && kind == DivergenceKind::Primal); }
};

class DivergenceSpec {
public:
    DivergenceSpec(std::vector<ScalarGenerator> generators, DomainBox domain, DivergenceKind kind,
                   bool rooted, QuerySide side = QuerySide::Right);

    std::size_t dim() const noexcept { return gens_.size(); }
    const ScalarGenerator& generator(std::size_t k) const noexcept { return gens_[k]; }
    const std::vector<ScalarGenerator>& generators() const noexcept { return gens_; }
    const DomainBox& domain() const noexcept { return domain_; }
    DivergenceKind kind() const noexcept { return kind_; }
    bool rooted() const noexcept { return rooted_; }
    QuerySide side() const noexcept { return kind_ == DivergenceKind::Symmetrized ? QuerySide::Right : side_; }
    bool symmetric() const noexcept { return kind_ == DivergenceKind::Symmetrized; }

    DivergenceSpec with_rooted(bool rooted) const;

    bool in_domain(std::span<const double> x) const noexcept;
    void check_point(std::span<const double> x, const char* what = "point") const;

    // Distance in natural argument order, D(x, y) or Ds(x, y), rooted per spec.
    double eval(std::span<const double> x, std::span<const double> y) const;
    double eval_unchecked(std::span<const double> x, std::span<const double> y) const;

    // Per-coordinate raw term in natural order.
    double axis_raw(std::size_t k, double x, double y) const {
        return kind_ == DivergenceKind::Primal ? gens_[k].bregman(x, y) : gens_[k].symmetrized(x, y);
    }
    // Per-coordinate raw term oriented so that `p` is the data side and `q` the
    // query side.
    double axis_oriented(std::size_t k, double p, double q) const {
        return side() == QuerySide::Right ? axis_raw(k, p, q) : axis_raw(k, q, p);
    }
    // Applies the square root when the divergence is rooted.
    double finish(double raw_sum) const noexcept { return rooted_ ? std::sqrt(raw_sum) : raw_sum; }

    // Distance between data point p and query q under the query side.
    double query_distance(std::span<const double> p, std::span<const double> q) const {
        return side() == QuerySide::Right ? eval_unchecked(p, q) : eval_unchecked(q, p);
    }

    // Exact minimum of query_distance(x, q) over x in the (closed) box. Each
    // per-axis term is monotone away from q, so clamping q is optimal.
    double lower_bound_to_box(std::span<const double> q, const Box& box) const;
    double lower_bound_to_box_unchecked(std::span<const double> q, std::span<const double> lo,
                                        std::span<const double> hi) const;

    AxisDistance axis(std::size_t k, double c0) const;

private:
    std::vector<ScalarGenerator> gens_;
    DomainBox domain_;
    DivergenceKind kind_;
    bool rooted_;
    QuerySide side_;
};

struct StructuralConstants {
    double mu = 1.0;
    double c0 = 1.0;
    std::uint64_t sample_count = 0;
    std::uint64_t seed = 0;
};

// Point estimate of the defectiveness constant of a rooted spec over its domain.
// For asymmetric specs this is the larger of the left- and right-sided values.
double estimate_mu(const DivergenceSpec& spec, std::uint64_t samples, std::uint64_t seed);

// max over coordinates of sqrt(max phi'' / min phi'') on the domain.
double compute_c0(const DivergenceSpec& spec);

StructuralConstants estimate_constants(const DivergenceSpec& spec, std::uint64_t samples, std::uint64_t seed);

// Safety multiplier applied wherever an estimated mu bounds a search.
inline constexpr double kMuSafety = 1.05;

}  // namespace bregann
