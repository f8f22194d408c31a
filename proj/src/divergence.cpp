#include "bregann/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "bregann/rng.hpp"

namespace bregann {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (1+u)log1p(u) - u, i.e. the KL divergence divided by y with u = (x-y)/y.
double kl_kernel(double u) {
    if (std::fabs(u) < 1e-2) {
        // sum_{k>=2} (-1)^k u^k / (k(k-1))
        double term = u * u;
        double sum = 0.0;
        for (int k = 2; k <= 12; ++k) {
            sum += ((k % 2 == 0) ? term : -term) / (k * (k - 1.0));
            term *= u;
        }
        return sum;
    }
    return (1.0 + u) * std::log1p(u) - u;
}

// u - log1p(u), the Itakura-Saito divergence with u = x/y - 1.
double is_kernel(double u) {
    if (std::fabs(u) < 1e-2) {
        double term = u * u;
        double sum = 0.0;
        for (int k = 2; k <= 12; ++k) {
            sum += ((k % 2 == 0) ? term : -term) / k;
            term *= u;
        }
        return sum;
    }
    return u - std::log1p(u);
}

}  // namespace

ScalarGenerator ScalarGenerator::squared_norm() {
    return {Kind::SquaredNorm, "sqeuclidean", {-kInf, kInf}};
}

ScalarGenerator ScalarGenerator::kl() { return {Kind::KL, "kl", {0.0, kInf}}; }

ScalarGenerator ScalarGenerator::itakura_saito() { return {Kind::ItakuraSaito, "itakura-saito", {0.0, kInf}}; }

ScalarGenerator ScalarGenerator::custom(std::string name, std::function<double(double)> phi,
                                        std::function<double(double)> dphi,
                                        std::function<double(double)> d2phi, Interval validity) {
    if (!phi || !dphi || !d2phi) throw InvalidArgument("custom generator needs phi, phi' and phi''");
    if (!(validity.lo < validity.hi)) throw InvalidArgument("custom generator validity interval is empty");
    ScalarGenerator g(Kind::Custom, std::move(name), validity);
    g.phi_ = std::move(phi);
    g.dphi_ = std::move(dphi);
    g.d2phi_ = std::move(d2phi);
    return g;
}

ScalarGenerator ScalarGenerator::by_name(const std::string& name) {
    if (name == "sqeuclidean") return squared_norm();
    if (name == "kl") return kl();
    if (name == "itakura-saito") return itakura_saito();
    throw InvalidArgument("unknown divergence '" + name + "' (expected sqeuclidean, kl or itakura-saito)");
}

double ScalarGenerator::phi(double t) const {
    switch (kind_) {
        case Kind::SquaredNorm: return t * t;
        case Kind::KL: return t * std::log(t);
        case Kind::ItakuraSaito: return -std::log(t);
        case Kind::Custom: break;
    }
    return phi_(t);
}

double ScalarGenerator::dphi(double t) const {
    switch (kind_) {
        case Kind::SquaredNorm: return 2.0 * t;
        case Kind::KL: return std::log(t) + 1.0;
        case Kind::ItakuraSaito: return -1.0 / t;
        case Kind::Custom: break;
    }
    return dphi_(t);
}

double ScalarGenerator::d2phi(double t) const {
    switch (kind_) {
        case Kind::SquaredNorm: return 2.0;
        case Kind::KL: return 1.0 / t;
        case Kind::ItakuraSaito: return 1.0 / (t * t);
        case Kind::Custom: break;
    }
    return d2phi_(t);
}

double ScalarGenerator::bregman(double x, double y) const {
    switch (kind_) {
        case Kind::SquaredNorm: return (x - y) * (x - y);
        case Kind::KL: return std::max(0.0, y * kl_kernel((x - y) / y));
        case Kind::ItakuraSaito: return std::max(0.0, is_kernel((x - y) / y));
        case Kind::Custom: break;
    }
    return std::max(0.0, phi_(x) - phi_(y) - dphi_(y) * (x - y));
}

double ScalarGenerator::symmetrized(double x, double y) const {
    switch (kind_) {
        case Kind::SquaredNorm: return (x - y) * (x - y);
        case Kind::KL: return 0.5 * (x - y) * std::log1p((x - y) / y);
        case Kind::ItakuraSaito: return 0.5 * (x - y) * (x - y) / (x * y);
        case Kind::Custom: break;
    }
    return std::max(0.0, 0.5 * (x - y) * (dphi_(x) - dphi_(y)));
}

const char* to_string(DivergenceKind kind) noexcept {
    return kind == DivergenceKind::Primal ? "primal" : "symmetrized";
}

const char* to_string(QuerySide side) noexcept { return side == QuerySide::Right ? "right" : "left"; }

DivergenceSpec::DivergenceSpec(std::vector<ScalarGenerator> generators, DomainBox domain, DivergenceKind kind,
                               bool rooted, QuerySide side)
    : gens_(std::move(generators)), domain_(std::move(domain)), kind_(kind), rooted_(rooted), side_(side) {
    if (gens_.empty()) throw InvalidArgument("a divergence needs at least one coordinate");
    if (gens_.size() > 32) throw InvalidArgument("at most 32 coordinates are supported");
    if (domain_.lo.size() != gens_.size() || domain_.hi.size() != gens_.size())
        throw InvalidArgument("domain dimension does not match the number of generators");
    for (std::size_t k = 0; k < gens_.size(); ++k) {
        const double lo = domain_.lo[k], hi = domain_.hi[k];
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
            throw InvalidArgument("domain interval " + std::to_string(k) + " must satisfy lo < hi");
        const Interval v = gens_[k].validity();
        if (!(v.lo < lo && hi < v.hi))
            throw InvalidArgument("domain interval " + std::to_string(k) + " is not strictly inside the validity of " +
                                  gens_[k].name());
    }
}

DivergenceSpec DivergenceSpec::with_rooted(bool rooted) const {
    DivergenceSpec copy = *this;
    copy.rooted_ = rooted;
    return copy;
}

bool DivergenceSpec::in_domain(std::span<const double> x) const noexcept {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!(x[k] >= domain_.lo[k] && x[k] <= domain_.hi[k])) return false;
    return true;
}

void DivergenceSpec::check_point(std::span<const double> x, const char* what) const {
    if (x.size() != dim())
        throw DomainViolation(std::string(what) + " has " + std::to_string(x.size()) + " coordinates, expected " +
                              std::to_string(dim()));
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k])) throw NonFinite(std::string(what) + " has a non-finite coordinate");
        if (!(x[k] >= domain_.lo[k] && x[k] <= domain_.hi[k]))
            throw DomainViolation(std::string(what) + " coordinate " + std::to_string(k) + " = " +
                                  std::to_string(x[k]) + " lies outside the domain");
    }
}

double DivergenceSpec::eval(std::span<const double> x, std::span<const double> y) const {
    check_point(x);
    check_point(y);
    return eval_unchecked(x, y);
}

double DivergenceSpec::eval_unchecked(std::span<const double> x, std::span<const double> y) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < gens_.size(); ++k) sum += axis_raw(k, x[k], y[k]);
    return finish(sum);
}

double DivergenceSpec::lower_bound_to_box(std::span<const double> q, const Box& box) const {
    check_point(q, "query");
    if (box.dim() != dim()) throw DomainViolation("box dimension mismatch");
    for (std::size_t k = 0; k < dim(); ++k)
        if (box.lo[k] < domain_.lo[k] || box.hi[k] > domain_.hi[k] || box.lo[k] > box.hi[k])
            throw DomainViolation("box leaves the domain in coordinate " + std::to_string(k));
    return lower_bound_to_box_unchecked(q, box.lo, box.hi);
}

double DivergenceSpec::lower_bound_to_box_unchecked(std::span<const double> q, std::span<const double> lo,
                                                    std::span<const double> hi) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < gens_.size(); ++k) {
        if (q[k] < lo[k])
            sum += axis_oriented(k, lo[k], q[k]);
        else if (q[k] > hi[k])
            sum += axis_oriented(k, hi[k], q[k]);
    }
    return finish(sum);
}

AxisDistance DivergenceSpec::axis(std::size_t k, double c0) const {
    AxisDistance a;
    a.gen = &gens_[k];
    a.kind = kind_;
    a.rooted = rooted_;
    a.domain = {domain_.lo[k], domain_.hi[k]};
    a.c0 = c0;
    return a;
}

// ---------------------------------------------------------------------------
// Structural constants

namespace {

// Limit of |d(a,q) - d(b,q)| / d(a,b) as b -> a for the rooted 1-D distance,
// evaluated from derivatives. For the symmetrized case this is
// (1/2)(sqrt(t) + 1/sqrt(t)) with t = (phi'(q) - phi'(a)) / (phi''(a)(q - a)).
// For the primal case both query sides are returned through `right`/`left`.
struct LimitValues {
    double right = 0.0;
    double left = 0.0;
};

LimitValues limit_ratio(const ScalarGenerator& g, DivergenceKind kind, double a, double q) {
    LimitValues out;
    const double h2 = g.d2phi(a);
    if (kind == DivergenceKind::Symmetrized) {
        const double t = (g.dphi(q) - g.dphi(a)) / (h2 * (q - a));
        if (t > 0.0 && std::isfinite(t)) {
            const double s = std::sqrt(t);
            out.right = out.left = 0.5 * (s + 1.0 / s);
        }
        return out;
    }
    // Right side: derivative of sqrt(D(b, q)) at b = a over sqrt(phi''(a)/2).
    const double daq = g.bregman(a, q);
    if (daq > 0.0) out.right = std::fabs(g.dphi(a) - g.dphi(q)) / std::sqrt(2.0 * h2 * daq);
    // Left side: derivative of sqrt(D(q, b)) at b = a over the same scale.
    const double dqa = g.bregman(q, a);
    if (dqa > 0.0) out.left = std::fabs(q - a) * std::sqrt(h2 / (2.0 * dqa));
    return out;
}

double grid_limit_max(const ScalarGenerator& g, DivergenceKind kind, double lo, double hi, int grid) {
    double best = 1.0;
    const double step = (hi - lo) / (grid - 1);
    for (int i = 0; i < grid; ++i) {
        const double a = (i == grid - 1) ? hi : lo + i * step;
        for (int j = 0; j < grid; ++j) {
            if (i == j) continue;
            const double q = (j == grid - 1) ? hi : lo + j * step;
            const LimitValues v = limit_ratio(g, kind, a, q);
            best = std::max({best, v.right, v.left});
        }
    }
    return best;
}

// Defectiveness ratios of one triple: right-sided and (for primal) left-sided,
// each against both argument orders of the (a, b) separation.
double triple_ratio(const DivergenceSpec& spec, std::span<const double> a, std::span<const double> b,
                    std::span<const double> q) {
    const double ab = spec.eval_unchecked(a, b);
    const double ba = spec.symmetric() ? ab : spec.eval_unchecked(b, a);
    const double sep = std::min(ab, ba);
    if (!(sep > 1e-12)) return 0.0;
    double num = std::fabs(spec.eval_unchecked(a, q) - spec.eval_unchecked(b, q));
    if (!spec.symmetric())
        num = std::max(num, std::fabs(spec.eval_unchecked(q, a) - spec.eval_unchecked(q, b)));
    return num / sep;
}

}  // namespace

double estimate_mu(const DivergenceSpec& spec, std::uint64_t samples, std::uint64_t seed) {
    if (!spec.rooted())
        throw NotRooted("raw Bregman divergences are not mu-defective on any domain; use the square-rooted form");
    if (samples < 1000) throw InvalidArgument("estimate_mu needs at least 1000 samples");
    const std::size_t d = spec.dim();
    const DomainBox& dom = spec.domain();
    double mu = 1.0;

    // (a) random d-dimensional triples.
    Rng rng(seed, 1);
    std::vector<double> a(d), b(d), q(d);
    for (std::uint64_t s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < d; ++k) {
            a[k] = rng.uniform(dom.lo[k], dom.hi[k]);
            b[k] = rng.uniform(dom.lo[k], dom.hi[k]);
            q[k] = rng.uniform(dom.lo[k], dom.hi[k]);
        }
        mu = std::max(mu, triple_ratio(spec, a, b, q));
    }

    // (b) closed-form limit on a dense grid and (c) 1-D triples, per coordinate.
    // The d-dimensional constant is the per-coordinate maximum, so coordinates
    // sharing a builtin generator and interval are evaluated once.
    std::map<std::tuple<int, double, double>, double> seen;
    for (std::size_t k = 0; k < d; ++k) {
        const ScalarGenerator& g = spec.generator(k);
        const auto key = std::make_tuple(static_cast<int>(g.kind()), dom.lo[k], dom.hi[k]);
        if (g.kind() != ScalarGenerator::Kind::Custom) {
            if (auto it = seen.find(key); it != seen.end()) {
                mu = std::max(mu, it->second);
                continue;
            }
        }
        double local = grid_limit_max(g, spec.kind(), dom.lo[k], dom.hi[k], 2048);

        DivergenceSpec one({g}, DomainBox{{dom.lo[k]}, {dom.hi[k]}}, spec.kind(), true, spec.side());
        Rng r1(seed, 100 + k);
        double x[1], y[1], z[1];
        for (std::uint64_t s = 0; s < samples; ++s) {
            x[0] = r1.uniform(dom.lo[k], dom.hi[k]);
            y[0] = r1.uniform(dom.lo[k], dom.hi[k]);
            z[0] = r1.uniform(dom.lo[k], dom.hi[k]);
            local = std::max(local, triple_ratio(one, x, y, z));
        }
        if (g.kind() != ScalarGenerator::Kind::Custom) seen[key] = local;
        mu = std::max(mu, local);
    }
    return mu;
}

namespace {

// Golden-section search for the extremum of f on [lo, hi]; `sign` = +1 finds a
// maximum, -1 a minimum. Returns the extreme value found.
template <class F>
double golden_extremum(F f, double lo, double hi, double sign) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = sign * f(c), fd = sign * f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-9 * std::max(1.0, std::fabs(a) + std::fabs(b)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = sign * f(d);
        }
    }
    return sign * std::max({fc, fd, sign * f(lo), sign * f(hi)});
}

}  // namespace

double compute_c0(const DivergenceSpec& spec) {
    constexpr int kGrid = 4096;
    double c0 = 1.0;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        const ScalarGenerator& g = spec.generator(k);
        const double lo = spec.domain().lo[k], hi = spec.domain().hi[k];
        const double step = (hi - lo) / (kGrid - 1);
        auto xs = [&](int i) { return i == kGrid - 1 ? hi : lo + i * step; };
        int imax = 0, imin = 0;
        double vmax = -kInf, vmin = kInf;
        for (int i = 0; i < kGrid; ++i) {
            const double v = g.d2phi(xs(i));
            if (!std::isfinite(v) || !(v > 0.0))
                throw NonFinite("phi'' of " + g.name() + " is not positive and finite on the domain");
            if (v > vmax) vmax = v, imax = i;
            if (v < vmin) vmin = v, imin = i;
        }
        auto f = [&](double t) { return g.d2phi(t); };
        vmax = std::max(vmax, golden_extremum(f, xs(std::max(0, imax - 1)), xs(std::min(kGrid - 1, imax + 1)), 1.0));
        vmin = std::min(vmin, golden_extremum(f, xs(std::max(0, imin - 1)), xs(std::min(kGrid - 1, imin + 1)), -1.0));
        c0 = std::max(c0, std::sqrt(vmax / vmin));
    }
    return c0;
}

StructuralConstants estimate_constants(const DivergenceSpec& spec, std::uint64_t samples, std::uint64_t seed) {
    StructuralConstants c;
    c.mu = estimate_mu(spec.rooted() ? spec : spec.with_rooted(true), samples, seed);
    c.c0 = compute_c0(spec);
    c.sample_count = samples;
    c.seed = seed;
    return c;
}

}  // namespace bregann
