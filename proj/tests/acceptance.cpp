// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bregann/ann_index.hpp"
#include "oracles.hpp"

using namespace bregann;
using fixtures::make_spec;

namespace {

const DivergenceKind P = DivergenceKind::Primal;
const DivergenceKind S = DivergenceKind::Symmetrized;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;
// Criterion 11 looks at every tree built by the others, so it runs last; lines
// are buffered and printed in criterion order.
std::vector<std::pair<int, std::string>> lines;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    lines.emplace_back(id, std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + what +
                               " (" + detail + ")");
    std::fprintf(stderr, "criterion %d done\n", id);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Every ring tree built during the run, for the structural criterion.
struct RingRecord {
    std::size_t n, depth, stored;
    double c;
};
std::vector<RingRecord> rings;

void track(const AnnIndex& index) {
    const RingTree& r = index.ring();
    rings.push_back({index.points().size(), r.depth(), r.stored_ids(), r.params().split_constant});
}

struct Fit {
    double slope, intercept, r2;
};

Fit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return {slope, my - slope * mx, r2};
}

DivergenceSpec one_dim(const char* gen, double lo, double hi, DivergenceKind kind, bool rooted) {
    return make_spec(gen, 1, lo, hi, kind, rooted);
}

// ---------------------------------------------------------------------------

void mu_reproduction() {
    struct Case {
        double lo, hi, min, max;
    };
    bool ok = true;
    std::string detail;
    for (const Case& c : {Case{0.1, 0.9, 1.17, 1.27}, Case{0.01, 0.99, 2.37, 2.47}}) {
        const DivergenceSpec spec = make_spec("kl", 2, c.lo, c.hi, S, true);
        const auto t0 = Clock::now();
        const double mu = estimate_mu(spec, 20000, 1);
        const double secs = seconds_since(t0);
        ok = ok && mu >= c.min && mu <= c.max && secs < 10.0;
        detail += fmt("[%g,%g]: mu=%.4f in %.2fs; ", c.lo, c.hi, mu, secs);
    }
    report(1, ok, "mu reproduction for symmetrized-rooted KL", detail.substr(0, detail.size() - 2));
}

void c0_closed_forms() {
    const double kl = compute_c0(one_dim("kl", 0.1, 0.9, S, true));
    const double is = compute_c0(one_dim("itakura-saito", 0.5, 1.0, P, true));
    const double sq = compute_c0(one_dim("sqeuclidean", -3, 7, S, true));
    const bool ok = std::fabs(kl - 3.0) <= 1e-6 && std::fabs(is - 2.0) <= 1e-6 && sq == 1.0;
    report(2, ok, "c0 closed forms", fmt("KL=%.9f IS=%.9f sq=%.17g", kl, is, sq));
}

// Criteria 3 and 4 share their instances: each instance is a fresh point set
// and query, answered through both search paths.
void contract_suites() {
    struct Kind {
        const char* name;
        const char* g;
        double lo, hi;
        DivergenceKind kind;
    };
    const Kind kinds[] = {{"sym-rooted KL", "kl", 0.1, 0.9, S},
                          {"primal-rooted KL", "kl", 0.1, 0.9, P},
                          {"primal-rooted IS", "itakura-saito", 0.5, 1.0, P},
                          {"sym-rooted sqeuclidean", "sqeuclidean", -1, 1, S}};
    const double eps_list[] = {0.1, 0.5};
    std::uint64_t generic_total = 0, generic_bad = 0, fast_total = 0, fast_bad = 0;
    double generic_secs = 0, fast_secs = 0, worst_generic = 1, worst_fast = 1;
    std::mt19937_64 rng(2024);
    for (const Kind& k : kinds)
        for (std::size_t d : {1u, 2u, 3u}) {
            const DivergenceSpec spec = make_spec(k.g, d, k.lo, k.hi, k.kind, true);
            auto t0 = Clock::now();
            const StructuralConstants constants = estimate_constants(spec, 20000, 1);
            generic_secs += seconds_since(t0);
            for (std::size_t n : {100u, 1000u})
                for (int inst = 0; inst < 200; ++inst) {
                    t0 = Clock::now();
                    IndexParams params;
                    params.mu = constants.mu;
                    params.c0 = constants.c0;
                    params.seed = static_cast<std::uint64_t>(inst) + 1;
                    params.fast_path = true;
                    const AnnIndex index = AnnIndex::build(fixtures::uniform_points(spec, n, rng), spec, params);
                    track(index);
                    const auto q = fixtures::uniform_point(spec, rng);
                    const oracle::Nearest exact = oracle::brute_nn(index.points(), spec, q);
                    for (double eps : eps_list) {
                        const QueryAnswer a = index.query(q, eps, Strategy::Generic);
                        ++generic_total;
                        const double ratio = exact.distance > 0 ? a.distance / exact.distance : (a.distance == 0 ? 1 : 1e300);
                        worst_generic = std::max(worst_generic, ratio);
                        if (!(ratio <= 1 + eps)) ++generic_bad;
                    }
                    generic_secs += seconds_since(t0);
                    t0 = Clock::now();
                    for (double eps : eps_list) {
                        const QueryAnswer a = index.query(q, eps, Strategy::Fast);
                        ++fast_total;
                        const double ratio = exact.distance > 0 ? a.distance / exact.distance : (a.distance == 0 ? 1 : 1e300);
                        worst_fast = std::max(worst_fast, ratio);
                        if (!(ratio <= 1 + eps)) ++fast_bad;
                    }
                    fast_secs += seconds_since(t0);
                }
        }
    report(3, generic_bad == 0 && generic_secs < 300.0, "(1+eps) contract on the generic path",
           fmt("%llu/%llu within bound, worst ratio %.6f, %.1fs including builds and oracle",
               static_cast<unsigned long long>(generic_total - generic_bad),
               static_cast<unsigned long long>(generic_total), worst_generic, generic_secs));
    report(4, fast_bad == 0, "(1+eps) contract on the fast path",
           fmt("%llu/%llu within bound, worst ratio %.6f, %.1fs of fast queries",
               static_cast<unsigned long long>(fast_total - fast_bad), static_cast<unsigned long long>(fast_total),
               worst_fast, fast_secs));
}

void rough_factor() {
    const DivergenceSpec spec = make_spec("kl", 2, 0.1, 0.9, S, true);
    std::mt19937_64 rng(5);
    const double mu = estimate_mu(spec, 20000, 1);
    IndexParams params;
    params.mu = mu;
    params.seed = 5;
    const AnnIndex index = AnnIndex::build(fixtures::uniform_points(spec, 1000, rng), spec, params);
    track(index);
    const double bound = mu + 2 * mu * mu * std::log2(1000.0);
    double worst = 1;
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto q = fixtures::uniform_point(spec, rng);
        const RoughAnswer r = index.ring().rough_nn(index.points(), spec, q);
        const double exact = oracle::brute_nn(index.points(), spec, q).distance;
        const double ratio = exact > 0 ? r.distance / exact : 1.0;
        worst = std::max(worst, ratio);
        if (!(ratio <= bound)) ++bad;
    }
    report(5, bad == 0, "rough ANN factor",
           fmt("worst ratio %.4f against bound mu + 2 mu^2 log2 n = %.2f, %d violations in 1000", worst, bound, bad));
}

void structural_properties() {
    constexpr int kSamples = 100000;
    std::mt19937_64 rng(6);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    struct Gen1 {
        const char* g;
        double lo, hi;
    };
    const Gen1 gens[] = {{"kl", 0.1, 0.9}, {"kl", 0.01, 0.99}, {"itakura-saito", 0.5, 1.0}, {"itakura-saito", 0.2, 3.0},
                         {"sqeuclidean", -1, 1}};
    std::vector<std::string> broken;

    // Monotonicity of 1-D distances, both argument orders.
    {
        int bad = 0;
        for (int i = 0; i < kSamples; ++i) {
            const Gen1& g = gens[i % 5];
            const DivergenceSpec spec = one_dim(g.g, g.lo, g.hi, i % 2 ? P : S, false);
            std::array<double, 3> t{uni(g.lo, g.hi), uni(g.lo, g.hi), uni(g.lo, g.hi)};
            std::sort(t.begin(), t.end());
            const auto [a, b, c] = t;
            if (b - a < 1e-6 || c - b < 1e-6) continue;
            auto D = [&](double x, double y) { return spec.axis_raw(0, x, y); };
            if (!(D(a, b) < D(a, c) && D(b, c) < D(a, c) && D(b, a) < D(c, a) && D(c, b) < D(c, a))) ++bad;
        }
        if (bad) broken.push_back(fmt("monotonicity %d", bad));
    }
    // Reverse triangle inequality: primal both orientations, symmetrized raw and rooted.
    {
        int bad = 0;
        for (int i = 0; i < kSamples; ++i) {
            const Gen1& g = gens[i % 5];
            const int mode = (i / 5) % 3;
            const DivergenceSpec spec = one_dim(g.g, g.lo, g.hi, mode == 0 ? P : S, mode == 2);
            std::array<double, 3> t{uni(g.lo, g.hi), uni(g.lo, g.hi), uni(g.lo, g.hi)};
            std::sort(t.begin(), t.end());
            const auto [a, b, c] = t;
            const AxisDistance D = spec.axis(0, 1.0);
            const double tol = 1 + 1e-9;
            if (!(D(a, b) + D(b, c) <= D(a, c) * tol + 1e-300)) ++bad;
            if (mode == 0 && !(D(c, b) + D(b, a) <= D(c, a) * tol + 1e-300)) ++bad;
        }
        if (bad) broken.push_back(fmt("reverse triangle %d", bad));
    }
    // Defectiveness with the estimated mu times the safety factor.
    double worst_defect = 0;
    {
        struct Case {
            const char* g;
            std::size_t d;
            double lo, hi;
            DivergenceKind kind;
        };
        const Case cases[] = {{"kl", 2, 0.1, 0.9, S},
                              {"kl", 2, 0.01, 0.99, S},
                              {"kl", 2, 0.1, 0.9, P},
                              {"itakura-saito", 3, 0.5, 1.0, P},
                              {"sqeuclidean", 3, -1, 1, S}};
        int bad = 0;
        for (const Case& c : cases) {
            const DivergenceSpec spec = make_spec(c.g, c.d, c.lo, c.hi, c.kind, true);
            const double mu = estimate_mu(spec, 20000, 1);
            for (int i = 0; i < kSamples / 5; ++i) {
                const auto a = fixtures::uniform_point(spec, rng);
                const auto b = fixtures::uniform_point(spec, rng);
                const auto q = fixtures::uniform_point(spec, rng);
                const double sep = std::min(spec.eval(a, b), spec.eval(b, a));
                if (!(sep > 1e-12)) continue;
                double num = std::fabs(spec.eval(a, q) - spec.eval(b, q));
                num = std::max(num, std::fabs(spec.eval(q, a) - spec.eval(q, b)));
                worst_defect = std::max(worst_defect, num / (mu * sep));
                if (!(num <= kMuSafety * mu * sep * (1 + 1e-6))) ++bad;
            }
        }
        if (bad) broken.push_back(fmt("defectiveness %d", bad));
    }
    // c0 bounds the asymmetry of the rooted primal distance.
    {
        int bad = 0;
        for (int i = 0; i < kSamples; ++i) {
            const Gen1& g = gens[i % 5];
            const DivergenceSpec spec = one_dim(g.g, g.lo, g.hi, P, true);
            const double c0 = compute_c0(spec);
            const double a = uni(g.lo, g.hi), b = uni(g.lo, g.hi);
            if (std::fabs(a - b) < 1e-6) continue;
            const double ab = std::sqrt(spec.axis_raw(0, a, b)), ba = std::sqrt(spec.axis_raw(0, b, a));
            if (!(ab / ba <= c0 + 1e-6)) ++bad;
        }
        if (bad) broken.push_back(fmt("c0 ratio %d", bad));
    }
    // Lifting: the d-dimensional defectiveness stays below the per-coordinate maximum.
    double worst_lift = 0;
    {
        int bad = 0;
        for (DivergenceKind kind : {S, P}) {
            std::vector<ScalarGenerator> g{ScalarGenerator::kl(), ScalarGenerator::itakura_saito(),
                                           ScalarGenerator::squared_norm()};
            const DomainBox box{{0.1, 0.5, -1.0}, {0.9, 1.0, 1.0}};
            const DivergenceSpec spec(g, box, kind, true);
            double mu_max = 1;
            for (std::size_t k = 0; k < 3; ++k)
                mu_max = std::max(mu_max, estimate_mu(DivergenceSpec({g[k]}, DomainBox{{box.lo[k]}, {box.hi[k]}}, kind, true),
                                                      20000, 1));
            for (int i = 0; i < kSamples / 2; ++i) {
                const auto a = fixtures::uniform_point(spec, rng);
                const auto b = fixtures::uniform_point(spec, rng);
                const auto q = fixtures::uniform_point(spec, rng);
                const double sep = std::min(spec.eval(a, b), spec.eval(b, a));
                if (!(sep > 1e-12)) continue;
                double num = std::fabs(spec.eval(a, q) - spec.eval(b, q));
                num = std::max(num, std::fabs(spec.eval(q, a) - spec.eval(q, b)));
                worst_lift = std::max(worst_lift, num / (mu_max * sep));
                if (!(num <= mu_max * sep * (1 + 1e-9))) ++bad;
            }
        }
        if (bad) broken.push_back(fmt("lifting %d", bad));
    }
    std::string detail = broken.empty() ? "all five suites clean" : "violations:";
    for (const auto& b : broken) detail += " " + b;
    detail += fmt("; worst defect/mu %.4f, worst lift/mu_max %.4f", worst_defect, worst_lift);
    report(6, broken.empty(), "structural property suites at 1e5 samples each", detail);
}

void packing_counts() {
    std::mt19937_64 rng(7);
    int bad = 0, total = 0;
    double worst_slack = -1e300;
    for (const char* g : {"kl", "itakura-saito"})
        for (DivergenceKind kind : {P, S})
            for (bool rooted : {false, true}) {
                const double lo = g[0] == 'k' ? 0.05 : 0.3, hi = g[0] == 'k' ? 0.95 : 2.0;
                const DivergenceSpec spec = one_dim(g, lo, hi, kind, rooted);
                const AxisDistance D = spec.axis(0, compute_c0(spec));
                for (int i = 0; i < 1000; ++i) {
                    double a = std::uniform_real_distribution<double>(lo, hi)(rng);
                    double b = std::uniform_real_distribution<double>(lo, hi)(rng);
                    if (a > b) std::swap(a, b);
                    if (b - a < 1e-6) continue;
                    const double eps = std::uniform_real_distribution<double>(0.02, 1.0)(rng);
                    const Breakpoints br = grid_interval(D, a, b, eps, Precision());
                    const double ratio = D(a, b) / br.target_step;
                    const double bound = D.has_rti() ? ratio + 2 : ratio * ratio + 2;
                    const double pieces = static_cast<double>(br.pieces());
                    worst_slack = std::max(worst_slack, pieces - bound);
                    ++total;
                    if (!(pieces <= bound + 1e-9)) ++bad;
                }
            }
    report(7, bad == 0, "greedy grid packing counts",
           fmt("%d/%d intervals within s/l + 2 (RTI) or s^2/l^2 + 2 (primal rooted); max pieces - bound = %.3f",
               total - bad, total, worst_slack));
}

void numeric_budget() {
    std::mt19937_64 rng(8);
    struct Case {
        const char* g;
        DivergenceKind kind;
        double lo, hi;
    };
    const Case cases[] = {{"kl", S, 0.1, 0.9}, {"kl", P, 0.1, 0.9}, {"itakura-saito", P, 0.5, 1.0},
                          {"itakura-saito", S, 0.2, 3.0}, {"sqeuclidean", S, -1.0, 1.0}};
    int bad_acc = 0, bad_iter = 0, total = 0, worst_margin = -1000;
    for (double alpha : {1e-3, 1e-6})
        for (int i = 0; i < 10000; ++i) {
            const Case& c = cases[i % 5];
            static std::vector<std::pair<double, double>> constants;
            const DivergenceSpec spec = one_dim(c.g, c.lo, c.hi, c.kind, true);
            if (constants.size() < 5) constants.emplace_back(estimate_mu(spec, 20000, 1), compute_c0(spec));
            const auto [mu, c0] = constants[static_cast<std::size_t>(i % 5)];
            const AxisDistance D = spec.axis(0, c0);
            const int budget = static_cast<int>(std::ceil(std::log2(mu * c0 * c0 * c0 / alpha))) + 4;
            const double q = std::uniform_real_distribution<double>(c.lo, c.hi)(rng);
            const Direction dir = rng() % 2 ? Direction::Above : Direction::Below;
            const Anchor anchor = rng() % 2 ? Anchor::First : Anchor::Second;
            const double edge = dir == Direction::Above ? c.hi : c.lo;
            const double reach = anchor == Anchor::First ? D(q, edge) : D(edge, q);
            if (!(reach > 0)) continue;
            const double r = reach * std::uniform_real_distribution<double>(0.001, 0.999)(rng);
            const Placement p = point_at_distance(D, anchor, q, r, dir, Precision(alpha));
            const double got = anchor == Anchor::First ? D(q, p.x) : D(p.x, q);
            ++total;
            if (p.clipped || !(std::fabs(got - r) <= alpha * r)) ++bad_acc;
            if (p.iterations > budget) ++bad_iter;
            worst_margin = std::max(worst_margin, p.iterations - budget);
        }
    report(8, bad_acc == 0 && bad_iter == 0, "point_at_distance accuracy and iteration budget",
           fmt("%d cases, %d inaccurate, %d over budget, closest approach to budget %d iterations", total, bad_acc,
               bad_iter, worst_margin));
}

void range_reporter() {
    std::mt19937_64 rng(9);
    auto cloud = [&](std::size_t n, std::size_t d) {
        std::vector<double> c(n * d);
        for (double& v : c) v = std::uniform_real_distribution<double>(0, 1)(rng);
        return PointSet(d, std::move(c));
    };
    auto box = [&](std::size_t d) {
        Box b{std::vector<double>(d), std::vector<double>(d), 0};
        for (std::size_t k = 0; k < d; ++k) {
            const double x = std::uniform_real_distribution<double>(0, 1)(rng);
            const double y = std::uniform_real_distribution<double>(0, 1)(rng);
            b.lo[k] = std::min(x, y);
            b.hi[k] = std::max(x, y);
            if (rng() % 2) b.open_hi |= 1u << k;
        }
        return b;
    };
    int mismatches = 0;
    std::string slopes;
    bool slopes_ok = true;
    for (std::size_t d : {2u, 3u}) {
        const PointSet pts = cloud(5000, d);
        const RangeReporter rr = RangeReporter::build(pts);
        for (int i = 0; i < 10000; ++i) {
            const Box b = box(d);
            const auto got = rr.witness_in_box(b);
            if (got != oracle::scan_box(pts, b) || (got && !b.contains(pts[*got]))) ++mismatches;
        }
        std::vector<double> lx, ly;
        for (int e = 6; e <= 14; e += 2) {
            const std::size_t n = std::size_t{1} << e;
            const PointSet p = cloud(n, d);
            const RangeReporter r = RangeReporter::build(p);
            double visits = 0;
            for (int i = 0; i < 2000; ++i) {
                std::uint64_t v = 0;
                r.witness_in_box(box(d), &v);
                visits += static_cast<double>(v);
            }
            lx.push_back(std::log(static_cast<double>(e)));
            ly.push_back(std::log(visits / 2000));
        }
        const Fit f = linear_fit(lx, ly);
        const double dd = static_cast<double>(d);
        slopes_ok = slopes_ok && f.slope >= 0.5 * dd && f.slope <= 1.5 * dd;
        slopes += fmt("; d=%zu power of log n %.3f (allowed [%.1f, %.1f])", d, f.slope, 0.5 * dd, 1.5 * dd);
    }
    report(9, mismatches == 0 && slopes_ok, "range reporter oracle equivalence and polylog visits",
           fmt("%d mismatches in 20000 boxes", mismatches) + slopes);
}

void scaling_surrogate() {
    const DivergenceSpec spec = make_spec("kl", 2, 0.1, 0.9, S, true);
    const StructuralConstants constants = estimate_constants(spec, 20000, 1);
    std::mt19937_64 rng(10);
    std::vector<double> lx, means;
    std::string detail;
    for (int e : {8, 10, 12, 14}) {
        const std::size_t n = std::size_t{1} << e;
        IndexParams params;
        params.mu = constants.mu;
        params.c0 = constants.c0;
        params.seed = 10 + static_cast<std::uint64_t>(e);
        const AnnIndex index = AnnIndex::build(fixtures::uniform_points(spec, n, rng), spec, params);
        track(index);
        double sum = 0;
        const int queries = 2000;
        for (int i = 0; i < queries; ++i)
            sum += static_cast<double>(index.query(fixtures::uniform_point(spec, rng), 0.25, Strategy::Fast).stats.cells_expanded);
        lx.push_back(std::log(static_cast<double>(n)));
        means.push_back(sum / queries);
        detail += fmt("n=%zu: %.3f; ", n, sum / queries);
    }
    const Fit f = linear_fit(lx, means);
    detail += fmt("fit C1=%.4f C2=%.4f R^2=%.3f", f.slope, f.intercept, f.r2);
    report(10, f.r2 >= 0.8, "mean cells_expanded fits C1 log n + C2 with R^2 >= 0.8", detail);
}

void ring_structure() {
    int bad = 0;
    double worst_depth = 0, worst_store = 0;
    for (const RingRecord& r : rings) {
        const double depth_bound = r.c * std::log(static_cast<double>(r.n)) + 1;
        worst_depth = std::max(worst_depth, static_cast<double>(r.depth) / depth_bound);
        worst_store = std::max(worst_store, static_cast<double>(r.stored) / static_cast<double>(r.n));
        if (static_cast<double>(r.depth) > depth_bound || r.stored > 16 * r.n) ++bad;
    }
    report(11, bad == 0, "ring tree depth and storage on every built fixture",
           fmt("%zu trees, max depth/(c ln n + 1) = %.3f, max stored/n = %.3f", rings.size(), worst_depth, worst_store));
}

void serialization() {
    const DivergenceSpec spec = make_spec("kl", 3, 0.1, 0.9, P, true, QuerySide::Right);
    std::mt19937_64 rng(12);
    const PointSet pts = fixtures::uniform_points(spec, 2000, rng);
    IndexParams params;
    params.seed = 12;
    const AnnIndex a = AnnIndex::build(pts, spec, params);
    const AnnIndex b = AnnIndex::build(pts, spec, params);
    track(a);
    const bool identical = a.serialize() == b.serialize();
    const auto path = std::filesystem::temp_directory_path() / "bregann_acceptance.bann";
    a.save(path.string());
    const AnnIndex back = AnnIndex::load(path.string());
    std::filesystem::remove(path);
    int differ = 0;
    for (int i = 0; i < 100; ++i) {
        const auto q = fixtures::uniform_point(spec, rng);
        for (Strategy s : {Strategy::Generic, Strategy::Fast}) {
            const QueryAnswer x = a.query(q, 0.2, s), y = back.query(q, 0.2, s);
            if (x.id != y.id || x.distance != y.distance || x.stats.cells_expanded != y.stats.cells_expanded ||
                x.stats.distance_evals != y.stats.distance_evals)
                ++differ;
        }
    }
    report(12, identical && differ == 0, "serialization round trip",
           fmt("rebuild %s, %d of 200 reloaded answers differ", identical ? "byte-identical" : "differs", differ));
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    mu_reproduction();
    c0_closed_forms();
    contract_suites();
    rough_factor();
    structural_properties();
    packing_counts();
    numeric_budget();
    range_reporter();
    scaling_surrogate();
    serialization();
    ring_structure();
    std::sort(lines.begin(), lines.end());
    for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
    std::printf("%d of 12 criteria failed, %.1fs total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
