#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "bregann/divergence.hpp"
#include "oracles.hpp"

using namespace bregann;
using fixtures::make_spec;

namespace {

const DivergenceKind P = DivergenceKind::Primal;
const DivergenceKind S = DivergenceKind::Symmetrized;

double ev(const DivergenceSpec& s, std::vector<double> x, std::vector<double> y) { return s.eval(x, y); }

}  // namespace

TEST_CASE("generator derivatives agree with central differences") {
    std::mt19937_64 rng(7);
    for (const char* name : {"sqeuclidean", "kl", "itakura-saito"}) {
        const ScalarGenerator g = ScalarGenerator::by_name(name);
        for (int i = 0; i < 2000; ++i) {
            const double x = std::uniform_real_distribution<double>(0.05, 5.0)(rng);
            const double h = 1e-5;
            CHECK(g.d2phi(x) > 0.0);
            const double fd1 = (g.phi(x + h) - g.phi(x - h)) / (2 * h);
            CHECK(std::fabs(g.dphi(x) - fd1) <= 1e-6 * (1 + std::fabs(g.dphi(x))));
            const double fd2 = (g.dphi(x + h) - g.dphi(x - h)) / (2 * h);
            CHECK(std::fabs(g.d2phi(x) - fd2) <= 1e-6 * (1 + std::fabs(g.d2phi(x))));
        }
    }
}

TEST_CASE("evaluation examples") {
    SUBCASE("reflexive") {
        CHECK(ev(make_spec("sqeuclidean", 1, 0, 1, P, false), {0.5}, {0.5}) == 0.0);
    }
    SUBCASE("KL closed form") {
        const double expect = 0.9 * std::log(3.0) - 0.6;
        CHECK(ev(make_spec("kl", 1, 0.1, 0.95, P, false), {0.9}, {0.3}) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(expect == doctest::Approx(0.38876).epsilon(1e-4));
    }
    SUBCASE("symmetrized squared norm") {
        CHECK(ev(make_spec("sqeuclidean", 1, 0, 4, S, false), {1}, {3}) == doctest::Approx(4.0));
    }
    SUBCASE("rooted takes the square root") {
        CHECK(ev(make_spec("sqeuclidean", 1, 0, 4, S, true), {1}, {3}) == doctest::Approx(2.0));
    }
    SUBCASE("Itakura-Saito closed form") {
        CHECK(ev(make_spec("itakura-saito", 1, 0.5, 2, P, false), {2}, {1}) ==
              doctest::Approx(2.0 - std::log(2.0) - 1.0).epsilon(1e-12));
    }
}

TEST_CASE("evaluation matches the quad-precision oracle and stays accurate near the diagonal") {
    std::mt19937_64 rng(11);
    for (const char* name : {"sqeuclidean", "kl", "itakura-saito"})
        for (DivergenceKind kind : {P, S})
            for (bool rooted : {false, true}) {
                const DivergenceSpec spec = make_spec(name, 3, 0.01, 0.99, kind, rooted);
                for (int i = 0; i < 2000; ++i) {
                    auto x = fixtures::uniform_point(spec, rng);
                    auto y = fixtures::uniform_point(spec, rng);
                    if (i % 2) {
                        // Tiny perturbation exercises the series branch.
                        for (std::size_t k = 0; k < 3; ++k) y[k] = x[k] * (1 + 1e-7 * (k + 1));
                    }
                    const double want = oracle::dist(spec, x, y);
                    CHECK(spec.eval(x, y) == doctest::Approx(want).epsilon(1e-9));
                }
            }
}

TEST_CASE("reflexivity, positivity and decomposability") {
    std::mt19937_64 rng(3);
    for (const char* name : {"sqeuclidean", "kl", "itakura-saito"}) {
        const DivergenceSpec spec = make_spec(name, 2, 0.1, 0.9, P, true);
        const DivergenceSpec raw = spec.with_rooted(false);
        for (int i = 0; i < 20000; ++i) {
            const auto x = fixtures::uniform_point(spec, rng);
            const auto y = fixtures::uniform_point(spec, rng);
            CHECK(spec.eval(x, x) == 0.0);
            CHECK(spec.eval(x, y) > 0.0);
            const double sum = spec.axis_raw(0, x[0], y[0]) + spec.axis_raw(1, x[1], y[1]);
            CHECK(raw.eval(x, y) == doctest::Approx(sum).epsilon(1e-12));
        }
    }
}

TEST_CASE("domain checks") {
    const DivergenceSpec spec = make_spec("kl", 2, 0.1, 0.9, S, true);
    const std::vector<double> in{0.5, 0.5}, out{0.5, 0.95};
    CHECK_THROWS_AS(spec.eval(in, out), DomainViolation);
    CHECK_NOTHROW(spec.eval(in, in));
    CHECK_FALSE(spec.in_domain(out));
    // KL is undefined at 0, so a domain touching it is rejected.
    CHECK_THROWS_AS(make_spec("kl", 1, 0.0, 1.0, P, false), Error);
    CHECK_THROWS_AS(make_spec("kl", 1, 0.5, 0.4, P, false), Error);
    CHECK_THROWS_AS(ScalarGenerator::by_name("cosine"), InvalidArgument);
}

TEST_CASE("lower bound to a box") {
    const DivergenceSpec sq = make_spec("sqeuclidean", 2, -5, 5, P, false);
    SUBCASE("inside is zero") {
        Box b{{-1, -1}, {1, 1}};
        CHECK(sq.lower_bound_to_box(std::vector<double>{0, 0}, b) == 0.0);
    }
    SUBCASE("one dimension") {
        const DivergenceSpec s1 = make_spec("sqeuclidean", 1, -5, 5, P, false);
        Box b{{2}, {3}};
        CHECK(s1.lower_bound_to_box(std::vector<double>{0}, b) == doctest::Approx(4.0));
    }
    SUBCASE("two dimensions") {
        Box b{{1, 1}, {2, 2}};
        CHECK(sq.lower_bound_to_box(std::vector<double>{0, 0}, b) == doctest::Approx(2.0));
    }
    SUBCASE("never exceeds any point of the box, and is attained") {
        std::mt19937_64 rng(5);
        for (const char* name : {"kl", "itakura-saito"})
            for (QuerySide side : {QuerySide::Right, QuerySide::Left})
                for (DivergenceKind kind : {P, S}) {
                    const DivergenceSpec spec = make_spec(name, 2, 0.1, 0.9, kind, true, side);
                    for (int i = 0; i < 300; ++i) {
                        auto a = fixtures::uniform_point(spec, rng), b = fixtures::uniform_point(spec, rng);
                        Box box{{std::min(a[0], b[0]), std::min(a[1], b[1])}, {std::max(a[0], b[0]), std::max(a[1], b[1])}};
                        const auto q = fixtures::uniform_point(spec, rng);
                        const double lb = spec.lower_bound_to_box(q, box);
                        double best = 1e300;
                        for (int j = 0; j < 200; ++j) {
                            std::vector<double> x{std::uniform_real_distribution<double>(box.lo[0], box.hi[0])(rng),
                                                  std::uniform_real_distribution<double>(box.lo[1], box.hi[1])(rng)};
                            const double dx = oracle::qdist(spec, x, q);
                            CHECK(lb <= dx * (1 + 1e-12));
                            best = std::min(best, dx);
                        }
                        std::vector<double> clamp{std::clamp(q[0], box.lo[0], box.hi[0]),
                                                  std::clamp(q[1], box.lo[1], box.hi[1])};
                        CHECK(lb == doctest::Approx(oracle::qdist(spec, clamp, q)).epsilon(1e-9));
                    }
                }
    }
}

TEST_CASE("mu estimates") {
    SUBCASE("KL symmetrized rooted on [0.1, 0.9]") {
        const double mu = estimate_mu(make_spec("kl", 2, 0.1, 0.9, S, true), 20000, 1);
        CHECK(mu >= 1.17);
        CHECK(mu <= 1.27);
    }
    SUBCASE("KL symmetrized rooted on [0.01, 0.99]") {
        const double mu = estimate_mu(make_spec("kl", 2, 0.01, 0.99, S, true), 20000, 1);
        CHECK(mu >= 2.37);
        CHECK(mu <= 2.47);
    }
    SUBCASE("metric case") {
        CHECK(estimate_mu(make_spec("sqeuclidean", 3, -2, 7, S, true), 5000, 1) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("raw divergences are refused") {
        CHECK_THROWS_AS(estimate_mu(make_spec("kl", 1, 0.1, 0.9, S, false), 5000, 1), NotRooted);
    }
    SUBCASE("too few samples are refused") {
        CHECK_THROWS_AS(estimate_mu(make_spec("kl", 1, 0.1, 0.9, S, true), 10, 1), InvalidArgument);
    }
    SUBCASE("seeded estimates are reproducible") {
        const auto spec = make_spec("itakura-saito", 2, 0.5, 1.0, P, true);
        CHECK(estimate_mu(spec, 5000, 42) == estimate_mu(spec, 5000, 42));
    }
}

TEST_CASE("c0 closed forms") {
    CHECK(compute_c0(make_spec("kl", 2, 0.1, 0.9, P, true)) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(compute_c0(make_spec("itakura-saito", 1, 0.5, 1.0, P, true)) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(compute_c0(make_spec("sqeuclidean", 3, -1, 1, S, false)) == 1.0);

    // Mixed generators: the larger per-coordinate ratio wins.
    std::vector<ScalarGenerator> gens{ScalarGenerator::kl(), ScalarGenerator::itakura_saito()};
    DivergenceSpec mixed(gens, DomainBox{{0.25, 0.5}, {1.0, 1.0}}, P, true);
    CHECK(compute_c0(mixed) == doctest::Approx(2.0).epsilon(1e-9));

    // A custom generator whose phi'' peaks inside the interval.
    auto g = ScalarGenerator::custom(
        "bump", [](double t) { return t * t + 0.5 * std::pow(t - 0.5, 4); },
        [](double t) { return 2 * t + 2 * std::pow(t - 0.5, 3); }, [](double t) { return 2 + 6 * (t - 0.5) * (t - 0.5); },
        {-10, 10});
    DivergenceSpec custom({g}, DomainBox{{0.0}, {1.0}}, P, true);
    CHECK(compute_c0(custom) == doctest::Approx(std::sqrt(3.5 / 2.0)).epsilon(1e-8));
}

TEST_CASE("one-dimensional structure: monotonicity, reverse triangle, c0 asymmetry") {
    std::mt19937_64 rng(31);
    struct Gen1 {
        const char* g;
        double lo, hi;
    };
    for (const Gen1& g : {Gen1{"kl", 0.01, 0.99}, Gen1{"itakura-saito", 0.2, 3.0}, Gen1{"sqeuclidean", -1, 1}}) {
        CAPTURE(g.g);
        std::uniform_real_distribution<double> u(g.lo, g.hi);
        const DivergenceSpec primal = make_spec(g.g, 1, g.lo, g.hi, P, false);
        const DivergenceSpec sym = make_spec(g.g, 1, g.lo, g.hi, S, false);
        const double c0 = compute_c0(primal);
        for (int i = 0; i < 5000; ++i) {
            std::array<double, 3> t{u(rng), u(rng), u(rng)};
            std::sort(t.begin(), t.end());
            const auto [a, b, c] = t;
            if (b - a < 1e-6 || c - b < 1e-6) continue;
            auto D = [&](double x, double y) { return primal.axis_raw(0, x, y); };
            auto Ds = [&](double x, double y) { return sym.axis_raw(0, x, y); };
            CHECK(D(a, b) < D(a, c));
            CHECK(D(b, c) < D(a, c));
            CHECK(D(c, b) < D(c, a));
            CHECK(D(b, a) < D(c, a));
            CHECK(D(a, b) + D(b, c) <= D(a, c) * (1 + 1e-9));
            CHECK(D(c, b) + D(b, a) <= D(c, a) * (1 + 1e-9));
            CHECK(Ds(a, b) + Ds(b, c) <= Ds(a, c) * (1 + 1e-9));
            CHECK(std::sqrt(Ds(a, b)) + std::sqrt(Ds(b, c)) <= std::sqrt(Ds(a, c)) * (1 + 1e-9));
            CHECK(std::sqrt(D(a, c) / D(c, a)) <= c0 + 1e-6);
        }
    }
}

TEST_CASE("fresh triples respect the estimated mu") {
    std::mt19937_64 rng(32);
    for (const auto& spec : {make_spec("kl", 2, 0.1, 0.9, S, true), make_spec("kl", 2, 0.1, 0.9, P, true),
                             make_spec("itakura-saito", 3, 0.5, 1.0, P, true, QuerySide::Left)}) {
        const double mu = kMuSafety * estimate_mu(spec, 20000, 1);
        for (int i = 0; i < 20000; ++i) {
            const auto a = fixtures::uniform_point(spec, rng);
            const auto b = fixtures::uniform_point(spec, rng);
            const auto q = fixtures::uniform_point(spec, rng);
            const double sep = std::min(spec.eval(a, b), spec.eval(b, a));
            if (sep < 1e-12) continue;
            CHECK(std::fabs(spec.eval(a, q) - spec.eval(b, q)) <= mu * sep * (1 + 1e-6));
            CHECK(std::fabs(spec.eval(q, a) - spec.eval(q, b)) <= mu * sep * (1 + 1e-6));
        }
    }
}
