// bann: build, query, estimate and benchmark Bregman nearest-neighbor indexes.
//
// Exit codes: 0 success, 2 usage or parse error, 3 domain violation, 4 I/O error.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bregann/ann_index.hpp"
#include "bregann/dataset.hpp"

using nlohmann::json;
using namespace bregann;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitDomain = 3;
constexpr int kExitIo = 4;

struct SpecOptions {
    std::string divergence = "sqeuclidean";
    bool symmetrized = false;
    bool primal = false;
    bool rooted = false;
    std::string side = "right";
    std::string domain;
};

void add_spec_options(CLI::App& cmd, SpecOptions& o) {
    cmd.add_option("--divergence", o.divergence, "Generator: sqeuclidean, kl or itakura-saito")
        ->check(CLI::IsMember({"sqeuclidean", "kl", "itakura-saito"}));
    auto* sym = cmd.add_flag("--symmetrized", o.symmetrized, "Use the symmetrized divergence");
    auto* pri = cmd.add_flag("--primal", o.primal, "Use the primal (asymmetric) divergence (default)");
    sym->excludes(pri);
    cmd.add_flag("--sqrt", o.rooted, "Square-root the divergence");
    cmd.add_option("--side", o.side, "Query side for asymmetric divergences")->check(CLI::IsMember({"left", "right"}));
    cmd.add_option("--domain", o.domain, R"(Domain box as JSON {"lo":[...],"hi":[...]})")->required();
}

// Parses the domain JSON; single-element bounds are broadcast to `dim` when given.
DomainBox parse_domain(const std::string& text, std::optional<std::size_t> dim) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("--domain is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("lo") || !j.contains("hi"))
        throw InvalidArgument(R"(--domain must look like {"lo":[...],"hi":[...]})");
    DomainBox box;
    try {
        box.lo = j["lo"].get<std::vector<double>>();
        box.hi = j["hi"].get<std::vector<double>>();
    } catch (const json::exception&) {
        throw InvalidArgument("--domain bounds must be arrays of numbers");
    }
    if (box.lo.size() != box.hi.size() || box.lo.empty())
        throw InvalidArgument("--domain lo and hi must have the same nonzero length");
    if (dim && box.lo.size() == 1 && *dim > 1) {
        box.lo.assign(*dim, box.lo[0]);
        box.hi.assign(*dim, box.hi[0]);
    }
    if (dim && box.lo.size() != *dim)
        throw InvalidArgument("--domain has " + std::to_string(box.lo.size()) + " coordinates, data has " +
                              std::to_string(*dim));
    return box;
}

DivergenceSpec make_spec(const SpecOptions& o, std::optional<std::size_t> dim) {
    DomainBox box = parse_domain(o.domain, dim);
    std::vector<ScalarGenerator> gens(box.lo.size(), ScalarGenerator::by_name(o.divergence));
    return DivergenceSpec(std::move(gens), std::move(box),
                          o.symmetrized ? DivergenceKind::Symmetrized : DivergenceKind::Primal, o.rooted,
                          o.side == "left" ? QuerySide::Left : QuerySide::Right);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("BANN_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw InvalidArgument("BANN_SEED must be a nonnegative integer");
        }
    }
    return 0;
}

json stats_json(const QueryStats& s) {
    return {{"cells_expanded", s.cells_expanded}, {"max_depth", s.max_depth},
            {"witness_queries", s.witness_queries}, {"witness_reused", s.witness_reused},
            {"distance_evals", s.distance_evals}, {"pruned", s.pruned},
            {"max_queue", s.max_queue}, {"seeds", s.seeds},
            {"depth_cutoffs", s.depth_cutoffs}, {"reporter_visits", s.reporter_visits},
            {"rough_distance", s.rough_distance}, {"fast_path", s.fast_path}};
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

// Runs f(i) for i in [0, count) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F f) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) f(i);
        });
    for (auto& th : pool) th.join();
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("'" + item + "' is not a number");
        }
    }
    return out;
}

PointSet random_points(const DivergenceSpec& spec, std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 0x424E4348);
    std::vector<double> coords(n * spec.dim());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < spec.dim(); ++k)
            coords[i * spec.dim() + k] = rng.uniform(spec.domain().lo[k], spec.domain().hi[k]);
    return PointSet(spec.dim(), std::move(coords));
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Least-squares fit y = a x + b; returns (a, b, r^2).
std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double a = sxx > 0 ? sxy / sxx : 0.0;
    const double r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return {a, my - a * mx, r2};
}

// ---------------------------------------------------------------------------

struct BuildOptions {
    SpecOptions spec;
    std::string input, output;
    bool no_header = false;
    bool no_fast_path = false;
    std::optional<std::uint64_t> seed;
    std::uint64_t samples = 20000;
    std::optional<double> mu, c0;
    bool timestamp = false;
};

int cmd_build(const BuildOptions& o) {
    const Dataset data = read_dataset(o.input, o.no_header ? CsvHeader::Absent : CsvHeader::Auto);
    DivergenceSpec spec = make_spec(o.spec, data.points.dim());
    IndexParams params;
    params.seed = resolve_seed(o.seed);
    params.mu_samples = o.samples;
    params.mu = o.mu;
    params.c0 = o.c0;
    params.record_timestamp = o.timestamp;
    if (o.no_fast_path) params.fast_path = false;
    const AnnIndex index = AnnIndex::build(data.points, spec, params);
    const std::vector<std::uint8_t> bytes = index.serialize();
    {
        std::ofstream f(o.output, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + o.output + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("failed writing " + o.output);
    }
    print({{"n", index.points().size()},
           {"d", index.points().dim()},
           {"mu", index.constants().mu},
           {"c0", index.constants().c0},
           {"mu_provenance", index.mu_supplied() ? "supplied" : "estimated"},
           {"depth", index.ring().depth()},
           {"stored_ids", index.ring().stored_ids()},
           {"range_entries", index.reporter().node_count()},
           {"fast_path", index.equad() != nullptr},
           {"seed", index.seed()},
           {"bytes", bytes.size()},
           {"output", o.output}});
    return 0;
}

struct QueryOptionsCli {
    std::string index, point, queries;
    double eps = 0.1;
    std::string strategy = "auto";
    bool verify = false, stats = false, no_header = false;
    unsigned threads = 1;
};

int cmd_query(const QueryOptionsCli& o) {
    const AnnIndex index = AnnIndex::load(o.index);
    const std::size_t d = index.points().dim();
    std::vector<std::vector<double>> queries;
    if (!o.point.empty()) {
        queries.push_back(parse_list(o.point));
    } else if (!o.queries.empty()) {
        const Dataset qs = read_dataset(o.queries, o.no_header ? CsvHeader::Absent : CsvHeader::Auto);
        for (std::size_t i = 0; i < qs.points.size(); ++i)
            queries.emplace_back(qs.points[i].begin(), qs.points[i].end());
    } else {
        throw InvalidArgument("query needs --point or --queries");
    }
    for (const auto& q : queries)
        if (q.size() != d)
            throw InvalidArgument("query has " + std::to_string(q.size()) + " coordinates, index has " +
                                  std::to_string(d));
    const Strategy strategy = strategy_from_string(o.strategy);
    if (!(o.eps > 0.0) || !std::isfinite(o.eps)) throw InvalidArgument("--eps must be positive");
    json warnings = json::array();
    double eps = o.eps;
    if (eps > 1.0) {
        warnings.push_back("eps " + std::to_string(o.eps) + " exceeds 1 and was clamped to 1");
        std::cerr << "warning: eps " << o.eps << " exceeds 1; clamped to 1\n";
        eps = 1.0;
    }
    if (strategy == Strategy::Fast && !index.equad())
        throw FastPathUnavailable("this index was built without the fast path");

    std::vector<json> answers(queries.size());
    parallel_for(queries.size(), o.threads, [&](std::size_t i) {
        json a = {{"query", i}};
        try {
            const QueryAnswer r = index.query(queries[i], eps, strategy);
            a["id"] = r.id;
            a["distance"] = r.distance;
            a["strategy"] = to_string(r.used);
            if (o.verify) {
                const ExactAnswer ex = exact_nn(index.points(), index.spec(), queries[i]);
                a["exact_id"] = ex.id;
                a["exact_distance"] = ex.distance;
                if (ex.distance > 0.0)
                    a["ratio"] = r.distance / ex.distance;
                else
                    a["ratio"] = r.distance == 0.0 ? json(1.0) : json(nullptr);
            }
            if (o.stats) a["stats"] = stats_json(r.stats);
        } catch (const DomainViolation& e) {
            a["id"] = nullptr;
            a["distance"] = nullptr;
            a["error"] = e.what();
        } catch (const NonFinite& e) {
            a["id"] = nullptr;
            a["distance"] = nullptr;
            a["error"] = e.what();
        }
        answers[i] = std::move(a);
    });
    print({{"eps", eps}, {"strategy", o.strategy}, {"warnings", warnings}, {"answers", answers}});
    return 0;
}

struct EstimateOptions {
    SpecOptions spec;
    std::uint64_t samples = 20000;
    std::optional<std::uint64_t> seed;
};

int cmd_estimate(const EstimateOptions& o) {
    const DivergenceSpec spec = make_spec(o.spec, std::nullopt);
    if (!spec.rooted())
        throw NotRooted("raw Bregman divergences are not mu-defective on any domain; pass --sqrt");
    const std::uint64_t seed = resolve_seed(o.seed);
    const auto t0 = std::chrono::steady_clock::now();
    const StructuralConstants c = estimate_constants(spec, o.samples, seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print({{"mu", c.mu},
           {"c0", c.c0},
           {"samples", c.sample_count},
           {"seed", c.seed},
           {"divergence", o.spec.divergence},
           {"kind", to_string(spec.kind())},
           {"rooted", spec.rooted()},
           {"side", to_string(spec.side())},
           {"seconds", secs}});
    return 0;
}

struct BenchOptions {
    std::string index;
    std::size_t queries = 100;
    std::string eps = "0.1,0.5";
    std::string strategies = "auto";
    std::string sweep;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

json bench_rows(const AnnIndex& index, const std::vector<std::vector<double>>& queries,
                const std::vector<double>& eps_list, const std::vector<Strategy>& strategies, unsigned threads) {
    json rows = json::array();
    if (queries.empty()) return rows;
    for (Strategy st : strategies) {
        if (st == Strategy::Fast && !index.equad()) continue;
        for (double eps : eps_list) {
            std::vector<double> cells(queries.size()), wit(queries.size());
            const auto t0 = std::chrono::steady_clock::now();
            parallel_for(queries.size(), threads, [&](std::size_t i) {
                const QueryAnswer r = index.query(queries[i], eps, st);
                cells[i] = static_cast<double>(r.stats.cells_expanded);
                wit[i] = static_cast<double>(r.stats.witness_queries);
            });
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            rows.push_back({{"eps", eps},
                            {"strategy", to_string(st)},
                            {"queries", queries.size()},
                            {"mean_cells_expanded", mean(cells)},
                            {"median_cells_expanded", median(cells)},
                            {"mean_witness_queries", mean(wit)},
                            {"median_witness_queries", median(wit)},
                            {"wall_ms", ms},
                            {"mean_query_us", queries.empty() ? 0.0 : 1000.0 * ms / static_cast<double>(queries.size())}});
        }
    }
    return rows;
}

int cmd_bench(const BenchOptions& o) {
    const AnnIndex index = AnnIndex::load(o.index);
    const std::uint64_t seed = resolve_seed(o.seed);
    const std::vector<double> eps_list = parse_list(o.eps);
    for (double e : eps_list)
        if (!(e > 0.0 && e <= 1.0)) throw InvalidArgument("bench eps values must lie in (0, 1]");
    std::vector<Strategy> strategies;
    {
        std::stringstream ss(o.strategies);
        std::string item;
        while (std::getline(ss, item, ',')) strategies.push_back(strategy_from_string(item));
    }
    const DivergenceSpec& spec = index.spec();
    const PointSet qpts = random_points(spec, o.queries, seed ^ 0x51554552ull);
    std::vector<std::vector<double>> queries;
    for (std::size_t i = 0; i < qpts.size(); ++i) queries.emplace_back(qpts[i].begin(), qpts[i].end());

    json out = {{"n", index.points().size()}, {"d", index.points().dim()}, {"seed", seed}};
    out["rows"] = bench_rows(index, queries, eps_list, strategies, o.threads);

    if (!o.sweep.empty()) {
        // Synthetic uniform point sets of each size, same divergence and constants.
        json sweep = json::array();
        std::vector<double> sizes = parse_list(o.sweep);
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
        for (double nd : sizes) {
            if (!(nd >= 1.0)) throw InvalidArgument("sweep sizes must be positive integers");
            const auto n = static_cast<std::size_t>(nd);
            IndexParams params;
            params.seed = seed;
            params.mu = index.constants().mu;
            params.c0 = index.constants().c0;
            params.fast_path = index.equad() != nullptr;
            const AnnIndex sub = AnnIndex::build(random_points(spec, n, seed + n), spec, params);
            json rows = bench_rows(sub, queries, eps_list, strategies, o.threads);
            for (const json& r : rows) {
                const std::string key = r["strategy"].get<std::string>() + "@" + std::to_string(r["eps"].get<double>());
                series[key].first.push_back(std::log2(static_cast<double>(n)));
                series[key].second.push_back(r["mean_cells_expanded"].get<double>());
            }
            sweep.push_back({{"n", n}, {"rows", rows}});
        }
        json fits = json::array();
        for (const auto& [key, xy] : series) {
            if (xy.first.size() < 2) continue;
            const auto lin = linear_fit(xy.first, xy.second);
            std::vector<double> lx, ly;
            for (std::size_t i = 0; i < xy.first.size(); ++i) {
                lx.push_back(std::log(xy.first[i]));
                ly.push_back(std::log(std::max(xy.second[i], 1e-12)));
            }
            const auto loglog = linear_fit(lx, ly);
            const auto at = key.find('@');
            fits.push_back({{"strategy", key.substr(0, at)},
                            {"eps", std::stod(key.substr(at + 1))},
                            {"slope_vs_log2_n", lin[0]},
                            {"intercept", lin[1]},
                            {"r2", lin[2]},
                            {"loglog_slope", loglog[0]}});
        }
        out["sweep"] = sweep;
        out["fits"] = fits;
    }
    print(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate nearest-neighbor search under decomposable Bregman divergences"};
    app.require_subcommand(1);

    BuildOptions build;
    auto* b = app.add_subcommand("build", "Build an index file from a dataset");
    b->add_option("--input,-i", build.input, "CSV or f64le (.bin/.f64) dataset")->required();
    b->add_option("--output,-o", build.output, "Index file to write")->required();
    add_spec_options(*b, build.spec);
    b->add_flag("--no-header", build.no_header, "CSV has no header row");
    b->add_flag("--no-fast-path", build.no_fast_path, "Skip the Euclidean quadtree");
    b->add_option("--seed", build.seed, "Seed (falls back to BANN_SEED, then 0)");
    b->add_option("--samples", build.samples, "Random triples for the mu estimate")->check(CLI::Range(1000ull, 1000000000ull));
    b->add_option("--mu", build.mu, "Supply mu instead of estimating it");
    b->add_option("--c0", build.c0, "Supply c0 instead of computing it");
    b->add_flag("--timestamp", build.timestamp, "Record the build time in the header");

    QueryOptionsCli query;
    auto* q = app.add_subcommand("query", "Query an index");
    q->add_option("--index", query.index, "Index file")->required();
    auto* qp = q->add_option("--point", query.point, "Comma-separated query point");
    auto* qf = q->add_option("--queries", query.queries, "Dataset of query points");
    qp->excludes(qf);
    q->add_option("--eps", query.eps, "Approximation parameter in (0, 1]");
    q->add_option("--strategy", query.strategy, "generic, fast or auto")->check(CLI::IsMember({"generic", "fast", "auto"}));
    q->add_flag("--verify", query.verify, "Report the ratio to the exact nearest neighbor");
    q->add_flag("--stats", query.stats, "Report search statistics");
    q->add_flag("--no-header", query.no_header, "Query CSV has no header row");
    q->add_option("--threads", query.threads, "Worker threads for batches");

    EstimateOptions est;
    auto* e = app.add_subcommand("estimate", "Estimate the structural constants mu and c0");
    add_spec_options(*e, est.spec);
    e->add_option("--samples", est.samples, "Random triples")->check(CLI::Range(1000ull, 1000000000ull));
    e->add_option("--seed", est.seed, "Seed (falls back to BANN_SEED, then 0)");

    BenchOptions bench;
    auto* bn = app.add_subcommand("bench", "Measure search effort on random queries");
    bn->add_option("--index", bench.index, "Index file")->required();
    bn->add_option("--queries", bench.queries, "Number of random queries");
    bn->add_option("--eps", bench.eps, "Comma-separated eps values");
    bn->add_option("--strategy", bench.strategies, "Comma-separated strategies");
    bn->add_option("--sweep", bench.sweep, "Comma-separated sizes for a synthetic n sweep");
    bn->add_option("--seed", bench.seed, "Seed (falls back to BANN_SEED, then 0)");
    bn->add_option("--threads", bench.threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (*b) return cmd_build(build);
        if (*q) return cmd_query(query);
        if (*e) return cmd_estimate(est);
        if (*bn) return cmd_bench(bench);
    } catch (const DomainViolation& err) {
        json j = {{"error", "domain_violation"}, {"message", err.what()}};
        if (!err.rows().empty()) j["rows"] = err.rows();
        std::cerr << j.dump() << "\n";
        return kExitDomain;
    } catch (const IoError& err) {
        std::cerr << json({{"error", "io"}, {"message", err.what()}}).dump() << "\n";
        return kExitIo;
    } catch (const Error& err) {
        std::cerr << json({{"error", "invalid_input"}, {"message", err.what()}}).dump() << "\n";
        return kExitParse;
    }
    return kExitParse;
}
