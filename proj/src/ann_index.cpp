#include "bregann/ann_index.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

#include "bregann/bytes.hpp"

namespace bregann {

using nlohmann::json;

const char* to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Generic: return "generic";
        case Strategy::Fast: return "fast";
        case Strategy::Auto: return "auto";
    }
    return "auto";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "generic") return Strategy::Generic;
    if (s == "fast") return Strategy::Fast;
    if (s == "auto") return Strategy::Auto;
    throw InvalidArgument("unknown strategy '" + s + "' (expected generic, fast or auto)");
}

ExactAnswer exact_nn(const PointSet& points, const DivergenceSpec& spec, std::span<const double> q) {
    spec.check_point(q, "query");
    if (points.empty()) throw EmptyInput("exact_nn needs at least one point");
    ExactAnswer best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = spec.query_distance(points[i], q);
        if (d < best.distance) best = {static_cast<PointId>(i), d};
    }
    return best;
}

void check_points_in_domain(const PointSet& points, const DivergenceSpec& spec) {
    if (points.dim() != spec.dim())
        throw DomainViolation("points have " + std::to_string(points.dim()) + " coordinates, the divergence has " +
                              std::to_string(spec.dim()));
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!spec.in_domain(points[i])) bad.push_back(i);
    if (!bad.empty()) {
        std::string msg = std::to_string(bad.size()) + " point(s) outside the domain, first row " +
                          std::to_string(bad.front());
        throw DomainViolation(msg, std::move(bad));
    }
}

AnnIndex AnnIndex::build(PointSet points, DivergenceSpec spec, const IndexParams& params) {
    if (points.empty()) throw EmptyInput("an index needs at least one point");
    if (points.size() > std::numeric_limits<PointId>::max() - 1) throw InvalidArgument("too many points");
    check_points_in_domain(points, spec);
    const bool fast = params.fast_path.value_or(spec.rooted());
    if (fast && !spec.rooted()) throw NotRooted("the fast path needs a square-rooted divergence");

    AnnIndex index;
    index.seed_ = params.seed;
    if (params.mu) {
        if (!(*params.mu >= 1.0)) throw InvalidArgument("supplied mu must be at least 1");
        index.constants_.mu = *params.mu;
        index.mu_supplied_ = true;
    } else {
        index.constants_.mu = estimate_mu(spec.with_rooted(true), params.mu_samples, params.seed);
        index.constants_.sample_count = params.mu_samples;
    }
    if (params.c0) {
        if (!(*params.c0 >= 1.0)) throw InvalidArgument("supplied c0 must be at least 1");
        index.constants_.c0 = *params.c0;
        index.c0_supplied_ = true;
    } else {
        index.constants_.c0 = compute_c0(spec);
    }
    index.constants_.seed = params.seed;

    RingTreeParams rp = params.ring;
    if (rp.seed == 0) rp.seed = params.seed;
    index.ring_ = RingTree::build(points, spec, rp, index.constants_.mu);
    index.reporter_ = RangeReporter::build(points);
    if (fast) index.equad_ = CompressedQuadtree::build(points, spec, index.constants_);
    if (params.record_timestamp) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        index.build_time_ = buf;
    }
    index.spec_.emplace(std::move(spec));
    index.points_ = std::move(points);
    return index;
}

QueryAnswer AnnIndex::query(std::span<const double> q, double eps, Strategy strategy,
                            const QueryOptions& options) const {
    Strategy used = strategy;
    if (strategy == Strategy::Auto) used = equad_ ? Strategy::Fast : Strategy::Generic;
    if (used == Strategy::Fast && !equad_)
        throw FastPathUnavailable("this index was built without the Euclidean quadtree");
    NnResult r = used == Strategy::Fast ? query_fast(FastContext{context(), *equad_}, q, eps, options.observer)
                                        : query_approx_nn(context(), q, eps, options);
    QueryAnswer a;
    a.id = r.id;
    a.distance = r.distance;
    a.stats = r.stats;
    a.used = used;
    a.eps_clamped = r.eps_clamped;
    return a;
}

// ---------------------------------------------------------------------------
// File format: "BANN", u16 version, u32 header length, JSON header, n*d f64
// points, then tagged sections (4-byte tag, u64 length, payload). All integers
// and floats are little-endian.

namespace {

constexpr char kMagic[4] = {'B', 'A', 'N', 'N'};

void put_section(std::vector<std::uint8_t>& out, const char tag[4], const std::vector<std::uint8_t>& payload) {
    out.insert(out.end(), tag, tag + 4);
    bytes::put_u64(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
}

}  // namespace

std::vector<std::uint8_t> AnnIndex::serialize() const {
    const DivergenceSpec& sp = *spec_;
    json gens = json::array();
    for (const ScalarGenerator& g : sp.generators()) {
        if (g.kind() == ScalarGenerator::Kind::Custom)
            throw InvalidArgument("indexes over custom generators cannot be serialized");
        gens.push_back(g.name());
    }
    json header;
    header["format"] = "bann";
    header["version"] = kFormatVersion;
    header["spec"] = {{"generators", gens},
                      {"kind", to_string(sp.kind())},
                      {"rooted", sp.rooted()},
                      {"side", to_string(sp.side())}};
    header["domain"] = {{"lo", sp.domain().lo}, {"hi", sp.domain().hi}};
    header["constants"] = {{"mu", constants_.mu},
                           {"c0", constants_.c0},
                           {"sample_count", constants_.sample_count},
                           {"seed", constants_.seed},
                           {"mu_provenance", mu_supplied_ ? "supplied" : "estimated"},
                           {"c0_provenance", c0_supplied_ ? "supplied" : "estimated"}};
    header["seed"] = seed_;
    header["n"] = points_.size();
    header["d"] = points_.dim();
    const RingTreeParams& rp = ring_.params();
    header["ring"] = {{"t", rp.t},
                      {"split_constant", rp.split_constant},
                      {"seed", rp.seed},
                      {"max_retries", rp.max_retries},
                      {"leaf_size", rp.leaf_size},
                      {"depth", ring_.depth()},
                      {"stored_ids", ring_.stored_ids()}};
    header["fast_path"] = equad_.has_value();
    if (build_time_) header["build_time"] = *build_time_;
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    bytes::put_u16(out, kFormatVersion);
    bytes::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (double v : points_.raw()) bytes::put_f64(out, v);

    std::vector<std::uint8_t> payload;
    ring_.serialize(payload);
    put_section(out, "RING", payload);
    payload.clear();
    reporter_.serialize(payload);
    put_section(out, "RRPT", payload);
    if (equad_) {
        payload.clear();
        equad_->serialize(payload);
        put_section(out, "EQDT", payload);
    }
    return out;
}

AnnIndex AnnIndex::deserialize(std::span<const std::uint8_t> data) {
    const std::uint8_t* p = data.data();
    const std::uint8_t* end = data.data() + data.size();
    bytes::Reader in(p, end);
    in.need(4);
    if (!std::equal(kMagic, kMagic + 4, p)) throw FormatError("not an index file (bad magic)");
    p += 4;
    const std::uint16_t version = in.u16();
    if (version != kFormatVersion) throw FormatError("unsupported index format version " + std::to_string(version));
    const std::uint32_t header_len = in.u32();
    in.need(header_len);
    json header;
    try {
        header = json::parse(p, p + header_len);
    } catch (const json::exception& e) {
        throw FormatError(std::string("index header is not valid JSON: ") + e.what());
    }
    p += header_len;

    AnnIndex index;
    try {
        std::vector<ScalarGenerator> gens;
        for (const auto& name : header.at("spec").at("generators")) gens.push_back(ScalarGenerator::by_name(name));
        DomainBox dom{header.at("domain").at("lo").get<std::vector<double>>(),
                      header.at("domain").at("hi").get<std::vector<double>>()};
        const std::string kind = header.at("spec").at("kind");
        const std::string side = header.at("spec").at("side");
        index.spec_.emplace(std::move(gens), std::move(dom),
                            kind == "primal" ? DivergenceKind::Primal : DivergenceKind::Symmetrized,
                            header.at("spec").at("rooted").get<bool>(),
                            side == "left" ? QuerySide::Left : QuerySide::Right);
        const json& c = header.at("constants");
        index.constants_.mu = c.at("mu");
        index.constants_.c0 = c.at("c0");
        index.constants_.sample_count = c.at("sample_count");
        index.constants_.seed = c.at("seed");
        index.mu_supplied_ = c.at("mu_provenance") == "supplied";
        index.c0_supplied_ = c.at("c0_provenance") == "supplied";
        index.seed_ = header.at("seed");
        if (header.contains("build_time")) index.build_time_ = header["build_time"].get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("index header is incomplete: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("index header is inconsistent: ") + e.what());
    }
    const std::uint64_t n = header.value("n", std::uint64_t{0});
    const std::uint64_t d = header.value("d", std::uint64_t{0});
    if (n == 0 || d != index.spec_->dim()) throw FormatError("index header has an invalid point count or dimension");
    if (n > static_cast<std::uint64_t>(end - p) / (8 * d)) throw FormatError("truncated point data");
    std::vector<double> coords(n * d);
    for (double& v : coords) v = in.f64();
    index.points_ = PointSet(d, std::move(coords));

    bool have_ring = false, have_reporter = false;
    while (p != end) {
        in.need(12);
        const std::string tag(reinterpret_cast<const char*>(p), 4);
        p += 4;
        const std::uint64_t len = in.u64();
        in.need(len);
        const std::uint8_t* section_end = p + len;
        if (tag == "RING") {
            index.ring_ = RingTree::deserialize(p, section_end, n);
            have_ring = true;
        } else if (tag == "RRPT") {
            index.reporter_ = RangeReporter::deserialize(p, section_end, index.points_);
            have_reporter = true;
        } else if (tag == "EQDT") {
            index.equad_ = CompressedQuadtree::deserialize(p, section_end, index.points_);
        }
        p = section_end;  // unknown sections are skipped
    }
    if (!have_ring || !have_reporter) throw FormatError("index file lacks a required section");
    if (header.value("fast_path", false) != index.equad_.has_value()) throw FormatError("fast path section mismatch");
    return index;
}

void AnnIndex::save(const std::string& path) const {
    const std::vector<std::uint8_t> data = serialize();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError("failed writing " + path);
}

AnnIndex AnnIndex::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(data);
}

}  // namespace bregann
