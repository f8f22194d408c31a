#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bregann/euclid_quadtree.hpp"
#include "bregann/quadtree_search.hpp"

namespace bregann {

struct IndexParams {
    RingTreeParams ring;  // ring.seed of 0 inherits `seed`
    // Build the Euclidean quadtree. Unset means "when the divergence is rooted";
    // an explicit true on a raw divergence is an error.
    std::optional<bool> fast_path;
    std::optional<double> mu;  // supplied constants skip estimation
    std::optional<double> c0;
    std::uint64_t mu_samples = 20000;
    std::uint64_t seed = 0;
    // Off by default so that equal seeds give byte-identical index files.
    bool record_timestamp = false;
};

enum class Strategy { Generic, Fast, Auto };

const char* to_string(Strategy s) noexcept;
Strategy strategy_from_string(const std::string& s);

struct QueryAnswer {
    PointId id = 0;
    double distance = 0.0;
    QueryStats stats;
    Strategy used = Strategy::Generic;
    bool eps_clamped = false;
};

struct ExactAnswer {
    PointId id = 0;
    double distance = 0.0;
};

// Linear scan under the divergence's query side; ties go to the smallest id.
ExactAnswer exact_nn(const PointSet& points, const DivergenceSpec& spec, std::span<const double> q);

class AnnIndex {
public:
    static constexpr std::uint16_t kFormatVersion = 1;

    static AnnIndex build(PointSet points, DivergenceSpec spec, const IndexParams& params = {});

    QueryAnswer query(std::span<const double> q, double eps, Strategy strategy = Strategy::Auto,
                      const QueryOptions& options = {}) const;

    const DivergenceSpec& spec() const noexcept { return *spec_; }
    const StructuralConstants& constants() const noexcept { return constants_; }
    const PointSet& points() const noexcept { return points_; }
    const RingTree& ring() const noexcept { return ring_; }
    const RangeReporter& reporter() const noexcept { return reporter_; }
    const CompressedQuadtree* equad() const noexcept { return equad_ ? &*equad_ : nullptr; }
    bool mu_supplied() const noexcept { return mu_supplied_; }
    bool c0_supplied() const noexcept { return c0_supplied_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::vector<std::uint8_t> serialize() const;
    static AnnIndex deserialize(std::span<const std::uint8_t> data);
    void save(const std::string& path) const;
    static AnnIndex load(const std::string& path);

private:
    AnnIndex() = default;
    SearchContext context() const { return {*spec_, points_, ring_, reporter_, constants_}; }

    std::optional<DivergenceSpec> spec_;
    StructuralConstants constants_;
    PointSet points_;
    RingTree ring_;
    RangeReporter reporter_;
    std::optional<CompressedQuadtree> equad_;
    bool mu_supplied_ = false;
    bool c0_supplied_ = false;
    std::uint64_t seed_ = 0;
    std::optional<std::string> build_time_;
};

// Throws DomainViolation listing every row outside the divergence's domain.
void check_points_in_domain(const PointSet& points, const DivergenceSpec& spec);

}  // namespace bregann
