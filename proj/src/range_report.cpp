#include "bregann/range_report.hpp"

#include <algorithm>

#include "bregann/bytes.hpp"

namespace bregann {

RangeReporter RangeReporter::build(const PointSet& points) {
    if (points.empty()) throw EmptyInput("range reporter needs at least one point");
    RangeReporter rr;
    rr.dim_ = points.dim();
    rr.n_ = points.size();
    rr.coords_ = points.raw();
    std::vector<PointId> ids(rr.n_);
    for (std::size_t i = 0; i < rr.n_; ++i) ids[i] = static_cast<PointId>(i);
    std::sort(ids.begin(), ids.end(), [&](PointId a, PointId b) {
        const double ka = rr.coords_[a * rr.dim_], kb = rr.coords_[b * rr.dim_];
        return ka < kb || (ka == kb && a < b);
    });
    rr.build_level(0, std::move(ids));
    return rr;
}

std::int32_t RangeReporter::build_level(std::uint32_t dim, std::vector<PointId> ids_sorted) {
    const auto index = static_cast<std::int32_t>(levels_.size());
    levels_.emplace_back();
    const std::size_t m = ids_sorted.size();
    {
        Level& L = levels_.back();
        L.dim = dim;
        L.keys.resize(m);
        for (std::size_t i = 0; i < m; ++i) L.keys[i] = coords_[ids_sorted[i] * dim_ + dim];
    }

    if (dim + 1 == dim_) {
        Level& L = levels_[index];
        // Bottom-up range-min tree: leaves at [m, 2m), parents at i / 2.
        L.min_ids.assign(2 * m, kNoPoint);
        for (std::size_t i = 0; i < m; ++i) L.min_ids[m + i] = ids_sorted[i];
        for (std::size_t i = m - 1; i >= 1; --i) L.min_ids[i] = std::min(L.min_ids[2 * i], L.min_ids[2 * i + 1]);
        L.ids = std::move(ids_sorted);
        return index;
    }

    levels_[index].assoc.assign(4 * m, -1);
    // build_level below grows levels_, so the level is always re-fetched by index.
    std::vector<PointId> ids = std::move(ids_sorted);
    struct Job {
        std::size_t node, l, r;
    };
    // Merge sort by the next coordinate, bottom-up over the implicit tree.
    const std::uint32_t next = dim + 1;
    auto less_next = [&](PointId a, PointId b) {
        const double ka = coords_[a * dim_ + next], kb = coords_[b * dim_ + next];
        return ka < kb || (ka == kb && a < b);
    };
    std::vector<std::pair<Job, bool>> stack{{{1, 0, m}, false}};
    std::vector<std::vector<PointId>> sorted_of(4 * m);
    while (!stack.empty()) {
        auto [job, expanded] = stack.back();
        stack.pop_back();
        if (job.r - job.l == 1) {
            sorted_of[job.node] = {ids[job.l]};
            continue;
        }
        const std::size_t mid = (job.l + job.r) / 2;
        if (!expanded) {
            stack.push_back({job, true});
            stack.push_back({{2 * job.node, job.l, mid}, false});
            stack.push_back({{2 * job.node + 1, mid, job.r}, false});
            continue;
        }
        std::vector<PointId>& a = sorted_of[2 * job.node];
        std::vector<PointId>& b = sorted_of[2 * job.node + 1];
        std::vector<PointId> merged(a.size() + b.size());
        std::merge(a.begin(), a.end(), b.begin(), b.end(), merged.begin(), less_next);
        std::vector<PointId>().swap(a);
        std::vector<PointId>().swap(b);
        const std::int32_t child = build_level(next, merged);
        levels_[index].assoc[job.node] = child;
        if (job.node != 1) sorted_of[job.node] = std::move(merged);
    }
    levels_[index].ids = std::move(ids);
    return index;
}

std::size_t RangeReporter::node_count() const noexcept {
    std::size_t total = 0;
    for (const Level& L : levels_) total += L.ids.size();
    return total;
}

std::optional<PointId> RangeReporter::witness_in_box(const Box& box, std::uint64_t* visits) const {
    if (levels_.empty() || box.dim() != dim_ || box.empty()) return std::nullopt;
    std::uint64_t local = 0;
    const PointId id = query_level(0, box, local);
    if (visits) *visits += local;
    if (id == kNoPoint) return std::nullopt;
    return id;
}

PointId RangeReporter::query_level(std::int32_t li, const Box& box, std::uint64_t& visits) const {
    const Level& L = levels_[li];
    const double lo = box.lo[L.dim], hi = box.hi[L.dim];
    const std::size_t ql = std::lower_bound(L.keys.begin(), L.keys.end(), lo) - L.keys.begin();
    const std::size_t qr = (box.is_open_hi(L.dim) ? std::lower_bound(L.keys.begin(), L.keys.end(), hi)
                                                  : std::upper_bound(L.keys.begin(), L.keys.end(), hi)) -
                           L.keys.begin();
    ++visits;
    if (ql >= qr) return kNoPoint;
    if (L.dim + 1 == dim_) return min_in_range(L, ql, qr, visits);
    return query_nodes(L, 1, 0, L.ids.size(), ql, qr, box, visits);
}

PointId RangeReporter::query_nodes(const Level& L, std::size_t node, std::size_t l, std::size_t r, std::size_t ql,
                                   std::size_t qr, const Box& box, std::uint64_t& visits) const {
    ++visits;
    if (qr <= l || r <= ql) return kNoPoint;
    if (ql <= l && r <= qr) {
        if (r - l == 1) {
            const PointId id = L.ids[l];
            const std::span<const double> p{coords_.data() + std::size_t{id} * dim_, dim_};
            return box.contains(p) ? id : kNoPoint;
        }
        if (L.assoc[node] >= 0) return query_level(L.assoc[node], box, visits);
    }
    const std::size_t mid = (l + r) / 2;
    return std::min(query_nodes(L, 2 * node, l, mid, ql, qr, box, visits),
                    query_nodes(L, 2 * node + 1, mid, r, ql, qr, box, visits));
}

PointId RangeReporter::min_in_range(const Level& L, std::size_t ql, std::size_t qr, std::uint64_t& visits) const {
    PointId best = kNoPoint;
    const std::size_t m = L.ids.size();
    for (std::size_t l = ql + m, r = qr + m; l < r; l >>= 1, r >>= 1) {
        ++visits;
        if (l & 1) best = std::min(best, L.min_ids[l++]);
        if (r & 1) best = std::min(best, L.min_ids[--r]);
    }
    return best;
}

void RangeReporter::serialize(std::vector<std::uint8_t>& out) const {
    bytes::put_u64(out, dim_);
    bytes::put_u64(out, n_);
    bytes::put_u64(out, levels_.size());
    for (const Level& L : levels_) {
        bytes::put_u32(out, L.dim);
        bytes::put_array(out, L.keys);
        bytes::put_array(out, L.ids);
        bytes::put_array(out, L.assoc);
        bytes::put_array(out, L.min_ids);
    }
}

RangeReporter RangeReporter::deserialize(const std::uint8_t*& p, const std::uint8_t* end, const PointSet& points) {
    bytes::Reader in(p, end);
    RangeReporter rr;
    rr.dim_ = in.u64();
    rr.n_ = in.u64();
    if (rr.dim_ != points.dim() || rr.n_ != points.size()) throw FormatError("range reporter does not match points");
    rr.coords_ = points.raw();
    const std::uint64_t count = in.u64();
    if (count > static_cast<std::uint64_t>(end - p)) throw FormatError("range reporter level count is corrupt");
    rr.levels_.resize(count);
    for (Level& L : rr.levels_) {
        L.dim = in.u32();
        L.keys = in.array<double>();
        L.ids = in.array<PointId>();
        L.assoc = in.array<std::int32_t>();
        L.min_ids = in.array<PointId>();
        const bool last = L.dim + 1 == rr.dim_;
        if (L.dim >= rr.dim_ || L.keys.size() != L.ids.size() ||
            (last ? L.min_ids.size() != 2 * L.keys.size() : L.assoc.size() != 4 * L.keys.size()))
            throw FormatError("range reporter level is corrupt");
        for (PointId id : L.ids)
            if (id >= rr.n_) throw FormatError("range reporter id out of range");
        for (std::int32_t a : L.assoc)
            if (a >= static_cast<std::int64_t>(count)) throw FormatError("range reporter link out of range");
    }
    return rr;
}

}  // namespace bregann
