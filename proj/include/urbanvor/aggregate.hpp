#pragma once

// From dense projected traces to generator sites, per-cell and per-bin
// statistics, dwell times and mobility groups.

#include "urbanvor/error.hpp"
#include "urbanvor/geometry/voronoi.hpp"
#include "urbanvor/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace urbanvor::aggregate {

using geometry::BoundingBox;
using geometry::GeneratorSite;
using geometry::Point2;
using geometry::SiteId;
using ingest::ProjectedRecord;

struct ThinningConfig
{
    double min_separation = 5.0;
};

struct Thinning
{
    std::vector<GeneratorSite> sites; ///< site_id = founding order
    std::vector<SiteId> assignment;   ///< nearest site per input record
};

namespace detail {

class SpatialHash
{
public:
    explicit SpatialHash(double cell) : m_cell(cell) {}

    std::pair<std::int64_t, std::int64_t> key_of(Point2 p) const
    {
        return {static_cast<std::int64_t>(std::floor(p.x / m_cell)), static_cast<std::int64_t>(std::floor(p.y / m_cell))};
    }

    void insert(Point2 p, std::uint32_t index)
    {
        const auto [ix, iy] = key_of(p);
        m_buckets[pack(ix, iy)].push_back(index);
    }

    template <class F>
    void for_each_near(Point2 p, F&& f) const
    {
        const auto [ix, iy] = key_of(p);
        for(std::int64_t dx = -1; dx <= 1; ++dx)
            for(std::int64_t dy = -1; dy <= 1; ++dy)
            {
                const auto it = m_buckets.find(pack(ix + dx, iy + dy));
                if(it == m_buckets.end())
                    continue;
                for(const std::uint32_t i : it->second)
                    if(f(i))
                        return;
            }
    }

private:
    static std::uint64_t pack(std::int64_t ix, std::int64_t iy)
    {
        return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint32_t>(iy);
    }

    double m_cell;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> m_buckets;
};

} // namespace detail

/// Greedy decimation in input order: a point founds a site unless an
/// existing site is closer than min_separation.
inline std::vector<GeneratorSite> thin_points(std::span<const Point2> points, const ThinningConfig& cfg)
{
    if(!(cfg.min_separation > 0.0) || !std::isfinite(cfg.min_separation))
        throw Error(Errc::InvalidArgument, "min_separation must be positive");
    if(points.empty())
        throw Error(Errc::EmptyInput, "no records to thin");
    const double sep2 = cfg.min_separation * cfg.min_separation;
    detail::SpatialHash hash(cfg.min_separation);
    std::vector<GeneratorSite> sites;
    for(const Point2 p : points)
    {
        if(!geometry::is_finite(p))
            throw Error(Errc::InvalidArgument, "non-finite position");
        bool blocked = false;
        hash.for_each_near(p, [&](std::uint32_t i) {
            blocked = geometry::distance_sq(p, sites[i].position) < sep2;
            return blocked;
        });
        if(blocked)
            continue;
        hash.insert(p, static_cast<std::uint32_t>(sites.size()));
        sites.push_back({static_cast<SiteId>(sites.size()), p});
    }
    return sites;
}

template <class Record>
std::vector<Point2> positions(std::span<const Record> records)
{
    std::vector<Point2> out;
    out.reserve(records.size());
    for(const auto& r : records)
        out.push_back(r.position);
    return out;
}

inline std::vector<SiteId> assign(std::span<const Point2> points, const geometry::SiteLocator& locator)
{
    std::vector<SiteId> out;
    out.reserve(points.size());
    for(const Point2 p : points)
        out.push_back(locator.nearest(p));
    return out;
}

inline Thinning thin_to_sites(std::span<const ProjectedRecord> records, const ThinningConfig& cfg = {})
{
    const std::vector<Point2> pts = positions(records);
    Thinning t;
    t.sites = thin_points(pts, cfg);
    t.assignment = assign(pts, geometry::SiteLocator(t.sites));
    return t;
}

// ---------------------------------------------------------------------------
// Per-cell statistics

struct Summary
{
    std::size_t count = 0;
    double mean = 0, median = 0, min = 0, max = 0;
};

/// Mean sums in the given order; median averages the middle pair for even
/// counts.
inline Summary summarize(std::vector<double> values)
{
    Summary s;
    s.count = values.size();
    if(values.empty())
        return s;
    double sum = 0;
    for(const double v : values)
        sum += v;
    s.mean = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    // Guard against the mean escaping [min, max] by rounding.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

struct CellAggregate
{
    SiteId site_id = 0;
    std::string metric;
    std::size_t count = 0;
    double mean = 0, median = 0, min = 0, max = 0;
    std::optional<int> mode; ///< valence only; lowest class wins ties
};

inline int lowest_mode(const std::vector<double>& values)
{
    std::array<std::size_t, 6> hist{};
    for(const double v : values)
        ++hist[static_cast<std::size_t>(v)];
    int best = 1;
    for(int k = 2; k <= 5; ++k)
        if(hist[k] > hist[best])
            best = k;
    return best;
}

inline void require_metric(const std::string& metric)
{
    if(!ingest::is_metric(metric))
        throw Error(Errc::UnknownMetric, "unknown metric '" + metric + "'");
}

/// Per-cell statistics over present values. Cells without values are
/// omitted; output is ordered by site_id. Assignments referring to merged
/// duplicate sites resolve to the surviving cell.
template <class Record>
std::vector<CellAggregate> aggregate_by_cell(const geometry::VoronoiDiagram& diagram, std::span<const SiteId> assignment,
                                             std::span<const Record> records, const std::string& metric)
{
    require_metric(metric);
    if(assignment.size() != records.size())
        throw Error(Errc::InvalidArgument, "assignment does not cover all records");
    std::map<SiteId, std::vector<double>> groups;
    for(std::size_t i = 0; i < records.size(); ++i)
    {
        const auto v = ingest::metric_value(records[i], metric);
        if(!v)
            continue;
        groups[diagram.cell(assignment[i]).site_id].push_back(*v);
    }
    std::vector<CellAggregate> out;
    out.reserve(groups.size());
    for(auto& [id, values] : groups)
    {
        CellAggregate a;
        a.site_id = id;
        a.metric = metric;
        if(metric == "valence")
            a.mode = lowest_mode(values);
        const Summary s = summarize(std::move(values));
        a.count = s.count;
        a.mean = s.mean;
        a.median = s.median;
        a.min = s.min;
        a.max = s.max;
        out.push_back(std::move(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid baseline

struct GridSpec
{
    Point2 origin;
    double cell_size = 1.0;
    std::size_t cols = 0;
    std::size_t rows = 0;

    BoundingBox extent() const
    {
        return {origin, {origin.x + static_cast<double>(cols) * cell_size, origin.y + static_cast<double>(rows) * cell_size}};
    }
};

/// Smallest grid anchored at bbox.min whose half-open bins also cover the
/// max edge.
inline GridSpec make_grid_spec(const BoundingBox& bbox, double cell_size)
{
    if(!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw Error(Errc::InvalidArgument, "grid cell size must be positive");
    geometry::require_valid(bbox);
    GridSpec g;
    g.origin = bbox.min;
    g.cell_size = cell_size;
    g.cols = static_cast<std::size_t>(std::floor(bbox.width() / cell_size)) + 1;
    g.rows = static_cast<std::size_t>(std::floor(bbox.height() / cell_size)) + 1;
    return g;
}

/// Bin index with [origin + k·size, origin + (k+1)·size) evaluated exactly as
/// written, so a value on a computed edge goes to the higher bin.
inline std::int64_t bin_index(double v, double origin, double size)
{
    auto k = static_cast<std::int64_t>(std::floor((v - origin) / size));
    while(origin + static_cast<double>(k + 1) * size <= v)
        ++k;
    while(origin + static_cast<double>(k) * size > v)
        --k;
    return k;
}

struct GridBin
{
    std::size_t col = 0;
    std::size_t row = 0;
    std::size_t count = 0;       ///< records in the bin
    std::size_t value_count = 0; ///< records carrying the metric
    double mean = 0;
    double median = 0;
};

/// Bins all records, ordered by (row, col); only bins holding at least one
/// record are returned. Throws SpecTooSmall if any record falls outside.
template <class Record>
std::vector<GridBin> grid_bin(std::span<const Record> records, const GridSpec& spec, const std::string& metric)
{
    require_metric(metric);
    if(!(spec.cell_size > 0.0))
        throw Error(Errc::InvalidArgument, "grid cell size must be positive");
    struct Acc
    {
        std::size_t count = 0;
        std::vector<double> values;
    };
    std::map<std::pair<std::size_t, std::size_t>, Acc> bins;
    for(const auto& r : records)
    {
        const std::int64_t c = bin_index(r.position.x, spec.origin.x, spec.cell_size);
        const std::int64_t k = bin_index(r.position.y, spec.origin.y, spec.cell_size);
        if(c < 0 || k < 0 || c >= static_cast<std::int64_t>(spec.cols) || k >= static_cast<std::int64_t>(spec.rows))
            throw Error(Errc::SpecTooSmall, "grid does not cover record at (" + std::to_string(r.position.x) + ", "
                                                + std::to_string(r.position.y) + ")");
        Acc& a = bins[{static_cast<std::size_t>(k), static_cast<std::size_t>(c)}];
        ++a.count;
        if(const auto v = ingest::metric_value(r, metric))
            a.values.push_back(*v);
    }
    std::vector<GridBin> out;
    out.reserve(bins.size());
    for(auto& [key, acc] : bins)
    {
        GridBin b;
        b.row = key.first;
        b.col = key.second;
        b.count = acc.count;
        const Summary s = summarize(std::move(acc.values));
        b.value_count = s.count;
        b.mean = s.mean;
        b.median = s.median;
        out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dwell time and mobility groups

/// Milliseconds per site. Each interval is credited to the earlier sample's
/// cell, so the total equals last minus first timestamp.
using DwellTable = std::map<SiteId, std::int64_t>;

template <class Record>
DwellTable dwell_time(std::span<const Record> trace, std::span<const SiteId> cells)
{
    if(trace.size() != cells.size())
        throw Error(Errc::InvalidArgument, "cell list does not match trace");
    DwellTable out;
    for(std::size_t i = 0; i + 1 < trace.size(); ++i)
    {
        const std::int64_t dt = trace[i + 1].timestamp_ms - trace[i].timestamp_ms;
        if(dt < 0)
            throw Error(Errc::InvalidArgument, "trace is not time-monotone");
        out[cells[i]] += dt;
    }
    return out;
}

inline DwellTable dwell_time(std::span<const ProjectedRecord> trace, const geometry::SiteLocator& locator)
{
    std::vector<SiteId> cells;
    cells.reserve(trace.size());
    for(const auto& r : trace)
        cells.push_back(locator.nearest(r.position));
    return dwell_time(trace, std::span<const SiteId>(cells));
}

struct MobilityGroup
{
    SiteId site_id = 0; ///< the dominant cell
    std::vector<std::string> members;
    std::vector<double> dwell_seconds; ///< aligned with members
};

struct Grouping
{
    std::vector<MobilityGroup> groups; ///< ordered by site_id
    std::vector<std::string> too_short; ///< users with fewer than two samples, excluded
};

/// Assigns each user to their argmax-dwell cell, lowest site_id on ties.
/// `assignment` is aligned with dataset.records().
inline Grouping group_users(const ingest::Dataset& dataset, std::span<const SiteId> assignment)
{
    if(assignment.size() != dataset.size())
        throw Error(Errc::InvalidArgument, "assignment does not cover the dataset");
    std::map<SiteId, MobilityGroup> groups;
    Grouping out;
    for(const auto& t : dataset.traces())
    {
        if(t.end - t.begin < 2)
        {
            out.too_short.push_back(t.user_id);
            continue;
        }
        const DwellTable dwell = dwell_time(dataset.trace(t), assignment.subspan(t.begin, t.end - t.begin));
        // std::map iterates in ascending site_id, so strict > keeps the lowest.
        SiteId best = dwell.begin()->first;
        std::int64_t best_ms = -1;
        for(const auto& [id, ms] : dwell)
            if(ms > best_ms)
            {
                best = id;
                best_ms = ms;
            }
        MobilityGroup& g = groups[best];
        g.site_id = best;
        g.members.push_back(t.user_id);
        g.dwell_seconds.push_back(static_cast<double>(best_ms) / 1000.0);
    }
    for(auto& [id, g] : groups)
        out.groups.push_back(std::move(g));
    return out;
}

} // namespace urbanvor::aggregate
