#pragma once

// Sensor record schema, CSV parsing with a per-row rejection report, and the
// local equirectangular projection into meters.

#include "urbanvor/error.hpp"
#include "urbanvor/geometry/types.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urbanvor::ingest {

using geometry::Point2;

struct SensorRecord
{
    std::int64_t timestamp_ms = 0;
    std::string user_id;
    double lat = 0.0;
    double lon = 0.0;
    std::optional<double> hr;
    std::optional<double> eda;
    std::optional<double> noise;
    std::optional<int> valence;

    bool operator==(const SensorRecord&) const = default;
};

inline constexpr std::string_view kHeader = "timestamp_ms,user_id,lat,lon,hr,eda,noise,valence";
inline constexpr std::array<std::string_view, 4> kMetrics = {"hr", "eda", "noise", "valence"};

inline bool is_metric(std::string_view name)
{
    return std::find(kMetrics.begin(), kMetrics.end(), name) != kMetrics.end();
}

/// Value of a named metric, absent when the record has no reading. Throws
/// UnknownMetric for names outside the schema.
inline std::optional<double> metric_value(const SensorRecord& r, std::string_view metric)
{
    if(metric == "hr")
        return r.hr;
    if(metric == "eda")
        return r.eda;
    if(metric == "noise")
        return r.noise;
    if(metric == "valence")
        return r.valence ? std::optional<double>(*r.valence) : std::nullopt;
    throw Error(Errc::UnknownMetric, "unknown metric '" + std::string(metric) + "'");
}

/// Returns the first violated field invariant, or an empty string.
inline std::string validate(const SensorRecord& r)
{
    if(r.timestamp_ms <= 0)
        return "timestamp not positive";
    if(r.user_id.empty())
        return "missing user_id";
    if(!(r.lat >= -90.0 && r.lat <= 90.0))
        return "lat out of range";
    if(!(r.lon >= -180.0 && r.lon <= 180.0))
        return "lon out of range";
    if(r.hr && !(*r.hr >= 25.0 && *r.hr <= 250.0))
        return "hr out of range";
    if(r.eda && !(*r.eda > 0.0))
        return "eda not positive";
    if(r.noise && !std::isfinite(*r.noise))
        return "noise not finite";
    if(r.valence && (*r.valence < 1 || *r.valence > 5))
        return "valence out of range";
    return {};
}

struct UserTrace
{
    std::string user_id;
    std::size_t begin = 0; ///< index into Dataset::records()
    std::size_t end = 0;
};

struct Provenance
{
    std::string source;
    std::size_t total_rows = 0;
    std::size_t accepted_rows = 0;
    std::size_t rejected_rows = 0;
    std::size_t out_of_order = 0; ///< records that arrived behind a later timestamp of the same user
};

/// Records ordered by (user_id, timestamp). Stable, so equal timestamps keep
/// their input order.
class Dataset
{
public:
    Dataset() = default;

    static Dataset from_records(std::vector<SensorRecord> records, Provenance provenance = {})
    {
        Dataset d;
        {
            std::map<std::string, std::int64_t> last;
            std::size_t late = 0;
            for(const auto& r : records)
            {
                auto [it, fresh] = last.try_emplace(r.user_id, r.timestamp_ms);
                if(!fresh)
                {
                    if(r.timestamp_ms < it->second)
                        ++late;
                    else
                        it->second = r.timestamp_ms;
                }
            }
            provenance.out_of_order = late;
        }
        std::stable_sort(records.begin(), records.end(), [](const SensorRecord& a, const SensorRecord& b) {
            if(a.user_id != b.user_id)
                return a.user_id < b.user_id;
            return a.timestamp_ms < b.timestamp_ms;
        });
        for(std::size_t i = 0; i < records.size(); ++i)
        {
            if(d.m_traces.empty() || d.m_traces.back().user_id != records[i].user_id)
                d.m_traces.push_back({records[i].user_id, i, i});
            d.m_traces.back().end = i + 1;
        }
        provenance.accepted_rows = records.size();
        d.m_records = std::move(records);
        d.m_provenance = std::move(provenance);
        return d;
    }

    const std::vector<SensorRecord>& records() const { return m_records; }
    const std::vector<UserTrace>& traces() const { return m_traces; }
    const Provenance& provenance() const { return m_provenance; }
    std::size_t size() const { return m_records.size(); }
    bool empty() const { return m_records.empty(); }

    std::span<const SensorRecord> trace(const UserTrace& t) const
    {
        return std::span<const SensorRecord>(m_records).subspan(t.begin, t.end - t.begin);
    }

private:
    std::vector<SensorRecord> m_records;
    std::vector<UserTrace> m_traces;
    Provenance m_provenance;
};

inline Dataset concat(const Dataset& a, const Dataset& b)
{
    std::vector<SensorRecord> all = a.records();
    all.insert(all.end(), b.records().begin(), b.records().end());
    Provenance p;
    p.source = a.provenance().source + "+" + b.provenance().source;
    p.total_rows = a.provenance().total_rows + b.provenance().total_rows;
    p.rejected_rows = a.provenance().rejected_rows + b.provenance().rejected_rows;
    return Dataset::from_records(std::move(all), std::move(p));
}

// ---------------------------------------------------------------------------
// CSV

struct Rejection
{
    std::size_t row = 0; ///< 1-based data row; the header is not counted
    std::string reason;
};

inline std::string format_rejection(const Rejection& r)
{
    return "row=" + std::to_string(r.row) + " reason=" + r.reason;
}

struct ParseResult
{
    Dataset dataset;
    std::vector<Rejection> rejections;
    std::size_t total_rows = 0;
};

namespace detail {

/// Splits one CSV line. Fields may be double-quoted with "" as an escaped
/// quote. Returns false on an unterminated quote.
inline bool split_csv_line(std::string_view line, std::vector<std::string>& out)
{
    out.clear();
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for(std::size_t i = 0; i < line.size(); ++i)
    {
        const char c = line[i];
        if(quoted)
        {
            if(c == '"')
            {
                if(i + 1 < line.size() && line[i + 1] == '"')
                {
                    field.push_back('"');
                    ++i;
                }
                else
                    quoted = false;
            }
            else
                field.push_back(c);
        }
        else if(c == '"' && field.empty() && !was_quoted)
        {
            quoted = was_quoted = true;
        }
        else if(c == ',')
        {
            out.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        }
        else
            field.push_back(c);
    }
    if(quoted)
        return false;
    out.push_back(std::move(field));
    return true;
}

inline std::string_view trim(std::string_view s)
{
    while(!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while(!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view s, T& out)
{
    s = trim(s);
    if(s.empty())
        return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if(ec != std::errc() || ptr != s.data() + s.size())
        return false;
    if constexpr(std::is_floating_point_v<T>)
        return std::isfinite(out);
    return true;
}

/// Parses an optional numeric column. Empty means absent. Returns false on
/// malformed text.
template <class T>
bool parse_optional(std::string_view s, std::optional<T>& out)
{
    if(trim(s).empty())
    {
        out.reset();
        return true;
    }
    T v{};
    if(!parse_number(s, v))
        return false;
    out = v;
    return true;
}

inline void append_double(std::string& out, double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void append_field(std::string& out, std::string_view s)
{
    if(s.find_first_of(",\"\r\n") == std::string_view::npos)
    {
        out.append(s);
        return;
    }
    out.push_back('"');
    for(const char c : s)
    {
        if(c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

} // namespace detail

/// Parses one data line (without the newline) into a record or a reason.
inline std::optional<SensorRecord> parse_row(std::string_view line, std::string& reason)
{
    static thread_local std::vector<std::string> fields;
    if(!detail::split_csv_line(line, fields))
    {
        reason = "unterminated quote";
        return std::nullopt;
    }
    if(fields.size() != 8)
    {
        reason = "wrong field count " + std::to_string(fields.size());
        return std::nullopt;
    }
    SensorRecord r;
    if(!detail::parse_number(fields[0], r.timestamp_ms))
    {
        reason = "bad timestamp";
        return std::nullopt;
    }
    r.user_id = std::string(detail::trim(fields[1]));
    if(!detail::parse_number(fields[2], r.lat))
    {
        reason = "bad number in lat";
        return std::nullopt;
    }
    if(!detail::parse_number(fields[3], r.lon))
    {
        reason = "bad number in lon";
        return std::nullopt;
    }
    static constexpr const char* names[] = {"hr", "eda", "noise"};
    std::optional<double>* opt[] = {&r.hr, &r.eda, &r.noise};
    for(int k = 0; k < 3; ++k)
        if(!detail::parse_optional(fields[4 + k], *opt[k]))
        {
            reason = std::string("bad number in ") + names[k];
            return std::nullopt;
        }
    if(!detail::parse_optional(fields[7], r.valence))
    {
        reason = "bad number in valence";
        return std::nullopt;
    }
    reason = validate(r);
    if(!reason.empty())
        return std::nullopt;
    return r;
}

/// Parses a whole CSV stream. Invalid rows are reported, never dropped
/// silently. A row is any line after the header, including blank ones,
/// except the empty remainder after a trailing newline.
inline ParseResult parse_csv(std::istream& in, std::string source = "<stream>")
{
    if(!in.good())
        throw Error(Errc::UnreadableStream, "cannot read " + source);
    std::string line;
    if(!std::getline(in, line))
    {
        if(in.bad())
            throw Error(Errc::UnreadableStream, "cannot read " + source);
        throw Error(Errc::MissingHeader, source + " is empty");
    }
    if(line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);
    if(!line.empty() && line.back() == '\r')
        line.pop_back();
    if(detail::trim(line) != kHeader)
        throw Error(Errc::MissingHeader, "expected header '" + std::string(kHeader) + "' in " + source);

    ParseResult result;
    std::vector<SensorRecord> records;
    std::string reason;
    std::size_t row = 0;
    while(std::getline(in, line))
    {
        ++row;
        if(!line.empty() && line.back() == '\r')
            line.pop_back();
        if(auto r = parse_row(line, reason))
            records.push_back(std::move(*r));
        else
            result.rejections.push_back({row, reason});
    }
    if(in.bad())
        throw Error(Errc::UnreadableStream, "read error in " + source);

    result.total_rows = row;
    Provenance p;
    p.source = std::move(source);
    p.total_rows = row;
    p.rejected_rows = result.rejections.size();
    result.dataset = Dataset::from_records(std::move(records), std::move(p));
    return result;
}

inline void append_csv_row(std::string& out, const SensorRecord& r)
{
    out.append(std::to_string(r.timestamp_ms));
    out.push_back(',');
    detail::append_field(out, r.user_id);
    out.push_back(',');
    detail::append_double(out, r.lat);
    out.push_back(',');
    detail::append_double(out, r.lon);
    for(const auto* v : {&r.hr, &r.eda, &r.noise})
    {
        out.push_back(',');
        if(*v)
            detail::append_double(out, **v);
    }
    out.push_back(',');
    if(r.valence)
        out.append(std::to_string(*r.valence));
    out.push_back('\n');
}

/// Writes records in the same schema parse_csv reads. Doubles use the
/// shortest round-trip representation.
inline void write_csv(std::ostream& out, std::span<const SensorRecord> records)
{
    out << kHeader << '\n';
    std::string buf;
    for(const auto& r : records)
    {
        append_csv_row(buf, r);
        if(buf.size() > (1u << 16))
        {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

// ---------------------------------------------------------------------------
// Projection

struct ProjectionConfig
{
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double earth_radius = 6371000.0;
};

inline void require_valid(const ProjectionConfig& cfg)
{
    if(!(cfg.origin_lat >= -90.0 && cfg.origin_lat <= 90.0 && cfg.origin_lon >= -180.0 && cfg.origin_lon <= 180.0))
        throw Error(Errc::InvalidArgument, "projection origin outside lat/lon bounds");
    if(!(cfg.earth_radius > 0.0) || !std::isfinite(cfg.earth_radius))
        throw Error(Errc::InvalidArgument, "earth radius must be positive");
}

struct LatLon
{
    double lat = 0.0;
    double lon = 0.0;
};

inline constexpr double kDegree = std::numbers::pi / 180.0;

inline Point2 project(double lat, double lon, const ProjectionConfig& cfg)
{
    return {(lon - cfg.origin_lon) * std::cos(cfg.origin_lat * kDegree) * cfg.earth_radius * kDegree,
            (lat - cfg.origin_lat) * cfg.earth_radius * kDegree};
}

inline LatLon unproject(Point2 p, const ProjectionConfig& cfg)
{
    return {p.y / (cfg.earth_radius * kDegree) + cfg.origin_lat,
            p.x / (std::cos(cfg.origin_lat * kDegree) * cfg.earth_radius * kDegree) + cfg.origin_lon};
}

struct ProjectedRecord : SensorRecord
{
    Point2 position;
};

inline ProjectedRecord project(const SensorRecord& r, const ProjectionConfig& cfg)
{
    ProjectedRecord p;
    static_cast<SensorRecord&>(p) = r;
    p.position = project(r.lat, r.lon, cfg);
    return p;
}

inline std::vector<ProjectedRecord> project(const Dataset& d, const ProjectionConfig& cfg)
{
    require_valid(cfg);
    std::vector<ProjectedRecord> out;
    out.reserve(d.size());
    for(const auto& r : d.records())
        out.push_back(project(r, cfg));
    return out;
}

/// Centroid of all record positions in degrees. An empty dataset projects
/// about (0, 0).
inline ProjectionConfig centroid_projection(const Dataset& d, double earth_radius = 6371000.0)
{
    ProjectionConfig cfg;
    cfg.earth_radius = earth_radius;
    if(d.empty())
        return cfg;
    double lat = 0, lon = 0;
    for(const auto& r : d.records())
    {
        lat += r.lat;
        lon += r.lon;
    }
    cfg.origin_lat = lat / static_cast<double>(d.size());
    cfg.origin_lon = lon / static_cast<double>(d.size());
    return cfg;
}

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats
{
    std::size_t users = 0;
    std::size_t records = 0;
    std::size_t self_reports = 0;
    std::int64_t t_min_ms = 0;
    std::int64_t t_max_ms = 0;
    std::int64_t span_ms = 0;
    double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;

    bool operator==(const DatasetStats&) const = default;
};

inline DatasetStats dataset_stats(const Dataset& d)
{
    DatasetStats s;
    if(d.empty())
        return s;
    std::set<std::string_view> users;
    const auto& first = d.records().front();
    s.t_min_ms = s.t_max_ms = first.timestamp_ms;
    s.lat_min = s.lat_max = first.lat;
    s.lon_min = s.lon_max = first.lon;
    for(const auto& r : d.records())
    {
        users.insert(r.user_id);
        s.self_reports += r.valence.has_value();
        s.t_min_ms = std::min(s.t_min_ms, r.timestamp_ms);
        s.t_max_ms = std::max(s.t_max_ms, r.timestamp_ms);
        s.lat_min = std::min(s.lat_min, r.lat);
        s.lat_max = std::max(s.lat_max, r.lat);
        s.lon_min = std::min(s.lon_min, r.lon);
        s.lon_max = std::max(s.lon_max, r.lon);
    }
    s.users = users.size();
    s.records = d.size();
    s.span_ms = s.t_max_ms - s.t_min_ms;
    return s;
}

} // namespace urbanvor::ingest
