#pragma once

// Seeded surrogate corpus: pedestrians ping-ponging along a street polyline
// with lateral GPS jitter, optional scripted loiters, and stress zones that
// raise heart rate and lower reported valence.

#include "urbanvor/error.hpp"
#include "urbanvor/geometry/polygon.hpp"
#include "urbanvor/geometry/voronoi.hpp"
#include "urbanvor/ingest.hpp"
#include "urbanvor/synth/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

namespace urbanvor::synth {

using geometry::Point2;
using geometry::SiteId;

/// A user stops on the street centreline the first time their walk passes
/// `at_m` metres of arc length, for `duration_s` seconds.
struct Loiter
{
    double at_m = 0;
    double duration_s = 0;
    std::vector<int> users; ///< zero-based user indices
};

struct WalkScript
{
    std::vector<Point2> street; ///< planar metres about the origin
    ingest::ProjectionConfig origin{52.4080, -1.5106};
    int n_users = 40;
    double sample_period_s = 0.2;
    double speed_mps = 1.3;
    double speed_spread = 0.15;  ///< relative sigma of per-user speed
    double start_spread = 1.0;   ///< start offset drawn from [0, start_spread * length)
    bool random_direction = true;
    double session_s = 2752.16;
    double jitter_sigma_m = 0.8; ///< stationary sigma of the lateral offset
    double jitter_max_m = 2.0;
    double jitter_corr = 0.95;   ///< AR(1) coefficient per sample
    std::vector<Loiter> loiters;
    std::uint64_t seed = 7;
    std::int64_t start_ms = 1559559600000; ///< first sample of user 0
    std::int64_t user_offset_ms = 86400000; ///< each user walks on a later day
};

struct StressZone
{
    Point2 center;
    double radius = 10;
    double hr_boost = 20;
    int valence_shift = -2;
};

struct SignalModel
{
    double hr_baseline = 70;
    double hr_sigma = 3;
    double eda_baseline = 2;
    double eda_drift_sigma = 0.002; ///< per-sample random-walk step
    double eda_reversion = 0.999;   ///< pull of the drift back to zero
    double noise_baseline = 62;
    double noise_sigma = 4;
    double valence_baseline = 3;
    double valence_sigma = 0.7;
    double report_interval_s = 20.6; ///< 134 reports per 2752 s session
};

struct SynthConfig
{
    WalkScript script;
    std::vector<StressZone> zones;
    SignalModel signal;
};

// ---------------------------------------------------------------------------
// Validation and JSON

inline double street_length(const std::vector<Point2>& street)
{
    double len = 0;
    for(std::size_t i = 1; i < street.size(); ++i)
        len += geometry::distance(street[i - 1], street[i]);
    return len;
}

inline void validate(const SynthConfig& cfg)
{
    const auto& s = cfg.script;
    const auto fail = [](const std::string& what) { throw Error(Errc::InvalidScript, what); };
    if(s.street.size() < 2)
        fail("street polyline needs at least 2 points");
    for(const auto& p : s.street)
        if(!geometry::is_finite(p))
            fail("street point not finite");
    if(!(street_length(s.street) > 0))
        fail("street has zero length");
    if(s.n_users < 1)
        fail("n_users must be positive");
    if(!(s.sample_period_s > 0) || !(s.speed_mps > 0))
        fail("sample period and speed must be positive");
    if(!(s.session_s >= 0) || !std::isfinite(s.session_s))
        fail("session length must be non-negative");
    if(!(s.speed_spread >= 0) || !(s.start_spread >= 0) || !(s.jitter_sigma_m >= 0))
        fail("spreads must be non-negative");
    if(!(s.jitter_max_m >= 0 && s.jitter_max_m <= 2.0))
        fail("jitter_max_m must be within [0, 2]");
    if(!(s.jitter_corr >= 0 && s.jitter_corr < 1))
        fail("jitter_corr must be in [0, 1)");
    for(const auto& l : s.loiters)
    {
        if(!(l.duration_s >= 0) || !(l.at_m >= 0))
            fail("loiter position and duration must be non-negative");
        for(const int u : l.users)
            if(u < 0 || u >= s.n_users)
                fail("loiter user index out of range");
    }
    for(const auto& z : cfg.zones)
    {
        if(!(z.radius > 0) || !geometry::is_finite(z.center))
            fail("zone radius must be positive");
        if(z.valence_shift > 0)
            fail("zone valence_shift must not be positive");
        if(!std::isfinite(z.hr_boost))
            fail("zone hr_boost not finite");
    }
    if(!(cfg.signal.report_interval_s > 0) || !(cfg.signal.hr_sigma >= 0) || !(cfg.signal.noise_sigma >= 0)
       || !(cfg.signal.valence_sigma >= 0) || !(cfg.signal.eda_drift_sigma >= 0) || !(cfg.signal.eda_baseline > 0))
        fail("signal model parameters out of range");
    ingest::require_valid(s.origin);
}

namespace detail {

using Json = nlohmann::json;

inline void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if(!j.is_object())
        throw Error(Errc::InvalidConfig, where + " must be an object");
    for(const auto& [k, v] : j.items())
    {
        bool known = false;
        for(const char* key : keys)
            known = known || k == key;
        if(!known)
            throw Error(Errc::InvalidConfig, "unknown key '" + k + "' in " + where);
    }
}

template <class T>
void read(const Json& j, const char* key, T& out)
{
    if(j.contains(key))
        out = j.at(key).get<T>();
}

inline Point2 point(const Json& j)
{
    if(!j.is_array() || j.size() != 2)
        throw Error(Errc::InvalidConfig, "points are [x, y] arrays");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace detail

/// Keys mirror the struct fields: {"script": {...}, "zones": [...], "signal": {...}}.
inline SynthConfig parse_config(const nlohmann::json& j)
{
    using detail::read;
    SynthConfig cfg;
    try
    {
        detail::reject_unknown(j, {"script", "zones", "signal"}, "config");
        if(j.contains("script"))
        {
            const auto& s = j["script"];
            detail::reject_unknown(s,
                                   {"street", "origin", "n_users", "sample_period_s", "speed_mps", "speed_spread",
                                    "start_spread", "random_direction", "session_s", "jitter_sigma_m", "jitter_max_m",
                                    "jitter_corr", "loiters", "seed", "start_ms", "user_offset_ms"},
                                   "script");
            auto& w = cfg.script;
            if(s.contains("street"))
            {
                w.street.clear();
                for(const auto& p : s["street"])
                    w.street.push_back(detail::point(p));
            }
            if(s.contains("origin"))
            {
                detail::reject_unknown(s["origin"], {"lat", "lon", "earth_radius"}, "origin");
                read(s["origin"], "lat", w.origin.origin_lat);
                read(s["origin"], "lon", w.origin.origin_lon);
                read(s["origin"], "earth_radius", w.origin.earth_radius);
            }
            read(s, "n_users", w.n_users);
            read(s, "sample_period_s", w.sample_period_s);
            read(s, "speed_mps", w.speed_mps);
            read(s, "speed_spread", w.speed_spread);
            read(s, "start_spread", w.start_spread);
            read(s, "random_direction", w.random_direction);
            read(s, "session_s", w.session_s);
            read(s, "jitter_sigma_m", w.jitter_sigma_m);
            read(s, "jitter_max_m", w.jitter_max_m);
            read(s, "jitter_corr", w.jitter_corr);
            read(s, "seed", w.seed);
            read(s, "start_ms", w.start_ms);
            read(s, "user_offset_ms", w.user_offset_ms);
            if(s.contains("loiters"))
                for(const auto& l : s["loiters"])
                {
                    detail::reject_unknown(l, {"at_m", "duration_s", "users"}, "loiter");
                    Loiter lo;
                    read(l, "at_m", lo.at_m);
                    read(l, "duration_s", lo.duration_s);
                    read(l, "users", lo.users);
                    w.loiters.push_back(std::move(lo));
                }
        }
        if(j.contains("zones"))
            for(const auto& z : j["zones"])
            {
                detail::reject_unknown(z, {"center", "radius", "hr_boost", "valence_shift"}, "zone");
                StressZone zone;
                if(z.contains("center"))
                    zone.center = detail::point(z["center"]);
                read(z, "radius", zone.radius);
                read(z, "hr_boost", zone.hr_boost);
                read(z, "valence_shift", zone.valence_shift);
                cfg.zones.push_back(zone);
            }
        if(j.contains("signal"))
        {
            const auto& g = j["signal"];
            detail::reject_unknown(g,
                                   {"hr_baseline", "hr_sigma", "eda_baseline", "eda_drift_sigma", "eda_reversion",
                                    "noise_baseline", "noise_sigma", "valence_baseline", "valence_sigma",
                                    "report_interval_s"},
                                   "signal");
            auto& m = cfg.signal;
            read(g, "hr_baseline", m.hr_baseline);
            read(g, "hr_sigma", m.hr_sigma);
            read(g, "eda_baseline", m.eda_baseline);
            read(g, "eda_drift_sigma", m.eda_drift_sigma);
            read(g, "eda_reversion", m.eda_reversion);
            read(g, "noise_baseline", m.noise_baseline);
            read(g, "noise_sigma", m.noise_sigma);
            read(g, "valence_baseline", m.valence_baseline);
            read(g, "valence_sigma", m.valence_sigma);
            read(g, "report_interval_s", m.report_interval_s);
        }
    }
    catch(const nlohmann::json::exception& e)
    {
        throw Error(Errc::InvalidConfig, e.what());
    }
    if(cfg.script.street.empty())
        throw Error(Errc::InvalidScript, "script.street is required");
    validate(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

/// Arc-length parametrised polyline with ping-pong traversal.
class Street
{
public:
    explicit Street(const std::vector<Point2>& pts) : m_pts(pts)
    {
        m_cum.push_back(0);
        for(std::size_t i = 1; i < pts.size(); ++i)
            m_cum.push_back(m_cum.back() + geometry::distance(pts[i - 1], pts[i]));
    }

    double length() const { return m_cum.back(); }

    /// Folds an unbounded arc coordinate into [0, length] by reflection.
    double fold(double s) const
    {
        const double L = length();
        double m = std::fmod(s, 2 * L);
        if(m < 0)
            m += 2 * L;
        return m <= L ? m : 2 * L - m;
    }

    /// Point at arc position s in [0, length] and the unit left normal there.
    std::pair<Point2, Point2> at(double s) const
    {
        std::size_t k = static_cast<std::size_t>(std::upper_bound(m_cum.begin(), m_cum.end(), s) - m_cum.begin());
        k = std::clamp<std::size_t>(k, 1, m_pts.size() - 1);
        while(k > 1 && m_cum[k] == m_cum[k - 1])
            --k;
        const Point2 a = m_pts[k - 1], b = m_pts[k];
        const double seg = m_cum[k] - m_cum[k - 1];
        const double t = seg > 0 ? std::clamp((s - m_cum[k - 1]) / seg, 0.0, 1.0) : 0.0;
        const Point2 d = seg > 0 ? (1.0 / seg) * (b - a) : Point2{1, 0};
        return {a + t * (b - a), {-d.y, d.x}};
    }

private:
    std::vector<Point2> m_pts;
    std::vector<double> m_cum;
};

/// Rounds through fixed-point text so generated values equal what a CSV
/// reader will see.
inline double quantize(double v, int decimals)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    double out = v;
    std::from_chars(buf, res.ptr, out);
    return out == 0.0 ? 0.0 : out; // no negative zero
}

inline std::string user_name(int u, int n_users)
{
    char buf[32];
    const int width = n_users > 99 ? 3 : 2;
    std::snprintf(buf, sizeof buf, "P%0*d", width, u + 1);
    return buf;
}

} // namespace detail

inline std::size_t samples_per_user(const WalkScript& s)
{
    return static_cast<std::size_t>(std::floor(s.session_s / s.sample_period_s + 1e-9));
}

inline std::size_t report_every(const SignalModel& m, const WalkScript& s)
{
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(m.report_interval_s / s.sample_period_s)));
}

inline bool in_any_zone(Point2 p, const std::vector<StressZone>& zones, double& boost, int& shift)
{
    boost = 0;
    shift = 0;
    bool inside = false;
    for(const auto& z : zones)
        if(geometry::distance_sq(p, z.center) <= z.radius * z.radius)
        {
            inside = true;
            boost = std::max(boost, z.hr_boost);
            shift = std::min(shift, z.valence_shift);
        }
    return inside;
}

/// Generates one user's trace. Depends only on (config, user index).
inline std::vector<ingest::SensorRecord> generate_user(const SynthConfig& cfg, int u)
{
    const WalkScript& s = cfg.script;
    const SignalModel& m = cfg.signal;
    const detail::Street street(s.street);
    const double L = street.length();
    Xoshiro256StarStar rng = user_stream(s.seed, static_cast<std::uint64_t>(u));

    double arc = s.start_spread * L * rng.uniform();
    const double direction = s.random_direction && rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double speed = std::max(0.1 * s.speed_mps, s.speed_mps * (1.0 + s.speed_spread * rng.normal()));
    const double step = direction * speed * s.sample_period_s;
    // Unfold the start so that reflection reproduces the intended direction.
    if(direction < 0)
        arc = 2 * L - arc;

    std::vector<const Loiter*> pending;
    for(const auto& l : s.loiters)
        if(std::find(l.users.begin(), l.users.end(), u) != l.users.end())
            pending.push_back(&l);
    const Loiter* active = nullptr;
    std::size_t loiter_left = 0;

    const std::size_t n = samples_per_user(s);
    const std::size_t every = report_every(m, s);
    const double innov = s.jitter_sigma_m * std::sqrt(1.0 - s.jitter_corr * s.jitter_corr);
    double lateral = std::clamp(s.jitter_sigma_m * rng.normal(), -s.jitter_max_m, s.jitter_max_m);
    double eda_drift = 0;
    const std::string name = detail::user_name(u, s.n_users);

    std::vector<ingest::SensorRecord> out;
    out.reserve(n);
    for(std::size_t i = 0; i < n; ++i)
    {
        Point2 pos;
        if(active)
        {
            pos = street.at(std::min(active->at_m, L)).first;
            if(--loiter_left == 0)
                active = nullptr;
        }
        else
        {
            const auto [c, normal] = street.at(street.fold(arc));
            pos = c + lateral * normal;
        }

        // Draw order is fixed per sample regardless of branch taken.
        const double hr_noise = rng.normal();
        const double eda_step = rng.normal();
        const double noise_noise = rng.normal();
        const double val_noise = rng.normal();
        const double jitter_noise = rng.normal();

        double boost = 0;
        int shift = 0;
        in_any_zone(pos, cfg.zones, boost, shift);

        ingest::SensorRecord r;
        r.timestamp_ms = s.start_ms + static_cast<std::int64_t>(u) * s.user_offset_ms
                         + std::llround(static_cast<double>(i) * s.sample_period_s * 1000.0);
        r.user_id = name;
        const ingest::LatLon g = ingest::unproject(pos, s.origin);
        r.lat = detail::quantize(g.lat, 9);
        r.lon = detail::quantize(g.lon, 9);
        r.hr = detail::quantize(std::clamp(m.hr_baseline + m.hr_sigma * hr_noise + boost, 25.0, 250.0), 1);
        eda_drift = m.eda_reversion * eda_drift + m.eda_drift_sigma * eda_step;
        r.eda = detail::quantize(std::max(0.05, m.eda_baseline + eda_drift), 3);
        r.noise = detail::quantize(m.noise_baseline + m.noise_sigma * noise_noise, 1);
        if(i % every == 0)
        {
            const long base = std::lround(m.valence_baseline + m.valence_sigma * val_noise);
            r.valence = static_cast<int>(std::clamp<long>(base + shift, 1, 5));
        }
        out.push_back(std::move(r));

        lateral = std::clamp(s.jitter_corr * lateral + innov * jitter_noise, -s.jitter_max_m, s.jitter_max_m);
        if(active)
            continue;
        const double next = arc + step;
        // Start a loiter when this step crosses a pending loiter point.
        for(auto it = pending.begin(); it != pending.end(); ++it)
        {
            const double at = std::min((*it)->at_m, L);
            const double a = street.fold(arc), b = street.fold(next);
            const bool crossed = (a - at) * (b - at) <= 0 && std::abs(a - b) <= std::abs(step) + 1e-12;
            if(crossed)
            {
                active = *it;
                loiter_left = static_cast<std::size_t>(std::llround((*it)->duration_s / s.sample_period_s));
                pending.erase(it);
                if(loiter_left == 0)
                    active = nullptr;
                break;
            }
        }
        arc = next;
    }
    return out;
}

inline ingest::Dataset generate(const SynthConfig& cfg)
{
    validate(cfg);
    std::vector<ingest::SensorRecord> all;
    all.reserve(samples_per_user(cfg.script) * static_cast<std::size_t>(cfg.script.n_users));
    for(int u = 0; u < cfg.script.n_users; ++u)
    {
        auto recs = generate_user(cfg, u);
        all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    ingest::Provenance p;
    p.source = "synth seed=" + std::to_string(cfg.script.seed);
    p.total_rows = all.size();
    return ingest::Dataset::from_records(std::move(all), std::move(p));
}

/// Site ids of cells whose polygon meets any zone disc.
inline std::set<SiteId> ground_truth(const std::vector<StressZone>& zones, const geometry::VoronoiDiagram& diagram)
{
    std::set<SiteId> out;
    for(const auto& c : diagram.cells())
        for(const auto& z : zones)
            if(geometry::convex_intersects_disc(c.polygon, z.center, z.radius))
            {
                out.insert(c.site_id);
                break;
            }
    return out;
}

} // namespace urbanvor::synth
