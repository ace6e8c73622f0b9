#pragma once

// One metric's colored cell set, in both the planar frame (for SVG) and
// WGS84 (for GeoJSON).

#include "urbanvor/aggregate.hpp"
#include "urbanvor/geometry/voronoi.hpp"
#include "urbanvor/ingest.hpp"
#include "urbanvor/render/color.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urbanvor::render {

using geometry::BoundingBox;
using geometry::SiteId;

enum class PaletteKind {
    Linear,
    Valence,
    SequentialDark,
};

inline const char* to_string(PaletteKind k)
{
    switch(k)
    {
    case PaletteKind::Linear: return "linear";
    case PaletteKind::Valence: return "valence";
    case PaletteKind::SequentialDark: return "sequential-dark";
    }
    return "?";
}

inline PaletteKind parse_palette(const std::string& name)
{
    if(name == "linear")
        return PaletteKind::Linear;
    if(name == "valence")
        return PaletteKind::Valence;
    if(name == "sequential-dark")
        return PaletteKind::SequentialDark;
    throw Error(Errc::InvalidArgument, "unknown palette '" + name + "'");
}

/// Default palette per metric: the valence classes for valence, the hue ramp
/// otherwise.
inline PaletteKind default_palette(const std::string& metric)
{
    return metric == "valence" ? PaletteKind::Valence : PaletteKind::Linear;
}

struct Palette
{
    PaletteKind kind = PaletteKind::Linear;
    std::optional<double> vmin; ///< defaults to the layer's observed min
    std::optional<double> vmax; ///< defaults to the layer's observed max
};

inline const char* metric_units(const std::string& metric)
{
    if(metric == "hr")
        return "bpm";
    if(metric == "eda")
        return "uS";
    if(metric == "noise")
        return "dB";
    if(metric == "valence")
        return "SAM 1-5";
    return "";
}

struct LayerEntry
{
    SiteId site_id = 0;
    geometry::Ring planar;
    std::vector<ingest::LatLon> ring; ///< WGS84, same vertex order as planar
    double value = 0;                 ///< mean, or the modal class for the valence palette
    Color color;
    std::size_t count = 0;
};

struct Layer
{
    std::string metric;
    std::string units;
    PaletteKind palette = PaletteKind::Linear;
    double vmin = 0, vmax = 0;
    std::string diagram_id;
    BoundingBox bbox; ///< planar extent of the source diagram
    std::vector<LayerEntry> entries;

    Color color_of(double v) const
    {
        switch(palette)
        {
        case PaletteKind::Linear: return map_color(v, {vmin, vmax});
        case PaletteKind::Valence: return ValencePalette::color(static_cast<int>(v));
        case PaletteKind::SequentialDark: return SequentialDarkMap{vmin, vmax}.color(v);
        }
        return {};
    }
};

/// FNV-1a over the bbox and every cell's id and site position; identifies the
/// diagram a layer was built from.
inline std::string diagram_fingerprint(const geometry::VoronoiDiagram& d)
{
    std::uint64_t h = 1469598103934665603ull;
    const auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for(std::size_t i = 0; i < n; ++i)
        {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const double box[4] = {d.bbox().min.x, d.bbox().min.y, d.bbox().max.x, d.bbox().max.y};
    mix(box, sizeof box);
    for(const auto& c : d.cells())
    {
        mix(&c.site_id, sizeof c.site_id);
        mix(&c.site.x, sizeof c.site.x);
        mix(&c.site.y, sizeof c.site.y);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Colors each aggregated cell. Entries are ordered by site_id.
inline Layer build_layer(const geometry::VoronoiDiagram& diagram, std::span<const aggregate::CellAggregate> aggregates,
                         const Palette& palette, const ingest::ProjectionConfig& projection)
{
    Layer layer;
    layer.palette = palette.kind;
    layer.diagram_id = diagram_fingerprint(diagram);
    layer.bbox = diagram.bbox();
    if(!aggregates.empty())
        layer.metric = aggregates.front().metric;
    layer.units = metric_units(layer.metric);
    for(const auto& a : aggregates)
        if(a.metric != layer.metric)
            throw Error(Errc::InvalidArgument, "aggregates mix metrics");
    if(palette.kind == PaletteKind::Valence && !aggregates.empty() && layer.metric != "valence")
        throw Error(Errc::PaletteMetricMismatch, "valence palette cannot color metric '" + layer.metric + "'");

    if(palette.kind == PaletteKind::Valence)
    {
        layer.vmin = 1;
        layer.vmax = 5;
    }
    else if(!aggregates.empty())
    {
        double lo = aggregates.front().mean, hi = lo;
        for(const auto& a : aggregates)
        {
            lo = std::min(lo, a.mean);
            hi = std::max(hi, a.mean);
        }
        layer.vmin = palette.vmin.value_or(lo);
        layer.vmax = palette.vmax.value_or(hi);
        (void)LinearColorMap::make(layer.vmin, layer.vmax);
    }

    std::vector<const aggregate::CellAggregate*> sorted;
    for(const auto& a : aggregates)
        sorted.push_back(&a);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->site_id < b->site_id; });
    for(const auto* a : sorted)
    {
        const auto& cell = diagram.cell(a->site_id);
        LayerEntry e;
        e.site_id = cell.site_id;
        e.planar = cell.polygon;
        e.ring.reserve(cell.polygon.size());
        for(const auto& p : cell.polygon)
            e.ring.push_back(ingest::unproject(p, projection));
        e.count = a->count;
        if(palette.kind == PaletteKind::Valence)
        {
            if(!a->mode)
                throw Error(Errc::PaletteMetricMismatch, "valence palette needs a modal class");
            e.value = *a->mode;
        }
        else
            e.value = a->mean;
        e.color = layer.color_of(e.value);
        layer.entries.push_back(std::move(e));
    }
    return layer;
}

} // namespace urbanvor::render
