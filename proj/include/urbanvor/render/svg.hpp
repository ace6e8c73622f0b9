#pragma once

// SVG overlays: one toggleable group per layer with its own legend, and grid
// heat maps. Output is byte-deterministic (fixed %.2f coordinates, C
// formatting only).

#include "urbanvor/aggregate.hpp"
#include "urbanvor/render/layer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urbanvor::render {

struct Viewport
{
    double width = 800;
    double height = 600;
};

/// Viewport of the given width whose height keeps the box's aspect ratio.
inline Viewport viewport_for(const BoundingBox& box, double width = 800)
{
    return {width, std::max(1.0, std::round(width * box.height() / box.width()))};
}

namespace detail {

inline std::string fmt2(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if(s == "-0.00")
        s = "0.00";
    return s;
}

inline std::string escape_xml(const std::string& s)
{
    std::string out;
    for(const char c : s)
        switch(c)
        {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    return out;
}

/// Planar box to pixels, y flipped so north is up.
struct Frame
{
    BoundingBox box;
    Viewport vp;

    double x(double px) const { return (px - box.min.x) / box.width() * vp.width; }
    double y(double py) const { return (box.max.y - py) / box.height() * vp.height; }
};

inline std::string svg_open(const Viewport& vp)
{
    const std::string w = fmt2(vp.width), h = fmt2(vp.height);
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
           + w + "\" height=\"" + h + "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
}

inline int legend_slot(const std::string& metric)
{
    for(std::size_t i = 0; i < ingest::kMetrics.size(); ++i)
        if(ingest::kMetrics[i] == metric)
            return static_cast<int>(i);
    return static_cast<int>(ingest::kMetrics.size());
}

inline std::string format_value(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string legend(const Layer& layer)
{
    const int slot = legend_slot(layer.metric);
    const double x0 = 10, y0 = 10 + 64.0 * slot;
    std::string s = "  <g id=\"legend-" + escape_xml(layer.metric) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "   <rect x=\"" + fmt2(x0) + "\" y=\"" + fmt2(y0) + "\" width=\"170.00\" height=\"56.00\" fill=\"#FFFFFF\" fill-opacity=\"0.85\" stroke=\"#666666\" stroke-width=\"0.50\"/>\n";
    s += "   <text x=\"" + fmt2(x0 + 6) + "\" y=\"" + fmt2(y0 + 14) + "\">" + escape_xml(layer.metric)
         + (layer.units.empty() ? "" : " (" + escape_xml(layer.units) + ")") + "</text>\n";
    if(layer.palette == PaletteKind::Valence)
    {
        for(int k = 1; k <= 5; ++k)
        {
            const double sx = x0 + 6 + 30.0 * (k - 1);
            s += "   <rect x=\"" + fmt2(sx) + "\" y=\"" + fmt2(y0 + 20) + "\" width=\"26.00\" height=\"14.00\" fill=\""
                 + ValencePalette::color(k).hex() + "\"/>\n";
            s += "   <text x=\"" + fmt2(sx + 9) + "\" y=\"" + fmt2(y0 + 48) + "\">" + std::to_string(k) + "</text>\n";
        }
    }
    else
    {
        constexpr int steps = 8;
        for(int k = 0; k < steps; ++k)
        {
            const double t = static_cast<double>(k) / (steps - 1);
            const Color c = layer.color_of(layer.vmin + t * (layer.vmax - layer.vmin));
            s += "   <rect x=\"" + fmt2(x0 + 6 + 19.5 * k) + "\" y=\"" + fmt2(y0 + 20) + "\" width=\"19.50\" height=\"14.00\" fill=\"" + c.hex() + "\"/>\n";
        }
        s += "   <text x=\"" + fmt2(x0 + 6) + "\" y=\"" + fmt2(y0 + 48) + "\">" + format_value(layer.vmin) + "</text>\n";
        s += "   <text x=\"" + fmt2(x0 + 164) + "\" y=\"" + fmt2(y0 + 48) + "\" text-anchor=\"end\">" + format_value(layer.vmax) + "</text>\n";
    }
    s += "  </g>\n";
    return s;
}

} // namespace detail

/// Renders one layer's group. Depends only on the layer and the frame, so
/// adding or removing other layers leaves these bytes unchanged.
inline std::string svg_layer_group(const Layer& layer, const BoundingBox& box, const Viewport& vp)
{
    const detail::Frame f{box, vp};
    std::string s = " <g id=\"layer-" + detail::escape_xml(layer.metric) + "\">\n";
    for(const auto& e : layer.entries)
    {
        if(e.planar.empty())
            continue;
        std::string d;
        for(std::size_t i = 0; i < e.planar.size(); ++i)
        {
            d += i ? " L " : "M ";
            d += detail::fmt2(f.x(e.planar[i].x)) + " " + detail::fmt2(f.y(e.planar[i].y));
        }
        d += " Z";
        s += "  <path data-site=\"" + std::to_string(e.site_id) + "\" d=\"" + d + "\" fill=\"" + e.color.hex()
             + "\" fill-opacity=\"0.7\" stroke=\"#333333\" stroke-width=\"0.5\"/>\n";
    }
    s += detail::legend(layer);
    s += " </g>\n";
    return s;
}

/// Layers are drawn in metric-name order. All layers must share one planar
/// extent. The optional reference box stands in for a basemap.
inline std::string emit_svg(std::span<const Layer> layers, std::optional<Viewport> viewport = std::nullopt,
                            std::optional<BoundingBox> basemap = std::nullopt)
{
    if(layers.empty())
        throw Error(Errc::InvalidArgument, "emit_svg needs at least one layer");
    const BoundingBox box = layers.front().bbox;
    for(const auto& l : layers)
        if(!(l.bbox.min == box.min && l.bbox.max == box.max))
            throw Error(Errc::MixedExtents, "layers do not share one diagram extent");
    geometry::require_valid(box);
    const Viewport vp = viewport.value_or(viewport_for(box));
    const detail::Frame f{box, vp};

    std::vector<const Layer*> order;
    for(const auto& l : layers)
        order.push_back(&l);
    std::stable_sort(order.begin(), order.end(), [](const Layer* a, const Layer* b) { return a->metric < b->metric; });

    std::string s = detail::svg_open(vp);
    if(basemap)
    {
        const double x0 = f.x(basemap->min.x), x1 = f.x(basemap->max.x);
        const double y0 = f.y(basemap->max.y), y1 = f.y(basemap->min.y);
        s += " <rect id=\"basemap\" x=\"" + detail::fmt2(x0) + "\" y=\"" + detail::fmt2(y0) + "\" width=\""
             + detail::fmt2(x1 - x0) + "\" height=\"" + detail::fmt2(y1 - y0)
             + "\" fill=\"#EEEEEE\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
    }
    for(const Layer* l : order)
        s += svg_layer_group(*l, box, vp);
    s += "</svg>\n";
    return s;
}

/// One rectangle per bin carrying the metric, darker for larger means.
inline std::string emit_grid_heatmap(std::span<const aggregate::GridBin> bins, const aggregate::GridSpec& spec,
                                     const std::string& metric = "", std::optional<Viewport> viewport = std::nullopt)
{
    const BoundingBox box = spec.extent();
    geometry::require_valid(box);
    const Viewport vp = viewport.value_or(viewport_for(box));
    const detail::Frame f{box, vp};

    SequentialDarkMap cmap;
    bool first = true;
    for(const auto& b : bins)
        if(b.value_count > 0)
        {
            cmap.vmin = first ? b.mean : std::min(cmap.vmin, b.mean);
            cmap.vmax = first ? b.mean : std::max(cmap.vmax, b.mean);
            first = false;
        }

    std::string s = detail::svg_open(vp);
    s += " <g id=\"grid-" + detail::escape_xml(metric) + "\">\n";
    for(const auto& b : bins)
    {
        if(b.value_count == 0)
            continue;
        const double gx0 = spec.origin.x + static_cast<double>(b.col) * spec.cell_size;
        const double gy0 = spec.origin.y + static_cast<double>(b.row) * spec.cell_size;
        const double x0 = f.x(gx0), x1 = f.x(gx0 + spec.cell_size);
        const double y0 = f.y(gy0 + spec.cell_size), y1 = f.y(gy0);
        s += "  <rect data-col=\"" + std::to_string(b.col) + "\" data-row=\"" + std::to_string(b.row) + "\" x=\""
             + detail::fmt2(x0) + "\" y=\"" + detail::fmt2(y0) + "\" width=\"" + detail::fmt2(x1 - x0) + "\" height=\""
             + detail::fmt2(y1 - y0) + "\" fill=\"" + cmap.color(b.mean).hex() + "\"/>\n";
    }
    s += " </g>\n</svg>\n";
    return s;
}

} // namespace urbanvor::render
