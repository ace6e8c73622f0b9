#pragma once

// End-to-end stages shared by the CLI and the acceptance harness: load or
// synthesize, tessellate, aggregate, render, and score hotspot recovery.

#include "urbanvor/aggregate.hpp"
#include "urbanvor/diagram_io.hpp"
#include "urbanvor/geometry.hpp"
#include "urbanvor/ingest.hpp"
#include "urbanvor/render.hpp"
#include "urbanvor/synth/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace urbanvor::pipeline {

namespace fs = std::filesystem;
using geometry::SiteId;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in)
        throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary and renames over the target, so readers
/// never see a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& contents)
{
    if(path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if(!out)
            throw Error(Errc::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if(!out)
        {
            out.close();
            fs::remove(tmp);
            throw Error(Errc::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if(ec)
    {
        fs::remove(tmp);
        throw Error(Errc::Io, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

inline ingest::ParseResult load_csv(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in)
        throw Error(Errc::Io, "cannot open " + path.string());
    return ingest::parse_csv(in, path.string());
}

inline nlohmann::json load_json(const fs::path& path)
{
    const std::string text = read_file(path);
    try
    {
        return nlohmann::json::parse(text);
    }
    catch(const nlohmann::json::exception& e)
    {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
}

inline std::string csv_text(const ingest::Dataset& d)
{
    std::ostringstream out;
    ingest::write_csv(out, d.records());
    return out.str();
}

// ---------------------------------------------------------------------------
// Options

struct Options
{
    std::optional<fs::path> input;
    std::optional<synth::SynthConfig> synth;
    std::optional<ingest::ProjectionConfig> projection; ///< empty = auto
    double min_separation = 5.0;
    std::optional<double> bbox_margin; ///< defaults to min_separation
    double grid_size = 10.0;
    std::vector<std::string> metrics = {"eda", "hr", "noise", "valence"};
    std::map<std::string, render::PaletteKind> palettes;
    std::optional<geometry::BoundingBox> basemap;
    double viewport_width = 1000;
    bool combined_svg = false;
    fs::path out_dir = "out";
};

inline std::vector<std::string> parse_metric_list(const std::string& list)
{
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while(std::getline(ss, item, ','))
    {
        if(item.empty())
            continue;
        aggregate::require_metric(item);
        if(std::find(out.begin(), out.end(), item) == out.end())
            out.push_back(item);
    }
    if(out.empty())
        throw Error(Errc::InvalidConfig, "empty metric list");
    std::sort(out.begin(), out.end());
    return out;
}

/// Synthesis settings may be given as the whole document or under "synth".
inline synth::SynthConfig synth_section(const nlohmann::json& j, const fs::path& base)
{
    if(j.contains("synth"))
    {
        const auto& s = j["synth"];
        if(s.is_string())
            return synth::parse_config(load_json(base / s.get<std::string>()));
        return synth::parse_config(s);
    }
    return synth::parse_config(j);
}

/// Relative paths resolve against the config file's directory.
inline Options parse_options(const nlohmann::json& j, const fs::path& base)
{
    Options o;
    try
    {
        static const std::set<std::string> known = {"input", "synth", "projection", "min_separation", "bbox_margin",
                                                     "grid_size", "metrics", "palettes", "basemap", "viewport_width",
                                                     "combined_svg", "out"};
        if(!j.is_object())
            throw Error(Errc::InvalidConfig, "pipeline config must be an object");
        for(const auto& [k, v] : j.items())
            if(!known.count(k))
                throw Error(Errc::InvalidConfig, "unknown key '" + k + "' in pipeline config");
        if(j.contains("input"))
            o.input = base / j["input"].get<std::string>();
        if(j.contains("synth"))
            o.synth = synth_section(j, base);
        if(j.contains("projection"))
        {
            const auto& p = j["projection"];
            if(!(p.is_string() && p.get<std::string>() == "auto"))
            {
                ingest::ProjectionConfig cfg;
                cfg.origin_lat = p.at("origin_lat").get<double>();
                cfg.origin_lon = p.at("origin_lon").get<double>();
                cfg.earth_radius = p.value("earth_radius", cfg.earth_radius);
                ingest::require_valid(cfg);
                o.projection = cfg;
            }
        }
        o.min_separation = j.value("min_separation", o.min_separation);
        if(j.contains("bbox_margin"))
            o.bbox_margin = j["bbox_margin"].get<double>();
        o.grid_size = j.value("grid_size", o.grid_size);
        if(j.contains("metrics"))
        {
            std::string list;
            for(const auto& m : j["metrics"])
                list += m.get<std::string>() + ",";
            o.metrics = parse_metric_list(list);
        }
        if(j.contains("palettes"))
            for(const auto& [metric, name] : j["palettes"].items())
            {
                aggregate::require_metric(metric);
                o.palettes[metric] = render::parse_palette(name.get<std::string>());
            }
        if(j.contains("basemap"))
        {
            const auto& b = j["basemap"];
            o.basemap = geometry::BoundingBox{{b.at("min").at(0).get<double>(), b.at("min").at(1).get<double>()},
                                              {b.at("max").at(0).get<double>(), b.at("max").at(1).get<double>()}};
            geometry::require_valid(*o.basemap);
        }
        o.viewport_width = j.value("viewport_width", o.viewport_width);
        o.combined_svg = j.value("combined_svg", o.combined_svg);
        if(j.contains("out"))
            o.out_dir = base / j["out"].get<std::string>();
    }
    catch(const nlohmann::json::exception& e)
    {
        throw Error(Errc::InvalidConfig, e.what());
    }
    if(!(o.min_separation > 0) || !(o.grid_size > 0) || !(o.viewport_width > 0)
       || (o.bbox_margin && !(*o.bbox_margin > 0)))
        throw Error(Errc::InvalidConfig, "min_separation, grid_size, bbox_margin and viewport_width must be positive");
    return o;
}

// ---------------------------------------------------------------------------
// Stages

inline std::string stats_text(const ingest::DatasetStats& s, const ingest::Provenance& p)
{
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "source=%s\n"
                  "rows=%zu accepted=%zu rejected=%zu\n"
                  "users=%zu records=%zu self_reports=%zu\n"
                  "t_min_ms=%lld t_max_ms=%lld span_s=%.3f\n"
                  "lat_min=%.9f lat_max=%.9f lon_min=%.9f lon_max=%.9f\n"
                  "out_of_order=%zu\n",
                  p.source.c_str(), p.total_rows, p.accepted_rows, p.rejected_rows, s.users, s.records, s.self_reports,
                  static_cast<long long>(s.t_min_ms), static_cast<long long>(s.t_max_ms),
                  static_cast<double>(s.span_ms) / 1000.0, s.lat_min, s.lat_max, s.lon_min, s.lon_max, p.out_of_order);
    return buf;
}

struct Tessellation
{
    ingest::ProjectionConfig projection;
    std::vector<ingest::ProjectedRecord> records; ///< aligned with the dataset
    geometry::VoronoiDiagram diagram;
    std::vector<SiteId> assignment; ///< nearest site per record
    double min_separation = 0;
};

inline ingest::ProjectionConfig choose_projection(const Options& o, const ingest::Dataset& d)
{
    if(o.projection)
        return *o.projection;
    if(o.synth)
        return o.synth->script.origin; // keeps zone coordinates in the diagram frame
    return ingest::centroid_projection(d);
}

/// Thins the projected records to sites and partitions their envelope,
/// grown by the margin.
inline Tessellation tessellate(const ingest::Dataset& d, const ingest::ProjectionConfig& projection,
                               double min_separation, std::optional<double> margin = std::nullopt)
{
    if(d.empty())
        throw Error(Errc::EmptyInput, "no records to tessellate");
    Tessellation t;
    t.projection = projection;
    t.min_separation = min_separation;
    t.records = ingest::project(d, projection);
    const auto th = aggregate::thin_to_sites(t.records, {min_separation});
    std::vector<geometry::Point2> pts = aggregate::positions(std::span<const ingest::ProjectedRecord>(t.records));
    const geometry::BoundingBox box = geometry::envelope(pts).expanded(margin.value_or(min_separation));
    t.diagram = geometry::voronoi_partition(th.sites, box);
    t.assignment = th.assignment;
    return t;
}

/// Rebuilds the record assignment against a stored diagram.
inline Tessellation attach(const StoredDiagram& stored, const ingest::Dataset& d)
{
    Tessellation t;
    t.projection = stored.projection;
    t.min_separation = stored.min_separation;
    t.records = ingest::project(d, stored.projection);
    t.diagram = stored.diagram;
    const geometry::SiteLocator locator(t.diagram);
    t.assignment = aggregate::assign(aggregate::positions(std::span<const ingest::ProjectedRecord>(t.records)), locator);
    return t;
}

struct RenderedMetric
{
    std::string metric;
    std::vector<aggregate::CellAggregate> cells;
    render::Layer layer;
    std::string geojson;
    std::string svg;
    std::string grid_svg;
};

inline RenderedMetric render_metric(const Tessellation& t, const std::string& metric, const Options& o)
{
    RenderedMetric r;
    r.metric = metric;
    const std::span<const ingest::ProjectedRecord> recs(t.records);
    r.cells = aggregate::aggregate_by_cell(t.diagram, t.assignment, recs, metric);
    render::Palette palette;
    const auto it = o.palettes.find(metric);
    palette.kind = it != o.palettes.end() ? it->second : render::default_palette(metric);
    r.layer = render::build_layer(t.diagram, r.cells, palette, t.projection);
    if(r.layer.metric.empty())
    {
        r.layer.metric = metric;
        r.layer.units = render::metric_units(metric);
    }
    r.geojson = render::geojson_text(r.layer);
    const auto vp = render::viewport_for(t.diagram.bbox(), o.viewport_width);
    r.svg = render::emit_svg(std::span<const render::Layer>(&r.layer, 1), vp, o.basemap);

    // The grid covers the diagram and every record, anchored at the lower-left.
    std::vector<geometry::Point2> pts = aggregate::positions(recs);
    pts.push_back(t.diagram.bbox().min);
    pts.push_back(t.diagram.bbox().max);
    const auto spec = aggregate::make_grid_spec(geometry::envelope(pts), o.grid_size);
    const auto bins = aggregate::grid_bin(recs, spec, metric);
    r.grid_svg = render::emit_grid_heatmap(bins, spec, metric, render::viewport_for(spec.extent(), o.viewport_width));
    return r;
}

// ---------------------------------------------------------------------------
// Hotspots

struct HotspotReport
{
    std::size_t ranked_cells = 0;
    std::size_t decile_size = 0;
    std::vector<SiteId> top_decile; ///< ascending site_id
    std::set<SiteId> ground_truth;
    std::vector<SiteId> extra;
    std::vector<SiteId> missing;

    bool recovered() const { return extra.size() <= 1 && missing.empty(); }
};

/// The top decile is the ceil(n/10) cells with the highest mean, ties to the
/// lower site_id.
inline std::vector<SiteId> top_decile(const std::vector<aggregate::CellAggregate>& cells)
{
    std::vector<const aggregate::CellAggregate*> order;
    for(const auto& c : cells)
        order.push_back(&c);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
        if(a->mean != b->mean)
            return a->mean > b->mean;
        return a->site_id < b->site_id;
    });
    const std::size_t k = (cells.size() + 9) / 10;
    std::vector<SiteId> out;
    for(std::size_t i = 0; i < k; ++i)
        out.push_back(order[i]->site_id);
    std::sort(out.begin(), out.end());
    return out;
}

inline HotspotReport score_hotspots(const std::vector<aggregate::CellAggregate>& hr_cells, std::set<SiteId> truth)
{
    HotspotReport r;
    r.ranked_cells = hr_cells.size();
    r.top_decile = top_decile(hr_cells);
    r.decile_size = r.top_decile.size();
    r.ground_truth = std::move(truth);
    for(const SiteId id : r.top_decile)
        if(!r.ground_truth.count(id))
            r.extra.push_back(id);
    for(const SiteId id : r.ground_truth)
        if(!std::binary_search(r.top_decile.begin(), r.top_decile.end(), id))
            r.missing.push_back(id);
    return r;
}

inline std::string hotspot_text(const HotspotReport& r)
{
    nlohmann::ordered_json j;
    j["metric"] = "hr";
    j["ranked_cells"] = r.ranked_cells;
    j["decile_size"] = r.decile_size;
    j["top_decile"] = r.top_decile;
    j["ground_truth"] = std::vector<SiteId>(r.ground_truth.begin(), r.ground_truth.end());
    j["extra"] = r.extra;
    j["missing"] = r.missing;
    j["recovered"] = r.recovered();
    return j.dump(1) + "\n";
}

inline std::string groups_text(const aggregate::Grouping& g)
{
    nlohmann::ordered_json j;
    j["groups"] = nlohmann::ordered_json::array();
    for(const auto& grp : g.groups)
        j["groups"].push_back({{"site_id", grp.site_id}, {"members", grp.members}, {"dwell_seconds", grp.dwell_seconds}});
    j["too_short"] = g.too_short;
    return j.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Whole run

struct RunSummary
{
    ingest::DatasetStats stats;
    std::size_t rejected = 0;
    std::size_t sites = 0;
    std::vector<fs::path> written;
    std::optional<HotspotReport> hotspots;
};

/// Everything in one pass. All outputs are rendered in memory first and then
/// written atomically, so a failure leaves no partial final files.
inline RunSummary run(const Options& o)
{
    if(!o.input && !o.synth)
        throw Error(Errc::InvalidConfig, "config needs an input CSV or a synth section");
    ingest::Dataset dataset;
    std::vector<std::pair<fs::path, std::string>> files;
    RunSummary summary;
    if(o.synth)
    {
        dataset = synth::generate(*o.synth);
        files.emplace_back(o.out_dir / "records.csv", csv_text(dataset));
    }
    else
    {
        auto parsed = load_csv(*o.input);
        summary.rejected = parsed.rejections.size();
        dataset = std::move(parsed.dataset);
    }
    summary.stats = ingest::dataset_stats(dataset);
    files.emplace_back(o.out_dir / "stats.txt", stats_text(summary.stats, dataset.provenance()));

    const Tessellation t = tessellate(dataset, choose_projection(o, dataset), o.min_separation, o.bbox_margin);
    summary.sites = t.diagram.size();
    files.emplace_back(o.out_dir / "diagram.json", diagram_text(t.diagram, t.projection, t.min_separation));
    files.emplace_back(o.out_dir / "groups.json", groups_text(aggregate::group_users(dataset, t.assignment)));

    std::vector<render::Layer> layers;
    for(const auto& metric : o.metrics)
    {
        RenderedMetric r = render_metric(t, metric, o);
        files.emplace_back(o.out_dir / (metric + ".geojson"), std::move(r.geojson));
        files.emplace_back(o.out_dir / (metric + ".svg"), std::move(r.svg));
        files.emplace_back(o.out_dir / ("grid_" + metric + ".svg"), std::move(r.grid_svg));
        if(metric == "hr" && o.synth && !o.synth->zones.empty())
            summary.hotspots = score_hotspots(r.cells, synth::ground_truth(o.synth->zones, t.diagram));
        layers.push_back(std::move(r.layer));
    }
    if(o.combined_svg && !layers.empty())
        files.emplace_back(o.out_dir / "layers.svg",
                           render::emit_svg(layers, render::viewport_for(t.diagram.bbox(), o.viewport_width), o.basemap));
    if(summary.hotspots)
        files.emplace_back(o.out_dir / "hotspots.json", hotspot_text(*summary.hotspots));

    for(const auto& [path, text] : files)
    {
        write_file_atomic(path, text);
        summary.written.push_back(path);
    }
    return summary;
}

} // namespace urbanvor::pipeline
