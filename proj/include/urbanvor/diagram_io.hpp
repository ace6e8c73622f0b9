#pragma once

// Persisted tessellation so stages can run separately. Schema:
//
//   {
//     "format": "urbanvor-diagram/1",
//     "projection": {"origin_lat": deg, "origin_lon": deg, "earth_radius": m},
//     "min_separation": m,
//     "bbox": {"min": [x, y], "max": [x, y]},
//     "sites": [{"site_id": int, "position": [x, y]}, ...],
//     "cells": [{"site_id": int, "ring": [[x, y], ...], "edge_tags": [int, ...],
//                "area": m2, "neighbors": [int, ...]}, ...],
//     "aliases": [[merged_id, kept_id], ...],
//     "dropped": [int, ...]
//   }
//
// Coordinates are planar metres in the stated projection. Rings are CCW and
// not repeated at the end. edge_tags[i] names what lies across the edge from
// ring[i] to ring[i+1]: a neighbour site_id, or -1..-4 for the bottom, right,
// top and left box sides.

#include "urbanvor/error.hpp"
#include "urbanvor/geometry/voronoi.hpp"
#include "urbanvor/ingest.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace urbanvor {

struct StoredDiagram
{
    geometry::VoronoiDiagram diagram;
    ingest::ProjectionConfig projection;
    double min_separation = 0;
};

inline constexpr const char* kDiagramFormat = "urbanvor-diagram/1";

inline nlohmann::ordered_json diagram_to_json(const geometry::VoronoiDiagram& d, const ingest::ProjectionConfig& proj,
                                              double min_separation)
{
    using J = nlohmann::ordered_json;
    const auto pt = [](geometry::Point2 p) { return J::array({p.x, p.y}); };
    J j;
    j["format"] = kDiagramFormat;
    j["projection"] = {{"origin_lat", proj.origin_lat}, {"origin_lon", proj.origin_lon}, {"earth_radius", proj.earth_radius}};
    j["min_separation"] = min_separation;
    j["bbox"] = {{"min", pt(d.bbox().min)}, {"max", pt(d.bbox().max)}};
    J sites = J::array(), cells = J::array();
    for(const auto& c : d.cells())
    {
        sites.push_back({{"site_id", c.site_id}, {"position", pt(c.site)}});
        J ring = J::array();
        for(const auto& p : c.polygon)
            ring.push_back(pt(p));
        cells.push_back({{"site_id", c.site_id},
                         {"ring", std::move(ring)},
                         {"edge_tags", c.edge_tags},
                         {"area", c.area},
                         {"neighbors", c.neighbors}});
    }
    j["sites"] = std::move(sites);
    j["cells"] = std::move(cells);
    J aliases = J::array();
    for(const auto& [from, to] : d.aliases())
        aliases.push_back(J::array({from, to}));
    j["aliases"] = std::move(aliases);
    j["dropped"] = d.dropped();
    return j;
}

inline std::string diagram_text(const geometry::VoronoiDiagram& d, const ingest::ProjectionConfig& proj,
                                double min_separation)
{
    return diagram_to_json(d, proj, min_separation).dump(1) + "\n";
}

inline StoredDiagram diagram_from_json(const nlohmann::json& j)
{
    try
    {
        if(j.value("format", "") != kDiagramFormat)
            throw Error(Errc::InvalidConfig, "not an urbanvor diagram (format key)");
        const auto pt = [](const nlohmann::json& a) { return geometry::Point2{a.at(0).get<double>(), a.at(1).get<double>()}; };
        StoredDiagram out;
        const auto& p = j.at("projection");
        out.projection = {p.at("origin_lat").get<double>(), p.at("origin_lon").get<double>(), p.at("earth_radius").get<double>()};
        ingest::require_valid(out.projection);
        out.min_separation = j.value("min_separation", 0.0);
        const geometry::BoundingBox box{pt(j.at("bbox").at("min")), pt(j.at("bbox").at("max"))};
        geometry::require_valid(box);
        std::map<geometry::SiteId, geometry::Point2> positions;
        for(const auto& s : j.at("sites"))
            positions[s.at("site_id").get<geometry::SiteId>()] = pt(s.at("position"));
        std::vector<geometry::VoronoiCell> cells;
        for(const auto& c : j.at("cells"))
        {
            geometry::VoronoiCell cell;
            cell.site_id = c.at("site_id").get<geometry::SiteId>();
            const auto it = positions.find(cell.site_id);
            if(it == positions.end())
                throw Error(Errc::InvalidConfig, "cell without a site: " + std::to_string(cell.site_id));
            cell.site = it->second;
            for(const auto& v : c.at("ring"))
                cell.polygon.push_back(pt(v));
            cell.edge_tags = c.at("edge_tags").get<std::vector<std::int64_t>>();
            cell.area = c.at("area").get<double>();
            cell.neighbors = c.at("neighbors").get<std::vector<geometry::SiteId>>();
            if(cell.edge_tags.size() != cell.polygon.size())
                throw Error(Errc::InvalidConfig, "edge_tags and ring sizes differ");
            cells.push_back(std::move(cell));
        }
        out.diagram = geometry::VoronoiDiagram(box, std::move(cells));
        std::map<geometry::SiteId, geometry::SiteId> aliases;
        for(const auto& a : j.value("aliases", nlohmann::json::array()))
            aliases[a.at(0).get<geometry::SiteId>()] = a.at(1).get<geometry::SiteId>();
        out.diagram.set_aliases(std::move(aliases));
        out.diagram.set_dropped(j.value("dropped", std::vector<geometry::SiteId>{}));
        return out;
    }
    catch(const nlohmann::json::exception& e)
    {
        throw Error(Errc::InvalidConfig, std::string("malformed diagram: ") + e.what());
    }
}

} // namespace urbanvor
