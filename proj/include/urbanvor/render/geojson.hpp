#pragma once

// RFC 7946 FeatureCollection output for layers, plus a validator used by the
// CLI and tests on the reparsed text.

#include "urbanvor/render/layer.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace urbanvor::render {

using Json = nlohmann::ordered_json;

/// One Polygon feature per entry, exterior ring closed and counter-clockwise
/// in (lon, lat).
inline Json emit_geojson(const Layer& layer)
{
    Json features = Json::array();
    for(const auto& e : layer.entries)
    {
        Json ring = Json::array();
        for(const auto& g : e.ring)
            ring.push_back({g.lon, g.lat});
        if(!e.ring.empty())
            ring.push_back({e.ring.front().lon, e.ring.front().lat});
        Json feature;
        feature["type"] = "Feature";
        feature["geometry"] = {{"type", "Polygon"}, {"coordinates", Json::array({ring})}};
        feature["properties"] = {{"metric", layer.metric},
                                 {"value", e.value},
                                 {"count", e.count},
                                 {"color", e.color.hex()},
                                 {"site_id", e.site_id}};
        features.push_back(std::move(feature));
    }
    Json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = std::move(features);
    return doc;
}

inline std::string geojson_text(const Layer& layer) { return emit_geojson(layer).dump() + "\n"; }

/// Returns a list of problems; empty means every ring is closed, has at least
/// four positions and winds counter-clockwise.
inline std::vector<std::string> validate_geojson(const Json& doc)
{
    std::vector<std::string> problems;
    if(!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features")
       || !doc["features"].is_array())
    {
        problems.push_back("not a FeatureCollection");
        return problems;
    }
    std::size_t i = 0;
    for(const auto& f : doc["features"])
    {
        const std::string where = "feature " + std::to_string(i++);
        if(!f.is_object() || f.value("type", "") != "Feature" || !f.contains("geometry"))
        {
            problems.push_back(where + ": not a Feature");
            continue;
        }
        const auto& g = f["geometry"];
        if(g.value("type", "") != "Polygon" || !g.contains("coordinates") || !g["coordinates"].is_array()
           || g["coordinates"].empty())
        {
            problems.push_back(where + ": not a Polygon");
            continue;
        }
        const auto& ring = g["coordinates"][0];
        if(!ring.is_array() || ring.size() < 4)
        {
            problems.push_back(where + ": ring has fewer than 4 positions");
            continue;
        }
        bool numeric = true;
        for(const auto& p : ring)
            numeric = numeric && p.is_array() && p.size() >= 2 && p[0].is_number() && p[1].is_number();
        if(!numeric)
        {
            problems.push_back(where + ": bad position");
            continue;
        }
        if(ring.front()[0] != ring.back()[0] || ring.front()[1] != ring.back()[1])
            problems.push_back(where + ": ring not closed");
        const double x0 = ring[0][0].get<double>(), y0 = ring[0][1].get<double>();
        double area = 0;
        for(std::size_t k = 0; k + 1 < ring.size(); ++k)
        {
            const double ax = ring[k][0].get<double>() - x0, ay = ring[k][1].get<double>() - y0;
            const double bx = ring[k + 1][0].get<double>() - x0, by = ring[k + 1][1].get<double>() - y0;
            area += ax * by - ay * bx;
        }
        if(!(area > 0))
            problems.push_back(where + ": exterior ring not counter-clockwise");
    }
    return problems;
}

} // namespace urbanvor::render
