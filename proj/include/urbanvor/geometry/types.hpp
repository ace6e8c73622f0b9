#pragma once

#include "urbanvor/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace urbanvor::geometry {

/// Geometric equality tolerance, meters.
inline constexpr double kTolerance = 1e-9;

using SiteId = std::int64_t;

/// Planar point in the local metric frame (meters).
struct Point2
{
    double x = 0.0;
    double y = 0.0;

    friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

inline constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline constexpr double distance_sq(Point2 a, Point2 b) { return dot(a - b, a - b); }
inline double distance(Point2 a, Point2 b) { return std::sqrt(distance_sq(a, b)); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

struct GeneratorSite
{
    SiteId site_id = 0;
    Point2 position;

    friend constexpr bool operator==(const GeneratorSite&, const GeneratorSite&) = default;
};

using Ring = std::vector<Point2>;

/// Axis-aligned clip region. Cells of the diagram partition exactly this box.
struct BoundingBox
{
    Point2 min;
    Point2 max;

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    double area() const { return width() * height(); }
    double diagonal() const { return std::hypot(width(), height()); }

    bool valid() const
    {
        return is_finite(min) && is_finite(max) && min.x < max.x && min.y < max.y;
    }

    bool contains(Point2 p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }

    BoundingBox expanded(double margin) const
    {
        return {{min.x - margin, min.y - margin}, {max.x + margin, max.y + margin}};
    }

    /// CCW ring starting at the min corner.
    Ring ring() const { return {min, {max.x, min.y}, max, {min.x, max.y}}; }

    friend constexpr bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline void require_valid(const BoundingBox& box)
{
    if(!box.valid())
        throw Error(Errc::InvalidBox, "bounding box must be finite with min < max");
}

/// Tight envelope; the result may be degenerate (zero width or height).
inline BoundingBox envelope(const std::vector<Point2>& points)
{
    if(points.empty())
        return {};
    BoundingBox box{points.front(), points.front()};
    for(const Point2& p : points)
    {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
    }
    return box;
}

} // namespace urbanvor::geometry
