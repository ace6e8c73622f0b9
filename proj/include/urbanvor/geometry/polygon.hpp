#pragma once

#include "urbanvor/geometry/types.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace urbanvor::geometry {

/// Shoelace signed area; positive for counter-clockwise rings.
inline double signed_area(const Ring& ring)
{
    const std::size_t n = ring.size();
    if(n < 3)
        return 0.0;
    // Translate to the first vertex to limit cancellation on large coordinates.
    const Point2 o = ring[0];
    double twice = 0.0;
    for(std::size_t i = 1; i + 1 < n; ++i)
        twice += cross(ring[i] - o, ring[i + 1] - o);
    return 0.5 * twice;
}

inline double polygon_area(const Ring& ring)
{
    if(ring.size() < 3)
        throw Error(Errc::DegeneratePolygon, "polygon needs at least 3 vertices");
    return signed_area(ring);
}

/// Half-plane { x : dot(x - origin, normal) <= 0 } tagged with the id of the
/// boundary it introduces.
struct HalfPlane
{
    Point2 origin;
    Point2 normal;
    std::int64_t tag = 0;

    double eval(Point2 p) const { return dot(p - origin, normal); }
};

/// Ring whose edge i (from vertex i to vertex i+1) carries tags[i].
struct TaggedRing
{
    Ring vertices;
    std::vector<std::int64_t> tags;
};

/// Boundary tags for the four box sides (bottom, right, top, left).
inline constexpr std::int64_t kBoxBottom = -1;
inline constexpr std::int64_t kBoxRight = -2;
inline constexpr std::int64_t kBoxTop = -3;
inline constexpr std::int64_t kBoxLeft = -4;

inline bool is_box_tag(std::int64_t tag) { return tag <= kBoxBottom && tag >= kBoxLeft; }

inline TaggedRing tagged_box(const BoundingBox& box)
{
    return {box.ring(), {kBoxBottom, kBoxRight, kBoxTop, kBoxLeft}};
}

/// One Sutherland-Hodgman pass. Output edges keep the tag of the input edge
/// they lie on; edges created along the clip line take the half-plane tag.
inline TaggedRing clip(const TaggedRing& poly, const HalfPlane& h)
{
    TaggedRing out;
    const std::size_t n = poly.vertices.size();
    if(n == 0)
        return out;
    out.vertices.reserve(n + 1);
    out.tags.reserve(n + 1);
    for(std::size_t i = 0; i < n; ++i)
    {
        const Point2 s = poly.vertices[i];
        const Point2 e = poly.vertices[(i + 1) % n];
        const double ds = h.eval(s);
        const double de = h.eval(e);
        const bool s_in = ds <= 0.0;
        const bool e_in = de <= 0.0;
        if(s_in)
        {
            out.vertices.push_back(s);
            if(e_in)
            {
                out.tags.push_back(poly.tags[i]);
            }
            else
            {
                const double t = ds / (ds - de);
                out.tags.push_back(poly.tags[i]);
                out.vertices.push_back(s + t * (e - s));
                out.tags.push_back(h.tag);
            }
        }
        else if(e_in)
        {
            const double t = ds / (ds - de);
            out.vertices.push_back(s + t * (e - s));
            out.tags.push_back(poly.tags[i]);
        }
    }
    return out;
}

/// Drops vertices closer than tol to their successor, keeping the successor.
inline void remove_near_duplicates(TaggedRing& poly, double tol)
{
    bool changed = true;
    while(changed && poly.vertices.size() > 1)
    {
        changed = false;
        const std::size_t n = poly.vertices.size();
        for(std::size_t i = 0; i < n; ++i)
        {
            const std::size_t j = (i + 1) % n;
            if(distance(poly.vertices[i], poly.vertices[j]) <= tol)
            {
                poly.vertices.erase(poly.vertices.begin() + static_cast<std::ptrdiff_t>(i));
                poly.tags.erase(poly.tags.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    if(poly.vertices.size() < 3)
    {
        poly.vertices.clear();
        poly.tags.clear();
    }
}

/// Intersection of a simple CCW polygon with the box; empty when disjoint.
inline Ring clip_polygon(const Ring& poly, const BoundingBox& box)
{
    require_valid(box);
    TaggedRing ring{poly, std::vector<std::int64_t>(poly.size(), 0)};
    ring = clip(ring, {box.min, {0.0, -1.0}, kBoxBottom});
    ring = clip(ring, {box.max, {1.0, 0.0}, kBoxRight});
    ring = clip(ring, {box.max, {0.0, 1.0}, kBoxTop});
    ring = clip(ring, {box.min, {-1.0, 0.0}, kBoxLeft});
    remove_near_duplicates(ring, 0.0);
    return ring.vertices;
}

/// Closed point-in-convex-polygon test (boundary counts as inside).
inline bool convex_contains(const Ring& ring, Point2 p, double tol = 0.0)
{
    const std::size_t n = ring.size();
    if(n < 3)
        return false;
    for(std::size_t i = 0; i < n; ++i)
    {
        const Point2 a = ring[i];
        const Point2 b = ring[(i + 1) % n];
        const Point2 ab = b - a;
        const double len = std::sqrt(dot(ab, ab));
        if(len == 0.0)
            continue;
        if(cross(ab, p - a) / len < -tol)
            return false;
    }
    return true;
}

inline double point_segment_distance_sq(Point2 p, Point2 a, Point2 b)
{
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance_sq(p, a + t * ab);
}

/// True when the closed convex polygon and the closed disc share a point.
inline bool convex_intersects_disc(const Ring& ring, Point2 center, double radius)
{
    if(ring.size() < 3)
        return false;
    if(convex_contains(ring, center))
        return true;
    const double r2 = radius * radius;
    for(std::size_t i = 0; i < ring.size(); ++i)
        if(point_segment_distance_sq(center, ring[i], ring[(i + 1) % ring.size()]) <= r2)
            return true;
    return false;
}

/// Liang-Barsky test: does the parametric piece p + t*d, t in [t0, t1]
/// (t1 may be +infinity), touch the closed box?
inline bool ray_segment_hits_box(Point2 p, Point2 d, double t0, double t1, const BoundingBox& box)
{
    const double pd[2] = {p.x, p.y};
    const double dd[2] = {d.x, d.y};
    const double lo[2] = {box.min.x, box.min.y};
    const double hi[2] = {box.max.x, box.max.y};
    for(int axis = 0; axis < 2; ++axis)
    {
        if(dd[axis] == 0.0)
        {
            if(pd[axis] < lo[axis] || pd[axis] > hi[axis])
                return false;
            continue;
        }
        double ta = (lo[axis] - pd[axis]) / dd[axis];
        double tb = (hi[axis] - pd[axis]) / dd[axis];
        if(ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if(t0 > t1)
            return false;
    }
    return true;
}

} // namespace urbanvor::geometry
