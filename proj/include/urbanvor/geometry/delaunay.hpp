#pragma once

#include "urbanvor/geometry/predicates.hpp"
#include "urbanvor/geometry/types.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace urbanvor::geometry {

/// Output triangle; vertices are site ids in counter-clockwise order.
struct Triangle
{
    std::array<SiteId, 3> vertices{};
    Point2 circumcenter;
    double circumradius_sq = 0.0;
};

/// Point equidistant from a, b and c. Throws Errc::Collinear if the three
/// points are collinear (exact test).
inline Point2 circumcenter(Point2 a, Point2 b, Point2 c)
{
    if(orient2d(a, b, c) == Orientation::Collinear)
        throw Error(Errc::Collinear, "circumcenter of collinear points");
    const Point2 ab = b - a;
    const Point2 ac = c - a;
    const double ab2 = dot(ab, ab);
    const double ac2 = dot(ac, ac);
    const double d = 2.0 * cross(ab, ac);
    return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
}

namespace detail {

inline constexpr std::uint32_t kGhost = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::int32_t kNoTriangle = -1;

constexpr int next(int k) { return k == 2 ? 0 : k + 1; }
constexpr int prev(int k) { return k == 0 ? 2 : k - 1; }

// Triangle of the working mesh. Vertices are indices into the site array or
// kGhost; neighbor[k] is the triangle across the edge opposite vertex k.
// A ghost triangle (u, v, ghost) stands for the unbounded region to the left
// of the hull edge u -> v.
struct MeshTriangle
{
    std::array<std::uint32_t, 3> v{};
    std::array<std::int32_t, 3> neighbor{kNoTriangle, kNoTriangle, kNoTriangle};
    bool alive = true;

    bool is_ghost() const { return v[0] == kGhost || v[1] == kGhost || v[2] == kGhost; }
    int index_of(std::uint32_t vertex) const
    {
        for(int k = 0; k < 3; ++k)
            if(v[k] == vertex)
                return k;
        return -1;
    }
    /// Slot of the directed edge a -> b, i.e. the index of the opposite vertex.
    int edge_slot(std::uint32_t a, std::uint32_t b) const
    {
        for(int k = 0; k < 3; ++k)
            if(v[next(k)] == a && v[prev(k)] == b)
                return k;
        return -1;
    }
    int index_of_neighbor(std::int32_t t) const
    {
        for(int k = 0; k < 3; ++k)
            if(neighbor[k] == t)
                return k;
        return -1;
    }
};

inline std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order)
{
    std::uint64_t d = 0;
    for(std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1)
    {
        const std::uint32_t rx = (x & s) ? 1 : 0;
        const std::uint32_t ry = (y & s) ? 1 : 0;
        d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
        if(ry == 0)
        {
            if(rx == 1)
            {
                x = s - 1 - (x & (s - 1)) + (x & ~(s - 1));
                y = s - 1 - (y & (s - 1)) + (y & ~(s - 1));
                x &= (s << 1) - 1;
                y &= (s << 1) - 1;
            }
            std::swap(x, y);
        }
    }
    return d;
}

/// Deterministic Hilbert-curve insertion order (stable on input index).
inline std::vector<std::uint32_t> spatial_order(std::span<const GeneratorSite> sites)
{
    constexpr int kOrder = 16;
    std::vector<Point2> pts;
    pts.reserve(sites.size());
    for(const auto& s : sites)
        pts.push_back(s.position);
    const BoundingBox box = envelope(pts);
    const double span = std::max({box.width(), box.height(), 1e-300});
    const double cells = static_cast<double>((1u << kOrder) - 1);
    std::vector<std::uint64_t> key(sites.size());
    for(std::size_t i = 0; i < sites.size(); ++i)
    {
        const auto qx = static_cast<std::uint32_t>((pts[i].x - box.min.x) / span * cells);
        const auto qy = static_cast<std::uint32_t>((pts[i].y - box.min.y) / span * cells);
        key[i] = hilbert_index(qx, qy, kOrder);
    }
    std::vector<std::uint32_t> order(sites.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return key[a] < key[b]; });
    return order;
}

} // namespace detail

/// Delaunay triangulation of a deduplicated site set.
///
/// Built by Bowyer-Watson insertion in Hilbert order with a symbolic vertex
/// at infinity, so the result always covers the convex hull exactly. Where
/// four or more sites are cocircular, every ambiguous quadrilateral keeps the
/// diagonal incident to its lowest site id. The output depends only on the
/// input order.
class DelaunayTriangulation
{
public:
    explicit DelaunayTriangulation(std::vector<GeneratorSite> sites)
        : m_sites(std::move(sites))
    {
        if(m_sites.size() < 3)
            throw Error(Errc::TooFewSites, "triangulation needs at least 3 sites");
        for(const auto& s : m_sites)
            if(!is_finite(s.position))
                throw Error(Errc::InvalidArgument, "site coordinates must be finite");
        build();
        apply_cocircular_tie_break();
        extract();
    }

    const std::vector<GeneratorSite>& sites() const { return m_sites; }
    const std::vector<Triangle>& triangles() const { return m_triangles; }

    /// adjacency()[t][k]: index of the triangle across the edge opposite
    /// vertex k of triangle t, or -1 on the convex hull.
    const std::vector<std::array<std::int32_t, 3>>& adjacency() const { return m_adjacency; }

    /// Triangle vertices as indices into sites().
    const std::vector<std::array<std::uint32_t, 3>>& vertex_indices() const { return m_vertex_indices; }

    /// Sorted indices of the sites joined to site index i by an edge.
    std::vector<std::uint32_t> neighbor_indices(std::uint32_t i) const
    {
        std::vector<std::uint32_t> out;
        for(std::uint32_t k = m_vertex_offset[i]; k < m_vertex_offset[i + 1]; ++k)
            out.push_back(m_vertex_neighbors[k]);
        return out;
    }

private:
    using MeshTriangle = detail::MeshTriangle;

    Point2 pos(std::uint32_t v) const { return m_sites[v].position; }

    std::int32_t add_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c)
    {
        MeshTriangle t;
        t.v = {a, b, c};
        if(!m_free.empty())
        {
            const std::int32_t idx = m_free.back();
            m_free.pop_back();
            m_mesh[idx] = t;
            return idx;
        }
        m_mesh.push_back(t);
        m_mark.push_back(0);
        return static_cast<std::int32_t>(m_mesh.size() - 1);
    }

    bool in_conflict(const MeshTriangle& t, std::uint32_t p) const
    {
        const int g = t.index_of(detail::kGhost);
        const Point2 q = pos(p);
        if(g < 0)
            return incircle(pos(t.v[0]), pos(t.v[1]), pos(t.v[2]), q) == CirclePosition::Inside;
        const Point2 a = pos(t.v[detail::next(g)]);
        const Point2 b = pos(t.v[detail::prev(g)]);
        const Orientation o = orient2d(a, b, q);
        if(o == Orientation::CCW)
            return true;
        if(o == Orientation::CW)
            return false;
        // On the hull line: conflicts only when strictly inside the segment.
        return dot(q - a, b - a) > 0.0 && dot(q - b, a - b) > 0.0;
    }

    void link_by_edges(std::span<const std::int32_t> tris)
    {
        for(const std::int32_t t : tris)
            for(int k = 0; k < 3; ++k)
            {
                const std::uint32_t u = m_mesh[t].v[detail::next(k)];
                const std::uint32_t w = m_mesh[t].v[detail::prev(k)];
                for(const std::int32_t s : tris)
                {
                    if(s == t)
                        continue;
                    const int iu = m_mesh[s].index_of(u);
                    const int iw = m_mesh[s].index_of(w);
                    if(iu >= 0 && iw >= 0 && detail::next(iw) == iu)
                        m_mesh[t].neighbor[k] = s;
                }
            }
    }

    std::int32_t locate(std::uint32_t p)
    {
        const Point2 q = pos(p);
        std::int32_t t = m_hint;
        const std::size_t max_steps = 4 * m_mesh.size() + 64;
        int rotate = 0;
        for(std::size_t step = 0; step < max_steps; ++step)
        {
            const MeshTriangle& tri = m_mesh[t];
            if(tri.is_ghost())
                return t;
            bool moved = false;
            for(int j = 0; j < 3; ++j)
            {
                const int k = (j + rotate) % 3;
                const Point2 a = pos(tri.v[detail::next(k)]);
                const Point2 b = pos(tri.v[detail::prev(k)]);
                if(orient2d(a, b, q) == Orientation::CW)
                {
                    t = tri.neighbor[k];
                    moved = true;
                    break;
                }
            }
            if(!moved)
                return t;
            rotate = (rotate + 1) % 3;
        }
        for(std::size_t i = 0; i < m_mesh.size(); ++i)
            if(m_mesh[i].alive && in_conflict(m_mesh[i], p))
                return static_cast<std::int32_t>(i);
        throw Error(Errc::InvalidArgument, "point location failed (duplicate site?)");
    }

    void insert(std::uint32_t p)
    {
        const std::int32_t start = locate(p);
        if(!in_conflict(m_mesh[start], p))
            throw Error(Errc::InvalidArgument, "duplicate site position");

        ++m_stamp;
        m_cavity.clear();
        m_boundary.clear();
        m_stack.clear();
        m_stack.push_back(start);
        m_mark[start] = m_stamp;
        while(!m_stack.empty())
        {
            const std::int32_t t = m_stack.back();
            m_stack.pop_back();
            m_cavity.push_back(t);
            for(int k = 0; k < 3; ++k)
            {
                const std::int32_t nb = m_mesh[t].neighbor[k];
                if(m_mark[nb] == m_stamp)
                    continue;
                if(in_conflict(m_mesh[nb], p))
                {
                    m_mark[nb] = m_stamp;
                    m_stack.push_back(nb);
                }
                else
                {
                    m_boundary.push_back({m_mesh[t].v[detail::next(k)], m_mesh[t].v[detail::prev(k)], nb});
                }
            }
        }

        for(const std::int32_t t : m_cavity)
        {
            m_mesh[t].alive = false;
            m_free.push_back(t);
        }

        m_created.clear();
        for(const BoundaryEdge& e : m_boundary)
        {
            const std::int32_t nt = add_triangle(e.u, e.w, p);
            m_mesh[nt].neighbor[2] = e.outside;
            MeshTriangle& outside = m_mesh[e.outside];
            outside.neighbor[outside.edge_slot(e.w, e.u)] = nt;
            m_created.push_back(nt);
        }
        // New triangles (u, w, p) form a fan around p: the edge (w, p) is
        // shared with the triangle starting at w.
        for(const std::int32_t nt : m_created)
        {
            for(const std::int32_t other : m_created)
            {
                if(m_mesh[other].v[0] == m_mesh[nt].v[1])
                {
                    m_mesh[nt].neighbor[0] = other;
                    m_mesh[other].neighbor[1] = nt;
                }
            }
            if(!m_mesh[nt].is_ghost())
                m_hint = nt;
        }
    }

    void build()
    {
        const std::vector<std::uint32_t> order = detail::spatial_order(m_sites);
        const std::uint32_t a = order[0];
        const std::uint32_t b = order[1];
        std::size_t third = 2;
        while(third < order.size()
              && orient2d(pos(a), pos(b), pos(order[third])) == Orientation::Collinear)
            ++third;
        if(third == order.size())
            throw Error(Errc::AllCollinear, "all sites are collinear");
        std::uint32_t c = order[third];
        std::uint32_t b2 = b;
        if(orient2d(pos(a), pos(b2), pos(c)) == Orientation::CW)
            std::swap(b2, c);

        const std::array<std::int32_t, 4> init = {
            add_triangle(a, b2, c),
            add_triangle(b2, a, detail::kGhost),
            add_triangle(c, b2, detail::kGhost),
            add_triangle(a, c, detail::kGhost),
        };
        link_by_edges(init);
        m_hint = init[0];

        for(std::size_t i = 2; i < order.size(); ++i)
            if(i != third)
                insert(order[i]);
    }

    void replace_neighbor(std::int32_t t, std::int32_t from, std::int32_t to)
    {
        if(t == detail::kNoTriangle)
            return;
        MeshTriangle& tri = m_mesh[t];
        tri.neighbor[tri.index_of_neighbor(from)] = to;
    }

    // Flips the edge opposite vertex k of triangle t.
    void flip(std::int32_t t, int k)
    {
        const std::int32_t u = m_mesh[t].neighbor[k];
        const std::uint32_t r = m_mesh[t].v[k];
        const std::uint32_t p = m_mesh[t].v[detail::next(k)];
        const std::uint32_t q = m_mesh[t].v[detail::prev(k)];
        const std::int32_t across_qr = m_mesh[t].neighbor[detail::next(k)];
        const std::int32_t across_rp = m_mesh[t].neighbor[detail::prev(k)];
        const int j = m_mesh[u].index_of_neighbor(t);
        const std::uint32_t s = m_mesh[u].v[j];
        const std::int32_t across_ps = m_mesh[u].neighbor[detail::next(j)];
        const std::int32_t across_sq = m_mesh[u].neighbor[detail::prev(j)];

        m_mesh[t].v = {r, p, s};
        m_mesh[t].neighbor = {across_ps, u, across_rp};
        m_mesh[u].v = {r, s, q};
        m_mesh[u].neighbor = {across_sq, across_qr, t};
        replace_neighbor(across_qr, t, u);
        replace_neighbor(across_ps, u, t);
    }

    void apply_cocircular_tie_break()
    {
        // Each flip replaces an edge by one whose lower endpoint id is
        // strictly smaller, so the loop terminates.
        bool changed = true;
        while(changed)
        {
            changed = false;
            for(std::size_t ti = 0; ti < m_mesh.size(); ++ti)
            {
                const auto t = static_cast<std::int32_t>(ti);
                if(!m_mesh[t].alive || m_mesh[t].is_ghost())
                    continue;
                for(int k = 0; k < 3; ++k)
                {
                    const std::int32_t u = m_mesh[t].neighbor[k];
                    if(u < t || m_mesh[u].is_ghost())
                        continue;
                    const MeshTriangle& tri = m_mesh[t];
                    const std::uint32_t r = tri.v[k];
                    const std::uint32_t p = tri.v[detail::next(k)];
                    const std::uint32_t q = tri.v[detail::prev(k)];
                    const std::uint32_t s = m_mesh[u].v[m_mesh[u].index_of_neighbor(t)];
                    if(incircle(pos(r), pos(p), pos(q), pos(s)) != CirclePosition::On)
                        continue;
                    const SiteId keep = std::min(m_sites[p].site_id, m_sites[q].site_id);
                    const SiteId other = std::min(m_sites[r].site_id, m_sites[s].site_id);
                    if(other < keep)
                    {
                        flip(t, k);
                        changed = true;
                        break;
                    }
                }
            }
        }
    }

    void extract()
    {
        std::vector<std::int32_t> remap(m_mesh.size(), detail::kNoTriangle);
        for(std::size_t i = 0; i < m_mesh.size(); ++i)
        {
            const MeshTriangle& t = m_mesh[i];
            if(!t.alive || t.is_ghost())
                continue;
            remap[i] = static_cast<std::int32_t>(m_triangles.size());
            Triangle out;
            for(int k = 0; k < 3; ++k)
                out.vertices[k] = m_sites[t.v[k]].site_id;
            out.circumcenter = circumcenter(pos(t.v[0]), pos(t.v[1]), pos(t.v[2]));
            out.circumradius_sq = distance_sq(out.circumcenter, pos(t.v[0]));
            m_triangles.push_back(out);
            m_vertex_indices.push_back(t.v);
        }
        m_adjacency.reserve(m_triangles.size());
        for(std::size_t i = 0; i < m_mesh.size(); ++i)
        {
            if(remap[i] == detail::kNoTriangle)
                continue;
            std::array<std::int32_t, 3> adj{};
            for(int k = 0; k < 3; ++k)
                adj[k] = remap[m_mesh[i].neighbor[k]];
            m_adjacency.push_back(adj);
        }

        // Vertex adjacency in CSR form, each edge once per endpoint.
        std::vector<std::vector<std::uint32_t>> nbrs(m_sites.size());
        for(std::size_t t = 0; t < m_vertex_indices.size(); ++t)
            for(int k = 0; k < 3; ++k)
            {
                const std::uint32_t u = m_vertex_indices[t][k];
                const std::uint32_t w = m_vertex_indices[t][detail::next(k)];
                nbrs[u].push_back(w);
                nbrs[w].push_back(u);
            }
        m_vertex_offset.assign(m_sites.size() + 1, 0);
        for(std::size_t i = 0; i < nbrs.size(); ++i)
        {
            auto& list = nbrs[i];
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
            m_vertex_offset[i + 1] = m_vertex_offset[i] + static_cast<std::uint32_t>(list.size());
        }
        m_vertex_neighbors.reserve(m_vertex_offset.back());
        for(const auto& list : nbrs)
            m_vertex_neighbors.insert(m_vertex_neighbors.end(), list.begin(), list.end());

        m_mesh = {};
        m_mark = {};
        m_free = {};
    }

    struct BoundaryEdge
    {
        std::uint32_t u;
        std::uint32_t w;
        std::int32_t outside;
    };

    std::vector<GeneratorSite> m_sites;
    std::vector<Triangle> m_triangles;
    std::vector<std::array<std::int32_t, 3>> m_adjacency;
    std::vector<std::array<std::uint32_t, 3>> m_vertex_indices;
    std::vector<std::uint32_t> m_vertex_offset;
    std::vector<std::uint32_t> m_vertex_neighbors;

    std::vector<MeshTriangle> m_mesh;
    std::vector<std::uint32_t> m_mark;
    std::vector<std::int32_t> m_free;
    std::vector<std::int32_t> m_cavity;
    std::vector<std::int32_t> m_stack;
    std::vector<std::int32_t> m_created;
    std::vector<BoundaryEdge> m_boundary;
    std::uint32_t m_stamp = 0;
    std::int32_t m_hint = 0;
};

/// Throws TooFewSites or AllCollinear for inputs that have no triangulation.
inline DelaunayTriangulation triangulate(std::vector<GeneratorSite> sites)
{
    return DelaunayTriangulation(std::move(sites));
}

} // namespace urbanvor::geometry
