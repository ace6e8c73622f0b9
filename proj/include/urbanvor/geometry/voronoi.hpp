#pragma once

#include "urbanvor/geometry/delaunay.hpp"
#include "urbanvor/geometry/polygon.hpp"
#include "urbanvor/geometry/types.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace urbanvor::geometry {

struct VoronoiCell
{
    SiteId site_id = 0;
    Point2 site;
    /// Counter-clockwise and implicitly closed (first vertex not repeated).
    Ring polygon;
    /// edge_tags[i] labels the edge polygon[i] -> polygon[i+1]: the site id
    /// across it, or one of the negative kBox* tags.
    std::vector<std::int64_t> edge_tags;
    double area = 0.0;
    /// Sorted; sites whose dual Delaunay edge reaches the box.
    std::vector<SiteId> neighbors;
};

/// Clipped Voronoi partition of a bounding box.
class VoronoiDiagram
{
public:
    VoronoiDiagram() = default;

    VoronoiDiagram(BoundingBox bbox, std::vector<VoronoiCell> cells)
        : m_bbox(bbox)
        , m_cells(std::move(cells))
    {
        for(std::size_t i = 0; i < m_cells.size(); ++i)
            m_index.emplace(m_cells[i].site_id, i);
    }

    const BoundingBox& bbox() const { return m_bbox; }
    const std::vector<VoronoiCell>& cells() const { return m_cells; }
    std::size_t size() const { return m_cells.size(); }

    bool contains_site(SiteId id) const { return m_index.count(resolve(id)) != 0; }

    /// Cell for a site id; merged duplicates resolve to their surviving site.
    const VoronoiCell& cell(SiteId id) const
    {
        const auto it = m_index.find(resolve(id));
        if(it == m_index.end())
            throw Error(Errc::UnknownSite, "site " + std::to_string(id) + " not in diagram");
        return m_cells[it->second];
    }

    std::size_t cell_index(SiteId id) const
    {
        const auto it = m_index.find(resolve(id));
        if(it == m_index.end())
            throw Error(Errc::UnknownSite, "site " + std::to_string(id) + " not in diagram");
        return it->second;
    }

    std::vector<GeneratorSite> sites() const
    {
        std::vector<GeneratorSite> out;
        out.reserve(m_cells.size());
        for(const auto& c : m_cells)
            out.push_back({c.site_id, c.site});
        return out;
    }

    /// Duplicate site id -> surviving site id.
    const std::map<SiteId, SiteId>& aliases() const { return m_aliases; }
    /// Sites discarded because they lie outside the box.
    const std::vector<SiteId>& dropped() const { return m_dropped; }
    const std::optional<DelaunayTriangulation>& triangulation() const { return m_triangulation; }

    void set_aliases(std::map<SiteId, SiteId> aliases) { m_aliases = std::move(aliases); }
    void set_dropped(std::vector<SiteId> dropped) { m_dropped = std::move(dropped); }
    void set_triangulation(std::optional<DelaunayTriangulation> t) { m_triangulation = std::move(t); }

private:
    SiteId resolve(SiteId id) const
    {
        const auto it = m_aliases.find(id);
        return it == m_aliases.end() ? id : it->second;
    }

    BoundingBox m_bbox;
    std::vector<VoronoiCell> m_cells;
    std::unordered_map<SiteId, std::size_t> m_index;
    std::map<SiteId, SiteId> m_aliases;
    std::vector<SiteId> m_dropped;
    std::optional<DelaunayTriangulation> m_triangulation;
};

/// Id of a nearest site under the Euclidean metric; ties go to the smallest
/// site id. This is the direct cell-membership predicate.
inline SiteId cell_membership(Point2 x, std::span<const GeneratorSite> sites)
{
    if(sites.empty())
        throw Error(Errc::EmptySites, "cell_membership needs at least one site");
    SiteId best = sites[0].site_id;
    double best_d2 = distance_sq(x, sites[0].position);
    for(const auto& s : sites.subspan(1))
    {
        const double d2 = distance_sq(x, s.position);
        if(d2 < best_d2 || (d2 == best_d2 && s.site_id < best))
        {
            best = s.site_id;
            best_d2 = d2;
        }
    }
    return best;
}

inline double cell_area(const VoronoiCell& cell) { return polygon_area(cell.polygon); }

inline const std::vector<SiteId>& neighbors(const VoronoiDiagram& diagram, SiteId id)
{
    return diagram.cell(id).neighbors;
}

/// Merges sites with identical positions into the lowest id. Returns the
/// survivors in input order and fills aliases (dropped id -> survivor id).
inline std::vector<GeneratorSite> dedup_sites(std::span<const GeneratorSite> sites,
                                              std::map<SiteId, SiteId>* aliases = nullptr)
{
    std::vector<std::size_t> order(sites.size());
    for(std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = sites[a];
        const auto& pb = sites[b];
        if(pa.position.x != pb.position.x)
            return pa.position.x < pb.position.x;
        if(pa.position.y != pb.position.y)
            return pa.position.y < pb.position.y;
        return pa.site_id < pb.site_id;
    });
    std::vector<bool> keep(sites.size(), true);
    std::size_t group = 0;
    for(std::size_t k = 1; k < order.size(); ++k)
    {
        const std::size_t cur = order[k];
        if(sites[cur].position == sites[order[group]].position)
        {
            keep[cur] = false;
            if(aliases)
                (*aliases)[sites[cur].site_id] = sites[order[group]].site_id;
        }
        else
        {
            group = k;
        }
    }
    std::vector<GeneratorSite> out;
    out.reserve(sites.size());
    for(std::size_t i = 0; i < sites.size(); ++i)
        if(keep[i])
            out.push_back(sites[i]);
    return out;
}

namespace detail {

inline HalfPlane bisector(Point2 own, Point2 other, SiteId other_id)
{
    return {0.5 * (own + other), other - own, other_id};
}

inline VoronoiCell build_cell(const GeneratorSite& site, std::span<const GeneratorSite> clip_sites,
                              const BoundingBox& box, double tol)
{
    VoronoiCell cell;
    cell.site_id = site.site_id;
    cell.site = site.position;
    TaggedRing ring = tagged_box(box);
    for(const auto& other : clip_sites)
        ring = clip(ring, bisector(site.position, other.position, other.site_id));
    remove_near_duplicates(ring, tol);
    cell.polygon = std::move(ring.vertices);
    cell.edge_tags = std::move(ring.tags);
    cell.area = signed_area(cell.polygon);
    return cell;
}

inline double box_tolerance(const BoundingBox& box) { return std::max(kTolerance, 1e-12 * box.diagonal()); }

} // namespace detail

/// Voronoi partition of box by the given sites.
///
/// Sites outside the box are dropped and the partition is rebuilt from the
/// rest; sites at identical positions merge into the lowest id. One, two or
/// collinear sites are partitioned directly by bisector slabs; otherwise
/// each cell is the box clipped by the bisectors of its Delaunay neighbors.
inline VoronoiDiagram voronoi_partition(std::span<const GeneratorSite> sites, const BoundingBox& box)
{
    require_valid(box);
    std::vector<GeneratorSite> inside;
    std::vector<SiteId> dropped;
    std::set<SiteId> seen;
    for(const auto& s : sites)
    {
        if(!seen.insert(s.site_id).second)
            throw Error(Errc::InvalidArgument, "duplicate site_id " + std::to_string(s.site_id));
        if(!is_finite(s.position))
            throw Error(Errc::InvalidArgument, "site coordinates must be finite");
        if(box.contains(s.position))
            inside.push_back(s);
        else
            dropped.push_back(s.site_id);
    }
    if(inside.empty())
        throw Error(Errc::NoSitesInBox, "no site lies inside the bounding box");

    std::map<SiteId, SiteId> aliases;
    const std::vector<GeneratorSite> kept = dedup_sites(inside, &aliases);
    const double tol = detail::box_tolerance(box);

    std::vector<VoronoiCell> cells;
    cells.reserve(kept.size());
    std::optional<DelaunayTriangulation> dt;

    if(kept.size() >= 3)
    {
        try
        {
            dt.emplace(kept);
        }
        catch(const Error& e)
        {
            if(e.code() != Errc::AllCollinear)
                throw;
        }
    }

    if(dt)
    {
        // Neighbors whose dual edge (segment between circumcenters, or a ray
        // for hull edges) reaches the box.
        std::vector<std::vector<SiteId>> visible(kept.size());
        const auto& tris = dt->triangles();
        const auto& vidx = dt->vertex_indices();
        const auto& adj = dt->adjacency();
        const BoundingBox grown = box.expanded(tol);
        for(std::size_t t = 0; t < tris.size(); ++t)
        {
            for(int k = 0; k < 3; ++k)
            {
                const std::int32_t other = adj[t][k];
                if(other >= 0 && static_cast<std::size_t>(other) < t)
                    continue;
                const std::uint32_t a = vidx[t][detail::next(k)];
                const std::uint32_t b = vidx[t][detail::prev(k)];
                const Point2 c0 = tris[t].circumcenter;
                bool hits;
                if(other >= 0)
                {
                    hits = ray_segment_hits_box(c0, tris[other].circumcenter - c0, 0.0, 1.0, grown);
                }
                else
                {
                    // Hull edge a -> b with the triangle on its left: the
                    // Voronoi ray points to the right.
                    const Point2 ab = kept[b].position - kept[a].position;
                    hits = ray_segment_hits_box(c0, {ab.y, -ab.x}, 0.0, std::numeric_limits<double>::infinity(), grown);
                }
                if(hits)
                {
                    visible[a].push_back(kept[b].site_id);
                    visible[b].push_back(kept[a].site_id);
                }
            }
        }
        std::vector<GeneratorSite> clip_sites;
        for(std::uint32_t i = 0; i < kept.size(); ++i)
        {
            clip_sites.clear();
            for(const std::uint32_t j : dt->neighbor_indices(i))
                clip_sites.push_back(kept[j]);
            VoronoiCell cell = detail::build_cell(kept[i], clip_sites, box, tol);
            std::sort(visible[i].begin(), visible[i].end());
            visible[i].erase(std::unique(visible[i].begin(), visible[i].end()), visible[i].end());
            cell.neighbors = std::move(visible[i]);
            cells.push_back(std::move(cell));
        }
    }
    else
    {
        // Direct slab partition: sort along the common line; neighbors are
        // consecutive sites and every bisector crosses the box.
        std::vector<std::size_t> order(kept.size());
        for(std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const Point2 pa = kept[a].position;
            const Point2 pb = kept[b].position;
            return pa.x != pb.x ? pa.x < pb.x : pa.y < pb.y;
        });
        std::vector<std::size_t> rank(kept.size());
        for(std::size_t r = 0; r < order.size(); ++r)
            rank[order[r]] = r;
        for(std::size_t i = 0; i < kept.size(); ++i)
        {
            std::vector<GeneratorSite> clip_sites;
            const std::size_t r = rank[i];
            if(r > 0)
                clip_sites.push_back(kept[order[r - 1]]);
            if(r + 1 < order.size())
                clip_sites.push_back(kept[order[r + 1]]);
            std::sort(clip_sites.begin(), clip_sites.end(),
                      [](const auto& a, const auto& b) { return a.site_id < b.site_id; });
            VoronoiCell cell = detail::build_cell(kept[i], clip_sites, box, tol);
            for(const auto& s : clip_sites)
                cell.neighbors.push_back(s.site_id);
            cells.push_back(std::move(cell));
        }
    }

    VoronoiDiagram diagram(box, std::move(cells));
    diagram.set_aliases(std::move(aliases));
    diagram.set_dropped(std::move(dropped));
    diagram.set_triangulation(std::move(dt));
    return diagram;
}

/// Uniform-grid nearest-site index with the same answer (including the
/// lowest-id tie-break) as cell_membership.
class SiteLocator
{
public:
    explicit SiteLocator(std::vector<GeneratorSite> sites)
        : m_sites(std::move(sites))
    {
        if(m_sites.empty())
            throw Error(Errc::EmptySites, "locator needs at least one site");
        std::vector<Point2> pts;
        pts.reserve(m_sites.size());
        for(const auto& s : m_sites)
            pts.push_back(s.position);
        m_box = envelope(pts);
        const double w = std::max(m_box.width(), 1e-9);
        const double h = std::max(m_box.height(), 1e-9);
        const double target = std::sqrt(w * h / static_cast<double>(m_sites.size()));
        m_cell = std::max({target, w / 4096.0, h / 4096.0, 1e-9});
        m_cols = static_cast<int>(w / m_cell) + 1;
        m_rows = static_cast<int>(h / m_cell) + 1;
        m_offset.assign(static_cast<std::size_t>(m_cols) * m_rows + 1, 0);
        std::vector<std::size_t> bucket(m_sites.size());
        for(std::size_t i = 0; i < m_sites.size(); ++i)
        {
            bucket[i] = flat(col_of(m_sites[i].position.x), row_of(m_sites[i].position.y));
            ++m_offset[bucket[i] + 1];
        }
        for(std::size_t b = 1; b < m_offset.size(); ++b)
            m_offset[b] += m_offset[b - 1];
        m_items.resize(m_sites.size());
        std::vector<std::uint32_t> fill(m_offset.begin(), m_offset.end() - 1);
        for(std::size_t i = 0; i < m_sites.size(); ++i)
            m_items[fill[bucket[i]]++] = static_cast<std::uint32_t>(i);
    }

    explicit SiteLocator(const VoronoiDiagram& diagram)
        : SiteLocator(diagram.sites())
    {}

    const std::vector<GeneratorSite>& sites() const { return m_sites; }

    SiteId nearest(Point2 q) const
    {
        const int qc = std::clamp(col_of(q.x), 0, m_cols - 1);
        const int qr = std::clamp(row_of(q.y), 0, m_rows - 1);
        SiteId best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        const int max_ring = std::max(m_cols, m_rows);
        for(int ring = 0; ring <= max_ring; ++ring)
        {
            const int c0 = qc - ring, c1 = qc + ring, r0 = qr - ring, r1 = qr + ring;
            for(int r = std::max(r0, 0); r <= std::min(r1, m_rows - 1); ++r)
            {
                const bool edge_row = (r == r0 || r == r1);
                for(int c = std::max(c0, 0); c <= std::min(c1, m_cols - 1); ++c)
                {
                    if(!edge_row && c != c0 && c != c1)
                        continue;
                    const std::size_t b = flat(c, r);
                    for(std::uint32_t k = m_offset[b]; k < m_offset[b + 1]; ++k)
                    {
                        const auto& s = m_sites[m_items[k]];
                        const double d2 = distance_sq(q, s.position);
                        if(d2 < best_d2 || (d2 == best_d2 && s.site_id < best))
                        {
                            best = s.site_id;
                            best_d2 = d2;
                        }
                    }
                }
            }
            // Points not yet visited lie outside the searched block.
            const double x_lo = m_box.min.x + c0 * m_cell, x_hi = m_box.min.x + (c1 + 1) * m_cell;
            const double y_lo = m_box.min.y + r0 * m_cell, y_hi = m_box.min.y + (r1 + 1) * m_cell;
            if(c0 <= 0 && r0 <= 0 && c1 >= m_cols - 1 && r1 >= m_rows - 1)
                break;
            if(q.x >= x_lo && q.x <= x_hi && q.y >= y_lo && q.y <= y_hi)
            {
                double gap = std::numeric_limits<double>::infinity();
                if(c0 > 0)
                    gap = std::min(gap, q.x - x_lo);
                if(c1 < m_cols - 1)
                    gap = std::min(gap, x_hi - q.x);
                if(r0 > 0)
                    gap = std::min(gap, q.y - y_lo);
                if(r1 < m_rows - 1)
                    gap = std::min(gap, y_hi - q.y);
                if(best_d2 < gap * gap)
                    break;
            }
        }
        return best;
    }

private:
    int col_of(double x) const { return static_cast<int>(std::floor((x - m_box.min.x) / m_cell)); }
    int row_of(double y) const { return static_cast<int>(std::floor((y - m_box.min.y) / m_cell)); }
    std::size_t flat(int c, int r) const
    {
        c = std::clamp(c, 0, m_cols - 1);
        r = std::clamp(r, 0, m_rows - 1);
        return static_cast<std::size_t>(r) * m_cols + c;
    }

    std::vector<GeneratorSite> m_sites;
    BoundingBox m_box;
    double m_cell = 1.0;
    int m_cols = 1;
    int m_rows = 1;
    std::vector<std::uint32_t> m_offset;
    std::vector<std::uint32_t> m_items;
};

} // namespace urbanvor::geometry
