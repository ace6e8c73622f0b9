#include "support/oracles.hpp"
#include "urbanvor/geometry.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace urbanvor;
using namespace urbanvor::geometry;

namespace {

const BoundingBox kUnit{{0, 0}, {1, 1}};

double total_area(const VoronoiDiagram& d)
{
    double a = 0;
    for(const auto& c : d.cells())
        a += cell_area(c);
    return a;
}

bool has(const std::vector<SiteId>& v, SiteId id) { return std::find(v.begin(), v.end(), id) != v.end(); }

} // namespace

TEST(CellArea, Examples)
{
    VoronoiCell square;
    square.polygon = kUnit.ring();
    EXPECT_DOUBLE_EQ(cell_area(square), 1.0);

    const auto d = voronoi_partition(std::vector<GeneratorSite>{{0, {3, 2}}}, {{0, 0}, {10, 5}});
    EXPECT_DOUBLE_EQ(cell_area(d.cells()[0]), 50.0);

    VoronoiCell degenerate;
    degenerate.polygon = {{0, 0}, {1, 0}};
    try
    {
        cell_area(degenerate);
        FAIL();
    }
    catch(const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::DegeneratePolygon);
    }
}

TEST(CellMembership, Examples)
{
    const std::vector<GeneratorSite> sites = {{7, {1, 0}}, {3, {-1, 0}}, {5, {0, 10}}};
    EXPECT_EQ(cell_membership({1, 0}, sites), 7);
    EXPECT_EQ(cell_membership({0, 0}, sites), 3);
    EXPECT_EQ(cell_membership({0, 9}, sites), 5);
    EXPECT_THROW(cell_membership({0, 0}, std::vector<GeneratorSite>{}), Error);
}

TEST(CellMembership, MatchesIndependentScan)
{
    std::mt19937_64 rng(100);
    const auto sites = oracle::random_sites(rng, 100);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    for(int i = 0; i < 20000; ++i)
    {
        const Point2 q{u(rng), u(rng)};
        ASSERT_EQ(cell_membership(q, sites), oracle::nearest_site(q, sites));
    }
}

TEST(SiteLocator, AgreesWithCellMembership)
{
    std::mt19937_64 rng(101);
    for(std::size_t n : {1u, 2u, 17u, 500u})
    {
        auto sites = oracle::random_sites(rng, n);
        // Clustered sites stress the uniform grid.
        for(std::size_t i = 0; i < n / 2; ++i)
            sites[i].position = 0.01 * sites[i].position + Point2{0.5, 0.5};
        const SiteLocator locator(sites);
        std::uniform_real_distribution<double> u(-0.5, 1.5);
        for(int i = 0; i < 5000; ++i)
        {
            const Point2 q{u(rng), u(rng)};
            ASSERT_EQ(locator.nearest(q), cell_membership(q, sites));
        }
        for(const auto& s : sites)
            ASSERT_EQ(locator.nearest(s.position), cell_membership(s.position, sites));
    }
}

TEST(ClipPolygon, Examples)
{
    const Ring inside = {{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.9}};
    EXPECT_EQ(clip_polygon(inside, kUnit), inside);

    const Ring corner = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    const Ring q = clip_polygon(corner, kUnit);
    EXPECT_DOUBLE_EQ(signed_area(q), 1.0);
    EXPECT_DOUBLE_EQ(signed_area(clip_polygon(corner, {{0, 0}, {4, 4}})), 1.0);

    EXPECT_TRUE(clip_polygon({{2, 2}, {3, 2}, {3, 3}}, kUnit).empty());
}

TEST(ClipPolygon, RandomConvexMatchesRasterArea)
{
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI);
    for(int trial = 0; trial < 20; ++trial)
    {
        // Convex polygon: points on an ellipse at sorted angles.
        const Point2 c{u(rng), u(rng)};
        const double rx = 0.3 + 0.5 * std::abs(u(rng)), ry = 0.3 + 0.5 * std::abs(u(rng));
        std::vector<double> angles(8);
        for(double& a : angles)
            a = ang(rng);
        std::sort(angles.begin(), angles.end());
        Ring poly;
        for(double a : angles)
            poly.push_back({c.x + rx * std::cos(a), c.y + ry * std::sin(a)});
        const Ring clipped = clip_polygon(poly, kUnit);
        // Raster oracle: 1000x1000 pixel centers inside both.
        const int n = 1000;
        long hits = 0;
        for(int i = 0; i < n; ++i)
            for(int j = 0; j < n; ++j)
            {
                const Point2 p{(i + 0.5) / n, (j + 0.5) / n};
                hits += oracle::point_in_polygon(poly, p);
            }
        const double raster = double(hits) / (double(n) * n);
        const double area = clipped.empty() ? 0.0 : signed_area(clipped);
        if(raster > 0.05)
            EXPECT_NEAR(area / raster, 1.0, 0.005) << trial;
        else
            EXPECT_NEAR(area, raster, 0.0005) << trial;
    }
}

TEST(VoronoiPartition, SingleSiteIsWholeBox)
{
    const auto d = voronoi_partition(std::vector<GeneratorSite>{{4, {0.3, 0.9}}}, kUnit);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_DOUBLE_EQ(d.cells()[0].area, 1.0);
    EXPECT_TRUE(d.cells()[0].neighbors.empty());
}

TEST(VoronoiPartition, TwoSitesSplitAtBisector)
{
    const auto d = voronoi_partition(std::vector<GeneratorSite>{{0, {0.25, 0.5}}, {1, {0.75, 0.5}}}, kUnit);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d.cell(0).area, 0.5);
    EXPECT_DOUBLE_EQ(d.cell(1).area, 0.5);
    for(const Point2 p : d.cell(0).polygon)
        EXPECT_LE(p.x, 0.5);
    EXPECT_EQ(neighbors(d, 0), std::vector<SiteId>{1});
    EXPECT_EQ(neighbors(d, 1), std::vector<SiteId>{0});
}

TEST(VoronoiPartition, CollinearSitesUseSlabs)
{
    std::vector<GeneratorSite> sites;
    for(int i = 0; i < 6; ++i)
        sites.push_back({10 - i, {0.0625 + 0.125 * i, 0.03125 + 0.125 * i}});
    const auto d = voronoi_partition(sites, kUnit);
    ASSERT_EQ(d.size(), 6u);
    EXPECT_FALSE(d.triangulation().has_value());
    EXPECT_NEAR(total_area(d), 1.0, 1e-12);
    EXPECT_EQ(neighbors(d, 10), std::vector<SiteId>{9});
    EXPECT_EQ(neighbors(d, 8), (std::vector<SiteId>{7, 9}));
}

TEST(VoronoiPartition, DuplicatesMergeIntoLowestId)
{
    const std::vector<GeneratorSite> sites = {
        {5, {0.2, 0.2}}, {2, {0.2, 0.2}}, {9, {0.8, 0.3}}, {1, {0.5, 0.8}}, {3, {0.8, 0.3}}};
    const auto d = voronoi_partition(sites, kUnit);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d.aliases().at(5), 2);
    EXPECT_EQ(d.aliases().at(9), 3);
    EXPECT_EQ(&d.cell(5), &d.cell(2));
    EXPECT_NEAR(total_area(d), 1.0, 1e-12);
}

TEST(VoronoiPartition, SitesOutsideBoxAreDropped)
{
    const std::vector<GeneratorSite> sites = {{0, {0.2, 0.2}}, {1, {1.5, 0.5}}, {2, {0.8, 0.8}}};
    const auto d = voronoi_partition(sites, kUnit);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.dropped(), std::vector<SiteId>{1});
    EXPECT_FALSE(d.contains_site(1));
    EXPECT_THROW(d.cell(1), Error);
}

TEST(VoronoiPartition, Errors)
{
    try
    {
        voronoi_partition(std::vector<GeneratorSite>{{0, {2, 2}}}, kUnit);
        FAIL();
    }
    catch(const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::NoSitesInBox);
    }
    try
    {
        voronoi_partition(std::vector<GeneratorSite>{{0, {0, 0}}}, {{1, 0}, {0, 1}});
        FAIL();
    }
    catch(const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::InvalidBox);
    }
    try
    {
        voronoi_partition(std::vector<GeneratorSite>{{3, {0.2, 0.2}}, {3, {0.7, 0.7}}}, kUnit);
        FAIL();
    }
    catch(const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::InvalidArgument);
    }
    const auto d = voronoi_partition(std::vector<GeneratorSite>{{0, {0.5, 0.5}}}, kUnit);
    try
    {
        neighbors(d, 42);
        FAIL();
    }
    catch(const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::UnknownSite);
    }
}

TEST(VoronoiPartition, SquareCornersInLargeBox)
{
    const std::vector<GeneratorSite> sites = {{0, {0, 0}}, {1, {1, 0}}, {2, {1, 1}}, {3, {0, 1}}};
    const auto d = voronoi_partition(sites, {{-10, -10}, {11, 11}});
    // The diagonal 0-2 survives the tie-break, so 0 and 2 see everyone.
    EXPECT_EQ(neighbors(d, 0), (std::vector<SiteId>{1, 2, 3}));
    EXPECT_EQ(neighbors(d, 2), (std::vector<SiteId>{0, 1, 3}));
    EXPECT_EQ(neighbors(d, 1), (std::vector<SiteId>{0, 2}));
    EXPECT_EQ(neighbors(d, 3), (std::vector<SiteId>{0, 2}));
    EXPECT_NEAR(total_area(d), 21.0 * 21.0, 1e-9);
}

TEST(VoronoiPartition, RandomPartitionInvariants)
{
    std::mt19937_64 rng(77);
    for(std::size_t n : {3u, 10u, 100u, 1000u})
    {
        const auto sites = oracle::random_sites(rng, n);
        const auto d = voronoi_partition(sites, kUnit);
        ASSERT_EQ(d.size(), n);
        EXPECT_NEAR(total_area(d), 1.0, 1e-9);
        for(const auto& c : d.cells())
        {
            EXPECT_GT(c.area, 0.0);
            // The site lies in its own cell.
            EXPECT_TRUE(convex_contains(c.polygon, c.site, 1e-12));
            for(const SiteId j : c.neighbors)
                EXPECT_TRUE(has(neighbors(d, j), c.site_id)) << c.site_id << " " << j;
        }
        // Every vertex of a cell is at least as close to its own site as to
        // any other site (Eq. 1 on the boundary).
        for(const auto& c : d.cells())
            for(const Point2 v : c.polygon)
            {
                const double own = distance(v, c.site);
                const auto [d1, d2] = oracle::two_nearest(v, sites);
                EXPECT_LE(own, d1 + 1e-9);
            }
    }
}

TEST(VoronoiPartition, SharedEdgesAreBisectors)
{
    std::mt19937_64 rng(78);
    const auto sites = oracle::random_sites(rng, 300);
    const auto d = voronoi_partition(sites, kUnit);
    std::size_t checked = 0;
    for(const auto& c : d.cells())
    {
        const std::size_t n = c.polygon.size();
        for(std::size_t i = 0; i < n; ++i)
        {
            const std::int64_t tag = c.edge_tags[i];
            if(is_box_tag(tag))
                continue;
            const Point2 a = c.polygon[i], b = c.polygon[(i + 1) % n];
            const Point2 e = b - a;
            const Point2 s = d.cell(tag).site - c.site;
            EXPECT_TRUE(has(c.neighbors, tag));
            EXPECT_NEAR(dot(e, s) / (std::hypot(e.x, e.y) * std::hypot(s.x, s.y)), 0.0, 1e-9);
            const Point2 mid = 0.5 * (a + b);
            EXPECT_NEAR(distance(mid, c.site), distance(mid, d.cell(tag).site), 1e-9);
            ++checked;
        }
    }
    EXPECT_GT(checked, 600u);
}

TEST(VoronoiPartition, DeterministicOutput)
{
    std::mt19937_64 rng(79);
    const auto sites = oracle::random_sites(rng, 400);
    const auto a = voronoi_partition(sites, kUnit);
    const auto b = voronoi_partition(sites, kUnit);
    ASSERT_EQ(a.size(), b.size());
    for(std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a.cells()[i].polygon, b.cells()[i].polygon);
        EXPECT_EQ(a.cells()[i].neighbors, b.cells()[i].neighbors);
        EXPECT_EQ(a.cells()[i].edge_tags, b.cells()[i].edge_tags);
    }
}
