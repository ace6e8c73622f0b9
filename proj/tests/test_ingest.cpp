#include "support/oracles.hpp"
#include "urbanvor/ingest.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace urbanvor;
using namespace urbanvor::ingest;

namespace {

ParseResult parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_csv(in, "test");
}

const std::string kHead = std::string(kHeader) + "\n";

} // namespace

TEST(ParseCsv, EmptyBody)
{
    const auto r = parse(kHead);
    EXPECT_EQ(r.dataset.size(), 0u);
    EXPECT_TRUE(r.rejections.empty());
    EXPECT_EQ(r.total_rows, 0u);
}

TEST(ParseCsv, LatOutOfRange)
{
    const auto r = parse(kHead + "1000,P01,91,0,,,,\n");
    EXPECT_EQ(r.dataset.size(), 0u);
    ASSERT_EQ(r.rejections.size(), 1u);
    EXPECT_EQ(r.rejections[0].reason, "lat out of range");
    EXPECT_EQ(format_rejection(r.rejections[0]), "row=1 reason=lat out of range");
}

TEST(ParseCsv, ParsesFullAndPartialRows)
{
    const auto r = parse(kHead + "2000,P02,52.5,-1.25,72.5,2.125,61.5,4\r\n"
                                 "1000,\"P,01\",52.4,-1.2,,,,\n");
    ASSERT_TRUE(r.rejections.empty());
    ASSERT_EQ(r.dataset.size(), 2u);
    const auto& a = r.dataset.records()[0];
    EXPECT_EQ(a.user_id, "P,01");
    EXPECT_FALSE(a.hr.has_value());
    EXPECT_FALSE(a.valence.has_value());
    const auto& b = r.dataset.records()[1];
    EXPECT_EQ(b.timestamp_ms, 2000);
    EXPECT_EQ(b.hr, 72.5);
    EXPECT_EQ(b.eda, 2.125);
    EXPECT_EQ(b.noise, 61.5);
    EXPECT_EQ(b.valence, 4);
}

TEST(ParseCsv, RejectionReasons)
{
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"0,P,1,1,,,,", "timestamp not positive"},
        {"x,P,1,1,,,,", "bad timestamp"},
        {"5,,1,1,,,,", "missing user_id"},
        {"5,P,1,181,,,,", "lon out of range"},
        {"5,P,1,1,20,,,", "hr out of range"},
        {"5,P,1,1,,0,,", "eda not positive"},
        {"5,P,1,1,,,,6", "valence out of range"},
        {"5,P,1,1,,,,3.5", "bad number in valence"},
        {"5,P,1,nan,,,,", "bad number in lon"},
        {"5,P,1,1,,,loud,", "bad number in noise"},
        {"5,P,1,1", "wrong field count 4"},
        {"", "wrong field count 1"},
        {"5,\"P,1,1,,,,", "unterminated quote"},
    };
    for(const auto& [row, reason] : cases)
    {
        const auto r = parse(kHead + row + "\n");
        ASSERT_EQ(r.rejections.size(), 1u) << row;
        EXPECT_EQ(r.rejections[0].reason, reason) << row;
        EXPECT_EQ(r.rejections[0].row, 1u);
    }
}

TEST(ParseCsv, RowNumbersSkipHeader)
{
    const auto r = parse(kHead + "1,P,1,1,,,,\n1,P,99,1,,,,\n2,P,1,1,,,,\n3,P,1,1,,,,9");
    EXPECT_EQ(r.total_rows, 4u);
    ASSERT_EQ(r.rejections.size(), 2u);
    EXPECT_EQ(r.rejections[0].row, 2u);
    EXPECT_EQ(r.rejections[1].row, 4u);
}

TEST(ParseCsv, HeaderErrors)
{
    for(const std::string text : {"", "a,b,c\n1,2,3\n", "timestamp_ms,user_id,lat,lon\n"})
    {
        try
        {
            parse(text);
            FAIL() << text;
        }
        catch(const Error& e)
        {
            EXPECT_EQ(e.code(), Errc::MissingHeader);
        }
    }
    // A BOM and CRLF header are accepted.
    EXPECT_NO_THROW(parse("\xEF\xBB\xBF" + std::string(kHeader) + "\r\n"));

    std::istringstream bad;
    bad.setstate(std::ios::badbit);
    try
    {
        parse_csv(bad);
        FAIL();
    }
    catch(const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::UnreadableStream);
    }
}

TEST(Dataset, SortsByUserThenTimeAndCountsLateSamples)
{
    const auto r = parse(kHead + "30,B,1,1,,,,\n10,A,1,1,,,,\n20,B,1,1,,,,\n40,B,1,1,,,,\n5,A,1,1,,,,\n");
    const auto& recs = r.dataset.records();
    ASSERT_EQ(recs.size(), 5u);
    EXPECT_EQ(recs[0].user_id, "A");
    EXPECT_EQ(recs[0].timestamp_ms, 5);
    EXPECT_EQ(recs[2].timestamp_ms, 20);
    EXPECT_EQ(r.dataset.provenance().out_of_order, 2u);
    ASSERT_EQ(r.dataset.traces().size(), 2u);
    EXPECT_EQ(r.dataset.traces()[1].user_id, "B");
    EXPECT_EQ(r.dataset.trace(r.dataset.traces()[1]).size(), 3u);
}

TEST(ParseCsv, WriteThenParseRoundTrips)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<SensorRecord> recs;
    for(int i = 0; i < 500; ++i)
    {
        SensorRecord r;
        r.timestamp_ms = 1 + i;
        r.user_id = i % 3 ? "P0" + std::to_string(i % 7) : "odd,\"id\"";
        r.lat = -90 + 180 * u(rng);
        r.lon = -180 + 360 * u(rng);
        if(i % 2)
            r.hr = 25 + 225 * u(rng);
        if(i % 3)
            r.eda = 1e-3 + u(rng);
        if(i % 5)
            r.noise = 100 * u(rng) - 20;
        if(i % 4 == 0)
            r.valence = 1 + i % 5;
        recs.push_back(r);
    }
    const Dataset d = Dataset::from_records(recs);
    std::ostringstream out;
    write_csv(out, d.records());
    const auto back = parse(out.str());
    ASSERT_TRUE(back.rejections.empty());
    EXPECT_EQ(back.dataset.records(), d.records());
}

// Property: fuzzed rows never crash, counts always balance, nothing accepted
// breaks an invariant.
TEST(ParseCsv, FuzzedRowsBalanceAndValidate)
{
    std::mt19937_64 rng(2024);
    const std::vector<std::string> pieces = {"",   "0",    "-1",   "1e308", "1e309", "nan", "inf", "91",  "-90",
                                             "45", "180",  "181",  "3",     "5",     "6",   "2.5", "\"",  "\"\"",
                                             ",",  "  12", "0x10", "+5",    "P01",   "\xff", "25", "250", "1e-300"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> nfields(0, 11);
    for(int round = 0; round < 50; ++round)
    {
        std::string text = kHead;
        std::size_t lines = 0;
        for(int i = 0; i < 400; ++i)
        {
            const int nf = nfields(rng);
            for(int f = 0; f < nf; ++f)
            {
                if(f)
                    text += ',';
                text += pieces[pick(rng)];
            }
            text += '\n';
            ++lines;
        }
        const auto r = parse(text);
        EXPECT_EQ(r.total_rows, lines);
        EXPECT_EQ(r.dataset.size() + r.rejections.size(), r.total_rows);
        for(const auto& rec : r.dataset.records())
        {
            EXPECT_EQ(validate(rec), "");
            EXPECT_TRUE(rec.lat >= -90 && rec.lat <= 90);
            EXPECT_TRUE(!rec.hr || (*rec.hr >= 25 && *rec.hr <= 250));
            EXPECT_TRUE(!rec.eda || *rec.eda > 0);
            EXPECT_TRUE(!rec.valence || (*rec.valence >= 1 && *rec.valence <= 5));
        }
    }
}

TEST(Project, OriginMapsToZero)
{
    const ProjectionConfig cfg{52.4068, -1.5197};
    const Point2 p = project(cfg.origin_lat, cfg.origin_lon, cfg);
    EXPECT_EQ(p.x, 0.0);
    EXPECT_EQ(p.y, 0.0);
    const LatLon o = unproject({0, 0}, cfg);
    EXPECT_EQ(o.lat, cfg.origin_lat);
    EXPECT_EQ(o.lon, cfg.origin_lon);
}

TEST(Project, NorthOffsetMatchesHaversine)
{
    const ProjectionConfig cfg{52.4068, -1.5197};
    const Point2 p = project(cfg.origin_lat + 0.001, cfg.origin_lon, cfg);
    EXPECT_EQ(p.x, 0.0);
    const double h = oracle::haversine(cfg.origin_lat, cfg.origin_lon, cfg.origin_lat + 0.001, cfg.origin_lon);
    EXPECT_NEAR(p.y / h, 1.0, 1e-3);
    EXPECT_NEAR(p.y, 111.19, 0.01);
}

TEST(Project, RoundTrips)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-179, 179), off(-0.02, 0.02), m(-5000, 5000);
    for(int i = 0; i < 10000; ++i)
    {
        const ProjectionConfig cfg{lat(rng), lon(rng)};
        const double la = cfg.origin_lat + off(rng), lo = cfg.origin_lon + off(rng);
        const LatLon back = unproject(project(la, lo, cfg), cfg);
        ASSERT_NEAR(back.lat, la, 1e-9);
        ASSERT_NEAR(back.lon, lo, 1e-9);
        // Meters through degrees and back: one ulp of a longitude near 180
        // is about 3e-9 m, so the 1e-9 m bound only holds nearer the
        // prime meridian.
        const ProjectionConfig near{cfg.origin_lat, cfg.origin_lon / 8};
        const Point2 q{m(rng), m(rng)};
        const LatLon g = unproject(q, near);
        const Point2 q2 = project(g.lat, g.lon, near);
        ASSERT_NEAR(q2.x, q.x, 1e-9);
        ASSERT_NEAR(q2.y, q.y, 1e-9);
    }
}

TEST(Project, DistanceFaithfulWithinTwoKilometres)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> lat(-60, 60), lon(-170, 170), ang(0, 2 * M_PI), rad(0, 2000);
    for(int i = 0; i < 5000; ++i)
    {
        const ProjectionConfig cfg{lat(rng), lon(rng)};
        LatLon pts[2];
        for(auto& g : pts)
        {
            const double a = ang(rng), r = rad(rng);
            g = unproject({r * std::cos(a), r * std::sin(a)}, cfg);
        }
        const double h = oracle::haversine(pts[0].lat, pts[0].lon, pts[1].lat, pts[1].lon);
        if(h < 1.0)
            continue;
        const double planar = geometry::distance(project(pts[0].lat, pts[0].lon, cfg), project(pts[1].lat, pts[1].lon, cfg));
        ASSERT_LT(std::abs(planar - h) / h, 1e-3) << i;
    }
}

TEST(Project, RejectsBadOrigin)
{
    EXPECT_THROW(project(Dataset{}, ProjectionConfig{95, 0}), Error);
    EXPECT_THROW(project(Dataset{}, ProjectionConfig{0, 0, -1}), Error);
}

TEST(DatasetStats, EmptyIsZero)
{
    EXPECT_EQ(dataset_stats(Dataset{}), DatasetStats{});
}

TEST(DatasetStats, CountsAndEnvelope)
{
    const auto r = parse(kHead + "10,A,1,2,,,,3\n30,B,-1,5,,,,\n20,A,4,-2,,,,1\n");
    const auto s = dataset_stats(r.dataset);
    EXPECT_EQ(s.users, 2u);
    EXPECT_EQ(s.records, 3u);
    EXPECT_EQ(s.self_reports, 2u);
    EXPECT_EQ(s.t_min_ms, 10);
    EXPECT_EQ(s.span_ms, 20);
    EXPECT_EQ(s.lat_min, -1);
    EXPECT_EQ(s.lat_max, 4);
    EXPECT_EQ(s.lon_min, -2);
    EXPECT_EQ(s.lon_max, 5);
}

TEST(DatasetStats, ConcatenationAdds)
{
    const auto a = parse(kHead + "10,A,1,2,,,,3\n30,B,-1,5,,,,\n").dataset;
    const auto b = parse(kHead + "10,C,1,2,,,,3\n30,C,-1,5,,,,2\n40,D,0,0,,,,\n").dataset;
    const auto sa = dataset_stats(a), sb = dataset_stats(b), sc = dataset_stats(concat(a, b));
    EXPECT_EQ(sc.records, sa.records + sb.records);
    EXPECT_EQ(sc.self_reports, sa.self_reports + sb.self_reports);
    EXPECT_EQ(sc.users, sa.users + sb.users);
}
