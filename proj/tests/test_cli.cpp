// Drives the built urbanvor binary end to end.

#include "urbanvor/pipeline.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

using namespace urbanvor;
namespace fs = std::filesystem;

namespace {

struct Result
{
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path kWork = fs::temp_directory_path() / "urbanvor_cli_test";

Result run(const std::string& args)
{
    fs::create_directories(kWork);
    const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
    const std::string cmd = std::string(URBANVOR_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = pipeline::read_file(out);
    r.err = pipeline::read_file(err);
    return r;
}

std::set<std::string> listing(const fs::path& dir)
{
    std::set<std::string> out;
    for(const auto& e : fs::directory_iterator(dir))
        out.insert(e.path().filename().string());
    return out;
}

fs::path fresh(const std::string& name)
{
    const fs::path p = kWork / name;
    fs::remove_all(p);
    return p;
}

fs::path config(const std::string& name) { return fs::path(URBANVOR_SOURCE_DIR) / "configs" / name; }

void write(const fs::path& p, const std::string& text) { pipeline::write_file_atomic(p, text); }

const char* kHeader = "timestamp_ms,user_id,lat,lon,hr,eda,noise,valence\n";

} // namespace

TEST(Cli, MissingConfigFailsWithoutOutput)
{
    const fs::path out = fresh("missing");
    for(const char* cmd : {"synth", "pipeline"})
    {
        const auto r = run(std::string(cmd) + " --config " + (kWork / "no_such.json").string() + " --out " + out.string());
        EXPECT_NE(r.code, 0) << cmd;
        EXPECT_TRUE(r.out.empty()) << cmd;
        EXPECT_NE(r.err.find("not found"), std::string::npos) << r.err;
        EXPECT_FALSE(fs::exists(out)) << cmd;
    }
}

TEST(Cli, RejectsBadFlags)
{
    EXPECT_NE(run("").code, 0);
    EXPECT_NE(run("frobnicate").code, 0);
    const fs::path out = fresh("badmetric");
    const auto r = run("pipeline --config " + config("hotspot.json").string() + " --metrics pulse --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, SynthFullScaleIsReproducibleAndCountsMatchFile)
{
    const fs::path a = fresh("synth_a"), b = fresh("synth_b");
    const auto ra = run("synth --config " + config("full_scale.json").string() + " --seed 7 --out " + a.string());
    ASSERT_EQ(ra.code, 0) << ra.err;
    EXPECT_NE(ra.out.find("users=40"), std::string::npos) << ra.out;
    const auto rb = run("synth --config " + config("full_scale.json").string() + " --seed 7 --out " + b.string());
    ASSERT_EQ(rb.code, 0);
    const std::string text = pipeline::read_file(a / "records.csv");
    EXPECT_EQ(text, pipeline::read_file(b / "records.csv"));
    EXPECT_EQ(listing(a), (std::set<std::string>{"records.csv"}));

    // Recount straight from the text: data lines, and lines whose last field is set.
    std::size_t lines = 0, reports = 0;
    std::set<std::string> users;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while(std::getline(in, line))
    {
        ++lines;
        users.insert(line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1));
        reports += line.back() != ',';
    }
    const auto st = run("stats --input " + (a / "records.csv").string());
    ASSERT_EQ(st.code, 0);
    EXPECT_NE(st.out.find("rows=" + std::to_string(lines) + " accepted=" + std::to_string(lines) + " rejected=0"),
              std::string::npos)
        << st.out;
    EXPECT_NE(st.out.find("users=" + std::to_string(users.size()) + " records=" + std::to_string(lines)
                          + " self_reports=" + std::to_string(reports)),
              std::string::npos)
        << st.out;
    EXPECT_EQ(users.size(), 40u);
}

TEST(Cli, StatsEmptyAndMalformed)
{
    const fs::path dir = fresh("stats");
    write(dir / "empty.csv", kHeader);
    auto r = run("stats --input " + (dir / "empty.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("rows=0 accepted=0 rejected=0"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("users=0 records=0 self_reports=0"), std::string::npos) << r.out;

    write(dir / "bad.csv", std::string(kHeader) + "1000,P01,52.4,-1.5,70,2,60,\n"
                                                  "1200,P01,95,-1.5,70,2,60,\n"
                                                  "oops\n");
    r = run("stats --input " + (dir / "bad.csv").string());
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("rows=3 accepted=1 rejected=2"), std::string::npos) << r.out;
    EXPECT_NE(r.err.find("row=2 reason="), std::string::npos) << r.err;
    EXPECT_EQ(r.out.find("reason"), std::string::npos);

    EXPECT_NE(run("stats --input " + (dir / "absent.csv").string()).code, 0);
}

TEST(Cli, TessellateTwoRecordsDeterministic)
{
    const fs::path dir = fresh("tess");
    write(dir / "two.csv", std::string(kHeader) + "1000,P01,52.40,-1.51,70,2,60,\n"
                                                  "2000,P01,52.41,-1.51,72,2,61,3\n");
    const std::string args = "tessellate --input " + (dir / "two.csv").string() + " --out ";
    auto r = run(args + (dir / "a").string());
    ASSERT_EQ(r.code, 0) << r.err;
    r = run(args + (dir / "b").string());
    ASSERT_EQ(r.code, 0);
    const std::string text = pipeline::read_file(dir / "a" / "diagram.json");
    EXPECT_EQ(text, pipeline::read_file(dir / "b" / "diagram.json"));
    EXPECT_EQ(diagram_from_json(nlohmann::json::parse(text)).diagram.size(), 2u);
}

TEST(Cli, RenderWritesExactlyTheRequestedLayers)
{
    const fs::path dir = fresh("render");
    auto r = run("synth --config " + config("hotspot.json").string() + " --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = (dir / "records.csv").string();
    r = run("tessellate --config " + config("hotspot.json").string() + " --input " + csv + " --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string base = "render --input " + csv + " --diagram " + (dir / "diagram.json").string() + " --out ";

    r = run(base + (dir / "hr").string() + " --metrics hr");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(listing(dir / "hr"), (std::set<std::string>{"hr.geojson", "hr.svg", "grid_hr.svg"}));

    r = run(base + (dir / "two").string() + " --metrics hr,valence");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(listing(dir / "two"), (std::set<std::string>{"hr.geojson", "hr.svg", "grid_hr.svg", "valence.geojson",
                                                           "valence.svg", "grid_valence.svg"}));
    for(const char* f : {"hr.geojson", "valence.geojson"})
        EXPECT_TRUE(render::validate_geojson(nlohmann::json::parse(pipeline::read_file(dir / "two" / f))).empty()) << f;
    EXPECT_EQ(pipeline::read_file(dir / "hr" / "hr.geojson"), pipeline::read_file(dir / "two" / "hr.geojson"));
}

TEST(Cli, PipelineHotspotConfig)
{
    const fs::path a = fresh("pipe_a"), b = fresh("pipe_b");
    auto r = run("pipeline --config " + config("hotspot.json").string() + " --out " + a.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("hotspots=recovered"), std::string::npos) << r.out;
    r = run("pipeline --config " + config("hotspot.json").string() + " --out " + b.string());
    ASSERT_EQ(r.code, 0);
    for(const auto& f : listing(a))
        EXPECT_EQ(pipeline::read_file(a / f), pipeline::read_file(b / f)) << f;
    for(const auto& f : listing(a))
        EXPECT_EQ(f.find(".tmp"), std::string::npos) << f;
}
