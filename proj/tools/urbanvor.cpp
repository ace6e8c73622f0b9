// urbanvor command-line front end. Results go to files under --out and a
// one-line summary to stdout; every diagnostic goes to stderr.

#include "urbanvor/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace urbanvor;

namespace {

struct Flags
{
    std::string input;
    std::string config;
    std::string diagram;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> min_separation;
    std::optional<double> grid_size;
    std::string metrics;
};

void setup_logging()
{
    auto logger = spdlog::stderr_logger_st("urbanvor");
    logger->set_pattern("urbanvor: %l: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if(const char* env = std::getenv("URBANVOR_LOG"))
    {
        const auto level = spdlog::level::from_str(env);
        if(level == spdlog::level::off && std::string(env) != "off")
            spdlog::warn("ignoring URBANVOR_LOG={}, expected error|warn|info|debug", env);
        else
            spdlog::set_level(level);
    }
}

/// Loads --config when present and folds the command-line overrides in.
pipeline::Options options_from(const Flags& f, bool config_required)
{
    pipeline::Options o;
    if(!f.config.empty())
    {
        const fs::path path(f.config);
        if(!fs::exists(path))
            throw Error(Errc::Io, "config file not found: " + f.config);
        const auto j = pipeline::load_json(path);
        // A bare synth document is accepted wherever a pipeline config is.
        if(j.is_object() && j.contains("script") && !j.contains("synth"))
            o.synth = synth::parse_config(j);
        else
            o = pipeline::parse_options(j, path.parent_path());
    }
    else if(config_required)
        throw Error(Errc::InvalidConfig, "--config is required");
    if(!f.input.empty())
    {
        o.input = f.input;
        o.synth.reset();
    }
    if(!f.out.empty())
        o.out_dir = f.out;
    if(f.seed && o.synth)
        o.synth->script.seed = *f.seed;
    if(f.min_separation)
        o.min_separation = *f.min_separation;
    if(f.grid_size)
        o.grid_size = *f.grid_size;
    if(!f.metrics.empty())
        o.metrics = pipeline::parse_metric_list(f.metrics);
    if(!(o.min_separation > 0) || !(o.grid_size > 0))
        throw Error(Errc::InvalidConfig, "--min-separation and --grid-size must be positive");
    return o;
}

ingest::Dataset load_input(const pipeline::Options& o)
{
    if(!o.input)
        throw Error(Errc::InvalidConfig, "--input is required");
    auto parsed = pipeline::load_csv(*o.input);
    for(const auto& r : parsed.rejections)
        spdlog::warn("{}: {}", o.input->string(), ingest::format_rejection(r));
    spdlog::info("read {} rows, {} rejected", parsed.total_rows, parsed.rejections.size());
    return std::move(parsed.dataset);
}

int cmd_synth(const Flags& f)
{
    const auto o = options_from(f, true);
    if(!o.synth)
        throw Error(Errc::InvalidConfig, "config has no synth section");
    const auto d = synth::generate(*o.synth);
    const auto s = ingest::dataset_stats(d);
    pipeline::write_file_atomic(o.out_dir / "records.csv", pipeline::csv_text(d));
    std::cout << "rows=" << s.records << " users=" << s.users << " self_reports=" << s.self_reports << "\n";
    return 0;
}

int cmd_stats(const Flags& f)
{
    if(f.input.empty())
        throw Error(Errc::InvalidConfig, "--input is required");
    auto parsed = pipeline::load_csv(f.input);
    for(const auto& r : parsed.rejections)
        std::cerr << ingest::format_rejection(r) << "\n";
    std::cout << pipeline::stats_text(ingest::dataset_stats(parsed.dataset), parsed.dataset.provenance());
    return 0;
}

int cmd_tessellate(const Flags& f)
{
    const auto o = options_from(f, false);
    const auto d = load_input(o);
    const auto t = pipeline::tessellate(d, pipeline::choose_projection(o, d), o.min_separation, o.bbox_margin);
    pipeline::write_file_atomic(o.out_dir / "diagram.json", diagram_text(t.diagram, t.projection, t.min_separation));
    std::cout << "sites=" << t.diagram.size() << " records=" << d.size() << "\n";
    return 0;
}

int cmd_render(const Flags& f)
{
    if(f.diagram.empty())
        throw Error(Errc::InvalidConfig, "--diagram is required");
    const auto o = options_from(f, false);
    const auto d = load_input(o);
    const auto stored = diagram_from_json(pipeline::load_json(f.diagram));
    const auto t = pipeline::attach(stored, d);
    std::vector<std::pair<fs::path, std::string>> files;
    for(const auto& metric : o.metrics)
    {
        auto r = pipeline::render_metric(t, metric, o);
        files.emplace_back(o.out_dir / (metric + ".geojson"), std::move(r.geojson));
        files.emplace_back(o.out_dir / (metric + ".svg"), std::move(r.svg));
        files.emplace_back(o.out_dir / ("grid_" + metric + ".svg"), std::move(r.grid_svg));
    }
    for(const auto& [path, text] : files)
        pipeline::write_file_atomic(path, text);
    std::cout << "layers=" << o.metrics.size() << " cells=" << t.diagram.size() << "\n";
    return 0;
}

int cmd_pipeline(const Flags& f)
{
    const auto o = options_from(f, true);
    const auto s = pipeline::run(o);
    for(const auto& p : s.written)
        spdlog::info("wrote {}", p.string());
    std::cout << "rows=" << s.stats.records << " users=" << s.stats.users << " self_reports=" << s.stats.self_reports
              << " rejected=" << s.rejected << " sites=" << s.sites;
    if(s.hotspots)
        std::cout << " hotspots=" << (s.hotspots->recovered() ? "recovered" : "missed")
                  << " extra=" << s.hotspots->extra.size() << " missing=" << s.hotspots->missing.size();
    std::cout << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App app{"Voronoi map layers from geotagged sensor traces"};
    app.require_subcommand(1);
    Flags f;

    const auto common = [&f](CLI::App* sub, bool with_config) {
        sub->add_option("--input", f.input, "sensor CSV");
        if(with_config)
            sub->add_option("--config", f.config, "JSON config");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--seed", f.seed, "override the synth seed");
        sub->add_option("--min-separation", f.min_separation, "thinning distance in metres");
        sub->add_option("--grid-size", f.grid_size, "grid cell size in metres");
        sub->add_option("--metrics", f.metrics, "comma-separated subset of eda,hr,noise,valence");
    };

    std::map<CLI::App*, int (*)(const Flags&)> commands;
    auto* synth = app.add_subcommand("synth", "generate a synthetic CSV");
    common(synth, true);
    commands[synth] = cmd_synth;
    auto* stats = app.add_subcommand("stats", "summarize a CSV");
    common(stats, false);
    commands[stats] = cmd_stats;
    auto* tess = app.add_subcommand("tessellate", "thin records and write diagram.json");
    common(tess, true);
    commands[tess] = cmd_tessellate;
    auto* render = app.add_subcommand("render", "write per-metric GeoJSON and SVG layers");
    common(render, true);
    render->add_option("--diagram", f.diagram, "diagram.json from tessellate");
    commands[render] = cmd_render;
    auto* pipe = app.add_subcommand("pipeline", "run every stage from a config");
    common(pipe, true);
    commands[pipe] = cmd_pipeline;

    CLI11_PARSE(app, argc, argv);

    try
    {
        for(const auto& [sub, fn] : commands)
            if(sub->parsed())
                return fn(f);
    }
    catch(const Error& e)
    {
        spdlog::error("{} ({})", e.what(), to_string(e.code()));
        return 1;
    }
    catch(const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 2;
}
