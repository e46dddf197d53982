// overlaymap: build base maps of science and overlay maps for focal units.
//
//   overlaymap basemap --snapshot DIR --from Y1 --to Y2 --window W [--resolution G --seed S]
//   overlaymap overlay --basemap FILE --unit-counts FILE [--world-counts FILE --normalize] [--threshold T]
//   overlaymap fetch   --author ID | --institution ID | --world [--from Y1 --to Y2]
//   overlaymap stats   --snapshot DIR --from Y1 --to Y2
//
// Exit status: 0 success, 1 usage error, 2 data error.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "overlaymap/api.hpp"
#include "overlaymap/errors.hpp"
#include "overlaymap/pipeline.hpp"

namespace om = overlaymap;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr const char* kConfigEnv = "OVERLAYMAP_CONFIG";

// Values from --config (or $OVERLAYMAP_CONFIG) become defaults that flags override.
std::optional<std::string> config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') return std::string(env);
  return std::nullopt;
}

void add_period_options(CLI::App* cmd, om::RunConfig& config, std::string& period) {
  cmd->add_option("--from", config.year_min, "First publication year (inclusive)");
  cmd->add_option("--to", config.year_max, "Last publication year (inclusive)");
  std::vector<std::string> names;
  for (const auto& p : om::period_presets()) names.push_back(p.name);
  cmd->add_option("--period", period, "Named period preset; sets --from/--to/--window")
      ->check(CLI::IsMember(names));
}

void add_common_options(CLI::App* cmd, om::RunConfig& config) {
  cmd->add_option("--threads", config.threads, "Worker threads")->capture_default_str();
  cmd->add_option("--max-level", config.max_level, "Highest concept level kept")->capture_default_str();
  cmd->add_option("--config", "Key = value defaults file (also $OVERLAYMAP_CONFIG)");
}

void apply_period(const std::string& period, CLI::App* cmd, om::RunConfig& config) {
  if (period.empty()) return;
  const auto preset = *om::find_period_preset(period);
  if (cmd->count("--from") == 0) config.year_min = preset.year_min;
  if (cmd->count("--to") == 0) config.year_max = preset.year_max;
  if (cmd->get_option_no_throw("--window") != nullptr && cmd->count("--window") == 0) config.window = preset.window;
}

void log_diagnostics(const om::Corpus& corpus) {
  for (const auto& d : corpus.diagnostics) std::cerr << "warning: " << d << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  om::RunConfig config;
  try {
    if (auto path = config_path(argc, argv)) om::apply_config_file(config, *path);
  } catch (const om::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"Global base maps and overlay maps of science from bibliographic records"};
  app.require_subcommand(1);

  // basemap
  std::string basemap_period;
  auto* basemap = app.add_subcommand("basemap", "Build a base map from a snapshot directory");
  basemap->add_option("--snapshot", config.snapshot_dir, "Directory of line-delimited work files");
  add_period_options(basemap, config, basemap_period);
  basemap->add_option("--window", config.window, "Citation window in years")->capture_default_str();
  basemap->add_option("--resolution", config.resolution, "Clustering resolution")->capture_default_str();
  basemap->add_option("--seed", config.seed, "Seed for layout and clustering")->capture_default_str();
  basemap->add_option("--restarts", config.restarts, "Clustering restarts")->capture_default_str();
  basemap->add_option("--layout-starts", config.layout_starts, "Layout random starts")->capture_default_str();
  basemap->add_option("--max-iterations", config.max_iterations, "Layout iteration cap")->capture_default_str();
  basemap->add_option("--size-variation", config.size_variation, "Viewer hint recorded in map.json");
  basemap->add_option("--scale", config.scale, "Viewer hint recorded in map.json");
  basemap->add_option("--output-dir,-o", config.output_dir, "Output directory")->capture_default_str();
  add_common_options(basemap, config);

  // overlay
  om::OverlayRequest overlay_request;
  std::string overlay_period;
  bool normalize = false;
  std::string mode_name;
  std::string basemap_path, unit_counts_path, world_counts_path, levels_path, unit_works_path;
  auto* overlay = app.add_subcommand("overlay", "Overlay unit counts on a base map");
  overlay->add_option("--basemap", basemap_path, "Base map (map.txt with map.ids.tsv, or map.json)")->required();
  overlay->add_option("--unit-counts", unit_counts_path, "Unit counts (concept_id<TAB>count or .json)")->required();
  overlay->add_option("--world-counts", world_counts_path, "World counts for normalization");
  overlay->add_flag("--normalize", normalize, "Replace counts by activities");
  overlay->add_option("--mode", mode_name, "raw | normalized | per-level")
      ->check(CLI::IsMember({"raw", "normalized", "per-level"}));
  overlay->add_option("--levels", levels_path, "concept_id<TAB>level table for --mode per-level");
  overlay->add_option("--unit-works", unit_works_path, "Unit snapshot directory for score<mean_pub_year>");
  overlay->add_option("--threshold", config.threshold, "Minimum papers per concept")->capture_default_str();
  overlay->add_option("--output-dir,-o", config.output_dir, "Output directory")->capture_default_str();
  add_period_options(overlay, config, overlay_period);
  add_common_options(overlay, config);

  // fetch
  std::string fetch_period, author, institution, fetch_output = "-", fetch_format = "tsv";
  bool world = false;
  auto* fetch = app.add_subcommand("fetch", "Fetch per-concept document counts from the works API");
  auto* author_opt = fetch->add_option("--author", author, "Author id");
  auto* inst_opt = fetch->add_option("--institution", institution, "Institution id");
  auto* world_opt = fetch->add_flag("--world", world, "All works");
  author_opt->excludes(inst_opt)->excludes(world_opt);
  inst_opt->excludes(world_opt);
  fetch->add_option("--api", config.api_base, "API base URL, or fixture:DIR for recorded responses")
      ->capture_default_str();
  fetch->add_option("--mailto", config.mailto, "Contact address sent with requests");
  fetch->add_option("--output", fetch_output, "Output file, - for stdout")->capture_default_str();
  fetch->add_option("--format", fetch_format, "tsv | json")->check(CLI::IsMember({"tsv", "json"}));
  add_period_options(fetch, config, fetch_period);
  add_common_options(fetch, config);

  // stats
  std::string stats_period;
  auto* stats = app.add_subcommand("stats", "Document counts before and after filtering");
  stats->add_option("--snapshot", config.snapshot_dir, "Directory of line-delimited work files");
  add_period_options(stats, config, stats_period);
  add_common_options(stats, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (basemap->parsed()) {
      apply_period(basemap_period, basemap, config);
      if (config.snapshot_dir.empty()) throw om::UsageError("--snapshot is required");
      const auto filter = config.corpus_filter();
      config.validate();
      std::cerr << "reading " << config.snapshot_dir << " ...\n";
      const auto corpus = om::load_corpus(config.snapshot_dir, filter, config.threads);
      log_diagnostics(corpus);
      std::cerr << corpus.stats.retained << " documents retained, " << corpus.stats.concepts << " concepts\n";
      const auto result = om::build_basemap(corpus, config);
      om::write_basemap(result, config.output_dir);
      std::cerr << "wrote " << result.map.nodes.size() << " nodes, " << result.clusters.cluster_count
                << " clusters to " << config.output_dir << '\n';
    } else if (overlay->parsed()) {
      apply_period(overlay_period, overlay, config);
      overlay_request.basemap = basemap_path;
      overlay_request.unit_counts = unit_counts_path;
      if (!world_counts_path.empty()) overlay_request.world_counts = world_counts_path;
      if (!levels_path.empty()) overlay_request.levels = levels_path;
      if (!unit_works_path.empty()) overlay_request.unit_works = unit_works_path;
      overlay_request.mode = normalize ? om::OverlayMode::normalized : om::OverlayMode::raw;
      if (mode_name == "normalized") overlay_request.mode = om::OverlayMode::normalized;
      if (mode_name == "per-level") overlay_request.mode = om::OverlayMode::per_level;
      if (normalize && mode_name == "raw") throw om::UsageError("--normalize conflicts with --mode raw");
      const auto run = om::run_overlay(overlay_request, config);
      for (const auto& w : run.result.warnings) std::cerr << "warning: " << w << '\n';
      om::write_overlay(run, config.output_dir);
      std::cerr << "wrote overlay to " << config.output_dir << '\n';
    } else if (fetch->parsed()) {
      apply_period(fetch_period, fetch, config);
      config.validate();
      om::UnitSelector selector;
      if (!author.empty()) {
        selector = om::UnitSelector::author(author);
      } else if (!institution.empty()) {
        selector = om::UnitSelector::institution(institution);
      } else if (world) {
        selector = om::UnitSelector::world();
      } else {
        throw om::UsageError("one of --author, --institution or --world is required");
      }
      om::FetchOptions options;
      options.max_level = config.max_level;
      if (config.year_min || config.year_max) {
        if (!config.year_min || !config.year_max) throw om::UsageError("--from and --to go together");
        options.period = {*config.year_min, *config.year_max};
      }
      auto transport = om::make_transport(config.api_base, config.mailto);
      const auto counts = om::fetch_concept_counts(selector, *transport, options);
      const auto text = fetch_format == "json" ? om::counts_to_json(counts).dump(2) + "\n" : om::write_counts_table(counts);
      if (fetch_output == "-") {
        std::cout << text;
      } else {
        om::write_text_file(fetch_output, text);
      }
      std::cerr << counts.counts.size() << " concepts, total " << counts.total << '\n';
    } else if (stats->parsed()) {
      apply_period(stats_period, stats, config);
      if (config.snapshot_dir.empty()) throw om::UsageError("--snapshot is required");
      const auto filter = config.corpus_filter();
      const auto corpus = om::load_corpus(config.snapshot_dir, filter, config.threads);
      log_diagnostics(corpus);
      nlohmann::json out = corpus.stats.to_json();
      out["from"] = filter.year_min;
      out["to"] = filter.year_max;
      out["max_level"] = filter.max_level;
      std::cout << out.dump(2) << '\n';
    }
  } catch (const om::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
