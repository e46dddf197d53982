#include "overlaymap/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "overlaymap/errors.hpp"

namespace overlaymap {

CorpusFilter RunConfig::corpus_filter() const {
  if (!year_min || !year_max) throw UsageError("a period is required (--from/--to or --period)");
  CorpusFilter f{*year_min, *year_max, max_level};
  f.validate();
  return f;
}

LayoutConfig RunConfig::layout_config() const {
  LayoutConfig c;
  c.max_iterations = max_iterations;
  c.convergence_tol = convergence_tol;
  c.seed = seed;
  c.random_starts = layout_starts;
  c.threads = threads;
  return c;
}

ClusteringConfig RunConfig::clustering_config() const {
  ClusteringConfig c;
  c.resolution = resolution;
  c.seed = seed;
  c.restarts = restarts;
  c.threads = threads;
  return c;
}

void RunConfig::validate() const {
  if (year_min && year_max && *year_min > *year_max) {
    throw UsageError("period start " + std::to_string(*year_min) + " is after period end " +
                     std::to_string(*year_max));
  }
  if (window < 0) throw UsageError("window must be >= 0");
  if (max_level < 0 || max_level > kMaxConceptLevel) throw UsageError("max level must be in [0, 5]");
  if (threshold < 0) throw UsageError("threshold must be >= 0");
  if (threads < 1) throw UsageError("threads must be >= 1");
  layout_config().validate();
  clustering_config().validate();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    throw UsageError("config: bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw UsageError("config: bad value for " + std::string(key) + ": '" + s + "'");
  }
  return v;
}

}  // namespace

void apply_config_text(RunConfig& c, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);

    if (key == "snapshot") c.snapshot_dir = std::string(value);
    else if (key == "api") c.api_base = std::string(value);
    else if (key == "mailto") c.mailto = std::string(value);
    else if (key == "from") c.year_min = parse_number<int>(key, value);
    else if (key == "to") c.year_max = parse_number<int>(key, value);
    else if (key == "period") {
      auto preset = find_period_preset(value);
      if (!preset) throw UsageError("config: unknown period '" + std::string(value) + "'");
      c.year_min = preset->year_min;
      c.year_max = preset->year_max;
      c.window = preset->window;
    }
    else if (key == "window") c.window = parse_number<int>(key, value);
    else if (key == "max_level") c.max_level = parse_number<int>(key, value);
    else if (key == "resolution") c.resolution = parse_double(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "threshold") c.threshold = parse_number<std::int64_t>(key, value);
    else if (key == "output_dir") c.output_dir = std::string(value);
    else if (key == "threads") c.threads = parse_number<unsigned>(key, value);
    else if (key == "restarts") c.restarts = parse_number<int>(key, value);
    else if (key == "layout_starts") c.layout_starts = parse_number<int>(key, value);
    else if (key == "max_iterations") c.max_iterations = parse_number<int>(key, value);
    else if (key == "convergence_tol") c.convergence_tol = parse_double(key, value);
    else if (key == "size_variation") c.size_variation = parse_double(key, value);
    else if (key == "scale") c.scale = parse_double(key, value);
    else throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str());
}

const std::vector<PeriodPreset>& period_presets() {
  static const std::vector<PeriodPreset> presets = {
      {"p1800", 1800, 2022, 5}, {"p2008", 2008, 2022, 5}, {"p2013", 2013, 2022, 5},
      {"p2018", 2018, 2022, 5}, {"p2022", 2022, 2022, 5}, {"p1800w30", 1800, 2022, 30},
  };
  return presets;
}

std::optional<PeriodPreset> find_period_preset(std::string_view name) {
  for (const auto& p : period_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

BasemapResult build_basemap(const Corpus& corpus, const RunConfig& config) {
  config.validate();
  if (corpus.works.empty()) throw DataError("empty corpus: no documents pass the filter");

  BasemapResult out;
  out.links = build_concept_links(corpus.works, CitationWindow{config.window}, config.threads);
  out.sims = association_strength<double>(out.links);
  const auto n = out.links.size();

  std::vector<double> weight(out.links.node_weight.begin(), out.links.node_weight.end());
  out.layout = vos_layout(out.sims.sims, config.layout_config());
  const Positions<double> positions =
      canonicalize_positions(out.layout.positions, std::span<const double>(weight),
                             std::span<const std::string>(out.links.concepts));

  out.partition = cluster_nodes(out.sims.sims, config.clustering_config());
  out.clusters = rank_clusters(out.partition, weight, out.links.concepts, config.resolution);

  out.map.concept_ids = out.links.concepts;
  out.map.nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MapNode node;
    node.id = static_cast<int>(i + 1);
    const auto it = corpus.catalog.find(out.links.concepts[i]);
    node.label = it == corpus.catalog.end() ? out.links.concepts[i] : it->second.label;
    node.x = positions(static_cast<Eigen::Index>(i), 0);
    node.y = positions(static_cast<Eigen::Index>(i), 1);
    node.cluster = out.clusters.rank_of[i];
    node.weights = {weight[i]};
    out.map.nodes.push_back(std::move(node));
  }

  nlohmann::json clusters = nlohmann::json::array();
  for (int r = 1; r <= out.clusters.cluster_count; ++r) {
    double w = 0;
    int members = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.clusters.rank_of[i] == r) {
        w += weight[i];
        ++members;
      }
    }
    nlohmann::json entry = {{"rank", r}, {"nodes", members}, {"weight", w}};
    if (r <= static_cast<int>(out.clusters.colors.size())) entry["color"] = out.clusters.colors[r - 1];
    clusters.push_back(std::move(entry));
  }

  auto& m = out.manifest;
  m["command"] = "basemap";
  m["parameters"] = {{"snapshot", config.snapshot_dir.generic_string()},
                     {"from", *config.year_min},
                     {"to", *config.year_max},
                     {"window", config.window},
                     {"max_level", config.max_level},
                     {"resolution", config.resolution},
                     {"seed", config.seed},
                     {"restarts", config.restarts},
                     {"layout_starts", config.layout_starts},
                     {"max_iterations", config.max_iterations},
                     {"convergence_tol", config.convergence_tol}};
  m["corpus"] = corpus.stats.to_json();
  m["result"] = {{"nodes", n},
                 {"links", out.links.links.size()},
                 {"total_link_strength", out.links.total_strength()},
                 {"clusters", clusters},
                 {"clustering_quality", out.partition.quality},
                 {"layout_objective", out.layout.objective_trace.back()},
                 {"layout_iterations", out.layout.iterations},
                 {"layout_converged", out.layout.converged},
                 {"layout_background_similarity", out.layout.background}};
  m["viewer_hints"] = {{"label_size_variation", config.size_variation}, {"scale", config.scale}};
  m["files"] = {"map.txt", "map.ids.tsv", "network.txt", "links.tsv", "node_weights.tsv", "map.json"};
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_basemap(const BasemapResult& r, const std::filesystem::path& dir) {
  const auto ids = id_table(r.map);
  write_text_file(dir / "map.txt", write_map_file(r.map));
  write_text_file(dir / "map.ids.tsv", write_id_table(r.map));
  write_text_file(dir / "network.txt", write_network_file(r.links, ids));
  write_text_file(dir / "links.tsv", write_links_table(r.links));
  write_text_file(dir / "node_weights.tsv", write_node_weights(r.links));
  nlohmann::json meta = {{"period", {r.manifest["parameters"]["from"], r.manifest["parameters"]["to"]}},
                         {"window", r.manifest["parameters"]["window"]},
                         {"resolution", r.manifest["parameters"]["resolution"]},
                         {"seed", r.manifest["parameters"]["seed"]},
                         {"viewer_hints", r.manifest["viewer_hints"]}};
  write_text_file(dir / "map.json", to_structured(r.map, &r.links, meta).dump(2) + "\n");
  write_text_file(dir / "manifest.json", r.manifest.dump(2) + "\n");
}

MapDocument load_map(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  if (path.extension() == ".json") {
    try {
      return from_structured(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  MapDocument map;
  try {
    map = read_map_file(text);
  } catch (const ParseError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  auto sidecar = path;
  sidecar.replace_extension(".ids.tsv");
  if (!std::filesystem::exists(sidecar)) {
    throw DataError("concept id table " + sidecar.string() + " not found next to " + path.string());
  }
  try {
    map.concept_ids = read_id_table(read_text_file(sidecar), map.nodes.size());
  } catch (const ParseError& e) {
    throw DataError(sidecar.string() + ": " + e.what());
  }
  map.validate();
  return map;
}

std::map<std::string, int> read_levels_table(std::string_view text) {
  std::map<std::string, int> levels;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line == "concept_id\tlevel") continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "expected concept_id<TAB>level");
    const auto level = line.substr(tab + 1);
    int l = 0;
    auto [ptr, ec] = std::from_chars(level.data(), level.data() + level.size(), l);
    if (ec != std::errc{} || ptr != level.data() + level.size() || l < 0 || l > kMaxConceptLevel) {
      throw ParseError(line_no, "level must be an integer in [0, 5]");
    }
    levels[strip_entity_prefix(line.substr(0, tab))] = l;
  }
  return levels;
}

OverlayRun run_overlay(const OverlayRequest& request, const RunConfig& config) {
  config.validate();
  if (request.mode != OverlayMode::raw && !request.world_counts) {
    throw UsageError("normalized overlays need --world-counts");
  }
  if (request.mode == OverlayMode::per_level && !request.levels) {
    throw UsageError("per-level overlays need --levels");
  }
  const MapDocument base = load_map(request.basemap);
  const OverlayCounts raw_unit{load_counts_file(request.unit_counts)};
  const OverlayCounts unit = apply_min_papers_threshold(raw_unit, config.threshold);
  std::optional<WorldCounts> world;
  if (request.world_counts) world = WorldCounts{load_counts_file(*request.world_counts)};
  std::map<std::string, int> levels;
  if (request.levels) {
    try {
      levels = read_levels_table(read_text_file(*request.levels));
    } catch (const ParseError& e) {
      throw DataError(request.levels->string() + ": " + e.what());
    }
  }

  OverlayRun run;
  run.result = build_overlay(base, unit, world ? &*world : nullptr, request.mode, request.levels ? &levels : nullptr);
  if (request.unit_works) {
    const auto works = load_corpus(*request.unit_works, config.corpus_filter(), config.threads);
    attach_score_column(run.result.map, "mean_pub_year", mean_pub_year_scores(works.works));
  }

  const char* mode = request.mode == OverlayMode::raw ? "raw"
                     : request.mode == OverlayMode::normalized ? "normalized"
                                                               : "per-level";
  auto& m = run.manifest;
  m["command"] = "overlay";
  m["parameters"] = {{"basemap", request.basemap.generic_string()},
                     {"unit_counts", request.unit_counts.generic_string()},
                     {"mode", mode},
                     {"threshold", config.threshold}};
  if (request.world_counts) m["parameters"]["world_counts"] = request.world_counts->generic_string();
  if (request.levels) m["parameters"]["levels"] = request.levels->generic_string();
  if (request.unit_works) {
    m["parameters"]["unit_works"] = request.unit_works->generic_string();
    m["parameters"]["from"] = *config.year_min;
    m["parameters"]["to"] = *config.year_max;
  }
  m["unit"] = {{"documents_before_threshold", raw_unit.counts.total},
               {"documents_after_threshold", unit.counts.total},
               {"concepts_after_threshold", unit.counts.counts.size()}};
  if (world) m["world"] = {{"total", world->counts.total}, {"concepts", world->counts.counts.size()}};
  m["warnings"] = run.result.warnings.size();
  m["files"] = {"overlay_map.txt", "overlay_map.ids.tsv", "overlay_map.json", "overlay_warnings.txt"};
  return run;
}

void write_overlay(const OverlayRun& run, const std::filesystem::path& dir) {
  write_text_file(dir / "overlay_map.txt", write_map_file(run.result.map));
  write_text_file(dir / "overlay_map.ids.tsv", write_id_table(run.result.map));
  write_text_file(dir / "overlay_map.json", to_structured(run.result.map, nullptr, run.manifest["parameters"]).dump(2) + "\n");
  std::string warnings;
  for (const auto& w : run.result.warnings) warnings += w + '\n';
  write_text_file(dir / "overlay_warnings.txt", warnings);
  write_text_file(dir / "overlay_manifest.json", run.manifest.dump(2) + "\n");
}

}  // namespace overlaymap
