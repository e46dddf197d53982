#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "overlaymap/clustering.hpp"
#include "overlaymap/ingest.hpp"
#include "overlaymap/layout.hpp"
#include "overlaymap/overlay.hpp"
#include "overlaymap/relations.hpp"
#include "overlaymap/vosio.hpp"

namespace overlaymap {

struct RunConfig {
  std::filesystem::path snapshot_dir;
  std::string api_base = "https://api.openalex.org";
  std::string mailto;
  std::optional<int> year_min;
  std::optional<int> year_max;
  int window = 5;
  int max_level = 2;
  double resolution = 1.0;
  std::uint64_t seed = 42;
  std::int64_t threshold = 0;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  int restarts = 10;
  int layout_starts = 1;
  int max_iterations = 1000;
  double convergence_tol = 1e-8;
  double size_variation = 0.2;
  double scale = 0.5;

  CorpusFilter corpus_filter() const;  // throws UsageError without a period
  LayoutConfig layout_config() const;
  ClusteringConfig clustering_config() const;
  void validate() const;
};

/// Flat `key = value` file; '#' starts a comment. Keys are the RunConfig
/// field names (`from`/`to` for the period). Throws UsageError on unknown
/// keys or bad values.
void apply_config_file(RunConfig& config, const std::filesystem::path& file);
void apply_config_text(RunConfig& config, std::string_view text);

struct PeriodPreset {
  std::string name;
  int year_min;
  int year_max;
  int window;
};

const std::vector<PeriodPreset>& period_presets();
std::optional<PeriodPreset> find_period_preset(std::string_view name);

struct BasemapResult {
  MapDocument map;
  ConceptLinkMatrix links;
  SimilarityMatrix<double> sims;
  LayoutResult<double> layout;
  Partition partition;
  ClusterAssignment clusters;
  nlohmann::json manifest;
};

/// Links, association strength, layout, clustering and ranking over an
/// already filtered corpus. Throws DataError on an empty corpus or when no
/// citation relations exist.
BasemapResult build_basemap(const Corpus& corpus, const RunConfig& config);

/// map.txt, map.ids.tsv, network.txt, links.tsv, node_weights.tsv,
/// map.json and manifest.json.
void write_basemap(const BasemapResult& result, const std::filesystem::path& dir);

// .json -> structured map; otherwise a map file plus its .ids.tsv sidecar.
MapDocument load_map(const std::filesystem::path& path);

struct OverlayRequest {
  std::filesystem::path basemap;
  std::filesystem::path unit_counts;
  std::optional<std::filesystem::path> world_counts;
  std::optional<std::filesystem::path> levels;      // concept_id<TAB>level, per-level mode
  std::optional<std::filesystem::path> unit_works;  // snapshot dir for score<mean_pub_year>
  OverlayMode mode = OverlayMode::raw;
};

struct OverlayRun {
  OverlayResult result;
  nlohmann::json manifest;
};

OverlayRun run_overlay(const OverlayRequest& request, const RunConfig& config);

/// overlay_map.txt, overlay_map.ids.tsv, overlay_map.json,
/// overlay_warnings.txt and overlay_manifest.json.
void write_overlay(const OverlayRun& run, const std::filesystem::path& dir);

std::map<std::string, int> read_levels_table(std::string_view text);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace overlaymap
