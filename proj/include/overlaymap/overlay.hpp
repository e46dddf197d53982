#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "overlaymap/ingest.hpp"
#include "overlaymap/vosio.hpp"

namespace overlaymap {

// World reference counts: N_cW per concept, N_W total.
struct WorldCounts {
  ConceptCounts counts;
};

// Focal unit counts: N_cU per concept, N_U total.
struct OverlayCounts {
  ConceptCounts counts;
};

/// Proportions and activities of a focal unit against the world.
/// activity holds a_cU = p_cU / p_cW for every concept with N_cW > 0
/// (0 where the unit has no documents); unit concepts missing from the
/// world are listed in missing_in_world and carry no activity.
struct ActivityScores {
  std::map<std::string, double> world_share;
  std::map<std::string, double> unit_share;
  std::map<std::string, double> activity;
  std::vector<std::string> missing_in_world;
};

/// Throws DataError("empty unit") / ("empty world") when N_U or N_W is 0.
ActivityScores compute_activity(const WorldCounts& world, const OverlayCounts& unit);

/// Same ratio with proportions taken within each concept level: the
/// denominators are the unit and world totals over concepts of the same
/// level. Concepts without a known level are reported as missing.
ActivityScores compute_activity_per_level(const WorldCounts& world, const OverlayCounts& unit,
                                          const std::map<std::string, int>& levels);

/// Drops concepts with fewer than `threshold` documents; the total is recomputed.
OverlayCounts apply_min_papers_threshold(const OverlayCounts& counts, std::int64_t threshold);

enum class OverlayMode { raw, normalized, per_level };

struct OverlayResult {
  MapDocument map;
  std::vector<std::string> warnings;
  ActivityScores activity;  // empty in raw mode
};

/// Copies the base map and replaces weight<papers> with N_cU (raw) or a_cU
/// (normalized, per_level). Base nodes absent from the unit get 0; unit
/// concepts absent from the base map are reported in warnings and omitted.
/// Throws DataError on an empty unit or an empty intersection, UsageError
/// when a normalized mode lacks world counts (or levels for per_level).
OverlayResult build_overlay(const MapDocument& base, const OverlayCounts& unit, const WorldCounts* world,
                            OverlayMode mode, const std::map<std::string, int>* levels = nullptr);

/// Mean publication year per concept over the given (filtered) works.
std::map<std::string, double> mean_pub_year_scores(std::span<const WorkRecord> unit_works);

/// Adds score<name>. Nodes without a value get the mean of the present
/// values so they render neutrally.
void attach_score_column(MapDocument& map, const std::string& name, const std::map<std::string, double>& values);

}  // namespace overlaymap
