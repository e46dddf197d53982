#include "overlaymap/overlay.hpp"

#include "overlaymap/errors.hpp"

namespace overlaymap {

namespace {

// (n_cu / n_u) / (n_cw / n_w) with a single rounding while both products
// stay below 2^53.
double activity_ratio(std::int64_t n_cu, std::int64_t n_u, std::int64_t n_cw, std::int64_t n_w) {
  return (double(n_cu) * double(n_w)) / (double(n_u) * double(n_cw));
}

void require_nonempty(const WorldCounts& world, const OverlayCounts& unit) {
  if (unit.counts.total <= 0) throw DataError("empty unit: the unit has no documents with qualifying concepts");
  if (world.counts.total <= 0) throw DataError("empty world: the world counts are empty");
}

}  // namespace

ActivityScores compute_activity(const WorldCounts& world, const OverlayCounts& unit) {
  require_nonempty(world, unit);
  const auto n_w = world.counts.total;
  const auto n_u = unit.counts.total;
  ActivityScores out;
  for (const auto& [id, n] : world.counts.counts) {
    if (n > 0) out.world_share[id] = double(n) / double(n_w);
  }
  for (const auto& [id, n] : unit.counts.counts) {
    if (n > 0) out.unit_share[id] = double(n) / double(n_u);
  }
  for (const auto& [id, n_cw] : world.counts.counts) {
    if (n_cw > 0) out.activity[id] = activity_ratio(unit.counts.count(id), n_u, n_cw, n_w);
  }
  for (const auto& [id, n_cu] : unit.counts.counts) {
    if (n_cu > 0 && world.counts.count(id) == 0) out.missing_in_world.push_back(id);
  }
  return out;
}

ActivityScores compute_activity_per_level(const WorldCounts& world, const OverlayCounts& unit,
                                          const std::map<std::string, int>& levels) {
  require_nonempty(world, unit);
  std::map<int, std::int64_t> world_total, unit_total;
  auto level_of = [&](const std::string& id) {
    auto it = levels.find(id);
    return it == levels.end() ? -1 : it->second;
  };
  for (const auto& [id, n] : world.counts.counts) {
    if (int l = level_of(id); l >= 0) world_total[l] += n;
  }
  for (const auto& [id, n] : unit.counts.counts) {
    if (int l = level_of(id); l >= 0) unit_total[l] += n;
  }
  ActivityScores out;
  for (const auto& [id, n] : world.counts.counts) {
    const int l = level_of(id);
    if (l < 0 || n == 0) continue;
    out.world_share[id] = double(n) / double(world_total[l]);
    const auto n_cu = unit.counts.count(id);
    out.activity[id] = unit_total[l] > 0 ? activity_ratio(n_cu, unit_total[l], n, world_total[l]) : 0.0;
  }
  for (const auto& [id, n] : unit.counts.counts) {
    const int l = level_of(id);
    if (n == 0) continue;
    if (l >= 0) out.unit_share[id] = double(n) / double(unit_total[l]);
    if (l < 0 || world.counts.count(id) == 0) out.missing_in_world.push_back(id);
  }
  return out;
}

OverlayCounts apply_min_papers_threshold(const OverlayCounts& counts, std::int64_t threshold) {
  if (threshold < 0) throw UsageError("threshold must be >= 0");
  OverlayCounts out;
  for (const auto& [id, n] : counts.counts.counts) {
    if (n >= threshold) out.counts.add(id, n);
  }
  return out;
}

OverlayResult build_overlay(const MapDocument& base, const OverlayCounts& unit, const WorldCounts* world,
                            OverlayMode mode, const std::map<std::string, int>* levels) {
  if (base.concept_ids.empty() && !base.nodes.empty()) {
    throw DataError("base map has no concept id table");
  }
  if (mode != OverlayMode::raw && world == nullptr) throw UsageError("normalized overlays need world counts");
  if (mode == OverlayMode::per_level && levels == nullptr) throw UsageError("per-level overlays need concept levels");
  if (unit.counts.total <= 0) throw DataError("empty unit: the unit has no documents with qualifying concepts");

  OverlayResult out;
  out.map = base;
  const std::size_t papers = out.map.weight_index("papers");

  bool intersects = false;
  for (const auto& [id, n] : unit.counts.counts) {
    if (n == 0) continue;
    if (base.node_id(id) == 0) {
      out.warnings.push_back("concept " + id + " (" + std::to_string(n) + " documents) is not on the base map");
    } else {
      intersects = true;
    }
  }
  if (!intersects) throw DataError("overlay disjoint from base map");

  if (mode != OverlayMode::raw) {
    out.activity = mode == OverlayMode::normalized ? compute_activity(*world, unit)
                                                   : compute_activity_per_level(*world, unit, *levels);
    for (const auto& id : out.activity.missing_in_world) {
      out.warnings.push_back("concept " + id + " has no world documents; activity undefined");
    }
  }
  for (std::size_t i = 0; i < out.map.nodes.size(); ++i) {
    const auto& id = out.map.concept_ids[i];
    double w = 0;
    if (mode == OverlayMode::raw) {
      w = double(unit.counts.count(id));
    } else if (auto it = out.activity.activity.find(id); it != out.activity.activity.end()) {
      w = it->second;
    }
    out.map.nodes[i].weights[papers] = w;
  }
  return out;
}

std::map<std::string, double> mean_pub_year_scores(std::span<const WorkRecord> unit_works) {
  std::map<std::string, std::pair<double, std::int64_t>> acc;
  for (const auto& w : unit_works) {
    if (!w.pub_year) continue;
    for (const auto& c : w.concepts) {
      auto& [sum, n] = acc[c.concept_id];
      sum += *w.pub_year;
      ++n;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [id, v] : acc) out[id] = v.first / double(v.second);
  return out;
}

void attach_score_column(MapDocument& map, const std::string& name, const std::map<std::string, double>& values) {
  if (map.concept_ids.size() != map.nodes.size()) throw DataError("map has no concept id table");
  double sum = 0;
  std::size_t present = 0;
  for (const auto& id : map.concept_ids) {
    if (auto it = values.find(id); it != values.end()) {
      sum += it->second;
      ++present;
    }
  }
  const double neutral = present > 0 ? sum / double(present) : 0.0;
  map.score_columns.push_back(name);
  for (std::size_t i = 0; i < map.nodes.size(); ++i) {
    auto it = values.find(map.concept_ids[i]);
    map.nodes[i].scores.push_back(it == values.end() ? neutral : it->second);
  }
}

}  // namespace overlaymap
