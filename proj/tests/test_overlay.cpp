#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "overlaymap/errors.hpp"
#include "overlaymap/overlay.hpp"

using namespace overlaymap;

namespace {

ConceptCounts counts(std::initializer_list<std::pair<const char*, std::int64_t>> entries) {
  ConceptCounts c;
  for (const auto& [id, n] : entries) c.add(id, n);
  return c;
}

MapDocument two_node_base() {
  MapDocument m;
  m.nodes = {{1, "Alpha", 0.5, 0.0, 1, {10}, {}}, {2, "Beta", -0.5, 0.0, 2, {20}, {}}};
  m.concept_ids = {"A", "B"};
  return m;
}

WorkRecord doc(int year, std::vector<std::string> concepts) {
  WorkRecord w{"W", year, {}, {}};
  for (auto& c : concepts) w.concepts.push_back({std::move(c), 0});
  return w;
}

}  // namespace

TEST_CASE("activity hand case") {
  const WorldCounts world{counts({{"A", 20}, {"Z", 80}})};
  const OverlayCounts unit{counts({{"A", 4}, {"Z", 6}})};
  const auto a = compute_activity(world, unit);
  CHECK(a.world_share.at("A") == 0.2);
  CHECK(a.unit_share.at("A") == 0.4);
  CHECK(a.activity.at("A") == 2.0);
}

TEST_CASE("identical proportions give activity 1 and absent concepts 0") {
  const WorldCounts world{counts({{"A", 30}, {"B", 50}, {"C", 20}})};
  const OverlayCounts unit{counts({{"A", 3}, {"B", 5}, {"C", 2}})};
  for (const auto& [id, a] : compute_activity(world, unit).activity) CHECK(a == 1.0);

  const OverlayCounts partial{counts({{"A", 3}})};
  const auto a = compute_activity(world, partial);
  CHECK(a.activity.at("B") == 0.0);
  CHECK(a.activity.at("C") == 0.0);
}

TEST_CASE("activity matches the exact rational oracle") {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 200; ++trial) {
    const int concepts = 1 + static_cast<int>(gen() % 20);
    WorldCounts world;
    OverlayCounts unit;
    for (int c = 0; c < concepts; ++c) {
      const auto id = "K" + std::to_string(c);
      world.counts.add(id, 1 + static_cast<std::int64_t>(gen() % 1000));
      unit.counts.add(id, static_cast<std::int64_t>(gen() % 1001));
    }
    if (unit.counts.total == 0) unit.counts.add("K0", 1);
    const auto a = compute_activity(world, unit);
    for (const auto& [id, value] : a.activity) {
      const auto exact = oracle::exact_activity(unit.counts.count(id), unit.counts.total, world.counts.count(id),
                                                world.counts.total);
      const double expected = static_cast<double>(exact);
      if (expected == 0) {
        CHECK(value == 0.0);
      } else {
        CHECK(std::abs(value - expected) <= 1e-12 * expected);
      }
    }
  }
}

TEST_CASE("unit concepts missing from the world are reported") {
  const WorldCounts world{counts({{"A", 10}})};
  const OverlayCounts unit{counts({{"A", 1}, {"Q", 2}})};
  const auto a = compute_activity(world, unit);
  CHECK(a.missing_in_world == std::vector<std::string>{"Q"});
  CHECK(a.activity.count("Q") == 0);
}

TEST_CASE("empty unit or world") {
  CHECK_THROWS_WITH_AS(compute_activity(WorldCounts{counts({{"A", 1}})}, OverlayCounts{}), doctest::Contains("empty unit"),
                       DataError);
  CHECK_THROWS_WITH_AS(compute_activity(WorldCounts{}, OverlayCounts{counts({{"A", 1}})}),
                       doctest::Contains("empty world"), DataError);
}

TEST_CASE("minimum papers threshold") {
  const OverlayCounts c{counts({{"A", 5}, {"B", 1}})};
  const auto t = apply_min_papers_threshold(c, 2);
  CHECK(t.counts.counts == std::map<std::string, std::int64_t>{{"A", 5}});
  CHECK(t.counts.total == 5);
  CHECK(apply_min_papers_threshold(c, 0).counts == c.counts);
  const auto all = apply_min_papers_threshold(c, 100);
  CHECK(all.counts.empty());
  CHECK(all.counts.total == 0);
  CHECK_THROWS_AS(compute_activity(WorldCounts{counts({{"A", 1}})}, all), DataError);
}

TEST_CASE("raw overlay on a two-node base") {
  const auto base = two_node_base();
  const auto r = build_overlay(base, OverlayCounts{counts({{"A", 3}})}, nullptr, OverlayMode::raw);
  CHECK(r.map.nodes[0].weights == std::vector<double>{3});
  CHECK(r.map.nodes[1].weights == std::vector<double>{0});
  CHECK(r.warnings.empty());
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.map.nodes[i].x == base.nodes[i].x);
    CHECK(r.map.nodes[i].y == base.nodes[i].y);
    CHECK(r.map.nodes[i].cluster == base.nodes[i].cluster);
    CHECK(r.map.nodes[i].label == base.nodes[i].label);
  }
}

TEST_CASE("normalized overlay on a two-node base") {
  const WorldCounts world{counts({{"A", 50}, {"B", 50}})};
  const auto r = build_overlay(two_node_base(), OverlayCounts{counts({{"A", 3}})}, &world, OverlayMode::normalized);
  CHECK(r.map.nodes[0].weights == std::vector<double>{2.0});
  CHECK(r.map.nodes[1].weights == std::vector<double>{0.0});
  CHECK_THROWS_AS(build_overlay(two_node_base(), OverlayCounts{counts({{"A", 3}})}, nullptr, OverlayMode::normalized),
                  UsageError);
}

TEST_CASE("unit concepts off the map are warned about") {
  const auto r = build_overlay(two_node_base(), OverlayCounts{counts({{"A", 3}, {"C", 4}})}, nullptr, OverlayMode::raw);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("C") != std::string::npos);
  CHECK(r.map.nodes[0].weights[0] == 3);
  CHECK(r.map.nodes.size() == 2);
}

TEST_CASE("overlay errors") {
  CHECK_THROWS_WITH_AS(build_overlay(two_node_base(), OverlayCounts{}, nullptr, OverlayMode::raw),
                       doctest::Contains("empty unit"), DataError);
  CHECK_THROWS_WITH_AS(build_overlay(two_node_base(), OverlayCounts{counts({{"Q", 1}})}, nullptr, OverlayMode::raw),
                       "overlay disjoint from base map", DataError);
}

TEST_CASE("per-level activity uses same-level totals") {
  const WorldCounts world{counts({{"A", 10}, {"B", 30}, {"C", 60}})};
  const OverlayCounts unit{counts({{"A", 2}, {"B", 2}, {"C", 6}})};
  const std::map<std::string, int> levels = {{"A", 0}, {"B", 0}, {"C", 1}};
  const auto a = compute_activity_per_level(world, unit, levels);
  // level 0: unit 2/4 vs world 10/40
  CHECK(a.activity.at("A") == doctest::Approx(2.0));
  CHECK(a.activity.at("B") == doctest::Approx((2.0 / 4) / (30.0 / 40)));
  CHECK(a.activity.at("C") == doctest::Approx(1.0));
}

TEST_CASE("mean publication year per concept") {
  const std::vector<WorkRecord> two = {doc(2019, {"A"}), doc(2021, {"A"})};
  CHECK(mean_pub_year_scores(two).at("A") == 2020.0);
  const std::vector<WorkRecord> one = {doc(2022, {"A"})};
  CHECK(mean_pub_year_scores(one).at("A") == 2022.0);
  const std::vector<WorkRecord> mixed = {doc(2019, {"A", "B"}), doc(2021, {"A"})};
  const auto m = mean_pub_year_scores(mixed);
  CHECK(m.at("A") == 2020.0);
  CHECK(m.at("B") == 2019.0);
}

TEST_CASE("score column fills absent nodes with the mean") {
  auto map = two_node_base();
  attach_score_column(map, "mean_pub_year", {{"A", 2020.0}});
  CHECK(map.score_columns == std::vector<std::string>{"mean_pub_year"});
  CHECK(map.nodes[0].scores == std::vector<double>{2020.0});
  CHECK(map.nodes[1].scores == std::vector<double>{2020.0});
}
