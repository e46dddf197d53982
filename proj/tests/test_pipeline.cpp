#include "doctest.h"

#include <set>

#include "cli_runner.hpp"
#include "overlaymap/errors.hpp"
#include "overlaymap/pipeline.hpp"

using namespace overlaymap;
using testutil::run_cli;
using testutil::slurp;
using testutil::TempDir;

namespace {

const std::string kMini = OVERLAYMAP_FIXTURES "/mini";

RunConfig mini_config() {
  RunConfig c;
  c.snapshot_dir = kMini;
  c.year_min = 2018;
  c.year_max = 2022;
  return c;
}

}  // namespace

TEST_CASE("config files set defaults") {
  RunConfig c;
  apply_config_text(c, "# comment\nfrom = 2018\nto=2022\nresolution = 0.5\nseed = 7\n\nthreads = 2\n");
  CHECK(c.year_min == 2018);
  CHECK(c.year_max == 2022);
  CHECK(c.resolution == 0.5);
  CHECK(c.seed == 7);
  CHECK(c.threads == 2);
  CHECK_THROWS_AS(apply_config_text(c, "colour = red\n"), UsageError);
  CHECK_THROWS_AS(apply_config_text(c, "window = five\n"), UsageError);
  CHECK_THROWS_AS(apply_config_text(c, "window\n"), UsageError);
}

TEST_CASE("period presets") {
  const auto p = find_period_preset("p1800w30");
  REQUIRE(p);
  CHECK(p->year_min == 1800);
  CHECK(p->window == 30);
  CHECK_FALSE(find_period_preset("p1999"));
}

TEST_CASE("config validation") {
  auto c = mini_config();
  CHECK_NOTHROW(c.validate());
  c.year_min = 2023;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = mini_config();
  c.resolution = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = mini_config();
  c.window = -1;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("basemap on the mini fixture") {
  const auto config = mini_config();
  const auto corpus = load_corpus(kMini, config.corpus_filter());
  const auto r = build_basemap(corpus, config);
  CHECK(r.map.nodes.size() == 12);
  CHECK(r.map.concept_ids.size() == 12);
  std::set<std::string> ids(r.map.concept_ids.begin(), r.map.concept_ids.end());
  for (const auto* expected : {"C185592680", "C147597530", "C152365726", "C161790260", "C41008148", "C2522767166",
                               "C23123220", "C2778805511", "C121332964", "C26873012", "C16577136", "C84114770"}) {
    CHECK(ids.count(expected) == 1);
  }
  CHECK(std::abs(mean_pairwise_distance(r.layout.positions) - 1.0) <= 1e-6);
  for (const auto& n : r.map.nodes) {
    CHECK(n.cluster >= 1);
    CHECK(n.cluster <= r.clusters.cluster_count);
  }
  CHECK(r.manifest.at("corpus").at("retained") == corpus.stats.retained);
}

TEST_CASE("empty corpus is a data error") {
  auto config = mini_config();
  config.year_min = 1900;
  config.year_max = 1901;
  const auto corpus = load_corpus(kMini, config.corpus_filter());
  CHECK_THROWS_AS(build_basemap(corpus, config), DataError);
}

TEST_CASE("levels table") {
  const auto levels = read_levels_table("concept_id\tlevel\nC1\t0\nC2\t2\n");
  CHECK(levels == std::map<std::string, int>{{"C1", 0}, {"C2", 2}});
  CHECK_THROWS_AS(read_levels_table("concept_id\tlevel\nC1\tzero\n"), ParseError);
}

TEST_CASE("cli: basemap writes the map files") {
  TempDir tmp("cli_basemap");
  const auto out = tmp.path() / "out";
  const auto r = run_cli({"basemap", "--snapshot", kMini, "--from", "2018", "--to", "2022", "--window", "5", "-o",
                          out.string()},
                         tmp.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  for (const auto* f : {"map.txt", "map.ids.tsv", "network.txt", "map.json", "manifest.json"}) {
    CHECK(std::filesystem::exists(out / f));
  }
  const auto map = read_map_file(slurp(out / "map.txt"));
  CHECK(map.nodes.size() == 12);
  CHECK(load_map(out / "map.txt").concept_ids == load_map(out / "map.json").concept_ids);
}

TEST_CASE("cli: overlay with empty unit counts exits 2") {
  TempDir tmp("cli_empty_unit");
  const auto out = tmp.path() / "out";
  REQUIRE(run_cli({"basemap", "--snapshot", kMini, "--from", "2018", "--to", "2022", "-o", out.string()}, tmp.path())
              .status == 0);
  write_text_file(tmp.path() / "empty.tsv", "concept_id\tcount\n");
  const auto r = run_cli({"overlay", "--basemap", (out / "map.txt").string(), "--unit-counts",
                          (tmp.path() / "empty.tsv").string(), "-o", (tmp.path() / "ov").string()},
                         tmp.path());
  CHECK(r.status == 2);
  CHECK(r.err.find("empty unit") != std::string::npos);
}

TEST_CASE("cli: overlay writes weights and warnings") {
  TempDir tmp("cli_overlay");
  const auto out = tmp.path() / "out";
  REQUIRE(run_cli({"basemap", "--snapshot", kMini, "--from", "2018", "--to", "2022", "-o", out.string()}, tmp.path())
              .status == 0);
  write_text_file(tmp.path() / "unit.tsv", "concept_id\tcount\nC41008148\t3\nC2778805511\t2\nC999\t1\n");
  const auto r = run_cli({"overlay", "--basemap", (out / "map.txt").string(), "--unit-counts",
                          (tmp.path() / "unit.tsv").string(), "-o", (tmp.path() / "ov").string()},
                         tmp.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(r.err.find("C999") != std::string::npos);
  const auto ov = load_map(tmp.path() / "ov" / "overlay_map.txt");
  double total = 0;
  for (const auto& n : ov.nodes) total += n.weights[0];
  CHECK(total == 5);
}

TEST_CASE("cli: inverted range is a usage error") {
  TempDir tmp("cli_inverted");
  const auto r = run_cli({"basemap", "--snapshot", kMini, "--from", "2022", "--to", "2018", "-o",
                          (tmp.path() / "out").string()},
                         tmp.path());
  CHECK(r.status == 1);
  CHECK_FALSE(std::filesystem::exists(tmp.path() / "out" / "map.txt"));
}

TEST_CASE("cli: unknown flag and missing subcommand are usage errors") {
  TempDir tmp("cli_usage");
  CHECK(run_cli({"basemap", "--bogus"}, tmp.path()).status == 1);
  CHECK(run_cli({}, tmp.path()).status == 1);
  CHECK(run_cli({"fetch", "--api", "fixture:" OVERLAYMAP_FIXTURES "/api"}, tmp.path()).status == 1);
}

TEST_CASE("cli: fetch from recorded responses") {
  TempDir tmp("cli_fetch");
  const auto r = run_cli({"fetch", "--author", "A5000", "--api", "fixture:" OVERLAYMAP_FIXTURES "/api"}, tmp.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(r.out == "concept_id\tcount\nC2778805511\t2\nC41008148\t3\n");
  const auto loop = run_cli({"fetch", "--author", "A9", "--api", "fixture:" OVERLAYMAP_FIXTURES "/api"}, tmp.path());
  CHECK(loop.status == 2);
  CHECK(loop.err.find("cursor loop") != std::string::npos);
}

TEST_CASE("cli: stats reports filter counts") {
  TempDir tmp("cli_stats");
  const auto r = run_cli({"stats", "--snapshot", kMini, "--from", "2018", "--to", "2022"}, tmp.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("parsed") == 200);
  CHECK(j.at("parse_errors") == 1);
  CHECK(j.at("concepts") == 12);
}

TEST_CASE("cli: config file supplies defaults and flags override") {
  TempDir tmp("cli_config");
  write_text_file(tmp.path() / "run.conf", "snapshot = " + kMini + "\nfrom = 2018\nto = 2022\nseed = 3\n");
  const auto r = run_cli({"basemap", "--config", (tmp.path() / "run.conf").string(), "--seed", "9", "-o",
                          (tmp.path() / "out").string()},
                         tmp.path());
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto manifest = nlohmann::json::parse(slurp(tmp.path() / "out" / "manifest.json"));
  CHECK(manifest.at("parameters").at("seed") == 9);
  CHECK(manifest.at("parameters").at("from") == 2018);
}
