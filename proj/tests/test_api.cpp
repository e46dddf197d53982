#include "doctest.h"

#include <fstream>
#include <sstream>

#include "overlaymap/api.hpp"
#include "overlaymap/errors.hpp"
#include "overlaymap/ingest.hpp"

using namespace overlaymap;

namespace {

const std::string kFixtures = OVERLAYMAP_FIXTURES "/api";

FetchOptions no_sleep() {
  FetchOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

// Fails the first `failures` requests, then delegates.
class FlakyTransport final : public Transport {
 public:
  FlakyTransport(Transport& inner, int failures, int status) : inner_(inner), failures_(failures), status_(status) {}
  HttpResponse get(const std::string& target) override {
    ++calls;
    if (failures_ > 0) {
      --failures_;
      if (status_ == 0) throw TransportError("connection reset");
      return {status_, "busy"};
    }
    return inner_.get(target);
  }
  int calls = 0;

 private:
  Transport& inner_;
  int failures_;
  int status_;
};

std::vector<WorkRecord> recorded_works() {
  std::ifstream in(kFixtures + "/works_A5000.jsonl");
  std::vector<WorkRecord> works;
  std::string line;
  while (std::getline(in, line)) works.push_back(parse_work_line(line));
  return works;
}

}  // namespace

TEST_CASE("selector filter clauses") {
  CHECK(UnitSelector::author("https://openalex.org/A5000").filter_clause() == "authorships.author.id:A5000");
  CHECK(UnitSelector::institution("I1").filter_clause() == "authorships.institutions.id:I1");
  CHECK(UnitSelector::world().filter_clause().empty());
}

TEST_CASE("url_encode keeps filter punctuation") {
  CHECK(url_encode("level:0|1|2") == "level:0|1|2");
  CHECK(url_encode("a b/c=") == "a%20b%2Fc%3D");
  CHECK(url_encode("IlsyXSI=") == "IlsyXSI%3D");
}

TEST_CASE("concept levels are collected across cursor pages") {
  FixtureTransport t(kFixtures);
  const auto levels = fetch_concept_levels(t, no_sleep());
  CHECK(levels.at("C41008148") == 0);
  CHECK(levels.at("C2778805511") == 2);
  CHECK(levels.at("C185592680") == 0);
  CHECK(levels.count("C3000002") == 0);
  CHECK(t.requests().size() == 3);
}

TEST_CASE("author counts from the recorded fixture") {
  FixtureTransport t(kFixtures);
  const auto counts = fetch_concept_counts(UnitSelector::author("A5000"), t, no_sleep());
  CHECK(counts.counts == std::map<std::string, std::int64_t>{{"C2778805511", 2}, {"C41008148", 3}});
  CHECK(counts.total == 5);

  // checked against the three recorded works
  const auto works = recorded_works();
  REQUIRE(works.size() == 3);
  const auto local = count_concepts(filter_works(works, CorpusFilter{1800, 2100, 2}));
  CHECK(local == counts);
}

TEST_CASE("world over the same fixture corpus gives identical counts") {
  FixtureTransport t(kFixtures);
  const auto author = fetch_concept_counts(UnitSelector::author("A5000"), t, no_sleep());
  const auto world = fetch_concept_counts(UnitSelector::world(), t, no_sleep());
  CHECK(world == author);
}

TEST_CASE("empty result page gives empty counts") {
  FixtureTransport t(kFixtures);
  const auto counts = fetch_concept_counts(UnitSelector::author("A0"), t, no_sleep());
  CHECK(counts.counts.empty());
  CHECK(counts.total == 0);
}

TEST_CASE("period is added to the works filter") {
  FixtureTransport t(kFixtures);
  auto options = no_sleep();
  options.period = {2018, 2022};
  const auto counts = fetch_concept_counts(UnitSelector::institution("I1"), t, options);
  CHECK(counts.counts == std::map<std::string, std::int64_t>{{"C185592680", 4}, {"C41008148", 7}});
  options.period = {2022, 2018};
  CHECK_THROWS_AS(fetch_concept_counts(UnitSelector::institution("I1"), t, options), UsageError);
}

TEST_CASE("a repeated cursor is reported as a loop") {
  FixtureTransport t(kFixtures);
  try {
    fetch_concept_counts(UnitSelector::author("A9"), t, no_sleep());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("cursor loop") != std::string::npos);
  }
}

TEST_CASE("page cap bounds pagination") {
  FixtureTransport t(kFixtures);
  auto options = no_sleep();
  options.page_cap = 1;
  CHECK_THROWS_AS(fetch_concept_counts(UnitSelector::author("A5000"), t, options), DataError);
}

TEST_CASE("transient failures are retried with doubling backoff") {
  FixtureTransport inner(kFixtures);
  std::vector<long> waits;
  auto options = no_sleep();
  options.sleep = [&](std::chrono::milliseconds ms) { waits.push_back(static_cast<long>(ms.count())); };

  SUBCASE("transport errors") {
    FlakyTransport t(inner, 3, 0);
    const auto body = get_with_retry(t, "/works?group_by=concepts.id&per_page=200&cursor=*", options);
    CHECK_FALSE(body.empty());
    CHECK(t.calls == 4);
    CHECK(waits == std::vector<long>{500, 1000, 2000});
  }
  SUBCASE("429 and 5xx") {
    FlakyTransport t(inner, 2, 503);
    get_with_retry(t, "/works?group_by=concepts.id&per_page=200&cursor=*", options);
    CHECK(t.calls == 3);
  }
  SUBCASE("gives up after max_attempts") {
    FlakyTransport t(inner, 100, 429);
    CHECK_THROWS_AS(get_with_retry(t, "/x", options), DataError);
    CHECK(t.calls == options.max_attempts);
    CHECK(waits.back() <= options.max_backoff.count());
  }
  SUBCASE("client errors are not retried") {
    FlakyTransport t(inner, 0, 0);
    CHECK_THROWS_AS(get_with_retry(t, "/unknown", options), DataError);
    CHECK(t.calls == 1);
  }
}

TEST_CASE("make_transport dispatch") {
  auto fixture = make_transport("fixture:" + kFixtures);
  CHECK(dynamic_cast<FixtureTransport*>(fixture.get()) != nullptr);
  CHECK_THROWS_AS(make_transport("fixture:/nonexistent"), DataError);
}
