#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "overlaymap/ingest.hpp"

namespace overlaymap {

/// Which works a grouped count query covers.
struct UnitSelector {
  enum class Kind { author, institution, world };

  Kind kind = Kind::world;
  std::string id;  // entity id without prefix; empty for world

  static UnitSelector author(std::string id) { return {Kind::author, strip_entity_prefix(id)}; }
  static UnitSelector institution(std::string id) { return {Kind::institution, strip_entity_prefix(id)}; }
  static UnitSelector world() { return {Kind::world, {}}; }

  // Works filter clause, e.g. "authorships.author.id:A123"; empty for world.
  std::string filter_clause() const;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Thrown by transports when no response could be obtained.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // `target` is path plus query string, e.g. "/works?filter=...".
  virtual HttpResponse get(const std::string& target) = 0;
};

/// HTTP(S) client against a base URL such as https://api.openalex.org.
class NetworkTransport final : public Transport {
 public:
  explicit NetworkTransport(std::string base_url, std::string mailto = {});
  ~NetworkTransport() override;
  HttpResponse get(const std::string& target) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Replays recorded responses. The directory holds `index.json`, an object
/// mapping request targets to response file names relative to the
/// directory. Unknown targets produce a 404 response.
class FixtureTransport final : public Transport {
 public:
  explicit FixtureTransport(std::filesystem::path dir);
  HttpResponse get(const std::string& target) override;

  const std::vector<std::string>& requests() const { return requests_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> index_;
  std::vector<std::string> requests_;
};

// "fixture:DIR" selects FixtureTransport; anything else is a base URL.
std::unique_ptr<Transport> make_transport(const std::string& locator, const std::string& mailto = {});

struct FetchOptions {
  std::optional<std::pair<int, int>> period;  // inclusive publication years
  int max_level = 2;
  int per_page = 200;
  std::size_t page_cap = 10000;
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  // Injected so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Percent-encodes everything outside the unreserved set plus ':' ',' '|'.
std::string url_encode(std::string_view s);

/// GET with retry: transport errors, 429 and 5xx are retried with
/// exponential backoff up to max_attempts; other non-200 statuses fail
/// immediately. Throws DataError on final failure.
std::string get_with_retry(Transport& transport, const std::string& target, const FetchOptions& options);

/// Cursor-paginated listing of concepts with level <= options.max_level,
/// returned as concept_id -> level.
std::map<std::string, int> fetch_concept_levels(Transport& transport, const FetchOptions& options);

/// Per-concept work counts for the selector, aggregated over all pages of
/// a works query grouped by concept id, restricted to concepts whose level
/// is <= options.max_level (looked up in `levels`, or fetched when null).
/// Throws DataError on transport failure, non-JSON bodies, a repeated
/// cursor, or when the page cap is exceeded.
ConceptCounts fetch_concept_counts(const UnitSelector& selector, Transport& transport,
                                   const FetchOptions& options,
                                   const std::map<std::string, int>* levels = nullptr);

}  // namespace overlaymap
