#include "overlaymap/api.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "overlaymap/errors.hpp"

namespace overlaymap {

std::string UnitSelector::filter_clause() const {
  switch (kind) {
    case Kind::author:
      return "authorships.author.id:" + id;
    case Kind::institution:
      return "authorships.institutions.id:" + id;
    case Kind::world:
      return {};
  }
  return {};
}

// --- NetworkTransport --------------------------------------------------------

struct NetworkTransport::Impl {
  httplib::Client client;
  std::string mailto;

  Impl(const std::string& base, std::string m) : client(base), mailto(std::move(m)) {
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    client.set_follow_location(true);
  }
};

NetworkTransport::NetworkTransport(std::string base_url, std::string mailto)
    : impl_(std::make_unique<Impl>(base_url, std::move(mailto))) {}

NetworkTransport::~NetworkTransport() = default;

HttpResponse NetworkTransport::get(const std::string& target) {
  std::string path = target;
  if (!impl_->mailto.empty()) {
    path += (path.find('?') == std::string::npos ? "?" : "&");
    path += "mailto=" + url_encode(impl_->mailto);
  }
  auto res = impl_->client.Get(path);
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

// --- FixtureTransport --------------------------------------------------------

FixtureTransport::FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::ifstream in(dir_ / "index.json");
  if (!in) throw DataError("fixture index not found in " + dir_.string());
  try {
    auto j = nlohmann::json::parse(in);
    for (const auto& [target, file] : j.items()) index_[target] = file.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed fixture index: " + std::string(e.what()));
  }
}

HttpResponse FixtureTransport::get(const std::string& target) {
  requests_.push_back(target);
  auto it = index_.find(target);
  if (it == index_.end()) return {404, "no recorded response for " + target};
  std::ifstream in(dir_ / it->second, std::ios::binary);
  if (!in) throw TransportError("cannot read fixture " + (dir_ / it->second).string());
  std::stringstream buf;
  buf << in.rdbuf();
  return {200, buf.str()};
}

std::unique_ptr<Transport> make_transport(const std::string& locator, const std::string& mailto) {
  constexpr std::string_view kFixture = "fixture:";
  if (locator.starts_with(kFixture)) {
    return std::make_unique<FixtureTransport>(locator.substr(kFixture.size()));
  }
  return std::make_unique<NetworkTransport>(locator, mailto);
}

// --- queries -----------------------------------------------------------------

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == ':' || c == ',' ||
        c == '|' || c == '*') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

std::string get_with_retry(Transport& transport, const std::string& target, const FetchOptions& options) {
  auto backoff = options.initial_backoff;
  std::string last_error;
  const int attempts = std::max(1, options.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      auto res = transport.get(target);
      if (res.status == 200) return std::move(res.body);
      last_error = "HTTP " + std::to_string(res.status);
      if (res.status != 429 && res.status < 500) {
        throw DataError("GET " + target + " failed: " + last_error);
      }
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    if (attempt == attempts) break;
    if (options.sleep) {
      options.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff = std::min(backoff * 2, options.max_backoff);
  }
  throw DataError("GET " + target + " failed after " + std::to_string(attempts) +
                  " attempts: " + last_error);
}

namespace {

template <typename PageFn>
void for_each_page(Transport& transport, const std::string& base_target, const FetchOptions& options,
                   PageFn&& on_page) {
  std::set<std::string> seen_cursors;
  std::string cursor = "*";
  for (std::size_t page = 0;; ++page) {
    if (page >= options.page_cap) {
      throw DataError("page cap of " + std::to_string(options.page_cap) + " reached for " + base_target);
    }
    seen_cursors.insert(cursor);
    const auto target = base_target + "&cursor=" + url_encode(cursor);
    const auto body = get_with_retry(transport, target, options);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("GET " + target + ": response is not JSON: " + e.what());
    }
    const bool more = on_page(j);
    const auto meta = j.find("meta");
    if (!more || meta == j.end() || !meta->contains("next_cursor") || (*meta)["next_cursor"].is_null()) {
      return;
    }
    auto next = (*meta)["next_cursor"].get<std::string>();
    if (seen_cursors.contains(next)) {
      throw DataError("pagination cursor loop detected at page " + std::to_string(page + 1) + " of " +
                      base_target + " (cursor '" + next + "' repeated)");
    }
    cursor = std::move(next);
  }
}

std::string level_filter(int max_level) {
  std::string f = "level:";
  for (int l = 0; l <= max_level; ++l) {
    if (l > 0) f += '|';
    f += std::to_string(l);
  }
  return f;
}

}  // namespace

std::map<std::string, int> fetch_concept_levels(Transport& transport, const FetchOptions& options) {
  std::map<std::string, int> levels;
  const auto target = "/concepts?filter=" + level_filter(options.max_level) +
                      "&select=id,level&per_page=" + std::to_string(options.per_page);
  try {
    for_each_page(transport, target, options, [&](const nlohmann::json& page) {
      const auto results = page.find("results");
      if (results == page.end() || !results->is_array()) throw DataError("concept page without results");
      for (const auto& r : *results) {
        levels[strip_entity_prefix(r.at("id").get<std::string>())] = r.at("level").get<int>();
      }
      return !results->empty();
    });
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed concepts page: " + std::string(e.what()));
  }
  return levels;
}

ConceptCounts fetch_concept_counts(const UnitSelector& selector, Transport& transport,
                                   const FetchOptions& options, const std::map<std::string, int>* levels) {
  if (selector.kind != UnitSelector::Kind::world && selector.id.empty()) {
    throw UsageError("unit selector needs an id");
  }
  std::map<std::string, int> fetched;
  if (levels == nullptr) {
    fetched = fetch_concept_levels(transport, options);
    levels = &fetched;
  }

  std::string filter = selector.filter_clause();
  if (options.period) {
    if (options.period->first > options.period->second) throw UsageError("inverted period");
    if (!filter.empty()) filter += ',';
    filter += "publication_year:" + std::to_string(options.period->first) + "-" +
              std::to_string(options.period->second);
  }
  std::string target = "/works?";
  if (!filter.empty()) target += "filter=" + url_encode(filter) + "&";
  target += "group_by=concepts.id&per_page=" + std::to_string(options.per_page);

  ConceptCounts out;
  try {
    for_each_page(transport, target, options, [&](const nlohmann::json& page) {
      const auto groups = page.find("group_by");
      if (groups == page.end() || !groups->is_array()) throw DataError("works page without group_by");
      for (const auto& g : *groups) {
        const auto id = strip_entity_prefix(g.at("key").get<std::string>());
        auto level = levels->find(id);
        if (level == levels->end() || level->second > options.max_level) continue;
        out.add(id, g.at("count").get<std::int64_t>());
      }
      return !groups->empty();
    });
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed group_by page: " + std::string(e.what()));
  }
  return out;
}

}  // namespace overlaymap
