#include "overlaymap/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "overlaymap/errors.hpp"
#include "overlaymap/parallel.hpp"

namespace overlaymap {

namespace {

constexpr std::string_view kEntityPrefix = "https://openalex.org/";

std::string id_field(const nlohmann::json& j, std::size_t line, const char* what) {
  if (!j.is_string()) throw ParseError(line, std::string(what) + " is not a string");
  auto id = strip_entity_prefix(j.get_ref<const std::string&>());
  if (id.empty()) throw ParseError(line, std::string("empty ") + what);
  return id;
}

}  // namespace

void CorpusFilter::validate() const {
  if (year_min > year_max) {
    throw UsageError("period start " + std::to_string(year_min) + " is after period end " +
                     std::to_string(year_max));
  }
  if (max_level < 0 || max_level > kMaxConceptLevel) {
    throw UsageError("max level must be in [0, 5], got " + std::to_string(max_level));
  }
}

void ConceptCounts::add(const std::string& concept_id, std::int64_t n) {
  if (n < 0) throw DataError("negative count for " + concept_id);
  counts[concept_id] += n;
  total += n;
}

void ConceptCounts::merge(const ConceptCounts& other) {
  for (const auto& [id, n] : other.counts) add(id, n);
}

std::int64_t ConceptCounts::count(const std::string& concept_id) const {
  auto it = counts.find(concept_id);
  return it == counts.end() ? 0 : it->second;
}

bool ConceptCounts::consistent() const {
  std::int64_t sum = 0;
  for (const auto& [id, n] : counts) {
    if (n < 0) return false;
    sum += n;
  }
  return sum == total;
}

std::string strip_entity_prefix(std::string_view id) {
  if (id.starts_with(kEntityPrefix)) id.remove_prefix(kEntityPrefix.size());
  return std::string(id);
}

std::string sanitize_label(std::string_view label) {
  std::string out(label);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; },
                  ' ');
  return out;
}

WorkRecord parse_work_line(std::string_view line, std::size_t line_number, ConceptCatalog* catalog) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_number, "record is not an object");

  WorkRecord work;
  auto id = j.find("id");
  if (id == j.end()) throw ParseError(line_number, "missing id");
  work.work_id = id_field(*id, line_number, "id");

  if (auto year = j.find("publication_year"); year != j.end() && !year->is_null()) {
    if (!year->is_number_integer()) throw ParseError(line_number, "publication_year is not an integer");
    work.pub_year = year->get<int>();
  }

  if (auto concepts = j.find("concepts"); concepts != j.end() && !concepts->is_null()) {
    if (!concepts->is_array()) throw ParseError(line_number, "concepts is not an array");
    std::unordered_set<std::string> seen;
    for (const auto& c : *concepts) {
      if (!c.is_object()) throw ParseError(line_number, "concept entry is not an object");
      auto cid = c.find("id");
      auto level = c.find("level");
      if (cid == c.end() || level == c.end()) throw ParseError(line_number, "concept without id or level");
      if (!level->is_number_integer()) throw ParseError(line_number, "concept level is not an integer");
      const int lvl = level->get<int>();
      if (lvl < 0 || lvl > kMaxConceptLevel) {
        throw ParseError(line_number, "concept level " + std::to_string(lvl) + " outside [0, 5]");
      }
      auto concept_id = id_field(*cid, line_number, "concept id");
      if (!seen.insert(concept_id).second) continue;
      if (catalog != nullptr && !catalog->contains(concept_id)) {
        std::string label;
        if (auto name = c.find("display_name"); name != c.end() && name->is_string()) {
          label = sanitize_label(name->get_ref<const std::string&>());
        }
        if (label.empty()) label = concept_id;
        catalog->emplace(concept_id, ConceptRecord{concept_id, std::move(label), lvl});
      }
      work.concepts.push_back({std::move(concept_id), lvl});
    }
  }

  if (auto refs = j.find("referenced_works"); refs != j.end() && !refs->is_null()) {
    if (!refs->is_array()) throw ParseError(line_number, "referenced_works is not an array");
    std::unordered_set<std::string> seen{work.work_id};
    for (const auto& r : *refs) {
      auto ref = id_field(r, line_number, "reference");
      if (seen.insert(ref).second) work.references.push_back(std::move(ref));
    }
  }
  return work;
}

std::string serialize_work(const WorkRecord& work) {
  nlohmann::json j;
  j["id"] = std::string(kEntityPrefix) + work.work_id;
  j["publication_year"] = work.pub_year ? nlohmann::json(*work.pub_year) : nlohmann::json(nullptr);
  j["concepts"] = nlohmann::json::array();
  for (const auto& c : work.concepts) {
    j["concepts"].push_back({{"id", std::string(kEntityPrefix) + c.concept_id}, {"level", c.level}});
  }
  j["referenced_works"] = nlohmann::json::array();
  for (const auto& r : work.references) j["referenced_works"].push_back(std::string(kEntityPrefix) + r);
  return j.dump();
}

std::optional<WorkRecord> filter_work(WorkRecord work, const CorpusFilter& filter) {
  if (!work.pub_year || *work.pub_year < filter.year_min || *work.pub_year > filter.year_max) {
    return std::nullopt;
  }
  std::erase_if(work.concepts, [&](const ConceptAssignment& c) { return c.level > filter.max_level; });
  if (work.concepts.empty()) return std::nullopt;
  return work;
}

std::vector<WorkRecord> filter_works(std::vector<WorkRecord> works, const CorpusFilter& filter) {
  std::vector<WorkRecord> kept;
  kept.reserve(works.size());
  for (auto& w : works) {
    if (auto f = filter_work(std::move(w), filter)) kept.push_back(std::move(*f));
  }
  return kept;
}

ConceptCounts count_concepts(std::span<const WorkRecord> works, int max_level) {
  ConceptCounts out;
  for (const auto& w : works) {
    for (const auto& c : w.concepts) {
      if (c.level <= max_level) out.add(c.concept_id);
    }
  }
  return out;
}

std::string write_counts_table(const ConceptCounts& counts) {
  std::string out = "concept_id\tcount\n";
  for (const auto& [id, n] : counts.counts) {
    out += id;
    out += '\t';
    out += std::to_string(n);
    out += '\n';
  }
  return out;
}

ConceptCounts read_counts_table(std::string_view text) {
  ConceptCounts out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "concept_id\tcount") throw ParseError(line_no, "expected header 'concept_id<TAB>count'");
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw ParseError(line_no, "expected two tab-separated columns");
    }
    auto id = strip_entity_prefix(line.substr(0, tab));
    auto num = line.substr(tab + 1);
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
    if (ec != std::errc{} || ptr != num.data() + num.size() || n < 0) {
      throw ParseError(line_no, "count is not a non-negative integer");
    }
    if (id.empty()) throw ParseError(line_no, "empty concept id");
    if (out.counts.contains(id)) throw ParseError(line_no, "duplicate concept " + id);
    out.add(id, n);
  }
  return out;
}

nlohmann::json counts_to_json(const ConceptCounts& counts) {
  nlohmann::json j;
  j["total"] = counts.total;
  j["counts"] = nlohmann::json::object();
  for (const auto& [id, n] : counts.counts) j["counts"][id] = n;
  return j;
}

ConceptCounts counts_from_json(const nlohmann::json& j) {
  ConceptCounts out;
  try {
    for (const auto& [id, n] : j.at("counts").items()) out.add(strip_entity_prefix(id), n.get<std::int64_t>());
    if (j.contains("total") && j.at("total").get<std::int64_t>() != out.total) {
      throw DataError("counts total does not match the sum of counts");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed counts object: ") + e.what());
  }
  return out;
}

ConceptCounts load_counts_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    try {
      return counts_from_json(nlohmann::json::parse(buf.str()));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  try {
    return read_counts_table(buf.str());
  } catch (const ParseError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

nlohmann::json CorpusStats::to_json() const {
  return {{"files", files},
          {"lines", lines},
          {"parse_errors", parse_errors},
          {"parsed", parsed},
          {"missing_year", missing_year},
          {"out_of_period", out_of_period},
          {"no_qualifying_concept", no_qualifying_concept},
          {"retained", retained},
          {"concepts", concepts},
          {"concept_assignments", concept_assignments}};
}

// ---------------------------------------------------------------------------

std::vector<std::filesystem::path> list_snapshot_files(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("snapshot directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().starts_with('.')) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::size_t for_each_line(const std::filesystem::path& file,
                          const std::function<void(std::string_view, std::size_t)>& fn) {
  // gzread passes uncompressed input through unchanged.
  gzFile gz = gzopen(file.c_str(), "rb");
  if (gz == nullptr) throw DataError("cannot open " + file.string());
  struct Closer {
    gzFile f;
    ~Closer() { gzclose(f); }
  } closer{gz};
  gzbuffer(gz, 1 << 17);

  std::vector<char> chunk(1 << 16);
  std::string pending;
  std::size_t line_no = 0;
  auto emit = [&](std::string_view line) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line, line_no);
  };
  for (;;) {
    const int n = gzread(gz, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int err = 0;
      throw DataError(file.string() + ": " + gzerror(gz, &err));
    }
    if (n == 0) break;
    std::string_view data(chunk.data(), static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = data.find('\n'); nl != std::string_view::npos; nl = data.find('\n', start)) {
      if (pending.empty()) {
        emit(data.substr(start, nl - start));
      } else {
        pending.append(data.substr(start, nl - start));
        emit(pending);
        pending.clear();
      }
      start = nl + 1;
    }
    pending.append(data.substr(start));
  }
  if (!pending.empty()) emit(pending);
  return line_no;
}

namespace {

struct ShardResult {
  std::vector<WorkRecord> works;
  ConceptCatalog catalog;
  CorpusStats stats;
  std::vector<std::string> diagnostics;
};

ShardResult load_file(const std::filesystem::path& file, const CorpusFilter& filter) {
  ShardResult shard;
  shard.stats.lines = for_each_line(file, [&](std::string_view line, std::size_t line_no) {
    WorkRecord work;
    try {
      work = parse_work_line(line, line_no, &shard.catalog);
    } catch (const ParseError& e) {
      ++shard.stats.parse_errors;
      shard.diagnostics.push_back(file.string() + ":" + e.what());
      return;
    }
    ++shard.stats.parsed;
    if (!work.usable()) {
      ++shard.stats.missing_year;
      return;
    }
    if (*work.pub_year < filter.year_min || *work.pub_year > filter.year_max) {
      ++shard.stats.out_of_period;
      return;
    }
    auto kept = filter_work(std::move(work), filter);
    if (!kept) {
      ++shard.stats.no_qualifying_concept;
      return;
    }
    shard.works.push_back(std::move(*kept));
  });
  return shard;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir, const CorpusFilter& filter, unsigned threads) {
  filter.validate();
  const auto files = list_snapshot_files(dir);
  std::vector<ShardResult> shards(files.size());
  parallel_for(files.size(), threads, [&](std::size_t i) { shards[i] = load_file(files[i], filter); });

  Corpus corpus;
  corpus.stats.files = files.size();
  for (auto& shard : shards) {
    corpus.stats.lines += shard.stats.lines;
    corpus.stats.parse_errors += shard.stats.parse_errors;
    corpus.stats.parsed += shard.stats.parsed;
    corpus.stats.missing_year += shard.stats.missing_year;
    corpus.stats.out_of_period += shard.stats.out_of_period;
    corpus.stats.no_qualifying_concept += shard.stats.no_qualifying_concept;
    for (auto& [id, rec] : shard.catalog) corpus.catalog.try_emplace(id, std::move(rec));
    std::move(shard.works.begin(), shard.works.end(), std::back_inserter(corpus.works));
    std::move(shard.diagnostics.begin(), shard.diagnostics.end(), std::back_inserter(corpus.diagnostics));
  }
  corpus.stats.retained = corpus.works.size();
  std::unordered_set<std::string_view> concepts;
  for (const auto& w : corpus.works) {
    corpus.stats.concept_assignments += static_cast<std::int64_t>(w.concepts.size());
    for (const auto& c : w.concepts) concepts.insert(c.concept_id);
  }
  corpus.stats.concepts = concepts.size();
  return corpus;
}

}  // namespace overlaymap
