#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace overlaymap {

inline constexpr int kMaxConceptLevel = 5;

struct ConceptAssignment {
  std::string concept_id;
  int level = 0;

  friend bool operator==(const ConceptAssignment&, const ConceptAssignment&) = default;
};

/// One bibliographic record. Identifiers are stored without the
/// `https://openalex.org/` prefix. A record without a publication year is
/// kept by the parser but never passes filter_works.
struct WorkRecord {
  std::string work_id;
  std::optional<int> pub_year;
  std::vector<ConceptAssignment> concepts;
  std::vector<std::string> references;

  bool usable() const { return pub_year.has_value(); }

  friend bool operator==(const WorkRecord&, const WorkRecord&) = default;
};

struct ConceptRecord {
  std::string concept_id;
  std::string label;
  int level = 0;
};

// concept_id -> first-seen display record
using ConceptCatalog = std::map<std::string, ConceptRecord>;

struct CorpusFilter {
  int year_min = 0;
  int year_max = 0;
  int max_level = 2;

  // Throws UsageError when year_min > year_max or max_level is outside [0, 5].
  void validate() const;
};

/// Per-concept document counts under multiplicative counting.
/// Invariant: total == sum of counts.
struct ConceptCounts {
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;

  void add(const std::string& concept_id, std::int64_t n = 1);
  void merge(const ConceptCounts& other);
  std::int64_t count(const std::string& concept_id) const;
  bool consistent() const;
  bool empty() const { return total == 0; }

  friend bool operator==(const ConceptCounts&, const ConceptCounts&) = default;
};

// "https://openalex.org/W123" -> "W123"; anything else is returned as is.
std::string strip_entity_prefix(std::string_view id);

// Tabs, CR and LF become single spaces.
std::string sanitize_label(std::string_view label);

/// Parses one line-delimited work object. Unknown fields are ignored,
/// missing concept and reference arrays become empty lists, duplicate
/// concepts and self/duplicate references are dropped. When `catalog` is
/// given, concept display names and levels are recorded into it.
/// Throws ParseError (carrying `line_number`) on malformed input.
WorkRecord parse_work_line(std::string_view line, std::size_t line_number = 0,
                           ConceptCatalog* catalog = nullptr);

// Inverse of parse_work_line for the fields read here.
std::string serialize_work(const WorkRecord& work);

std::optional<WorkRecord> filter_work(WorkRecord work, const CorpusFilter& filter);
std::vector<WorkRecord> filter_works(std::vector<WorkRecord> works, const CorpusFilter& filter);

// Counts every retained concept assignment with level <= max_level.
ConceptCounts count_concepts(std::span<const WorkRecord> works, int max_level = 2);

std::string write_counts_table(const ConceptCounts& counts);
ConceptCounts read_counts_table(std::string_view text);
nlohmann::json counts_to_json(const ConceptCounts& counts);
ConceptCounts counts_from_json(const nlohmann::json& j);
// Dispatches on the file suffix (.json vs anything else).
ConceptCounts load_counts_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Snapshot directories

struct CorpusStats {
  std::size_t files = 0;
  std::size_t lines = 0;
  std::size_t parse_errors = 0;
  std::size_t parsed = 0;
  std::size_t missing_year = 0;
  std::size_t out_of_period = 0;
  std::size_t no_qualifying_concept = 0;
  std::size_t retained = 0;
  std::size_t concepts = 0;
  std::int64_t concept_assignments = 0;

  nlohmann::json to_json() const;
};

struct Corpus {
  std::vector<WorkRecord> works;  // filtered, in file order then line order
  ConceptCatalog catalog;
  CorpusStats stats;
  std::vector<std::string> diagnostics;  // parse errors, "file:line: message"
};

/// Regular files below `dir` (recursive), sorted by path. Hidden files are
/// skipped.
std::vector<std::filesystem::path> list_snapshot_files(const std::filesystem::path& dir);

/// Reads the file line by line; gzip input is decompressed transparently.
/// Empty lines are skipped. Returns the number of lines seen.
/// `fn` receives (line, 1-based line number). Throws DataError on I/O failure.
std::size_t for_each_line(const std::filesystem::path& file,
                          const std::function<void(std::string_view, std::size_t)>& fn);

/// Parses and filters every file below `dir`. Files are processed in
/// parallel; results are concatenated in sorted file order.
Corpus load_corpus(const std::filesystem::path& dir, const CorpusFilter& filter,
                   unsigned threads = 1);

}  // namespace overlaymap
