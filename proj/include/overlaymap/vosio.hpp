#pragma once

#include <Eigen/SparseCore>

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "overlaymap/relations.hpp"

namespace overlaymap {

struct MapNode {
  int id = 0;
  std::string label;
  double x = 0;
  double y = 0;
  int cluster = 1;
  std::vector<double> weights;  // parallel to MapDocument::weight_columns
  std::vector<double> scores;   // parallel to MapDocument::score_columns

  friend bool operator==(const MapNode&, const MapNode&) = default;
};

/// A base or overlay map. Node ids run 1..n; when concept ids are known,
/// `concept_ids[id - 1]` is the concept of node `id` and ids follow
/// lexicographic concept id order.
struct MapDocument {
  std::vector<std::string> weight_columns{"papers"};  // header "weight<papers>"
  std::vector<std::string> score_columns;             // header "score<...>"
  std::vector<MapNode> nodes;
  std::vector<std::string> concept_ids;  // empty when read from a bare map file

  // Throws DataError when an invariant is broken.
  void validate() const;
  int node_id(std::string_view concept_id) const;  // 0 if absent
  std::size_t weight_index(std::string_view column) const;

  friend bool operator==(const MapDocument&, const MapDocument&) = default;
};

// "%.4f" with negative zero printed as 0.0000.
std::string format_fixed4(double value);

/// Tab-separated map file: header then one line per node in id order.
/// Throws DataError for labels containing tabs or newlines.
std::string write_map_file(const MapDocument& map);

/// Inverse of write_map_file. Mandatory columns are id, label, x, y,
/// cluster; any further column must be weight<...> or score<...>. Throws
/// ParseError naming the offending line.
MapDocument read_map_file(std::string_view text);

// id<TAB>concept_id sidecar for maps written to the text format.
std::string write_id_table(const MapDocument& map);
std::vector<std::string> read_id_table(std::string_view text, std::size_t node_count);

using IdTable = std::map<std::string, int, std::less<>>;
IdTable id_table(const MapDocument& map);

/// `id_i<TAB>id_j<TAB>strength` with id_i < id_j sorted by (id_i, id_j);
/// raw links are written as integers.
std::string write_network_file(const ConceptLinkMatrix& links, const IdTable& ids);

/// Similarities are written with 4 decimals.
template <typename Scalar>
std::string write_network_file(const SimilarityMatrix<Scalar>& sims, const IdTable& ids);

/// Self-describing structured form (schema_version "1"): metadata, nodes
/// with concept ids and full-precision values, and links.
nlohmann::json to_structured(const MapDocument& map, const ConceptLinkMatrix* links = nullptr,
                             const nlohmann::json& metadata = nlohmann::json::object());
MapDocument from_structured(const nlohmann::json& j);

}  // namespace overlaymap
