#include "overlaymap/vosio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "overlaymap/errors.hpp"

namespace overlaymap {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename Fn>
void for_each_text_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, line_no);
  }
}

double parse_real(std::string_view field, std::size_t line, const char* what) {
  std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, std::string(what) + " is not a finite number: '" + s + "'");
  }
  return v;
}

int parse_int(std::string_view field, std::size_t line, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(line, std::string(what) + " is not an integer: '" + std::string(field) + "'");
  }
  return v;
}

bool bracketed(std::string_view header, std::string_view prefix, std::string& inner) {
  if (!header.starts_with(prefix) || !header.ends_with('>') || header.size() < prefix.size() + 2) return false;
  if (header[prefix.size()] != '<') return false;
  inner = std::string(header.substr(prefix.size() + 1, header.size() - prefix.size() - 2));
  return !inner.empty();
}

bool has_control(std::string_view s) {
  return s.find_first_of("\t\n\r") != std::string_view::npos;
}

}  // namespace

void MapDocument::validate() const {
  for (const auto& c : weight_columns) {
    if (c.empty() || has_control(c) || c.find('>') != std::string::npos) {
      throw DataError("invalid weight column name '" + c + "'");
    }
  }
  for (const auto& c : score_columns) {
    if (c.empty() || has_control(c) || c.find('>') != std::string::npos) {
      throw DataError("invalid score column name '" + c + "'");
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id != static_cast<int>(i + 1)) throw DataError("node ids must run 1..n in order");
    if (n.cluster < 1) throw DataError("node " + std::to_string(n.id) + " has cluster < 1");
    if (n.weights.size() != weight_columns.size() || n.scores.size() != score_columns.size()) {
      throw DataError("node " + std::to_string(n.id) + " does not match the column set");
    }
    if (!std::isfinite(n.x) || !std::isfinite(n.y)) throw DataError("non-finite coordinate");
    if (has_control(n.label)) {
      throw DataError("label of node " + std::to_string(n.id) + " contains a tab or newline");
    }
  }
  if (!concept_ids.empty()) {
    if (concept_ids.size() != nodes.size()) throw DataError("concept id table does not match node count");
    if (!std::is_sorted(concept_ids.begin(), concept_ids.end()) ||
        std::adjacent_find(concept_ids.begin(), concept_ids.end()) != concept_ids.end()) {
      throw DataError("concept ids must be unique and in lexicographic order");
    }
  }
}

int MapDocument::node_id(std::string_view concept_id) const {
  auto it = std::lower_bound(concept_ids.begin(), concept_ids.end(), concept_id);
  if (it == concept_ids.end() || *it != concept_id) return 0;
  return static_cast<int>(it - concept_ids.begin()) + 1;
}

std::size_t MapDocument::weight_index(std::string_view column) const {
  auto it = std::find(weight_columns.begin(), weight_columns.end(), column);
  if (it == weight_columns.end()) throw DataError("map has no weight<" + std::string(column) + "> column");
  return static_cast<std::size_t>(it - weight_columns.begin());
}

std::string format_fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string write_map_file(const MapDocument& map) {
  map.validate();
  std::string out = "id\tlabel\tx\ty\tcluster";
  for (const auto& c : map.weight_columns) out += "\tweight<" + c + ">";
  for (const auto& c : map.score_columns) out += "\tscore<" + c + ">";
  out += '\n';
  for (const auto& n : map.nodes) {
    out += std::to_string(n.id);
    out += '\t';
    out += n.label;
    out += '\t';
    out += format_fixed4(n.x);
    out += '\t';
    out += format_fixed4(n.y);
    out += '\t';
    out += std::to_string(n.cluster);
    for (double w : n.weights) out += '\t' + format_fixed4(w);
    for (double s : n.scores) out += '\t' + format_fixed4(s);
    out += '\n';
  }
  return out;
}

MapDocument read_map_file(std::string_view text) {
  MapDocument map;
  map.weight_columns.clear();
  enum class Column { id, label, x, y, cluster, weight, score };
  std::vector<Column> layout;
  std::vector<std::size_t> slot;
  bool header_seen = false;
  std::set<int> seen_ids;

  for_each_text_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!header_seen) {
      if (line.empty()) throw ParseError(line_no, "missing header line");
      header_seen = true;
      std::set<std::string> names;
      for (auto h : split_tabs(line)) {
        const std::string name(h);
        if (!names.insert(name).second) throw ParseError(line_no, "duplicate column '" + name + "'");
        std::string inner;
        if (name == "id") {
          layout.push_back(Column::id);
        } else if (name == "label") {
          layout.push_back(Column::label);
        } else if (name == "x") {
          layout.push_back(Column::x);
        } else if (name == "y") {
          layout.push_back(Column::y);
        } else if (name == "cluster") {
          layout.push_back(Column::cluster);
        } else if (bracketed(name, "weight", inner)) {
          layout.push_back(Column::weight);
          map.weight_columns.push_back(inner);
        } else if (bracketed(name, "score", inner)) {
          layout.push_back(Column::score);
          map.score_columns.push_back(inner);
        } else {
          throw ParseError(line_no, "unknown column '" + name + "'");
        }
      }
      for (auto required : {"id", "label", "x", "y", "cluster"}) {
        if (!names.contains(required)) {
          throw ParseError(line_no, std::string("missing mandatory column '") + required + "'");
        }
      }
      return;
    }
    if (line.empty()) return;
    const auto fields = split_tabs(line);
    if (fields.size() != layout.size()) {
      throw ParseError(line_no, "expected " + std::to_string(layout.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    MapNode node;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      switch (layout[k]) {
        case Column::id:
          node.id = parse_int(fields[k], line_no, "id");
          break;
        case Column::label:
          node.label = std::string(fields[k]);
          break;
        case Column::x:
          node.x = parse_real(fields[k], line_no, "x");
          break;
        case Column::y:
          node.y = parse_real(fields[k], line_no, "y");
          break;
        case Column::cluster:
          node.cluster = parse_int(fields[k], line_no, "cluster");
          break;
        case Column::weight:
          node.weights.push_back(parse_real(fields[k], line_no, "weight"));
          break;
        case Column::score:
          node.scores.push_back(parse_real(fields[k], line_no, "score"));
          break;
      }
    }
    if (!seen_ids.insert(node.id).second) throw ParseError(line_no, "duplicate id " + std::to_string(node.id));
    if (node.id != static_cast<int>(map.nodes.size()) + 1) {
      throw ParseError(line_no, "id " + std::to_string(node.id) + " out of sequence (ids must run 1..n)");
    }
    if (node.cluster < 1) throw ParseError(line_no, "cluster must be >= 1");
    map.nodes.push_back(std::move(node));
  });
  if (!header_seen) throw ParseError(1, "missing header line");
  return map;
}

std::string write_id_table(const MapDocument& map) {
  std::string out = "id\tconcept_id\n";
  for (std::size_t i = 0; i < map.concept_ids.size(); ++i) {
    out += std::to_string(i + 1) + '\t' + map.concept_ids[i] + '\n';
  }
  return out;
}

std::vector<std::string> read_id_table(std::string_view text, std::size_t node_count) {
  std::vector<std::string> ids(node_count);
  bool header_seen = false;
  for_each_text_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    if (!header_seen) {
      header_seen = true;
      if (line != "id\tconcept_id") throw ParseError(line_no, "expected header 'id<TAB>concept_id'");
      return;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 2) throw ParseError(line_no, "expected 2 fields");
    const int id = parse_int(fields[0], line_no, "id");
    if (id < 1 || static_cast<std::size_t>(id) > node_count) throw ParseError(line_no, "id out of range");
    if (!ids[id - 1].empty()) throw ParseError(line_no, "duplicate id");
    ids[id - 1] = std::string(fields[1]);
  });
  for (const auto& id : ids) {
    if (id.empty()) throw DataError("id table does not cover every map node");
  }
  return ids;
}

IdTable id_table(const MapDocument& map) {
  IdTable table;
  for (std::size_t i = 0; i < map.concept_ids.size(); ++i) table.emplace(map.concept_ids[i], static_cast<int>(i + 1));
  return table;
}

namespace {

template <typename Value, typename Format>
std::string write_pairs(std::vector<std::tuple<int, int, Value>> rows, Format&& format) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::pair{std::get<0>(a), std::get<1>(a)} < std::pair{std::get<0>(b), std::get<1>(b)};
  });
  std::string out;
  for (const auto& [i, j, v] : rows) {
    out += std::to_string(i) + '\t' + std::to_string(j) + '\t' + format(v) + '\n';
  }
  return out;
}

int lookup(const IdTable& ids, const std::string& concept_id) {
  auto it = ids.find(concept_id);
  if (it == ids.end()) throw DataError("concept " + concept_id + " missing from id table");
  return it->second;
}

}  // namespace

std::string write_network_file(const ConceptLinkMatrix& links, const IdTable& ids) {
  std::vector<std::tuple<int, int, std::int64_t>> rows;
  rows.reserve(links.links.size());
  for (const auto& l : links.links) {
    int a = lookup(ids, links.concepts[l.i]);
    int b = lookup(ids, links.concepts[l.j]);
    if (a > b) std::swap(a, b);
    rows.emplace_back(a, b, l.strength);
  }
  for (const auto& c : links.concepts) lookup(ids, c);
  return write_pairs(std::move(rows), [](std::int64_t v) { return std::to_string(v); });
}

template <typename Scalar>
std::string write_network_file(const SimilarityMatrix<Scalar>& sims, const IdTable& ids) {
  std::vector<std::tuple<int, int, double>> rows;
  for (const auto& c : sims.concepts) lookup(ids, c);
  for (Eigen::Index k = 0; k < sims.sims.outerSize(); ++k) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(sims.sims, k); it; ++it) {
      if (it.row() >= k || it.value() == Scalar(0)) continue;
      int a = lookup(ids, sims.concepts[it.row()]);
      int b = lookup(ids, sims.concepts[k]);
      if (a > b) std::swap(a, b);
      rows.emplace_back(a, b, double(it.value()));
    }
  }
  return write_pairs(std::move(rows), [](double v) { return format_fixed4(v); });
}

template std::string write_network_file<double>(const SimilarityMatrix<double>&, const IdTable&);
template std::string write_network_file<float>(const SimilarityMatrix<float>&, const IdTable&);

nlohmann::json to_structured(const MapDocument& map, const ConceptLinkMatrix* links, const nlohmann::json& metadata) {
  map.validate();
  nlohmann::json j;
  j["schema_version"] = "1";
  j["metadata"] = metadata;
  j["weight_columns"] = map.weight_columns;
  j["score_columns"] = map.score_columns;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < map.nodes.size(); ++i) {
    const auto& n = map.nodes[i];
    nlohmann::json node = {{"id", n.id}, {"label", n.label}, {"x", n.x}, {"y", n.y}, {"cluster", n.cluster}};
    if (!map.concept_ids.empty()) node["concept_id"] = map.concept_ids[i];
    node["weights"] = nlohmann::json::object();
    for (std::size_t w = 0; w < n.weights.size(); ++w) node["weights"][map.weight_columns[w]] = n.weights[w];
    node["scores"] = nlohmann::json::object();
    for (std::size_t s = 0; s < n.scores.size(); ++s) node["scores"][map.score_columns[s]] = n.scores[s];
    nodes.push_back(std::move(node));
  }
  auto& out_links = j["links"] = nlohmann::json::array();
  if (links != nullptr) {
    const auto ids = id_table(map);
    std::vector<std::tuple<int, int, std::int64_t>> rows;
    for (const auto& l : links->links) {
      int a = lookup(ids, links->concepts[l.i]);
      int b = lookup(ids, links->concepts[l.j]);
      if (a > b) std::swap(a, b);
      rows.emplace_back(a, b, l.strength);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [a, b, s] : rows) out_links.push_back({a, b, s});
  }
  return j;
}

MapDocument from_structured(const nlohmann::json& j) {
  MapDocument map;
  try {
    if (j.at("schema_version").get<std::string>() != "1") throw DataError("unsupported schema_version");
    map.weight_columns = j.at("weight_columns").get<std::vector<std::string>>();
    map.score_columns = j.at("score_columns").get<std::vector<std::string>>();
    bool with_ids = true;
    for (const auto& n : j.at("nodes")) {
      MapNode node;
      node.id = n.at("id").get<int>();
      node.label = n.at("label").get<std::string>();
      node.x = n.at("x").get<double>();
      node.y = n.at("y").get<double>();
      node.cluster = n.at("cluster").get<int>();
      for (const auto& c : map.weight_columns) node.weights.push_back(n.at("weights").at(c).get<double>());
      for (const auto& c : map.score_columns) node.scores.push_back(n.at("scores").at(c).get<double>());
      if (n.contains("concept_id")) {
        map.concept_ids.push_back(n.at("concept_id").get<std::string>());
      } else {
        with_ids = false;
      }
      map.nodes.push_back(std::move(node));
    }
    if (!with_ids) map.concept_ids.clear();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed structured map: ") + e.what());
  }
  map.validate();
  return map;
}

}  // namespace overlaymap
