#include "overlaymap/relations.hpp"

#include <algorithm>
#include <unordered_map>

#include "overlaymap/parallel.hpp"

namespace overlaymap {

std::optional<std::uint32_t> ConceptLinkMatrix::index_of(std::string_view concept_id) const {
  auto it = std::lower_bound(concepts.begin(), concepts.end(), concept_id);
  if (it == concepts.end() || *it != concept_id) return std::nullopt;
  return static_cast<std::uint32_t>(it - concepts.begin());
}

std::int64_t ConceptLinkMatrix::strength(std::uint32_t a, std::uint32_t b) const {
  if (a == b) return 0;
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(links.begin(), links.end(), std::pair{a, b}, [](const ConceptLink& l, auto key) {
    return std::pair{l.i, l.j} < key;
  });
  return it != links.end() && it->i == a && it->j == b ? it->strength : 0;
}

std::int64_t ConceptLinkMatrix::total_strength() const {
  std::int64_t sum = 0;
  for (const auto& l : links) sum += l.strength;
  return sum;
}

namespace {

using PairCounts = std::unordered_map<std::uint64_t, std::int64_t>;

constexpr std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

ConceptLinkMatrix build_concept_links(std::span<const WorkRecord> corpus, CitationWindow window,
                                      unsigned threads) {
  ConceptLinkMatrix out;
  for (const auto& w : corpus) {
    for (const auto& c : w.concepts) out.concepts.push_back(c.concept_id);
  }
  std::sort(out.concepts.begin(), out.concepts.end());
  out.concepts.erase(std::unique(out.concepts.begin(), out.concepts.end()), out.concepts.end());
  out.node_weight.assign(out.concepts.size(), 0);

  // Per-document concept indices, deduplicated and sorted.
  std::vector<std::vector<std::uint32_t>> doc_concepts(corpus.size());
  std::unordered_map<std::string_view, std::uint32_t> doc_index;
  doc_index.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto& idx = doc_concepts[d];
    for (const auto& c : corpus[d].concepts) idx.push_back(*out.index_of(c.concept_id));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (auto c : idx) ++out.node_weight[c];
    doc_index.emplace(corpus[d].work_id, static_cast<std::uint32_t>(d));
  }

  const std::size_t shard_count = std::max(1u, threads);
  const std::size_t shard_size = (corpus.size() + shard_count - 1) / shard_count;
  std::vector<PairCounts> partial(shard_count);
  parallel_for(shard_count, threads, [&](std::size_t s) {
    auto& acc = partial[s];
    const std::size_t begin = s * shard_size;
    const std::size_t end = std::min(corpus.size(), begin + shard_size);
    std::vector<std::uint32_t> targets;
    for (std::size_t d = begin; d < end; ++d) {
      const auto& citing = corpus[d];
      if (!citing.pub_year) continue;
      targets.clear();
      for (const auto& ref : citing.references) {
        auto it = doc_index.find(ref);
        if (it == doc_index.end() || it->second == d) continue;
        const auto& cited = corpus[it->second];
        if (!cited.pub_year || !in_window(*citing.pub_year, *cited.pub_year, window)) continue;
        targets.push_back(it->second);
      }
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      for (auto r : targets) {
        for (auto a : doc_concepts[d]) {
          for (auto b : doc_concepts[r]) {
            if (a == b) continue;
            ++acc[a < b ? pair_key(a, b) : pair_key(b, a)];
          }
        }
      }
    }
  });

  PairCounts merged = std::move(partial.front());
  for (std::size_t s = 1; s < partial.size(); ++s) {
    for (const auto& [key, n] : partial[s]) merged[key] += n;
  }
  out.links.reserve(merged.size());
  for (const auto& [key, n] : merged) {
    out.links.push_back({static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key), n});
  }
  std::sort(out.links.begin(), out.links.end(),
            [](const ConceptLink& x, const ConceptLink& y) { return std::pair{x.i, x.j} < std::pair{y.i, y.j}; });
  return out;
}

std::string write_links_table(const ConceptLinkMatrix& m) {
  std::string out;
  for (const auto& l : m.links) {
    out += m.concepts[l.i];
    out += '\t';
    out += m.concepts[l.j];
    out += '\t';
    out += std::to_string(l.strength);
    out += '\n';
  }
  return out;
}

std::string write_node_weights(const ConceptLinkMatrix& m) {
  std::string out = "concept_id\tweight\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.concepts[i];
    out += '\t';
    out += std::to_string(m.node_weight[i]);
    out += '\n';
  }
  return out;
}

}  // namespace overlaymap
