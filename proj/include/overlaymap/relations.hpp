#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "overlaymap/errors.hpp"
#include "overlaymap/ingest.hpp"

namespace overlaymap {

/// Window length in years, excluding the publication year itself.
struct CitationWindow {
  int years = 5;
};

/// A reference from a document published in `citing_year` counts when the
/// cited document appeared in [citing_year - w, citing_year].
constexpr bool in_window(int citing_year, int cited_year, CitationWindow window) {
  return citing_year - window.years <= cited_year && cited_year <= citing_year;
}

struct ConceptLink {
  std::uint32_t i = 0;  // i < j
  std::uint32_t j = 0;
  std::int64_t strength = 0;

  friend bool operator==(const ConceptLink&, const ConceptLink&) = default;
};

/// Symmetric concept x concept citation link counts. Nodes are indexed in
/// lexicographic concept id order; each unordered pair is stored once with
/// i < j, sorted, and never on the diagonal.
struct ConceptLinkMatrix {
  std::vector<std::string> concepts;
  std::vector<std::int64_t> node_weight;
  std::vector<ConceptLink> links;

  std::size_t size() const { return concepts.size(); }
  std::optional<std::uint32_t> index_of(std::string_view concept_id) const;
  std::int64_t strength(std::uint32_t a, std::uint32_t b) const;
  std::int64_t total_strength() const;

  friend bool operator==(const ConceptLinkMatrix&, const ConceptLinkMatrix&) = default;
};

/// Aggregates document-level reference relations to concept pairs. For each
/// citing document d and each distinct reference r that is in the corpus
/// and in the window, every (concept of d, concept of r) pair with distinct
/// concepts adds 1 to the unordered pair. Shards are merged by integer
/// addition, so `threads` does not affect the result.
ConceptLinkMatrix build_concept_links(std::span<const WorkRecord> corpus, CitationWindow window,
                                      unsigned threads = 1);

// concept_i<TAB>concept_j<TAB>strength, one unordered pair per line.
std::string write_links_table(const ConceptLinkMatrix& m);
// concept_id<TAB>weight with a header line.
std::string write_node_weights(const ConceptLinkMatrix& m);

/// Full symmetric sparse matrix (both triangles) of link strengths.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> link_matrix(const ConceptLinkMatrix& m) {
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(2 * m.links.size());
  for (const auto& l : m.links) {
    triplets.emplace_back(l.i, l.j, static_cast<Scalar>(l.strength));
    triplets.emplace_back(l.j, l.i, static_cast<Scalar>(l.strength));
  }
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::SparseMatrix<Scalar> out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

template <typename Scalar>
struct SimilarityMatrix {
  std::vector<std::string> concepts;
  Eigen::SparseMatrix<Scalar> sims;  // symmetric, zero diagonal, s_ij > 0 where stored

  Eigen::Index size() const { return sims.rows(); }
};

/// Association strength s_ij = 2 m c_ij / (k_i k_j) with k_i the total link
/// strength of node i and m the total link strength over unordered pairs.
/// `links` must be symmetric with an empty diagonal. Isolated nodes keep an
/// empty row. Throws DataError("no citation relations") when m == 0.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> association_strength(const Eigen::SparseMatrix<Scalar>& links) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> k = links * Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(links.cols());
  const Scalar m = k.sum() / Scalar(2);
  if (!(m > Scalar(0))) throw DataError("no citation relations");

  Eigen::SparseMatrix<Scalar> out = links;
  out.prune(Scalar(0));
  for (Eigen::Index col = 0; col < out.outerSize(); ++col) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(out, col); it; ++it) {
      it.valueRef() = Scalar(2) * m * it.value() / (k(it.row()) * k(it.col()));
    }
  }
  return out;
}

template <typename Scalar>
SimilarityMatrix<Scalar> association_strength(const ConceptLinkMatrix& m) {
  return {m.concepts, association_strength<Scalar>(link_matrix<Scalar>(m))};
}

}  // namespace overlaymap
