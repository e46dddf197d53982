#include "overlaymap/clustering.hpp"

#include <array>

namespace overlaymap {

std::string cluster_color(int rank) {
  static const std::array<const char*, 6> kColors = {"orange", "green", "blue", "yellow", "purple", "light blue"};
  if (rank >= 1 && rank <= 6) return kColors[rank - 1];
  return {};
}

ClusterAssignment rank_clusters(const Partition& partition, std::span<const double> node_weight,
                                std::span<const std::string> ids, double resolution) {
  const auto n = partition.cluster_of.size();
  if (node_weight.size() != n || ids.size() != n) throw UsageError("rank_clusters: size mismatch");
  int k = 0;
  for (int c : partition.cluster_of) k = std::max(k, c + 1);

  struct Summary {
    int cluster = 0;
    double weight = 0;
    const std::string* smallest_id = nullptr;
  };
  std::vector<Summary> summary(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) summary[c].cluster = c;
  for (std::size_t v = 0; v < n; ++v) {
    auto& s = summary[partition.cluster_of[v]];
    s.weight += node_weight[v];
    if (s.smallest_id == nullptr || ids[v] < *s.smallest_id) s.smallest_id = &ids[v];
  }
  std::erase_if(summary, [](const Summary& s) { return s.smallest_id == nullptr; });
  std::sort(summary.begin(), summary.end(), [](const Summary& a, const Summary& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return *a.smallest_id < *b.smallest_id;
  });

  std::vector<int> rank_of_cluster(static_cast<std::size_t>(k), 0);
  for (std::size_t r = 0; r < summary.size(); ++r) rank_of_cluster[summary[r].cluster] = static_cast<int>(r + 1);

  ClusterAssignment out;
  out.cluster_count = static_cast<int>(summary.size());
  out.resolution = resolution;
  out.rank_of.reserve(n);
  for (int c : partition.cluster_of) out.rank_of.push_back(rank_of_cluster[c]);
  for (int r = 1; r <= std::min(out.cluster_count, 6); ++r) out.colors.push_back(cluster_color(r));
  return out;
}

}  // namespace overlaymap
