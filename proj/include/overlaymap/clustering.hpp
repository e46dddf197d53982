#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "overlaymap/errors.hpp"
#include "overlaymap/parallel.hpp"

namespace overlaymap {

struct ClusteringConfig {
  double resolution = 1.0;
  std::uint64_t seed = 42;
  int restarts = 10;
  unsigned threads = 1;
  int max_sweeps = 1000;  // per local-moving call

  void validate() const {
    if (!(resolution > 0)) throw UsageError("resolution must be > 0");
    if (restarts < 1) throw UsageError("restarts must be >= 1");
    if (max_sweeps < 1) throw UsageError("max_sweeps must be >= 1");
  }
};

/// Raw partition: clusters numbered 0..K-1 in order of their first node.
struct Partition {
  std::vector<int> cluster_of;
  int cluster_count = 0;
  double quality = 0;
  // Quality after every local-moving sweep of the winning restart.
  std::vector<double> pass_quality;
  int best_restart = 0;
};

/// V = sum_{i<j, same cluster} (s_ij - resolution).
template <typename Scalar>
Scalar partition_quality(const Eigen::SparseMatrix<Scalar>& sims, std::span<const int> cluster_of,
                         Scalar resolution) {
  Scalar internal = 0;
  for (Eigen::Index k = 0; k < sims.outerSize(); ++k) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(sims, k); it; ++it) {
      if (it.row() < k && cluster_of[it.row()] == cluster_of[k]) internal += it.value();
    }
  }
  std::vector<Scalar> size;
  for (int c : cluster_of) {
    if (static_cast<std::size_t>(c) >= size.size()) size.resize(c + 1, Scalar(0));
    size[c] += 1;
  }
  Scalar penalty = 0;
  for (auto s : size) penalty += s * (s - 1) / 2;
  return internal - resolution * penalty;
}

namespace detail {

template <typename Scalar>
struct ClusterGraph {
  struct Edge {
    int to;
    Scalar weight;
  };
  std::vector<std::vector<Edge>> adjacency;  // both directions, no self loops
  std::vector<Scalar> node_size;             // original nodes represented
  std::vector<Scalar> self_weight;           // internal similarity of the node

  int size() const { return static_cast<int>(adjacency.size()); }

  static ClusterGraph from_sparse(const Eigen::SparseMatrix<Scalar>& sims) {
    ClusterGraph g;
    const auto n = static_cast<std::size_t>(sims.rows());
    g.adjacency.resize(n);
    g.node_size.assign(n, Scalar(1));
    g.self_weight.assign(n, Scalar(0));
    for (Eigen::Index k = 0; k < sims.outerSize(); ++k) {
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(sims, k); it; ++it) {
        if (it.row() != k && it.value() != Scalar(0)) {
          g.adjacency[k].push_back({static_cast<int>(it.row()), it.value()});
        }
      }
    }
    return g;
  }

  Scalar quality(std::span<const int> cluster, int cluster_count, Scalar resolution) const {
    Scalar internal = 0;
    std::vector<Scalar> csize(static_cast<std::size_t>(cluster_count), Scalar(0));
    for (int v = 0; v < size(); ++v) {
      internal += self_weight[v];
      csize[cluster[v]] += node_size[v];
      for (const auto& e : adjacency[v]) {
        if (e.to > v && cluster[e.to] == cluster[v]) internal += e.weight;
      }
    }
    Scalar penalty = 0;
    for (auto s : csize) penalty += s * (s - 1) / 2;
    return internal - resolution * penalty;
  }

  ClusterGraph aggregate(std::span<const int> cluster, int cluster_count) const {
    ClusterGraph g;
    const auto k = static_cast<std::size_t>(cluster_count);
    g.adjacency.resize(k);
    g.node_size.assign(k, Scalar(0));
    g.self_weight.assign(k, Scalar(0));
    std::vector<Scalar> acc(k, Scalar(0));
    std::vector<int> touched;
    std::vector<std::vector<int>> members(k);
    for (int v = 0; v < size(); ++v) members[cluster[v]].push_back(v);
    for (std::size_t c = 0; c < k; ++c) {
      touched.clear();
      for (int v : members[c]) {
        g.node_size[c] += node_size[v];
        g.self_weight[c] += self_weight[v];
        for (const auto& e : adjacency[v]) {
          const int d = cluster[e.to];
          if (static_cast<std::size_t>(d) == c) {
            if (e.to > v) g.self_weight[c] += e.weight;
            continue;
          }
          if (acc[d] == Scalar(0)) touched.push_back(d);
          acc[d] += e.weight;
        }
      }
      std::sort(touched.begin(), touched.end());
      for (int d : touched) {
        g.adjacency[c].push_back({d, acc[d]});
        acc[d] = Scalar(0);
      }
    }
    return g;
  }
};

// Renumbers to 0..K-1 in order of first occurrence; returns K.
inline int compact_clusters(std::vector<int>& cluster) {
  std::vector<int> relabel(cluster.size() + 1, -1);
  int next = 0;
  for (int& c : cluster) {
    if (relabel[c] < 0) relabel[c] = next++;
    c = relabel[c];
  }
  return next;
}

template <typename Scalar>
class LocalMoving {
 public:
  LocalMoving(const ClusterGraph<Scalar>& graph, Scalar resolution, std::mt19937_64& gen, int max_sweeps)
      : g_(graph), resolution_(resolution), gen_(gen), max_sweeps_(max_sweeps) {}

  // Moves nodes between clusters while the quality strictly improves.
  // `on_sweep` is called after every sweep. Returns true if any node moved.
  template <typename SweepFn>
  bool run(std::vector<int>& cluster, SweepFn&& on_sweep) {
    const int n = g_.size();
    std::vector<Scalar> cluster_size(static_cast<std::size_t>(n), Scalar(0));
    std::vector<int> empty;
    for (int v = 0; v < n; ++v) cluster_size[cluster[v]] += g_.node_size[v];
    for (int c = n - 1; c >= 0; --c) {
      if (cluster_size[c] == Scalar(0)) empty.push_back(c);
    }
    std::vector<Scalar> weight_to(static_cast<std::size_t>(n), Scalar(0));
    std::vector<int> touched;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    bool any_move = false;
    for (int sweep = 0; sweep < max_sweeps_; ++sweep) {
      std::shuffle(order.begin(), order.end(), gen_);
      bool moved = false;
      for (int v : order) {
        const int current = cluster[v];
        const Scalar size_v = g_.node_size[v];
        touched.clear();
        for (const auto& e : g_.adjacency[v]) {
          const int c = cluster[e.to];
          if (weight_to[c] == Scalar(0)) touched.push_back(c);
          weight_to[c] += e.weight;
        }
        cluster_size[current] -= size_v;

        int best = current;
        Scalar best_gain = weight_to[current] - resolution_ * size_v * cluster_size[current];
        const Scalar stay_gain = best_gain;
        for (int c : touched) {
          if (c == current) continue;
          const Scalar gain = weight_to[c] - resolution_ * size_v * cluster_size[c];
          if (gain > best_gain + tolerance(stay_gain)) {
            best = c;
            best_gain = gain;
          }
        }
        // Leaving for an empty cluster has gain 0.
        if (cluster_size[current] > Scalar(0) && Scalar(0) > best_gain + tolerance(stay_gain)) {
          best = empty.back();
          best_gain = 0;
        }
        for (int c : touched) weight_to[c] = Scalar(0);

        if (best != current) {
          if (cluster_size[best] == Scalar(0)) empty.pop_back();
          if (cluster_size[current] == Scalar(0)) empty.push_back(current);
          cluster[v] = best;
          moved = true;
          any_move = true;
        }
        cluster_size[best] += size_v;
      }
      on_sweep();
      if (!moved) break;
    }
    return any_move;
  }

 private:
  static Scalar tolerance(Scalar reference) { return Scalar(1e-12) * (Scalar(1) + std::abs(reference)); }

  const ClusterGraph<Scalar>& g_;
  Scalar resolution_;
  std::mt19937_64& gen_;
  int max_sweeps_;
};

template <typename Scalar>
Partition louvain_once(const Eigen::SparseMatrix<Scalar>& sims, const ClusteringConfig& config, std::uint64_t seed) {
  const Scalar resolution = Scalar(config.resolution);
  std::mt19937_64 gen(seed);
  const auto n = static_cast<std::size_t>(sims.rows());

  Partition out;
  const auto base = ClusterGraph<Scalar>::from_sparse(sims);
  // membership: original node -> node of the current aggregate graph.
  std::vector<int> membership(n);
  std::iota(membership.begin(), membership.end(), 0);
  ClusterGraph<Scalar> graph = base;
  std::vector<int> cluster(membership);

  auto full_partition = [&] {
    std::vector<int> full(n);
    for (std::size_t v = 0; v < n; ++v) full[v] = cluster[membership[v]];
    return full;
  };
  auto record_on = [&](const ClusterGraph<Scalar>& g) {
    return [&] {
      const int k = static_cast<int>(std::max<std::size_t>(1, g.node_size.size()));
      out.pass_quality.push_back(double(g.quality(cluster, k, resolution)));
    };
  };

  for (;;) {
    LocalMoving<Scalar> mover(graph, resolution, gen, config.max_sweeps);
    if (!mover.run(cluster, record_on(graph))) break;
    const int k = compact_clusters(cluster);
    if (k == graph.size()) break;
    graph = graph.aggregate(cluster, k);
    for (auto& m : membership) m = cluster[m];
    cluster.resize(static_cast<std::size_t>(k));
    std::iota(cluster.begin(), cluster.end(), 0);
  }

  // Final refinement on the original nodes.
  cluster = full_partition();
  compact_clusters(cluster);
  std::iota(membership.begin(), membership.end(), 0);
  LocalMoving<Scalar> refine(base, resolution, gen, config.max_sweeps);
  refine.run(cluster, record_on(base));

  out.cluster_of = std::move(cluster);
  out.cluster_count = compact_clusters(out.cluster_of);
  out.quality = double(partition_quality(sims, std::span<const int>(out.cluster_of), resolution));
  return out;
}

}  // namespace detail

/// Partitions nodes by local moving with aggregation on
/// V = sum_{i<j, same cluster} (s_ij - resolution). Runs `restarts` seeded
/// restarts (in parallel when threads > 1) and keeps the best quality, ties
/// going to the lowest restart index; the all-in-one partition is kept
/// instead when it scores strictly higher.
template <typename Scalar>
Partition cluster_nodes(const Eigen::SparseMatrix<Scalar>& sims, const ClusteringConfig& config) {
  config.validate();
  if (sims.rows() != sims.cols()) throw UsageError("similarity matrix must be square");
  if (sims.rows() < 1) throw DataError("clustering needs at least 1 node");

  std::vector<Partition> runs(static_cast<std::size_t>(config.restarts));
  parallel_for(runs.size(), config.threads, [&](std::size_t r) {
    runs[r] = detail::louvain_once(sims, config, mix_seed(config.seed, r));
    runs[r].best_restart = static_cast<int>(r);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].quality > runs[best].quality) best = r;
  }
  Partition out = std::move(runs[best]);

  std::vector<int> single(out.cluster_of.size(), 0);
  const double single_quality =
      double(partition_quality(sims, std::span<const int>(single), Scalar(config.resolution)));
  if (single_quality > out.quality) {
    out.cluster_of = std::move(single);
    out.cluster_count = 1;
    out.quality = single_quality;
    out.pass_quality.push_back(single_quality);
  }
  return out;
}

struct ClusterAssignment {
  std::vector<int> rank_of;  // per node, 1..K
  int cluster_count = 0;
  double resolution = 0;
  std::vector<std::string> colors;  // colors[r - 1] for ranks 1..min(K, 6)
};

/// orange, green, blue, yellow, purple, light blue; empty beyond rank 6.
std::string cluster_color(int rank);

/// Renumbers clusters 1..K by decreasing total node weight; equal weights
/// go to the cluster holding the smallest node id.
ClusterAssignment rank_clusters(const Partition& partition, std::span<const double> node_weight,
                                std::span<const std::string> ids, double resolution = 0);

}  // namespace overlaymap
