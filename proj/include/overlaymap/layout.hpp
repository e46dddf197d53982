#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "overlaymap/errors.hpp"
#include "overlaymap/parallel.hpp"

namespace overlaymap {

template <typename Scalar>
using Positions = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

struct LayoutConfig {
  int max_iterations = 1000;
  double convergence_tol = 1e-8;  // largest coordinate change between iterates
  std::uint64_t seed = 42;
  int random_starts = 1;
  // Above this many nodes the repulsion term runs over a fixed random sample
  // of `sampled_partners` partners per node.
  std::size_t exact_pair_limit = 10000;
  std::size_t sampled_partners = 64;
  // Uniform background similarity, as a fraction of the mean similarity
  // over all pairs, added only when the similarity graph is disconnected.
  double background_fraction = 1e-2;
  unsigned threads = 1;

  void validate() const {
    if (max_iterations < 1) throw UsageError("max_iterations must be >= 1");
    if (!(convergence_tol > 0)) throw UsageError("convergence_tol must be > 0");
    if (random_starts < 1) throw UsageError("random_starts must be >= 1");
    if (sampled_partners < 1) throw UsageError("sampled_partners must be >= 1");
    if (background_fraction < 0) throw UsageError("background_fraction must be >= 0");
  }
};

template <typename Scalar>
struct LayoutResult {
  Positions<Scalar> positions;
  // Objective of the winning start after every accepted iterate, starting
  // with the initial placement. Non-increasing.
  std::vector<Scalar> objective_trace;
  int iterations = 0;
  bool converged = false;
  int best_start = 0;
  Scalar background = 0;
};

/// Mean Euclidean distance over all unordered pairs of rows.
template <typename Derived>
typename Derived::Scalar mean_pairwise_distance(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows();
  if (n < 2) return Scalar(0);
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar row = 0;
    for (Eigen::Index j = i + 1; j < n; ++j) row += (x.row(i) - x.row(j)).norm();
    sum += row;
  }
  return sum / (Scalar(n) * Scalar(n - 1) / Scalar(2));
}

/// Sum over unordered pairs of s_ij * d_ij^2 for a symmetric `sims`.
template <typename Scalar, typename Derived>
Scalar layout_objective(const Eigen::SparseMatrix<Scalar>& sims, const Eigen::MatrixBase<Derived>& x) {
  Scalar sum = 0;
  for (Eigen::Index col = 0; col < sims.outerSize(); ++col) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(sims, col); it; ++it) {
      if (it.row() < col) sum += it.value() * (x.row(it.row()) - x.row(col)).squaredNorm();
    }
  }
  return sum;
}

/// Number of connected components of the positive-similarity graph.
template <typename Scalar>
Eigen::Index component_count(const Eigen::SparseMatrix<Scalar>& sims) {
  const Eigen::Index n = sims.rows();
  std::vector<Eigen::Index> label(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> stack;
  Eigen::Index components = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = components;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(sims, v); it; ++it) {
        if (it.value() > 0 && label[it.row()] < 0) {
          label[it.row()] = components;
          stack.push_back(it.row());
        }
      }
    }
    ++components;
  }
  return components;
}

namespace detail {

inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Majorization for  sum s_ij d_ij^2 (+ background) - sum d_ij, whose
// minimizer is proportional to the minimizer of sum s_ij d_ij^2 under a unit
// mean pairwise distance. The update X = L^+ B(Z) Z / 2 does not depend on
// the scale of Z, so rescaling after every step keeps the constrained
// objective non-increasing.
template <typename Scalar>
class VosOptimizer {
 public:
  using Matrix = Positions<Scalar>;
  using Sparse = Eigen::SparseMatrix<Scalar>;

  VosOptimizer(const Sparse& sims, const LayoutConfig& config) : sims_(sims), config_(config), n_(sims.rows()) {
    pair_count_ = Scalar(n_) * Scalar(n_ - 1) / Scalar(2);
    if (component_count(sims) > 1) {
      Scalar total = 0;
      for (Eigen::Index k = 0; k < sims.outerSize(); ++k) {
        for (typename Sparse::InnerIterator it(sims, k); it; ++it) {
          if (it.row() < k) total += it.value();
        }
      }
      background_ = Scalar(config.background_fraction) * total / pair_count_;
    }
    factorize();
    if (static_cast<std::size_t>(n_) > config.exact_pair_limit) sample_pairs();
  }

  Scalar background() const { return background_; }

  Matrix initial(std::uint64_t seed) const {
    std::mt19937_64 gen(seed);
    Matrix x(n_, 2);
    for (Eigen::Index i = 0; i < n_; ++i) {
      x(i, 0) = Scalar(unit_uniform(gen));
      x(i, 1) = Scalar(unit_uniform(gen));
    }
    normalize(x);
    return x;
  }

  // One majorization step followed by centering and rescaling.
  Matrix step(const Matrix& z) const {
    Matrix rhs = repulsion(z) / Scalar(2);
    Matrix x(n_, 2);
    if (background_ > 0) {
      x = solver_.solve(rhs);
    } else {
      x.row(0).setZero();
      x.bottomRows(n_ - 1) = solver_.solve(rhs.bottomRows(n_ - 1));
    }
    separate_coincident(x);
    normalize(x);
    return x;
  }

  Scalar objective(const Matrix& x) const {
    Scalar f = layout_objective(sims_, x);
    if (background_ > 0) {
      const Eigen::Matrix<Scalar, 1, 2> sum = x.colwise().sum();
      f += background_ * (Scalar(n_) * x.squaredNorm() - sum.squaredNorm());
    }
    return f;
  }

  // Exact unit mean distance at the end, also in the sampled regime.
  void finalize(Matrix& x) const {
    x.rowwise() -= x.colwise().mean();
    x /= mean_pairwise_distance(x);
  }

 private:
  void factorize() {
    std::vector<Eigen::Triplet<Scalar>> t;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> degree = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n_);
    const Eigen::Index offset = background_ > 0 ? 0 : 1;
    for (Eigen::Index k = 0; k < sims_.outerSize(); ++k) {
      for (typename Sparse::InnerIterator it(sims_, k); it; ++it) {
        if (it.row() == k) continue;
        degree(k) += it.value();
        if (it.row() >= offset && k >= offset) t.emplace_back(it.row() - offset, k - offset, -it.value());
      }
    }
    for (Eigen::Index i = offset; i < n_; ++i) {
      t.emplace_back(i - offset, i - offset, degree(i) + background_ * Scalar(n_));
    }
    Sparse laplacian(n_ - offset, n_ - offset);
    laplacian.setFromTriplets(t.begin(), t.end());
    solver_.compute(laplacian);
    if (solver_.info() != Eigen::Success) throw DataError("layout: similarity Laplacian factorization failed");
  }

  void sample_pairs() {
    std::mt19937_64 gen(mix_seed(config_.seed, 0xA11CE));
    const auto m = std::min<std::size_t>(config_.sampled_partners, static_cast<std::size_t>(n_ - 1));
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        auto j = static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(n_ - 1));
        if (j >= i) ++j;
        pairs_.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
    pair_weight_ = pair_count_ / Scalar(pairs_.size());
  }

  // Rows of B(Z) Z, i.e. sum_j w (z_i - z_j) / d_ij; also the weighted
  // distance sum through `distance_sum` when non-null.
  Matrix repulsion(const Matrix& z, Scalar* distance_sum = nullptr) const {
    Matrix r = Matrix::Zero(n_, 2);
    if (pairs_.empty()) {
      std::vector<Scalar> row_dist(static_cast<std::size_t>(n_), Scalar(0));
      parallel_for(static_cast<std::size_t>(n_), config_.threads, [&](std::size_t ii) {
        const auto i = static_cast<Eigen::Index>(ii);
        Scalar rx = 0, ry = 0, dist = 0;
        for (Eigen::Index j = 0; j < n_; ++j) {
          if (j == i) continue;
          const Scalar dx = z(i, 0) - z(j, 0);
          const Scalar dy = z(i, 1) - z(j, 1);
          const Scalar d = std::sqrt(dx * dx + dy * dy);
          if (j > i) dist += d;
          if (d > 0) {
            rx += dx / d;
            ry += dy / d;
          }
        }
        r(i, 0) = rx;
        r(i, 1) = ry;
        row_dist[ii] = dist;
      });
      if (distance_sum != nullptr) {
        Scalar total = 0;
        for (auto d : row_dist) total += d;
        *distance_sum = total;
      }
      return r;
    }
    Scalar total = 0;
    for (const auto& [i, j] : pairs_) {
      const Eigen::Matrix<Scalar, 1, 2> diff = z.row(i) - z.row(j);
      const Scalar d = diff.norm();
      total += d;
      if (d > 0) {
        r.row(i) += pair_weight_ * diff / d;
        r.row(j) -= pair_weight_ * diff / d;
      }
    }
    if (distance_sum != nullptr) *distance_sum = pair_weight_ * total;
    return r;
  }

  void normalize(Matrix& x) const {
    x.rowwise() -= x.colwise().mean();
    Scalar distance_sum = 0;
    if (pairs_.empty()) {
      repulsion_free_distance(x, distance_sum);
    } else {
      for (const auto& [i, j] : pairs_) distance_sum += (x.row(i) - x.row(j)).norm();
      distance_sum *= pair_weight_;
    }
    x *= pair_count_ / distance_sum;
  }

  void repulsion_free_distance(const Matrix& x, Scalar& distance_sum) const {
    std::vector<Scalar> row_dist(static_cast<std::size_t>(n_), Scalar(0));
    parallel_for(static_cast<std::size_t>(n_), config_.threads, [&](std::size_t ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      Scalar dist = 0;
      for (Eigen::Index j = i + 1; j < n_; ++j) dist += (x.row(i) - x.row(j)).norm();
      row_dist[ii] = dist;
    });
    distance_sum = 0;
    for (auto d : row_dist) distance_sum += d;
  }

  // Coincident points get a deterministic 1e-9 offset, alternating axes in
  // index order.
  void separate_coincident(Matrix& x) const {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return std::tie(x(a, 0), x(a, 1), a) < std::tie(x(b, 0), x(b, 1), b);
    });
    const Scalar scale = std::max(x.cwiseAbs().maxCoeff(), Scalar(1));
    for (std::size_t k = 1; k < order.size();) {
      std::size_t end = k;
      while (end < order.size() && x(order[end], 0) == x(order[k - 1], 0) &&
             x(order[end], 1) == x(order[k - 1], 1)) {
        ++end;
      }
      for (std::size_t m = k; m < end; ++m) {
        const auto i = order[m];
        x(i, i % 2) += Scalar(1e-9) * scale * Scalar(m - k + 1);
      }
      k = end + 1;
    }
  }

  const Sparse& sims_;
  LayoutConfig config_;
  Eigen::Index n_;
  Scalar pair_count_ = 0;
  Scalar background_ = 0;
  Eigen::SimplicialLDLT<Sparse> solver_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs_;
  Scalar pair_weight_ = 1;
};

}  // namespace detail

/// Positions minimizing sum_{i<j} s_ij d_ij^2 subject to a mean pairwise
/// distance of 1. Positions are centered but not canonically oriented; see
/// canonicalize_positions. Deterministic given (sims, config); the thread
/// count does not change the result.
template <typename Scalar>
LayoutResult<Scalar> vos_layout(const Eigen::SparseMatrix<Scalar>& sims, const LayoutConfig& config) {
  config.validate();
  if (sims.rows() != sims.cols()) throw UsageError("similarity matrix must be square");
  if (sims.rows() < 2) throw DataError("layout needs at least 2 nodes");
  bool any_positive = false;
  for (Eigen::Index k = 0; k < sims.outerSize() && !any_positive; ++k) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(sims, k); it; ++it) {
      if (it.row() != k && it.value() > 0) {
        any_positive = true;
        break;
      }
    }
  }
  if (!any_positive) throw DataError("degenerate similarity matrix");

  detail::VosOptimizer<Scalar> optimizer(sims, config);
  LayoutResult<Scalar> best;
  for (int start = 0; start < config.random_starts; ++start) {
    LayoutResult<Scalar> run;
    run.background = optimizer.background();
    run.best_start = start;
    Positions<Scalar> x = optimizer.initial(mix_seed(config.seed, static_cast<std::uint64_t>(start)));
    Scalar current = optimizer.objective(x);
    run.objective_trace.push_back(current);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
      Positions<Scalar> next = optimizer.step(x);
      const Scalar value = optimizer.objective(next);
      if (!(value <= current)) {
        // Only rounding can get here; keep the last accepted iterate.
        run.converged = true;
        break;
      }
      const bool done = (next - x).cwiseAbs().maxCoeff() <= Scalar(config.convergence_tol);
      x = std::move(next);
      run.objective_trace.push_back(value);
      run.iterations = iter + 1;
      current = value;
      if (done) {
        run.converged = true;
        break;
      }
    }
    optimizer.finalize(x);
    run.positions = std::move(x);
    if (start == 0 || run.objective_trace.back() < best.objective_trace.back()) best = std::move(run);
  }
  return best;
}

/// Rigid canonical orientation: centroid at the origin, principal axis of
/// the weighted point cloud along x, and reflections chosen so the
/// highest-weight node (ties: smallest id) has x >= 0, then y >= 0. Nodes
/// lying on an axis defer the sign choice to the next node in that order.
template <typename Derived>
Positions<typename Derived::Scalar> canonicalize_positions(const Eigen::MatrixBase<Derived>& positions,
                                                           std::span<const double> weight,
                                                           std::span<const std::string> ids) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = positions.rows();
  Positions<Scalar> x = positions;
  if (n == 0) return x;
  if (static_cast<std::size_t>(n) != weight.size() || weight.size() != ids.size()) {
    throw UsageError("canonicalize_positions: size mismatch");
  }
  x.rowwise() -= x.colwise().mean();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (weight[a] != weight[b]) return weight[a] > weight[b];
    return ids[a] < ids[b];
  });

  const bool weighted = std::any_of(weight.begin(), weight.end(), [](double w) { return w > 0; });
  Eigen::Matrix<Scalar, 2, 2> moment = Eigen::Matrix<Scalar, 2, 2>::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar w = weighted ? Scalar(weight[i]) : Scalar(1);
    moment += w * x.row(i).transpose() * x.row(i);
  }
  const Scalar scale = x.cwiseAbs().maxCoeff();
  const Scalar tol = Scalar(1e-9) * scale;
  if (scale == Scalar(0)) return x;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> eig(moment);
  Eigen::Matrix<Scalar, 2, 1> axis = eig.eigenvectors().col(1);
  const auto values = eig.eigenvalues();
  if (values(1) - values(0) <= Scalar(1e-9) * (std::abs(values(1)) + std::abs(values(0)))) {
    // Isotropic cloud: the reference node defines the x axis.
    for (auto i : order) {
      if (x.row(i).norm() > tol) {
        axis = x.row(i).transpose().normalized();
        break;
      }
    }
  }
  Eigen::Matrix<Scalar, 2, 2> rotation;
  rotation << axis(0), axis(1), -axis(1), axis(0);
  x = (x * rotation.transpose()).eval();

  for (int c = 0; c < 2; ++c) {
    for (auto i : order) {
      if (std::abs(x(i, c)) > tol) {
        if (x(i, c) < 0) x.col(c) = -x.col(c);
        break;
      }
    }
  }
  return x;
}

}  // namespace overlaymap
