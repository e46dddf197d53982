#include "doctest.h"

#include <cmath>
#include <random>
#include <string>

#include "overlaymap/layout.hpp"

using namespace overlaymap;

namespace {

using Sparse = Eigen::SparseMatrix<double>;

Sparse from_dense(const Eigen::MatrixXd& d) { return d.sparseView(); }

Sparse two_cliques(double intra, double bridge) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(10, 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (i != j && i / 5 == j / 5) d(i, j) = intra;
    }
  }
  d(4, 5) = d(5, 4) = bridge;
  return from_dense(d);
}

Sparse random_sims(std::mt19937_64& gen, int n, double density) {
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (u(gen) < density) d(i, j) = d(j, i) = 0.1 + u(gen);
    }
  }
  d(0, 1) = d(1, 0) = 1.0;
  return from_dense(d);
}

void check_invariants(const LayoutResult<double>& r) {
  for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
    CHECK(r.objective_trace[k] <= r.objective_trace[k - 1]);
  }
  CHECK(std::abs(mean_pairwise_distance(r.positions) - 1.0) <= 1e-6);
}

std::vector<std::string> ids_for(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("C" + std::to_string(100 + i));
  return ids;
}

}  // namespace

TEST_CASE("two nodes: unit distance and canonical placement") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 3, 3, 0;
  const auto r = vos_layout(from_dense(d), LayoutConfig{});
  CHECK(std::abs((r.positions.row(0) - r.positions.row(1)).norm() - 1.0) <= 1e-9);
  const std::vector<double> w = {5, 1};
  const auto ids = ids_for(2);
  const auto c = canonicalize_positions(r.positions, w, ids);
  CHECK(c(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c(1, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(c(0, 1)) <= 1e-12);
  CHECK(std::abs(c(1, 1)) <= 1e-12);
}

TEST_CASE("three nodes with equal similarity form an equilateral triangle") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
  const auto r = vos_layout(from_dense(d), LayoutConfig{});
  check_invariants(r);
  const auto& x = r.positions;
  const double a = (x.row(0) - x.row(1)).norm(), b = (x.row(0) - x.row(2)).norm(), c = (x.row(1) - x.row(2)).norm();
  CHECK(std::abs(a - b) <= 1e-6);
  CHECK(std::abs(b - c) <= 1e-6);
  CHECK(std::abs((a + b + c) / 3 - 1.0) <= 1e-6);
}

TEST_CASE("two weakly bridged cliques separate") {
  const auto r = vos_layout(two_cliques(1.0, 0.01), LayoutConfig{});
  check_invariants(r);
  double max_intra = 0, min_inter = 1e300;
  for (int i = 0; i < 10; ++i) {
    for (int j = i + 1; j < 10; ++j) {
      const double dij = (r.positions.row(i) - r.positions.row(j)).norm();
      if (i / 5 == j / 5) {
        max_intra = std::max(max_intra, dij);
      } else {
        min_inter = std::min(min_inter, dij);
      }
    }
  }
  CHECK(max_intra < min_inter);
}

TEST_CASE("disconnected cliques still lay out with a finite separation") {
  const auto r = vos_layout(two_cliques(1.0, 0.0), LayoutConfig{});
  check_invariants(r);
  CHECK(r.background > 0);
  CHECK(r.positions.allFinite());
}

TEST_CASE("layout invariants on random instances") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 40);
    const auto sims = random_sims(gen, n, 0.3);
    LayoutConfig config;
    config.seed = trial;
    config.random_starts = 1 + trial % 3;
    const auto r = vos_layout(sims, config);
    check_invariants(r);
  }
}

TEST_CASE("layout is deterministic and independent of threads") {
  std::mt19937_64 gen(23);
  const auto sims = random_sims(gen, 60, 0.2);
  LayoutConfig config;
  const auto a = vos_layout(sims, config);
  const auto b = vos_layout(sims, config);
  config.threads = 4;
  const auto c = vos_layout(sims, config);
  CHECK(a.positions == b.positions);
  CHECK(a.positions == c.positions);
  CHECK(a.objective_trace == c.objective_trace);
}

TEST_CASE("sampled regime keeps the exact constraint") {
  std::mt19937_64 gen(29);
  const auto sims = random_sims(gen, 80, 0.1);
  LayoutConfig config;
  config.exact_pair_limit = 50;
  config.sampled_partners = 16;
  const auto r = vos_layout(sims, config);
  CHECK(std::abs(mean_pairwise_distance(r.positions) - 1.0) <= 1e-9);
  CHECK(r.positions.allFinite());
}

TEST_CASE("layout errors") {
  CHECK_THROWS_AS(vos_layout(Sparse(1, 1), LayoutConfig{}), DataError);
  CHECK_THROWS_WITH_AS(vos_layout(Sparse(4, 4), LayoutConfig{}), "degenerate similarity matrix", DataError);
  LayoutConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(vos_layout(two_cliques(1, 0.1), bad), UsageError);
}

TEST_CASE("canonicalization centers a single node") {
  Positions<double> p(1, 2);
  p << 3, 4;
  const std::vector<double> w = {1};
  const std::vector<std::string> ids = {"A"};
  const auto c = canonicalize_positions(p, w, ids);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 0.0);
}

TEST_CASE("canonicalization is an isometry and removes rotations and reflections") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 30);
    Positions<double> p(n, 2);
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
      p(i, 0) = 2 * u(gen);
      p(i, 1) = u(gen);
      w[i] = static_cast<double>(gen() % 5);
    }
    const auto ids = ids_for(n);
    const auto c = canonicalize_positions(p, w, ids);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        CHECK(std::abs((c.row(i) - c.row(j)).norm() - (p.row(i) - p.row(j)).norm()) <= 1e-9);
      }
    }

    const double theta = 3.14159265358979 * u(gen);
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    if (trial % 2 == 1) rot.col(0) = -rot.col(0);
    Positions<double> moved = (p * rot.transpose()).rowwise() + Eigen::RowVector2d(u(gen), u(gen));
    const auto c2 = canonicalize_positions(moved, w, ids);
    CHECK((c - c2).cwiseAbs().maxCoeff() <= 1e-6);
  }
}
