#include <doctest.h>

#include "abc/error.hpp"
#include "abc/gossip.hpp"
#include "helpers.hpp"

using namespace abc;

namespace {

void check_invariants(const GossipMatrix& w) {
  const Matrix& a = w.weights();
  const int m = w.size();
  CHECK(testing::max_abs(a - a.transpose()) <= 1e-12);
  CHECK((a.rowwise().sum() - Vector::Ones(m)).cwiseAbs().maxCoeff() <= 1e-10);
  auto s = spectral_summary(w);
  CHECK(s.eigenvalues(0) > -1 + 1e-12);
  CHECK(s.eigenvalues(m - 1) <= 1 + 1e-12);
}

// Characteristic polynomial roots for m <= 2 in closed form; m = 3, 4 via
// Faddeev-LeVerrier coefficients and bisection on sign changes.
std::vector<double> charpoly_roots(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> c(n + 1);
  c[n] = 1.0;
  Matrix mk = Matrix::Zero(n, n);
  Matrix id = Matrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    mk = a * mk + c[n - k + 1] * id;
    c[n - k] = -(a * mk).trace() / k;
  }
  auto p = [&](double x) {
    double v = 0.0;
    for (int i = n; i >= 0; --i) v = v * x + c[i];
    return v;
  };
  std::vector<double> roots;
  const int grid = 200000;
  double lo = -1.5, hi = 1.5;
  double prev_x = lo, prev = p(lo);
  for (int i = 1; i <= grid; ++i) {
    double x = lo + (hi - lo) * i / grid;
    double v = p(x);
    if (v == 0.0) {
      roots.push_back(x);
    } else if ((prev < 0) != (v < 0) && prev != 0.0) {
      double a0 = prev_x, b0 = x;
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (a0 + b0);
        if ((p(mid) < 0) == (p(a0) < 0)) a0 = mid;
        else b0 = mid;
      }
      roots.push_back(0.5 * (a0 + b0));
    }
    prev_x = x;
    prev = v;
  }
  return roots;
}

}  // namespace

TEST_CASE("metropolis weights on the 3-path") {
  GossipMatrix w = metropolis_weights(named_graph(Topology::path, 3));
  Matrix expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  CHECK(testing::max_abs(w.weights() - expected) < 1e-15);
  check_invariants(w);
  auto s = spectral_summary(w);
  CHECK(s.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.eigenvalues(1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(s.eigenvalues(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.rho_com == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("metropolis on the 2-clique splits evenly") {
  GossipMatrix w = metropolis_weights(named_graph(Topology::complete, 2));
  CHECK(testing::max_abs(w.weights() - Matrix::Constant(2, 2, 0.5)) < 1e-15);
}

TEST_CASE("metropolis rejects disconnected graphs") {
  CHECK_THROWS_AS(metropolis_weights(Graph(3)), InvalidArgument);
}

TEST_CASE("every constructor output passes the invariant suite on random graphs") {
  SplitMix64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    int m = 2 + static_cast<int>(rng.uniform() * 14);
    Graph g = testing::random_connected(rng, m);
    GossipMatrix w = metropolis_weights(g);
    check_invariants(w);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j && !g.has_edge(i, j)) CHECK(w.weights()(i, j) == 0.0);
    check_invariants(lazy(w));
    int K = 1 + static_cast<int>(rng.uniform() * 5);
    check_invariants(matrix_power(w, K));
    auto s = spectral_summary(w);
    CHECK(s.eigenvalues(m - 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eigenvalues(m - 2) < 1.0 - 1e-12);
    CHECK(s.rho_com < 1.0);
    if (s.radius > 0.0 && std::abs(s.eigenvalues(0)) > 1e-8 && std::abs(s.eigenvalues(1)) > 1e-8) {
      bool invertible = true;
      for (int i = 0; i < m; ++i) invertible &= std::abs(s.eigenvalues(i)) > 1e-8;
      if (invertible) check_invariants(chebyshev_matrix(w, K));
    }
  }
}

TEST_CASE("gossip constructor rejects invalid matrices") {
  Graph path = named_graph(Topology::path, 3);
  Matrix asym(2, 2);
  asym << 0.5, 0.5, 0.4, 0.6;
  CHECK_THROWS_AS(GossipMatrix(asym, 1), InvalidArgument);
  Matrix rows(2, 2);
  rows << 0.6, 0.6, 0.6, 0.6;
  CHECK_THROWS_AS(GossipMatrix(rows, 1), InvalidArgument);
  Matrix flip(2, 2);
  flip << 0, 1, 1, 0;  // eigenvalue -1
  CHECK_THROWS_AS(GossipMatrix(flip, 1), InvalidArgument);
  Matrix nonedge = Matrix::Constant(3, 3, 1.0 / 3);  // (0,2) is not an edge of the path
  CHECK_THROWS_AS(GossipMatrix(nonedge, 1, path), InvalidArgument);
  CHECK_NOTHROW(GossipMatrix(nonedge, 2, std::nullopt));
  CHECK_FALSE(gossip_violations(nonedge, &path, 1).empty());
}

TEST_CASE("lazy shifts the spectrum into (0, 1]") {
  GossipMatrix id(Matrix::Identity(3, 3), 1);
  CHECK(testing::max_abs(lazy(id).weights() - Matrix::Identity(3, 3)) == 0.0);
  auto s = spectral_summary(lazy(metropolis_weights(named_graph(Topology::path, 3))));
  CHECK(s.eigenvalues(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.eigenvalues(1) == doctest::Approx(5.0 / 6).epsilon(1e-12));
  CHECK(s.eigenvalues(2) == doctest::Approx(1.0).epsilon(1e-12));
  SplitMix64 rng(12);
  for (int t = 0; t < 20; ++t) {
    GossipMatrix w = metropolis_weights(testing::random_connected(rng, 8));
    CHECK(spectral_summary(lazy(w)).eigenvalues(0) > 0.0);
  }
}

TEST_CASE("matrix powers") {
  GossipMatrix w = metropolis_weights(named_graph(Topology::ring, 6));
  GossipMatrix w1 = matrix_power(w, 1);
  CHECK(testing::max_abs(w1.weights() - w.weights()) < 1e-15);
  CHECK(w1.hops() == 1);
  GossipMatrix w3 = matrix_power(w, 3);
  CHECK(w3.hops() == 3);
  CHECK(testing::max_abs(w3.weights() - w.weights() * w.weights() * w.weights()) < 1e-14);
  GossipMatrix j(averaging_matrix(4), 1);
  CHECK(testing::max_abs(matrix_power(j, 7).weights() - averaging_matrix(4)) < 1e-14);
  CHECK_THROWS(matrix_power(w, 0));
  SplitMix64 rng(13);
  for (int t = 0; t < 20; ++t) {
    GossipMatrix l = lazy(metropolis_weights(testing::random_connected(rng, 9)));
    int K = 1 + static_cast<int>(rng.uniform() * 6);
    CHECK(spectral_summary(matrix_power(l, K)).rho_com ==
          doctest::Approx(std::pow(spectral_summary(l).rho_com, K)).epsilon(1e-9));
  }
}

TEST_CASE("chebyshev filter: low orders") {
  GossipMatrix w = lazy(metropolis_weights(named_graph(Topology::path, 5)));
  GossipMatrix p1 = chebyshev_matrix(w, 1);
  CHECK(testing::max_abs(p1.weights() - w.weights()) < 1e-12);
  CHECK(p1.hops() == 1);
  CHECK(chebyshev_matrix(w, 4).hops() == 4);
  for (double rho : {0.3, 0.9}) {
    for (double x : {-0.7, 0.1, 0.5}) {
      double expect = (2 * (x / rho) * (x / rho) - 1) / (2 / (rho * rho) - 1);
      CHECK(chebyshev_filter(2, x, rho) == doctest::Approx(expect).epsilon(1e-13));
    }
    CHECK(chebyshev_filter(1, 0.42, rho) == doctest::Approx(0.42).epsilon(1e-14));
    for (int k = 1; k <= 8; ++k) CHECK(chebyshev_filter(k, 1.0, rho) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("chebyshev acceleration signals when consensus is exact") {
  GossipMatrix j(averaging_matrix(3), 1);
  CHECK_THROWS_AS(chebyshev_matrix(j, 2), AccelerationNotNeeded);
  GossipMatrix path = metropolis_weights(named_graph(Topology::path, 3));  // eigenvalue 0: singular
  CHECK_THROWS_AS(chebyshev_matrix(path, 2), InvalidArgument);
}

TEST_CASE("chebyshev spectrum sits under the min-max bound and beats powers on PSD matrices") {
  SplitMix64 rng(14);
  for (int t = 0; t < 40; ++t) {
    int m = 3 + static_cast<int>(rng.uniform() * 10);
    GossipMatrix w = lazy(metropolis_weights(testing::random_connected(rng, m)));
    auto s = spectral_summary(w);
    if (s.rho_com < 1e-9) continue;
    for (int K = 1; K <= 6; ++K) {
      auto pk = spectral_summary(chebyshev_matrix(w, K));
      CHECK(pk.rho_com <= chebyshev_bound(K, s.radius) + 1e-10);
      CHECK(pk.radius <= chebyshev_bound(K, s.radius) + 1e-10);
      CHECK(pk.rho_com <= spectral_summary(matrix_power(w, K)).rho_com + 1e-10);
    }
  }
}

TEST_CASE("spectral summary matches the characteristic polynomial on small matrices") {
  SplitMix64 rng(15);
  for (int t = 0; t < 25; ++t) {
    int m = 2 + static_cast<int>(rng.uniform() * 3);
    GossipMatrix w = metropolis_weights(testing::random_connected(rng, m));
    auto s = spectral_summary(w);
    auto roots = charpoly_roots(w.weights());
    // Repeated roots show no sign change; compare the distinct ones.
    for (double r : roots) {
      double best = 1e9;
      for (int i = 0; i < m; ++i) best = std::min(best, std::abs(s.eigenvalues(i) - r));
      CHECK(best < 1e-8);
    }
    CHECK(roots.size() >= 1);
  }
}

TEST_CASE("spectral summary fixtures") {
  CHECK(spectral_summary(averaging_matrix(3)).rho_com == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(spectral_summary(Matrix::Identity(2, 2)).rho_com == doctest::Approx(1.0).epsilon(1e-12));
}
