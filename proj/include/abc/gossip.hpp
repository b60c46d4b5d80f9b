#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abc/graph.hpp"
#include "abc/linalg.hpp"

namespace abc {

// Returns human-readable violations of the gossip invariants (empty when valid):
// symmetry, unit row sums, graph compliance for 1-hop matrices, spectrum in (-1, 1].
std::vector<std::string> gossip_violations(const Matrix& w, const Graph* graph, int hops);

// Symmetric doubly stochastic mixing matrix. The constructor enforces the invariants.
class GossipMatrix {
 public:
  GossipMatrix(Matrix weights, int hops, std::optional<Graph> graph = std::nullopt);

  const Matrix& weights() const { return w_; }
  int size() const { return static_cast<int>(w_.rows()); }
  int hops() const { return hops_; }
  const std::optional<Graph>& graph() const { return graph_; }

 private:
  Matrix w_;
  int hops_;
  std::optional<Graph> graph_;
};

struct SpectralSummary {
  Vector eigenvalues;  // ascending
  double rho_com;      // lambda_max(W - J)
  double radius;       // max |lambda| over W - J
  // Second-largest eigenvalue of W (lambda_{m-1}).
  double lambda_second_largest() const { return eigenvalues(eigenvalues.size() - 2); }
};

SpectralSummary spectral_summary(const Matrix& w);
inline SpectralSummary spectral_summary(const GossipMatrix& w) { return spectral_summary(w.weights()); }

// W_ij = 1/(1 + max(deg_i, deg_j)) on edges, diagonal fills rows to one.
GossipMatrix metropolis_weights(const Graph& g);

// (I + W)/2
GossipMatrix lazy(const GossipMatrix& w);

// W^K, K*hops communication rounds.
GossipMatrix matrix_power(const GossipMatrix& w, int k);

// Thrown when the mixing radius is zero and acceleration has nothing to do.
class AccelerationNotNeeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normalized Chebyshev filter P_K(W) = T_K(W/r)/T_K(1/r), r the largest |lambda(W - J)|.
GossipMatrix chebyshev_matrix(const GossipMatrix& w, int k);

// Scalar P_K(x) for interval radius rho.
double chebyshev_filter(int k, double x, double rho);
// Worst-case |P_K| on [-rho, rho]: 2c^K/(1 + c^2K).
double chebyshev_bound(int k, double rho);

}  // namespace abc
