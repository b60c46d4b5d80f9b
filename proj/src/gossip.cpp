#include "abc/gossip.hpp"

#include <cmath>
#include <sstream>

#include "abc/error.hpp"

namespace abc {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

}  // namespace

std::vector<std::string> gossip_violations(const Matrix& w, const Graph* graph, int hops) {
  std::vector<std::string> out;
  if (w.rows() != w.cols() || w.rows() == 0) {
    out.push_back("matrix is not square");
    return out;
  }
  const Eigen::Index m = w.rows();
  if (!w.allFinite()) {
    out.push_back("non-finite entries");
    return out;
  }
  if (!is_symmetric(w, 1e-12)) out.push_back("not symmetric to 1e-12");
  double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_err > 1e-10) {
    std::ostringstream ss;
    ss << "row sums deviate from 1 by " << row_err;
    out.push_back(ss.str());
  }
  if (graph && hops == 1) {
    if (graph->size() != m) {
      out.push_back("graph size does not match matrix");
    } else {
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          if (i != j && w(i, j) != 0.0 && !graph->has_edge(int(i), int(j))) {
            std::ostringstream ss;
            ss << "nonzero weight on non-edge (" << i << "," << j << ")";
            out.push_back(ss.str());
            i = m;
            break;
          }
    }
  }
  auto e = symmetric_eigen(symmetrize(w));
  if (e.values(0) <= -1.0 + 1e-12) out.push_back("eigenvalue at or below -1");
  if (e.values(m - 1) > 1.0 + 1e-12) out.push_back("eigenvalue above 1");
  return out;
}

GossipMatrix::GossipMatrix(Matrix weights, int hops, std::optional<Graph> graph)
    : w_(std::move(weights)), hops_(hops), graph_(std::move(graph)) {
  if (hops_ < 1) throw InvalidArgument("gossip matrix needs hops >= 1");
  auto v = gossip_violations(w_, graph_ ? &*graph_ : nullptr, hops_);
  if (!v.empty()) throw InvalidArgument("invalid gossip matrix: " + join(v));
}

SpectralSummary spectral_summary(const Matrix& w) {
  const int m = static_cast<int>(w.rows());
  auto e = symmetric_eigen(w);
  auto d = symmetric_eigen(w - averaging_matrix(m));
  double radius = std::max(std::abs(d.values(0)), std::abs(d.values(m - 1)));
  return {e.values, d.values(m - 1), radius};
}

GossipMatrix metropolis_weights(const Graph& g) {
  if (!is_connected(g)) throw InvalidArgument("Metropolis weights need a connected graph");
  const int m = g.size();
  Matrix w = Matrix::Zero(m, m);
  for (auto [i, j] : g.edges()) {
    double v = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < m; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return GossipMatrix(std::move(w), 1, g);
}

GossipMatrix lazy(const GossipMatrix& w) {
  Matrix l = 0.5 * (Matrix::Identity(w.size(), w.size()) + w.weights());
  return GossipMatrix(std::move(l), w.hops(), w.graph());
}

GossipMatrix matrix_power(const GossipMatrix& w, int k) {
  if (k < 1) throw InvalidArgument("matrix power needs K >= 1");
  Matrix p = w.weights();
  for (int i = 1; i < k; ++i) p = symmetrize(p * w.weights());
  return GossipMatrix(std::move(p), k * w.hops(), k == 1 ? w.graph() : std::nullopt);
}

GossipMatrix chebyshev_matrix(const GossipMatrix& w, int k) {
  if (k < 1) throw InvalidArgument("Chebyshev filter needs K >= 1");
  const int m = w.size();
  auto s = spectral_summary(w);
  if (s.radius <= 1e-14) throw AccelerationNotNeeded("mixing radius is zero; exact consensus already");
  if (s.eigenvalues.cwiseAbs().minCoeff() < 1e-10) throw InvalidArgument("Chebyshev filter needs an invertible W");
  const double r = s.radius;
  const Matrix id = Matrix::Identity(m, m);
  const Matrix x = w.weights() / r;
  Matrix t_prev = id, t = x;
  for (int i = 1; i < k; ++i) {
    Matrix next = symmetrize(2.0 * x * t) - t_prev;
    t_prev = std::move(t);
    t = std::move(next);
  }
  double norm = std::cosh(k * std::acosh(1.0 / r));
  Matrix p = t / norm;
  // Remove the O(eps) row-sum drift left by the large intermediate T_K(1/r).
  Matrix jm = averaging_matrix(m);
  p = symmetrize((id - jm) * p * (id - jm) + jm);
  return GossipMatrix(std::move(p), k * w.hops());
}

double chebyshev_filter(int k, double x, double rho) {
  double xi = x / rho, tp = 1.0, t = xi;
  for (int i = 1; i < k; ++i) {
    double nx = 2.0 * xi * t - tp;
    tp = t;
    t = nx;
  }
  if (k == 0) t = 1.0;
  return t / std::cosh(k * std::acosh(1.0 / rho));
}

double chebyshev_bound(int k, double rho) {
  if (rho <= 0.0) return 0.0;
  double theta = (1.0 + rho) / (1.0 - rho);
  double c = (std::sqrt(theta) - 1.0) / (std::sqrt(theta) + 1.0);
  double ck = std::pow(c, k);
  return 2.0 * ck / (1.0 + ck * ck);
}

}  // namespace abc
