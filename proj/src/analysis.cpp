#include "abc/analysis.hpp"

#include <cmath>

namespace abc {

double gamma_star(double d_lambda_min, double L, double mu) {
  if (!(mu > 0.0)) throw SublinearRegime("mu = 0: use the sublinear stepsize instead");
  if (!(L >= mu)) throw InvalidArgument("need L >= mu > 0");
  if (!(d_lambda_min > 0.0 && d_lambda_min <= 1.0 + 1e-12)) throw InvalidArgument("lambda_min(D) must lie in (0, 1]");
  return 2.0 * d_lambda_min / (L + mu * d_lambda_min);
}

double q_sq(double d_lambda_min, double gamma, double L, double mu) {
  const double gs = gamma_star(d_lambda_min, L, mu);
  if (!(gamma > 0.0 && gamma <= gs * (1.0 + 1e-12))) throw InvalidArgument("gamma outside (0, gamma*(D)]");
  return 1.0 - 2.0 * gamma * L / (L / mu + d_lambda_min);
}

RateReport delta_linear(const AbcMatrices& mats, double gamma, double L, double mu, LinearMode mode) {
  RateReport r;
  r.gamma = gamma;
  const int m = mats.size();
  auto rep = validate(mats, gamma, L, mu, mode == LinearMode::G0 ? AssumptionSet::linear_G0 : AssumptionSet::linear_G);
  r.failed_clauses = rep.failures();
  r.feasible = rep.ok();
  if (!mats.D || !(mu > 0.0)) {
    r.feasible = false;
    return r;
  }
  const double dmin = symmetric_eigen(symmetrize(*mats.D)).values(0);
  if (!(dmin > 0.0 && dmin <= 1.0 + 1e-12)) {
    r.feasible = false;
    return r;
  }
  r.gamma_star = gamma_star(std::min(dmin, 1.0), L, mu);
  r.q_sq = 1.0 - 2.0 * gamma * L / (L / mu + dmin);
  const Matrix id = Matrix::Identity(m, m);
  const Matrix c = symmetrize(mats.C);
  auto ec = symmetric_eigen(c).values;
  r.consensus_term = m >= 2 ? 1.0 - ec(1) : 0.0;
  if (ec(m - 1) >= 1.0) {
    r.feasible = false;
    return r;
  }
  const Matrix s = pd_inverse_sqrt(id - c);
  const Matrix M = mode == LinearMode::G0 ? symmetrize(mats.A * mats.B) : symmetrize(mats.B * mats.B);
  r.lambda_term = symmetric_eigen(symmetrize(s * M * s)).values(m - 1);
  r.optimization_term = r.q_sq * r.lambda_term;
  r.delta = std::max(r.optimization_term, r.consensus_term);
  r.binding = r.optimization_term >= r.consensus_term ? Binding::optimization : Binding::network;
  return r;
}

double delta_star(double kappa, double lambda2_C) {
  const double r = (kappa - 1.0) / (kappa + 1.0);
  return std::max(r * r, 1.0 - lambda2_C);
}

TradeoffReport tradeoff(double rho_com, double kappa) {
  if (!(kappa >= 1.0)) throw InvalidArgument("condition number must be >= 1");
  if (!(rho_com >= 0.0 && rho_com < 1.0)) throw InvalidArgument("rho_com must lie in [0, 1)");
  TradeoffReport t;
  t.rho_com = rho_com;
  t.kappa = kappa;
  t.rho_opt = (kappa - 1.0) / (kappa + 1.0);
  t.theta = (1.0 + rho_com) / (1.0 - rho_com);
  t.c = (std::sqrt(t.theta) - 1.0) / (std::sqrt(t.theta) + 1.0);
  if (t.rho_opt == 0.0) {
    t.any_K = true;
    t.rho_C = chebyshev_bound(1, rho_com);
    return t;
  }
  if (rho_com == 0.0) return t;
  const double target = t.rho_opt * t.rho_opt;
  // The 1e-9 guard keeps exact integer ratios from rounding up.
  t.K_plain = std::max(1, static_cast<int>(std::ceil(std::log(target) / std::log(rho_com) - 1e-9)));
  const double y = 1.0 / target + std::sqrt(1.0 / (target * target) - 1.0);
  t.K_chebyshev = std::max(1, static_cast<int>(std::ceil(std::log(y) / std::log(1.0 / t.c) - 1e-9)));
  t.rho_C = chebyshev_bound(t.K_chebyshev, rho_com);
  return t;
}

int predicted_marker(double kappa, double lambda_second_largest) {
  if (!(kappa > 1.0)) throw InvalidArgument("predicted marker needs kappa > 1");
  if (!(lambda_second_largest > -1.0 && lambda_second_largest < 1.0))
    throw InvalidArgument("second-largest eigenvalue must lie in (-1, 1)");
  const double v = 2.0 * std::log((kappa - 1.0) / (kappa + 1.0)) / std::log((1.0 + lambda_second_largest) / 2.0);
  return static_cast<int>(std::ceil(v - 1e-9));
}

SublinearConstants sublinear_constants(const AbcMatrices& mats, const ProblemInstance& p, const Matrix& x0,
                                       const Vector& x_star) {
  if (!mats.D) throw InvalidArgument("sublinear constants need the factor D");
  const int m = mats.size();
  SublinearConstants c;
  c.lambda_min_D = symmetric_eigen(symmetrize(*mats.D)).values(0);
  c.lambda2_C = m >= 2 ? lambda_second_smallest(symmetrize(mats.C)) : 0.0;
  c.rho_B_minus_J = spectral_radius_sym(symmetrize(mats.B) - averaging_matrix(m));
  const Matrix xs = Vector::Ones(m) * x_star.transpose();
  c.dist_D = std::sqrt(std::max(0.0, weighted_sq_norm(*mats.D, x0 - xs)));
  c.grad_norm = p.stacked_gradient(xs).norm();
  c.L = p.smoothness();
  return c;
}

double sublinear_stepsize(const SublinearConstants& c, SublinearMode mode) {
  const double first = c.lambda_min_D / c.L;
  if (c.grad_norm <= 0.0) return first;
  double net;
  if (mode == SublinearMode::G0) {
    if (c.rho_B_minus_J <= 0.0) return first;
    net = c.lambda2_C / c.rho_B_minus_J;
  } else {
    net = c.lambda2_C;
  }
  return std::min(first, 0.5 * std::sqrt(net) * c.dist_D / c.grad_norm);
}

double sublinear_stepsize(const AbcMatrices& mats, const ProblemInstance& p, const Matrix& x0, const Vector& x_star,
                          SublinearMode mode) {
  return sublinear_stepsize(sublinear_constants(mats, p, x0, x_star), mode);
}

double sublinear_bound(const SublinearConstants& c, double gamma, long k, SublinearMode mode) {
  if (k < 1) throw InvalidArgument("bound needs k >= 1");
  const double cap = c.lambda_min_D / c.L;
  if (!(gamma > 0.0 && gamma <= cap * (1.0 + 1e-12))) throw InvalidArgument("gamma outside (0, lambda_min(D)/L]");
  if (!(c.lambda2_C > 0.0)) throw InvalidArgument("bound needs lambda_2(C) > 0");
  const double net = mode == SublinearMode::G0 ? c.rho_B_minus_J / c.lambda2_C : 1.0 / c.lambda2_C;
  return (c.dist_D * c.dist_D / (2.0 * gamma) + 2.0 * gamma * net * c.grad_norm * c.grad_norm) / static_cast<double>(k);
}

double sublinear_bound(const AbcMatrices& mats, const ProblemInstance& p, const Matrix& x0, const Vector& x_star,
                       double gamma, long k, SublinearMode mode) {
  return sublinear_bound(sublinear_constants(mats, p, x0, x_star), gamma, k, mode);
}

MeritEvaluator::MeritEvaluator(const ProblemInstance& p, const Vector& x_star, MeritMode mode) : p_(p) {
  const int m = p.agents();
  const Matrix xs = Vector::Ones(m) * x_star.transpose();
  f_star_ = p.stacked_value(xs) + p.stacked_regularizer(xs);
  const Matrix g = p.stacked_gradient(xs);
  if (mode == MeritMode::G0) {
    xi_ = Vector::Zero(p.dim());
    y_norm_ = g.norm();
    return;
  }
  xi_ = -p.average_gradient(x_star);
  const double viol = p.regularizer().subgradient_violation(x_star, xi_);
  if (viol > 1e-6) throw InvalidArgument("oracle inaccurate: -grad F(x*) is not a subgradient of G at x* (violation " +
                                         std::to_string(viol) + ")");
  y_norm_ = (g + Vector::Ones(m) * xi_.transpose()).norm();
}

MeritValue MeritEvaluator::operator()(const Matrix& x) const {
  MeritValue v;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  v.consensus = (x.rowwise() - mean).norm() * y_norm_;
  v.objective = std::abs(p_.stacked_value(x) + p_.stacked_regularizer(x) - f_star_);
  v.value = std::max(v.consensus, v.objective);
  return v;
}

MeritValue merit(const Matrix& x, const ProblemInstance& p, const Vector& x_star, MeritMode mode) {
  return MeritEvaluator(p, x_star, mode)(x);
}

double verify_splitting(const AbcMatrices& mats, const ProblemInstance& p, double gamma, int iters,
                        const std::optional<Matrix>& z0) {
  if (!mats.D) throw InvalidArgument("splitting check needs the factor D");
  const int m = mats.size();
  if (symmetric_eigen(symmetrize(mats.B)).values.cwiseAbs().minCoeff() < 1e-12)
    throw InvalidArgument("splitting check needs an invertible B");
  const Matrix& D = *mats.D;
  const Matrix c = symmetrize(mats.C);
  const Matrix sc = psd_sqrt(c);
  const Matrix ic = Matrix::Identity(m, m) - c;

  AbcState s = initial_state(p, mats, gamma, z0);
  Matrix zt = forward_map(D, p, gamma, s.X);
  Matrix v = sc * zt;
  double worst = 0.0;
  for (int k = 1; k <= iters; ++k) {
    step(s, mats, p, gamma);
    worst = std::max(worst, (s.Z - mats.B * zt).norm());
    Matrix f = forward_map(D, p, gamma, p.prox_rows(gamma, mats.B * zt));
    Matrix zn = f - sc * v;
    v = sc * f + ic * v;
    zt = std::move(zn);
  }
  return worst;
}

StackedPair apply_tc(const Matrix& c, const Matrix& sqrt_c, const StackedPair& u) {
  const Matrix ic = Matrix::Identity(c.rows(), c.cols()) - c;
  return {u.top - sqrt_c * u.bottom, sqrt_c * u.top + ic * u.bottom};
}

double block_sq_norm(const Matrix& g_top, const Matrix& g_bottom, const StackedPair& u) {
  return weighted_sq_norm(g_top, u.top) + weighted_sq_norm(g_bottom, u.bottom);
}

Matrix forward_map(const Matrix& d, const ProblemInstance& p, double gamma, const Matrix& x) {
  return d * x - gamma * p.stacked_gradient(x);
}

ConditionComparison condition_comparison(const ProblemInstance& p) {
  Matrix avg = Matrix::Zero(p.dim(), p.dim());
  for (int i = 0; i < p.agents(); ++i) avg += p.agent(i).curvature_bound();
  auto e = symmetric_eigen(avg / p.agents()).values;
  return {p.condition_number(), e(e.size() - 1) / e(0)};
}

}  // namespace abc
