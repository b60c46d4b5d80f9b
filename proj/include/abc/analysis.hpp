#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "abc/algorithm.hpp"
#include "abc/error.hpp"
#include "abc/problems.hpp"

namespace abc {

// 2 lambda_min(D) / (L + mu lambda_min(D)). Throws SublinearRegime when mu = 0.
double gamma_star(double d_lambda_min, double L, double mu);

// Squared contraction factor of the forward map: 1 - 2 gamma L / (kappa + lambda_min(D)).
double q_sq(double d_lambda_min, double gamma, double L, double mu);

class SublinearRegime : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Binding { network, optimization };
enum class LinearMode { G0, G };

struct RateReport {
  double gamma = 0.0;
  double gamma_star = 0.0;
  double q_sq = 0.0;
  double lambda_term = 0.0;        // lambda_max((I-C)^{-1/2} M (I-C)^{-1/2})
  double optimization_term = 0.0;  // q_sq * lambda_term
  double consensus_term = 0.0;     // 1 - lambda_2(C)
  // NaN when the bound cannot be evaluated (no D, mu = 0, or I - C singular to working precision).
  double delta = std::numeric_limits<double>::quiet_NaN();
  Binding binding = Binding::optimization;
  bool feasible = false;
  std::vector<std::string> failed_clauses;
};

RateReport delta_linear(const AbcMatrices& mats, double gamma, double L, double mu, LinearMode mode);

// max(((kappa-1)/(kappa+1))^2, 1 - lambda_2(C))
double delta_star(double kappa, double lambda2_C);

struct TradeoffReport {
  double rho_com = 0.0;
  double kappa = 0.0;
  double rho_opt = 0.0;
  int K_plain = 1;
  int K_chebyshev = 1;
  double theta = 0.0;
  double c = 0.0;
  double rho_C = 0.0;  // 2 c^K / (1 + c^2K) at K_chebyshev
  bool any_K = false;  // kappa = 1: the optimization factor vanishes
};

// Smallest K with rho_com^K <= rho_opt^2, and the Chebyshev counterpart.
TradeoffReport tradeoff(double rho_com, double kappa);

// ceil(2 log((kappa-1)/(kappa+1)) / log((1 + lambda_{m-1}(W))/2))
int predicted_marker(double kappa, double lambda_second_largest);

enum class SublinearMode { G0, prox };

struct SublinearConstants {
  double lambda_min_D = 0.0;
  double lambda2_C = 0.0;
  double rho_B_minus_J = 0.0;
  double dist_D = 0.0;     // ||X0 - X*||_D
  double grad_norm = 0.0;  // ||grad f(X*)||
  double L = 0.0;
};

SublinearConstants sublinear_constants(const AbcMatrices& mats, const ProblemInstance& p, const Matrix& x0,
                                       const Vector& x_star);

// min(lambda_min(D)/L, 0.5 sqrt(net) ||X0 - X*||_D / ||grad f(X*)||), net = lambda_2(C)/rho(B-J) or lambda_2(C).
double sublinear_stepsize(const SublinearConstants& c, SublinearMode mode);
double sublinear_stepsize(const AbcMatrices& mats, const ProblemInstance& p, const Matrix& x0, const Vector& x_star,
                          SublinearMode mode);

// (1/k) ((1/(2 gamma)) ||X0 - X*||_D^2 + 2 gamma netfactor ||grad f(X*)||^2)
double sublinear_bound(const SublinearConstants& c, double gamma, long k, SublinearMode mode);
double sublinear_bound(const AbcMatrices& mats, const ProblemInstance& p, const Matrix& x0, const Vector& x_star,
                       double gamma, long k, SublinearMode mode);

enum class MeritMode { G0, G };

struct MeritValue {
  double consensus = 0.0;  // ||(I-J) X|| ||Y*||
  double objective = 0.0;  // |(f+g)(X) - (f+g)(X*)|
  double value = 0.0;
};

// Precomputes the optimal quantities once; evaluation is then one pass over X.
class MeritEvaluator {
 public:
  // Throws InvalidArgument in G mode when -grad F(x*) is not in dG(x*) within 1e-6.
  MeritEvaluator(const ProblemInstance& p, const Vector& x_star, MeritMode mode);
  MeritValue operator()(const Matrix& x) const;

  double y_star_norm() const { return y_norm_; }
  const Vector& xi_star() const { return xi_; }

 private:
  const ProblemInstance& p_;
  double f_star_;
  double y_norm_;
  Vector xi_;
};

MeritValue merit(const Matrix& x, const ProblemInstance& p, const Vector& x_star, MeritMode mode);

// Runs the iteration and the decomposed dynamics side by side and returns
// max_k ||Z^k - B Ztilde^k|| over k = 1..iters.
double verify_splitting(const AbcMatrices& mats, const ProblemInstance& p, double gamma, int iters,
                        const std::optional<Matrix>& z0 = std::nullopt);

// Building blocks of the operator view, exposed for property tests.
struct StackedPair {
  Matrix top, bottom;
};

// T_C [X; Y] = [X - sqrt(C) Y; sqrt(C) X + (I - C) Y]
StackedPair apply_tc(const Matrix& c, const Matrix& sqrt_c, const StackedPair& u);

// ||U||^2 with block weights diag(G_top, G_bottom).
double block_sq_norm(const Matrix& g_top, const Matrix& g_bottom, const StackedPair& u);

// D X - gamma grad f(X)
Matrix forward_map(const Matrix& d, const ProblemInstance& p, double gamma, const Matrix& x);

// Local (max L_i / min mu_i) versus centralized condition number of (1/m) sum f_i.
struct ConditionComparison {
  double kappa_local;
  double kappa_global;
};
ConditionComparison condition_comparison(const ProblemInstance& p);

}  // namespace abc
