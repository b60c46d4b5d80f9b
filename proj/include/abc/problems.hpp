#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abc/linalg.hpp"
#include "abc/rng.hpp"

namespace abc {

// One agent's smooth convex loss f_i : R^d -> R.
class SmoothLoss {
 public:
  virtual ~SmoothLoss() = default;
  virtual int dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  // PSD matrix H with Hessian(x) <= H everywhere; exact Hessian for quadratics.
  virtual Matrix curvature_bound() const = 0;
  // Strong convexity modulus (0 when merely convex).
  virtual double strong_convexity() const = 0;
  virtual void fingerprint(Fingerprint& fp) const = 0;

  double smoothness() const;
};

// 0.5 x^T Q x - b^T x + c
class QuadraticLoss : public SmoothLoss {
 public:
  QuadraticLoss(Matrix q, Vector b, double c = 0.0);
  int dim() const override { return static_cast<int>(b_.size()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix curvature_bound() const override { return q_; }
  double strong_convexity() const override { return mu_; }
  void fingerprint(Fingerprint& fp) const override;

  const Matrix& q() const { return q_; }
  const Vector& b() const { return b_; }

 private:
  Matrix q_;
  Vector b_;
  double c_;
  double mu_;
};

// scale * ||U x - v||^2 + ridge * ||x||^2
class LeastSquaresLoss : public SmoothLoss {
 public:
  LeastSquaresLoss(Matrix u, Vector v, double scale, double ridge);
  int dim() const override { return static_cast<int>(u_.cols()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix curvature_bound() const override;
  double strong_convexity() const override { return mu_; }
  void fingerprint(Fingerprint& fp) const override;

 private:
  Matrix u_;
  Vector v_;
  double scale_, ridge_, mu_;
};

// scale * sum_k log(1 + exp(-v_k u_k^T x)), labels in {-1, +1}
class LogisticLoss : public SmoothLoss {
 public:
  LogisticLoss(Matrix u, Vector v, double scale);
  int dim() const override { return static_cast<int>(u_.cols()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix curvature_bound() const override;
  double strong_convexity() const override { return 0.0; }
  void fingerprint(Fingerprint& fp) const override;

 private:
  Matrix u_;
  Vector v_;
  double scale_;
};

// Shared nonsmooth term G; zero or weight * ||x||_1.
class Regularizer {
 public:
  enum class Kind { zero, l1 };

  static Regularizer zero() { return Regularizer(Kind::zero, 0.0); }
  static Regularizer l1(double weight);

  Kind kind() const { return kind_; }
  double weight() const { return weight_; }

  double value(const Vector& x) const;
  // argmin_y G(y) + ||z - y||^2 / (2 gamma)
  Vector prox(const Vector& z, double gamma) const;
  // The element xi of dG(x) closest to -g, i.e. minimizing ||g + xi||.
  Vector closest_subgradient(const Vector& x, const Vector& g) const;
  // Largest violation of xi in dG(x), componentwise.
  double subgradient_violation(const Vector& x, const Vector& xi) const;
  void fingerprint(Fingerprint& fp) const;

 private:
  Regularizer(Kind k, double w) : kind_(k), weight_(w) {}
  Kind kind_;
  double weight_;
};

// Row-wise prox_{gamma G}.
Matrix prox_rows(const Regularizer& r, double gamma, const Matrix& z);

struct LabeledData {
  Matrix features;  // one sample per row
  Vector labels;    // +1 / -1
};

// Composite problem: agents' smooth losses plus a shared regularizer.
// Stacked convention: f(X) = sum_i f_i(x_i), g(X) = sum_i G(x_i).
class ProblemInstance {
 public:
  ProblemInstance(std::vector<std::shared_ptr<const SmoothLoss>> agents, Regularizer reg,
                  std::string label = {});

  int agents() const { return static_cast<int>(agents_.size()); }
  int dim() const { return dim_; }
  const SmoothLoss& agent(int i) const { return *agents_[i]; }
  const Regularizer& regularizer() const { return reg_; }
  const std::string& label() const { return label_; }

  double smoothness() const { return l_max_; }        // max_i L_i
  double strong_convexity() const { return mu_min_; }  // min_i mu_i
  double condition_number() const;                     // L / mu, throws when mu = 0
  double agent_smoothness(int i) const { return l_[i]; }
  double agent_strong_convexity(int i) const { return mu_[i]; }
  // Smoothness of (1/m) sum_i f_i from the averaged curvature bounds.
  double centralized_smoothness() const { return l_bar_; }

  Matrix stacked_gradient(const Matrix& x) const;
  double stacked_value(const Matrix& x) const;
  double stacked_regularizer(const Matrix& x) const;
  Matrix prox_rows(double gamma, const Matrix& z) const { return abc::prox_rows(reg_, gamma, z); }

  // f(1x^T) + m G(x)
  double objective_value(const Vector& x) const;
  // F(x) + G(x) with F = (1/m) sum_i f_i
  double normalized_objective(const Vector& x) const;
  // grad F(x) = (1/m) sum_i grad f_i(x)
  Vector average_gradient(const Vector& x) const;

  std::uint64_t fingerprint() const;

  std::optional<LabeledData> raw;

 private:
  void check_shape(const Matrix& x) const;

  std::vector<std::shared_ptr<const SmoothLoss>> agents_;
  Regularizer reg_;
  std::string label_;
  int dim_;
  std::vector<double> l_, mu_;
  double l_max_, mu_min_, l_bar_;
};

struct ElasticNetParams {
  std::uint64_t seed = 1;
  double omega = 0.0;
  int agents = 50;
  int rows_per_agent = 20;
  int dim = 40;
  double ridge = 20.0;
  double l1 = 1.0;
  double sparsity = 0.3;
  double noise_variance = 0.04;
};

// Correlated-design elastic net: f_i = (1/m)||U_i x - v_i||^2 + (ridge/m)||x||^2, G = (l1/m)||x||_1.
ProblemInstance elastic_net_instance(const ElasticNetParams& p);

// Logistic regression split into consecutive blocks of per_agent samples,
// features scaled by alpha, f_i carrying the 1/m factor, G = 0.
ProblemInstance logistic_instance(const LabeledData& data, double alpha, int agents = 50, int per_agent = 7);

// UCI ionosphere CSV: 34 numeric columns then 'g'/'b'. Keeps the first max_rows rows.
LabeledData parse_ionosphere(std::istream& is, int max_rows = 350);
LabeledData load_ionosphere(const std::filesystem::path& path, int max_rows = 350);

// Agents with random strongly convex quadratics, eigenvalues of each Q_i in [mu, l].
ProblemInstance random_quadratic_instance(int agents, int dim, double mu, double l, SplitMix64& rng,
                                          Regularizer reg = Regularizer::zero());

}  // namespace abc
