#include "abc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "abc/error.hpp"

namespace abc {

namespace {

void hash_matrix(Fingerprint& fp, const Matrix& a) {
  fp.add(static_cast<std::int64_t>(a.rows())).add(static_cast<std::int64_t>(a.cols()));
  fp.bytes(a.data(), sizeof(double) * a.size());
}

void hash_vector(Fingerprint& fp, const Vector& a) {
  fp.add(static_cast<std::int64_t>(a.size()));
  fp.bytes(a.data(), sizeof(double) * a.size());
}

// log(1 + exp(-t)) without overflow
double softplus_neg(double t) { return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t)); }

}  // namespace

double SmoothLoss::smoothness() const { return lambda_max(curvature_bound()); }

QuadraticLoss::QuadraticLoss(Matrix q, Vector b, double c) : q_(std::move(q)), b_(std::move(b)), c_(c) {
  if (q_.rows() != q_.cols() || q_.rows() != b_.size()) throw InvalidArgument("quadratic: shape mismatch");
  if (!is_symmetric(q_, 1e-12)) throw InvalidArgument("quadratic: Q must be symmetric");
  mu_ = lambda_min(q_);
  if (mu_ < -1e-12) throw InvalidArgument("quadratic: Q must be positive semidefinite");
  mu_ = std::max(mu_, 0.0);
}

double QuadraticLoss::value(const Vector& x) const { return 0.5 * x.dot(q_ * x) - b_.dot(x) + c_; }

Vector QuadraticLoss::gradient(const Vector& x) const { return q_ * x - b_; }

void QuadraticLoss::fingerprint(Fingerprint& fp) const {
  fp.add("quadratic");
  hash_matrix(fp, q_);
  hash_vector(fp, b_);
  fp.add(c_);
}

LeastSquaresLoss::LeastSquaresLoss(Matrix u, Vector v, double scale, double ridge)
    : u_(std::move(u)), v_(std::move(v)), scale_(scale), ridge_(ridge) {
  if (u_.rows() != v_.size()) throw InvalidArgument("least squares: shape mismatch");
  if (scale_ < 0 || ridge_ < 0) throw InvalidArgument("least squares: negative weights");
  mu_ = std::max(0.0, lambda_min(curvature_bound()));
}

double LeastSquaresLoss::value(const Vector& x) const {
  return scale_ * (u_ * x - v_).squaredNorm() + ridge_ * x.squaredNorm();
}

Vector LeastSquaresLoss::gradient(const Vector& x) const {
  return 2.0 * scale_ * (u_.transpose() * (u_ * x - v_)) + 2.0 * ridge_ * x;
}

Matrix LeastSquaresLoss::curvature_bound() const {
  Matrix h = 2.0 * scale_ * (u_.transpose() * u_);
  h.diagonal().array() += 2.0 * ridge_;
  return symmetrize(h);
}

void LeastSquaresLoss::fingerprint(Fingerprint& fp) const {
  fp.add("least_squares");
  hash_matrix(fp, u_);
  hash_vector(fp, v_);
  fp.add(scale_).add(ridge_);
}

LogisticLoss::LogisticLoss(Matrix u, Vector v, double scale) : u_(std::move(u)), v_(std::move(v)), scale_(scale) {
  if (u_.rows() != v_.size()) throw InvalidArgument("logistic: shape mismatch");
  for (Eigen::Index k = 0; k < v_.size(); ++k)
    if (v_(k) != 1.0 && v_(k) != -1.0) throw InvalidArgument("logistic: labels must be +1 or -1");
}

double LogisticLoss::value(const Vector& x) const {
  Vector t = v_.cwiseProduct(u_ * x);
  double s = 0.0;
  for (Eigen::Index k = 0; k < t.size(); ++k) s += softplus_neg(t(k));
  return scale_ * s;
}

Vector LogisticLoss::gradient(const Vector& x) const {
  Vector t = v_.cwiseProduct(u_ * x);
  Vector w(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) w(k) = -v_(k) / (1.0 + std::exp(t(k)));
  return scale_ * (u_.transpose() * w);
}

Matrix LogisticLoss::curvature_bound() const { return symmetrize(0.25 * scale_ * (u_.transpose() * u_)); }

void LogisticLoss::fingerprint(Fingerprint& fp) const {
  fp.add("logistic");
  hash_matrix(fp, u_);
  hash_vector(fp, v_);
  fp.add(scale_);
}

Regularizer Regularizer::l1(double weight) {
  if (!(weight >= 0.0)) throw InvalidArgument("l1 weight must be nonnegative");
  return Regularizer(Kind::l1, weight);
}

double Regularizer::value(const Vector& x) const {
  return kind_ == Kind::zero ? 0.0 : weight_ * x.lpNorm<1>();
}

Vector Regularizer::prox(const Vector& z, double gamma) const {
  if (!(gamma > 0.0)) throw InvalidArgument("prox needs gamma > 0");
  if (kind_ == Kind::zero) return z;
  const double t = gamma * weight_;
  return z.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

Vector Regularizer::closest_subgradient(const Vector& x, const Vector& g) const {
  if (kind_ == Kind::zero) return Vector::Zero(x.size());
  Vector xi(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) > 0) xi(j) = weight_;
    else if (x(j) < 0) xi(j) = -weight_;
    else xi(j) = std::clamp(-g(j), -weight_, weight_);
  }
  return xi;
}

double Regularizer::subgradient_violation(const Vector& x, const Vector& xi) const {
  if (kind_ == Kind::zero) return xi.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double v;
    if (x(j) > 0) v = std::abs(xi(j) - weight_);
    else if (x(j) < 0) v = std::abs(xi(j) + weight_);
    else v = std::max(0.0, std::abs(xi(j)) - weight_);
    worst = std::max(worst, v);
  }
  return worst;
}

void Regularizer::fingerprint(Fingerprint& fp) const {
  fp.add(kind_ == Kind::zero ? "zero" : "l1").add(weight_);
}

Matrix prox_rows(const Regularizer& r, double gamma, const Matrix& z) {
  if (!(gamma > 0.0)) throw InvalidArgument("prox needs gamma > 0");
  if (r.kind() == Regularizer::Kind::zero) return z;
  const double t = gamma * r.weight();
  return z.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

ProblemInstance::ProblemInstance(std::vector<std::shared_ptr<const SmoothLoss>> agents, Regularizer reg,
                                 std::string label)
    : agents_(std::move(agents)), reg_(reg), label_(std::move(label)) {
  if (agents_.empty()) throw InvalidArgument("problem needs at least one agent");
  dim_ = agents_.front()->dim();
  Matrix avg = Matrix::Zero(dim_, dim_);
  for (const auto& a : agents_) {
    if (a->dim() != dim_) throw InvalidArgument("agents disagree on the variable dimension");
    Matrix h = a->curvature_bound();
    l_.push_back(lambda_max(h));
    mu_.push_back(a->strong_convexity());
    avg += h;
  }
  l_max_ = *std::max_element(l_.begin(), l_.end());
  mu_min_ = *std::min_element(mu_.begin(), mu_.end());
  l_bar_ = lambda_max(avg / static_cast<double>(agents_.size()));
}

double ProblemInstance::condition_number() const {
  if (mu_min_ <= 0.0) throw InvalidArgument("condition number undefined: not strongly convex");
  return l_max_ / mu_min_;
}

void ProblemInstance::check_shape(const Matrix& x) const {
  if (x.rows() != agents() || x.cols() != dim_)
    throw InvalidArgument("iterate shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                          " does not match " + std::to_string(agents()) + "x" + std::to_string(dim_));
}

Matrix ProblemInstance::stacked_gradient(const Matrix& x) const {
  check_shape(x);
  Matrix g(x.rows(), x.cols());
  for (int i = 0; i < agents(); ++i) g.row(i) = agents_[i]->gradient(x.row(i).transpose()).transpose();
  return g;
}

double ProblemInstance::stacked_value(const Matrix& x) const {
  check_shape(x);
  double s = 0.0;
  for (int i = 0; i < agents(); ++i) s += agents_[i]->value(x.row(i).transpose());
  return s;
}

double ProblemInstance::stacked_regularizer(const Matrix& x) const {
  check_shape(x);
  double s = 0.0;
  for (int i = 0; i < agents(); ++i) s += reg_.value(x.row(i).transpose());
  return s;
}

double ProblemInstance::objective_value(const Vector& x) const {
  double s = 0.0;
  for (const auto& a : agents_) s += a->value(x);
  return s + agents() * reg_.value(x);
}

double ProblemInstance::normalized_objective(const Vector& x) const { return objective_value(x) / agents(); }

Vector ProblemInstance::average_gradient(const Vector& x) const {
  Vector g = Vector::Zero(dim_);
  for (const auto& a : agents_) g += a->gradient(x);
  return g / agents();
}

std::uint64_t ProblemInstance::fingerprint() const {
  Fingerprint fp;
  fp.add(static_cast<std::int64_t>(agents())).add(static_cast<std::int64_t>(dim_));
  for (const auto& a : agents_) a->fingerprint(fp);
  reg_.fingerprint(fp);
  return fp.value();
}

ProblemInstance elastic_net_instance(const ElasticNetParams& p) {
  if (!(p.omega >= 0.0 && p.omega < 1.0)) throw InvalidArgument("omega must lie in [0, 1)");
  if (p.agents < 1 || p.rows_per_agent < 1 || p.dim < 1) throw InvalidArgument("elastic net: sizes must be positive");
  if (!(p.sparsity >= 0.0 && p.sparsity <= 1.0)) throw InvalidArgument("elastic net: sparsity must lie in [0, 1]");
  const int n = p.agents * p.rows_per_agent, d = p.dim, m = p.agents;

  SplitMix64 root(p.seed);
  SplitMix64 design = root.split(), truth = root.split(), noise = root.split();

  Matrix z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = design.normal();
  Matrix u(n, d);
  u.col(0) = z.col(0) / std::sqrt(1.0 - p.omega * p.omega);
  for (int j = 1; j < d; ++j) u.col(j) = p.omega * u.col(j - 1) + z.col(j);

  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  const int nnz = static_cast<int>(std::lround(p.sparsity * d));
  for (int j = 0; j < nnz; ++j) {
    int pick = j + static_cast<int>(truth.next() % static_cast<std::uint64_t>(d - j));
    std::swap(idx[j], idx[pick]);
  }
  Vector x0 = Vector::Zero(d);
  for (int j = 0; j < nnz; ++j) x0(idx[j]) = truth.normal();

  const double sd = std::sqrt(p.noise_variance);
  Vector v = u * x0;
  for (int i = 0; i < n; ++i) v(i) += sd * noise.normal();

  std::vector<std::shared_ptr<const SmoothLoss>> agents;
  for (int i = 0; i < m; ++i) {
    const int r0 = i * p.rows_per_agent;
    agents.push_back(std::make_shared<LeastSquaresLoss>(u.middleRows(r0, p.rows_per_agent),
                                                        v.segment(r0, p.rows_per_agent), 1.0 / m, p.ridge / m));
  }
  std::ostringstream label;
  label << "elastic_net(seed=" << p.seed << ",omega=" << p.omega << ",m=" << m << ")";
  ProblemInstance inst(std::move(agents), Regularizer::l1(p.l1 / m), label.str());
  inst.raw = LabeledData{std::move(u), std::move(v)};
  return inst;
}

ProblemInstance logistic_instance(const LabeledData& data, double alpha, int agents, int per_agent) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("logistic scale alpha must lie in (0, 1]");
  if (agents < 1 || per_agent < 1) throw InvalidArgument("logistic: sizes must be positive");
  if (data.features.rows() < static_cast<Eigen::Index>(agents) * per_agent)
    throw InvalidArgument("logistic: not enough samples for the requested split");
  if (data.features.rows() != data.labels.size()) throw InvalidArgument("logistic: feature/label count mismatch");
  std::vector<std::shared_ptr<const SmoothLoss>> losses;
  for (int i = 0; i < agents; ++i) {
    const int r0 = i * per_agent;
    losses.push_back(std::make_shared<LogisticLoss>(alpha * data.features.middleRows(r0, per_agent),
                                                    data.labels.segment(r0, per_agent), 1.0 / agents));
  }
  std::ostringstream label;
  label << "logistic(alpha=" << alpha << ",m=" << agents << ")";
  ProblemInstance inst(std::move(losses), Regularizer::zero(), label.str());
  inst.raw = data;
  return inst;
}

LabeledData parse_ionosphere(std::istream& is, int max_rows) {
  constexpr int kFeatures = 34;
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::string line;
  int line_no = 0;
  while (static_cast<int>(rows.size()) < max_rows && std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != kFeatures + 1)
      throw InvalidArgument("ionosphere line " + std::to_string(line_no) + ": expected 35 fields, got " +
                            std::to_string(cells.size()));
    std::vector<double> row(kFeatures);
    for (int j = 0; j < kFeatures; ++j) {
      std::size_t used = 0;
      try {
        row[j] = std::stod(cells[j], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0) throw InvalidArgument("ionosphere line " + std::to_string(line_no) + ": bad number '" + cells[j] + "'");
    }
    const std::string& lab = cells[kFeatures];
    if (lab == "g") labels.push_back(1.0);
    else if (lab == "b") labels.push_back(-1.0);
    else throw InvalidArgument("ionosphere line " + std::to_string(line_no) + ": label must be g or b, got '" + lab + "'");
    rows.push_back(std::move(row));
  }
  LabeledData out{Matrix(rows.size(), kFeatures), Vector(labels.size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < kFeatures; ++j) out.features(i, j) = rows[i][j];
    out.labels(i) = labels[i];
  }
  return out;
}

LabeledData load_ionosphere(const std::filesystem::path& path, int max_rows) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open ionosphere data at " + path.string());
  return parse_ionosphere(in, max_rows);
}

ProblemInstance random_quadratic_instance(int agents, int dim, double mu, double l, SplitMix64& rng,
                                          Regularizer reg) {
  if (!(mu >= 0.0 && l >= mu && l > 0.0)) throw InvalidArgument("random quadratic: need 0 <= mu <= L, L > 0");
  std::vector<std::shared_ptr<const SmoothLoss>> losses;
  for (int i = 0; i < agents; ++i) {
    Matrix g(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) g(r, c) = rng.normal();
    Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector ev(dim);
    for (int j = 0; j < dim; ++j) ev(j) = mu + (l - mu) * rng.uniform();
    // Pin the extremes on the first agent so the aggregate constants are exactly (mu, L).
    if (i == 0) {
      ev(0) = mu;
      ev(dim - 1) = l;
    }
    Matrix qm = symmetrize(q * ev.asDiagonal() * q.transpose());
    Vector b(dim);
    for (int j = 0; j < dim; ++j) b(j) = rng.normal();
    losses.push_back(std::make_shared<QuadraticLoss>(std::move(qm), std::move(b)));
  }
  return ProblemInstance(std::move(losses), reg, "random_quadratic");
}

}  // namespace abc
