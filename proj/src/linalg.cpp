#include "abc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "abc/error.hpp"

namespace abc {

namespace {

double off_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& input, double tol, int max_sweeps) {
  if (input.rows() != input.cols()) throw InvalidArgument("eigendecomposition needs a square matrix");
  const Eigen::Index n = input.rows();
  Matrix a = input.triangularView<Eigen::Upper>();
  a.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(1.0, a.norm());

  for (int sweep = 0; sweep < max_sweeps && off_norm(a) > tol * scale; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

Matrix spectral_apply(const SymmetricEigen& e, const std::function<double(double)>& f) {
  Vector fv = e.values.unaryExpr(f);
  return e.vectors * fv.asDiagonal() * e.vectors.transpose();
}

double lambda_min(const Matrix& a) { return symmetric_eigen(a).values(0); }

double lambda_max(const Matrix& a) {
  auto e = symmetric_eigen(a);
  return e.values(e.values.size() - 1);
}

Matrix psd_sqrt(const Matrix& a, double tol) {
  auto e = symmetric_eigen(a);
  if (e.values(0) < -tol) throw InvalidArgument("square root of an indefinite matrix");
  return spectral_apply(e, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

Matrix pd_inverse_sqrt(const Matrix& a) {
  auto e = symmetric_eigen(a);
  if (e.values(0) <= 0.0) throw InvalidArgument("inverse square root of a non-positive-definite matrix");
  return spectral_apply(e, [](double x) { return 1.0 / std::sqrt(x); });
}

bool is_symmetric(const Matrix& a, double tol) {
  return a.rows() == a.cols() && (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix averaging_matrix(int m) { return Matrix::Constant(m, m, 1.0 / m); }

double spectral_radius_sym(const Matrix& a) {
  auto e = symmetric_eigen(a);
  return std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
}

double lambda_second_smallest(const Matrix& a) {
  if (a.rows() < 2) throw InvalidArgument("second eigenvalue needs m >= 2");
  return symmetric_eigen(a).values(1);
}

double weighted_sq_norm(const Matrix& g, const Matrix& x) { return (x.transpose() * g * x).trace(); }

void write_matrix_csv(std::ostream& os, const Matrix& a) {
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) os << (j ? "," : "") << a(i, j);
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgument("matrix csv: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw InvalidArgument("matrix csv: ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix a(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
  return a;
}

}  // namespace abc
