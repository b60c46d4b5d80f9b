#pragma once

#include <filesystem>

#include "abc/problems.hpp"

namespace abc {

struct OracleOptions {
  double tol = 1e-12;
  long max_iters = 2'000'000;
};

struct OracleSolution {
  Vector x_star;
  double objective = 0.0;  // F(x*) + G(x*), normalized convention
  Vector xi_star;          // attributed subgradient of G at x*
  double residual = 0.0;   // ||grad F(x*) + xi*||
  double mapping_norm = 0.0;  // prox-gradient mapping norm at exit
  long iterations = 0;
  bool converged = false;
};

// Accelerated proximal gradient on F + G from x = 0 with step 1/L_bar and
// function-value restart, stopped when L_bar ||x - prox(x - grad F(x)/L_bar)|| <= tol.
// On budget exhaustion the best iterate is returned with converged = false.
OracleSolution solve_centralized(const ProblemInstance& p, const OracleOptions& opt = {});

// Residual and attributed subgradient at an arbitrary point.
OracleSolution assess_point(const ProblemInstance& p, const Vector& x);

// Disk cache keyed by the problem fingerprint and tolerance.
class OracleCache {
 public:
  explicit OracleCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  OracleSolution solve(const ProblemInstance& p, const OracleOptions& opt = {});
  std::filesystem::path entry_path(const ProblemInstance& p, const OracleOptions& opt) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace abc
