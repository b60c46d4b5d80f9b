#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abc/gossip.hpp"
#include "abc/oracle.hpp"
#include "abc/problems.hpp"

namespace abc {

// One instance of the framework: Z+ = A X - gamma B grad f(X) - Y, Y+ = Y + C Z+.
struct AbcMatrices {
  std::string name;
  Matrix A, B, C;
  std::optional<Matrix> D;  // declared factor with A = B D
  int hops_per_iter = 1;

  int size() const { return static_cast<int>(A.rows()); }
};

enum class Preset {
  extra,
  nids_exact_diffusion,
  next_augdgm,
  diging_harnessing,
  jakovetic_b0,
  jakovetic_bW,
  mansoori,
  alghunaim,
};

struct PresetOptions {
  int K = 1;                 // mansoori: number of inner rounds
  double alpha = 1.0;        // alghunaim: dual scaling in (0, 1]
  double gamma = 0.0;        // jakovetic: stepsize entering A and C
  std::optional<double> b;   // jakovetic: penalty weight (default 1/gamma)
};

Preset parse_preset(std::string_view name);
std::string preset_name(Preset p);
std::vector<Preset> all_presets();

// Throws InvalidArgument when the preset's spectral precondition on W fails.
AbcMatrices make_preset(Preset p, const GossipMatrix& w, const PresetOptions& opt = {});

// A = B = mixing, C = I - mixing, D = I.
AbcMatrices atc_from_mixing(const GossipMatrix& mixing, std::string name);

enum class AssumptionSet { linear_G0, linear_G, sublinear_G0, sublinear_prox };

AssumptionSet parse_assumption_set(std::string_view name);
std::string assumption_set_name(AssumptionSet a);

struct ClauseCheck {
  std::string id;
  std::string description;
  bool passed;
  double margin;  // positive when satisfied with room to spare
};

struct ValidationReport {
  AssumptionSet mode;
  std::vector<ClauseCheck> clauses;

  bool ok() const;
  const ClauseCheck* find(std::string_view id) const;
  std::vector<std::string> failures() const;
};

ValidationReport validate(const AbcMatrices& mats, double gamma, double L, double mu, AssumptionSet mode);

struct AbcState {
  Matrix Z, X, Y;          // primal pre-prox, primal, dual
  Matrix X_prev, G_prev;   // X^{k-1} and grad f(X^{k-1}), kept for the two-term form
  Matrix Xu, Yu;           // underlined variables of the gradient-first forms
  Matrix X_sum;            // sum_{t=1..k} X^t
  long k = 0;
  long grad_evals = 0;
  long comm_rounds = 0;

  // (1/k) sum_{t<=k} X^t; requires k >= 1.
  Matrix averaged() const;
};

// X^0 = prox(Z^0), Y^0 = 0 (Z^0 defaults to zero). The underlined variables start
// at Yu^0 = 0 and Xu^0 = B^{-1} X^0 when B is invertible (else X^0).
AbcState initial_state(const ProblemInstance& p, const AbcMatrices& mats, double gamma,
                       const std::optional<Matrix>& z0 = std::nullopt);

// Z+ = A X - gamma B grad f(X) - Y; Y+ = Y + C Z+; X+ = prox(Z+).
void step(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma);

// Z+ = (I - C) Z + A (X - X_prev) - gamma B (grad f(X) - grad f(X_prev)); needs k >= 1.
void step_eliminated(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma);

// Xu+ = D X - gamma (grad f(X) + Yu); X+ = prox(B Xu+); Yu+ = Yu + C X+ / gamma.
void step_sublinear_prox(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma);

// G = 0 only: X = B Xu; Xu+ = D X - gamma (grad f(X) + Yu); Yu+ = Yu + C Xu+ / gamma.
void step_underline(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma);

enum class Variant { abc, eliminated, sublinear_prox };
enum class StopMetric { err_opt, merit, fixed_point };

Variant parse_variant(std::string_view name);
StopMetric parse_stop_metric(std::string_view name);

struct StopRule {
  long max_iters = 10000;
  double tol = 1e-8;
  std::optional<StopMetric> metric;  // default: err_opt with an oracle, else fixed_point
};

struct RunConfig {
  const AbcMatrices* mats = nullptr;
  const ProblemInstance* problem = nullptr;
  double gamma = 0.0;
  Variant variant = Variant::abc;
  StopRule stop;
  const OracleSolution* oracle = nullptr;
  std::optional<Matrix> z0;
  bool record_merit = true;      // needs the oracle
  bool record_objective = true;
  long record_every = 1;         // the last iteration is always recorded
};

struct TraceRecord {
  long k;
  long grad_evals;
  long comm_rounds;
  double err_opt;        // ||X^k - 1 x*^T||, NaN without oracle
  double err_consensus;  // ||(I - J) X^k||
  double merit;          // M(X-hat^k), NaN when not tracked
  double objective;      // f(X^k) + g(X^k), NaN when not tracked
};

enum class RunStatus { converged, max_iters, diverged };

struct RunTrace {
  std::vector<TraceRecord> records;
  RunStatus status = RunStatus::max_iters;
  long iterations = 0;            // iterations performed
  std::optional<long> hit_iter;   // first k meeting the stop rule
  std::optional<long> divergence_iter;
  std::string message;
  Matrix final_X;
};

RunTrace run(const RunConfig& cfg);

void write_trace_csv(std::ostream& os, const RunTrace& t);

}  // namespace abc
