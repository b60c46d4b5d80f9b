#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abc/algorithm.hpp"
#include "abc/analysis.hpp"
#include "abc/graph.hpp"

namespace abc {

struct GraphSpec {
  int agents = 50;
  double p = 0.05;
  int max_retries = 10000;
  std::string file;  // edge list; overrides the random draw when set

  bool operator==(const GraphSpec&) const = default;
};

// Everything an experiment needs; JSON round trips are lossless.
struct ExperimentConfig {
  std::string experiment = "custom";  // fig1 | fig2 | fig3 | custom
  std::uint64_t seed = 1;
  GraphSpec graph;

  // custom runs use the first preset; "atc" builds A = B = mixing^K, C = I - B
  std::vector<std::string> presets;
  std::string mixing = "lazy_metropolis";  // metropolis | lazy_metropolis

  std::string gamma_policy = "optimal";  // optimal | explicit
  std::optional<double> gamma;

  int k_min = 1;
  int k_max = 1;
  std::vector<int> k_values;  // overrides [k_min, k_max] when non-empty

  double target = 1e-8;
  long max_iters = 20000;
  std::string output_dir = "out";
  int threads = 1;

  std::string problem = "elastic_net";  // elastic_net | logistic
  std::vector<double> omegas;            // fig1
  double omega = 0.8;
  int rows_per_agent = 20;
  int dim = 40;
  double ridge = 20.0;
  double l1 = 1.0;
  std::vector<double> alphas;  // fig3
  double alpha = 1.0;
  std::string data_path;       // ionosphere file for logistic problems
  double x0_scale = 0.0;       // X0 entries ~ N(0, x0_scale^2), drawn from the seed
  std::string variant = "abc";
  std::string assumptions;     // custom: assumption set checked before running (empty: inferred)
  std::string oracle_cache;    // directory; empty disables caching

  bool operator==(const ExperimentConfig&) const = default;

  std::vector<int> k_list() const;
};

void to_json(nlohmann::json& j, const GraphSpec& g);
void from_json(const nlohmann::json& j, GraphSpec& g);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Unknown keys and out-of-range values throw InvalidArgument.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& c);

// Full-scale defaults for each figure; `seed` feeds every random draw.
ExperimentConfig default_config(const std::string& experiment, std::uint64_t seed);

// Connected graph for the config (file or resampled Erdos-Renyi draw).
ConnectedDraw build_graph(const ExperimentConfig& c);

ProblemInstance build_problem(const ExperimentConfig& c, double omega, double alpha);

// X0 for the config: zero, or seeded Gaussian with std x0_scale.
Matrix initial_point(const ExperimentConfig& c, int agents, int dim);

struct Fig1Row {
  int K;
  double omega;
  double kappa;
  std::string variant;  // power | chebyshev
  std::optional<long> iterations;  // empty when censored
  int predicted_marker;
  double delta;  // rate bound of the cell
};

struct Fig1Summary {
  double omega;
  double kappa;
  int predicted_marker;
  std::optional<int> onset_power;      // first K within the plateau band
  std::optional<int> onset_chebyshev;
};

struct Fig1Result {
  std::vector<Fig1Row> rows;
  std::vector<Fig1Summary> summary;
  nlohmann::json manifest;
};

// Plateau band: counts within 1% of the sweep minimum.
inline constexpr double kPlateauBand = 0.01;

// Smallest K whose count is within the band of the minimum; empty if any cell is censored
// or the band is first entered at the last K (no plateau observed).
std::optional<int> plateau_onset(const std::vector<int>& ks, const std::vector<std::optional<long>>& iters,
                                 double band = kPlateauBand);

Fig1Result run_fig1(const ExperimentConfig& c);

struct Fig2Trace {
  std::string algorithm;
  double gamma;
  double delta;
  RunTrace trace;
};

struct Fig2Result {
  std::vector<Fig2Trace> traces;
  nlohmann::json manifest;
};

Fig2Result run_fig2(const ExperimentConfig& c);

// First grad-evaluation count with err_opt <= tol, empty if never reached.
std::optional<long> evals_to(const RunTrace& t, double tol);

struct Fig3Row {
  int K;
  double alpha;
  double L;
  double gamma;
  std::string binding;  // which term of the stepsize rule is active
  std::optional<long> iterations;
  double bound_constant;  // k M(X-hat^k) <= bound_constant along the run
  double max_kM;          // sup over the run of k M(X-hat^k)
  bool assumptions_ok;
};

struct Fig3Summary {
  double alpha;
  std::optional<int> turning_point;  // first K of the minimum count
  bool non_increasing_before;       // counts non-increasing for K up to the turning point
};

struct Fig3Result {
  std::vector<Fig3Row> rows;
  std::vector<Fig3Summary> summary;
  nlohmann::json manifest;
};

Fig3Result run_fig3(const ExperimentConfig& c);

struct CustomResult {
  RunTrace trace;
  ValidationReport report;
  nlohmann::json manifest;
};

// Everything a custom run needs, before any iteration.
struct CustomSetup {
  ConnectedDraw draw;
  GossipMatrix w;
  ProblemInstance problem;
  OracleSolution oracle;
  Matrix x0;
  AssumptionSet mode;
  AbcMatrices mats;
  double gamma;
  ValidationReport report;
};

CustomSetup prepare_custom(const ExperimentConfig& c);

// Validation failures throw ValidationError before any iteration runs.
CustomResult run_custom(const ExperimentConfig& c);

// Matrices for a custom run (first preset, or "atc" over the mixing matrix).
AbcMatrices custom_matrices(const ExperimentConfig& c, const GossipMatrix& w, double gamma_hint);

void write_fig1_csv(std::ostream& os, const Fig1Result& r);
void write_fig2_csv(std::ostream& os, const Fig2Result& r);
void write_fig3_csv(std::ostream& os, const Fig3Result& r);

// Runs the configured experiment and writes <name>.csv and manifest.json under output_dir.
// Returns the paths written.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c);

// Runs cells 0..n-1 on up to `threads` workers; results land at their own index.
template <class Fn>
void for_each_cell(int n, int threads, Fn&& fn);

}  // namespace abc

#include "abc/detail/cells.hpp"
