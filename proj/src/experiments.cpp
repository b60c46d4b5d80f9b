#include "abc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "abc/error.hpp"
#include "abc/oracle.hpp"
#include "abc/rng.hpp"

namespace abc {

using nlohmann::json;

namespace {

const std::set<std::string> kExperiments{"fig1", "fig2", "fig3", "custom"};

struct Seeds {
  std::uint64_t graph, problem, x0;
};

// Independent streams for the three random ingredients of a run.
Seeds derive_seeds(std::uint64_t seed) {
  SplitMix64 root(seed);
  Seeds s;
  s.graph = root.next();
  s.problem = root.next();
  s.x0 = root.next();
  return s;
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InvalidArgument(std::string("unknown ") + what + " key '" + k + "'");
}

GossipMatrix mixing_matrix(const std::string& kind, const Graph& g) {
  GossipMatrix w = metropolis_weights(g);
  if (kind == "metropolis") return w;
  if (kind == "lazy_metropolis") return lazy(w);
  throw InvalidArgument("unknown mixing '" + kind + "'");
}

OracleSolution solve_oracle(const ExperimentConfig& c, const ProblemInstance& p) {
  if (c.oracle_cache.empty()) return solve_centralized(p);
  OracleCache cache(c.oracle_cache);
  return cache.solve(p);
}

json graph_json(const ConnectedDraw& d, const GossipMatrix& w) {
  auto s = spectral_summary(w);
  return {{"agents", d.graph.size()},
          {"edges", d.graph.edge_count()},
          {"seed_used", d.seed_used},
          {"retries", d.retries},
          {"lambda_second_largest", s.lambda_second_largest()},
          {"lambda_min", s.eigenvalues(0)},
          {"rho_com", s.rho_com}};
}

json seeds_json(const ExperimentConfig& c) {
  auto s = derive_seeds(c.seed);
  return {{"seed", c.seed}, {"graph_seed", s.graph}, {"problem_seed", s.problem}, {"x0_seed", s.x0}};
}

double count_or_inf(const std::optional<long>& v) {
  return v ? static_cast<double>(*v) : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<int> ExperimentConfig::k_list() const {
  if (!k_values.empty()) return k_values;
  std::vector<int> out;
  for (int k = k_min; k <= k_max; ++k) out.push_back(k);
  return out;
}

void to_json(json& j, const GraphSpec& g) {
  j = json{{"agents", g.agents}, {"p", g.p}, {"max_retries", g.max_retries}, {"file", g.file}};
}

void from_json(const json& j, GraphSpec& g) {
  check_keys(j, {"agents", "p", "max_retries", "file"}, "graph");
  take(j, "agents", g.agents);
  take(j, "p", g.p);
  take(j, "max_retries", g.max_retries);
  take(j, "file", g.file);
  if (g.agents < 1) throw InvalidArgument("graph.agents must be >= 1");
  if (!(g.p >= 0.0 && g.p <= 1.0)) throw InvalidArgument("graph.p must lie in [0, 1]");
  if (g.max_retries < 0) throw InvalidArgument("graph.max_retries must be >= 0");
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"experiment", c.experiment},
           {"seed", c.seed},
           {"graph", c.graph},
           {"presets", c.presets},
           {"mixing", c.mixing},
           {"gamma_policy", c.gamma_policy},
           {"gamma", c.gamma ? json(*c.gamma) : json(nullptr)},
           {"k_min", c.k_min},
           {"k_max", c.k_max},
           {"k_values", c.k_values},
           {"target", c.target},
           {"max_iters", c.max_iters},
           {"output_dir", c.output_dir},
           {"threads", c.threads},
           {"problem", c.problem},
           {"omegas", c.omegas},
           {"omega", c.omega},
           {"rows_per_agent", c.rows_per_agent},
           {"dim", c.dim},
           {"ridge", c.ridge},
           {"l1", c.l1},
           {"alphas", c.alphas},
           {"alpha", c.alpha},
           {"data_path", c.data_path},
           {"x0_scale", c.x0_scale},
           {"variant", c.variant},
           {"assumptions", c.assumptions},
           {"oracle_cache", c.oracle_cache}};
}

void from_json(const json& j, ExperimentConfig& c) {
  check_keys(j,
             {"experiment", "seed", "graph", "presets", "mixing", "gamma_policy", "gamma", "k_min", "k_max",
              "k_values", "target", "max_iters", "output_dir", "threads", "problem", "omegas", "omega",
              "rows_per_agent", "dim", "ridge", "l1", "alphas", "alpha", "data_path", "x0_scale", "variant",
              "assumptions", "oracle_cache"},
             "config");
  try {
    take(j, "experiment", c.experiment);
    take(j, "seed", c.seed);
    take(j, "graph", c.graph);
    take(j, "presets", c.presets);
    take(j, "mixing", c.mixing);
    take(j, "gamma_policy", c.gamma_policy);
    if (j.contains("gamma")) {
      if (j.at("gamma").is_null()) c.gamma.reset();
      else c.gamma = j.at("gamma").get<double>();
    }
    take(j, "k_min", c.k_min);
    take(j, "k_max", c.k_max);
    take(j, "k_values", c.k_values);
    take(j, "target", c.target);
    take(j, "max_iters", c.max_iters);
    take(j, "output_dir", c.output_dir);
    take(j, "threads", c.threads);
    take(j, "problem", c.problem);
    take(j, "omegas", c.omegas);
    take(j, "omega", c.omega);
    take(j, "rows_per_agent", c.rows_per_agent);
    take(j, "dim", c.dim);
    take(j, "ridge", c.ridge);
    take(j, "l1", c.l1);
    take(j, "alphas", c.alphas);
    take(j, "alpha", c.alpha);
    take(j, "data_path", c.data_path);
    take(j, "x0_scale", c.x0_scale);
    take(j, "variant", c.variant);
    take(j, "assumptions", c.assumptions);
    take(j, "oracle_cache", c.oracle_cache);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }

  if (!kExperiments.count(c.experiment)) throw InvalidArgument("unknown experiment '" + c.experiment + "'");
  if (c.mixing != "metropolis" && c.mixing != "lazy_metropolis")
    throw InvalidArgument("mixing must be metropolis or lazy_metropolis");
  if (c.gamma_policy != "optimal" && c.gamma_policy != "explicit")
    throw InvalidArgument("gamma_policy must be optimal or explicit");
  if (c.gamma_policy == "explicit" && !(c.gamma && *c.gamma > 0.0))
    throw InvalidArgument("explicit gamma_policy needs gamma > 0");
  if (c.k_min < 1 || c.k_max < c.k_min) throw InvalidArgument("need 1 <= k_min <= k_max");
  for (int k : c.k_values)
    if (k < 1) throw InvalidArgument("k_values must be >= 1");
  if (!(c.target > 0.0)) throw InvalidArgument("target must be positive");
  if (c.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (c.threads < 1) throw InvalidArgument("threads must be >= 1");
  if (c.problem != "elastic_net" && c.problem != "logistic")
    throw InvalidArgument("problem must be elastic_net or logistic");
  for (double w : c.omegas)
    if (!(w >= 0.0 && w < 1.0)) throw InvalidArgument("omegas must lie in [0, 1)");
  if (!(c.omega >= 0.0 && c.omega < 1.0)) throw InvalidArgument("omega must lie in [0, 1)");
  for (double a : c.alphas)
    if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("alphas must lie in (0, 1]");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
  if (c.rows_per_agent < 1 || c.dim < 1) throw InvalidArgument("rows_per_agent and dim must be >= 1");
  if (!(c.ridge >= 0.0) || !(c.l1 >= 0.0)) throw InvalidArgument("ridge and l1 must be >= 0");
  if (!(c.x0_scale >= 0.0)) throw InvalidArgument("x0_scale must be >= 0");
  parse_variant(c.variant);
  if (!c.assumptions.empty()) parse_assumption_set(c.assumptions);
  for (const auto& p : c.presets)
    if (p != "atc") parse_preset(p);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return j.get<ExperimentConfig>();
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << json(c).dump(2) << '\n';
}

ExperimentConfig default_config(const std::string& experiment, std::uint64_t seed) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.seed = seed;
  c.output_dir = "out/" + experiment;
  if (experiment == "fig1") {
    c.graph = {50, 0.05, 10000, ""};
    c.k_min = 1;
    c.k_max = 48;
    c.target = 1e-8;
    c.max_iters = 20000;
    c.omegas = {0.5, 0.7, 0.8, 0.9};
  } else if (experiment == "fig2") {
    c.graph = {50, 0.25, 10000, ""};
    c.mixing = "metropolis";
    c.presets = {"extra", "diging_harnessing", "next_augdgm", "nids_exact_diffusion", "alghunaim"};
    c.omega = 0.8;
    c.target = 1e-10;
    c.max_iters = 20000;
  } else if (experiment == "fig3") {
    c.graph = {50, 0.05, 10000, ""};
    c.problem = "logistic";
    c.alphas = {1.0, 0.5, 0.25};
    c.k_values = {1, 2, 3, 4, 6, 8};
    c.target = 1e-4;
    c.max_iters = 300000;
    c.x0_scale = 1.0;
    c.data_path = "data/ionosphere.data";
  } else if (experiment == "custom") {
    c.graph = {10, 0.5, 10000, ""};
    c.presets = {"nids_exact_diffusion"};
    c.omega = 0.5;
    c.max_iters = 5000;
  } else {
    throw InvalidArgument("unknown experiment '" + experiment + "'");
  }
  return c;
}

ConnectedDraw build_graph(const ExperimentConfig& c) {
  if (!c.graph.file.empty()) {
    std::ifstream in(c.graph.file);
    if (!in) throw InvalidArgument("cannot open graph file " + c.graph.file);
    Graph g = read_edge_list(in);
    if (!is_connected(g)) throw InvalidArgument("graph file " + c.graph.file + " is not connected");
    return {g, 0, 0};
  }
  return connected_erdos_renyi(c.graph.agents, c.graph.p, derive_seeds(c.seed).graph, c.graph.max_retries);
}

ProblemInstance build_problem(const ExperimentConfig& c, double omega, double alpha) {
  const int m = c.graph.file.empty() ? c.graph.agents : build_graph(c).graph.size();
  if (c.problem == "elastic_net") {
    ElasticNetParams ep;
    ep.seed = derive_seeds(c.seed).problem;
    ep.omega = omega;
    ep.agents = m;
    ep.rows_per_agent = c.rows_per_agent;
    ep.dim = c.dim;
    ep.ridge = c.ridge;
    ep.l1 = c.l1;
    return elastic_net_instance(ep);
  }
  if (c.data_path.empty()) throw InvalidArgument("logistic problems need data_path");
  LabeledData data = load_ionosphere(c.data_path);
  const int per_agent = static_cast<int>(data.labels.size()) / m;
  if (per_agent < 1) throw InvalidArgument("not enough samples for the number of agents");
  return logistic_instance(data, alpha, m, per_agent);
}

Matrix initial_point(const ExperimentConfig& c, int agents, int dim) {
  Matrix x0 = Matrix::Zero(agents, dim);
  if (c.x0_scale == 0.0) return x0;
  SplitMix64 rng(derive_seeds(c.seed).x0);
  for (int i = 0; i < agents; ++i)
    for (int j = 0; j < dim; ++j) x0(i, j) = c.x0_scale * rng.normal();
  return x0;
}

std::optional<int> plateau_onset(const std::vector<int>& ks, const std::vector<std::optional<long>>& iters,
                                 double band) {
  if (ks.empty() || ks.size() != iters.size()) throw InvalidArgument("plateau_onset needs matching non-empty lists");
  long best = std::numeric_limits<long>::max();
  for (const auto& v : iters) {
    if (!v) return std::nullopt;
    best = std::min(best, *v);
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (static_cast<double>(*iters[i]) <= (1.0 + band) * static_cast<double>(best)) {
      if (i + 1 == ks.size()) return std::nullopt;
      return ks[i];
    }
  }
  return std::nullopt;
}

Fig1Result run_fig1(const ExperimentConfig& c) {
  if (c.omegas.empty()) throw InvalidArgument("fig1 needs a list of omegas");
  if (c.problem != "elastic_net") throw InvalidArgument("fig1 runs on the elastic-net problem");
  const ConnectedDraw draw = build_graph(c);
  const GossipMatrix w = metropolis_weights(draw.graph);
  const GossipMatrix power_base = mixing_matrix(c.mixing, draw.graph);
  const auto spec = spectral_summary(w);
  const int m = draw.graph.size();

  // The Chebyshev branch filters the Metropolis matrix itself and falls back to
  // its lazy form only when the filter cannot be built (singular W).
  std::string cheb_base = "metropolis";
  GossipMatrix cheb_w = w;
  try {
    chebyshev_matrix(w, 1);
  } catch (const InvalidArgument&) {
    cheb_base = "lazy_metropolis";
    cheb_w = lazy(w);
  }

  std::vector<ProblemInstance> problems;
  std::vector<OracleSolution> oracles;
  for (double omega : c.omegas) {
    problems.push_back(build_problem(c, omega, 1.0));
    oracles.push_back(solve_oracle(c, problems.back()));
  }

  const std::vector<int> ks = c.k_list();
  const int nk = static_cast<int>(ks.size());
  const int cells = static_cast<int>(c.omegas.size()) * nk * 2;
  std::vector<Fig1Row> rows(cells);

  for_each_cell(cells, c.threads, [&](int idx) {
    const int oi = idx / (2 * nk);
    const int ki = (idx / 2) % nk;
    const int v = idx % 2;
    const ProblemInstance& p = problems[oi];
    const double L = p.smoothness(), mu = p.strong_convexity();
    const int K = ks[ki];
    AbcMatrices mats;
    if (v == 0) {
      mats = atc_from_mixing(matrix_power(power_base, K), "power");
    } else {
      const Matrix pk = chebyshev_matrix(cheb_w, K).weights();
      mats = atc_from_mixing(GossipMatrix(0.5 * (Matrix::Identity(m, m) + pk), K * cheb_w.hops()), "chebyshev");
    }
    const double gamma = c.gamma_policy == "explicit" ? *c.gamma : gamma_star(1.0, L, mu);
    RunConfig rc;
    rc.mats = &mats;
    rc.problem = &p;
    rc.gamma = gamma;
    rc.oracle = &oracles[oi];
    rc.stop = {c.max_iters, c.target, StopMetric::err_opt};
    rc.record_merit = false;
    rc.record_objective = false;
    rc.record_every = c.max_iters;
    RunTrace t = run(rc);
    Fig1Row row;
    row.K = K;
    row.omega = c.omegas[oi];
    row.kappa = p.condition_number();
    row.variant = v == 0 ? "power" : "chebyshev";
    if (t.status == RunStatus::converged) row.iterations = *t.hit_iter;
    row.predicted_marker = predicted_marker(row.kappa, spec.lambda_second_largest());
    row.delta = delta_linear(mats, gamma, L, mu, LinearMode::G).delta;
    rows[idx] = row;
  });

  Fig1Result res;
  res.rows = rows;
  json per_kappa = json::array();
  for (std::size_t oi = 0; oi < c.omegas.size(); ++oi) {
    std::vector<std::optional<long>> pw, ch;
    for (int ki = 0; ki < nk; ++ki) {
      pw.push_back(rows[(oi * nk + ki) * 2].iterations);
      ch.push_back(rows[(oi * nk + ki) * 2 + 1].iterations);
    }
    Fig1Summary s{c.omegas[oi], problems[oi].condition_number(), rows[oi * nk * 2].predicted_marker,
                  plateau_onset(ks, pw), plateau_onset(ks, ch)};
    res.summary.push_back(s);
    auto cc = condition_comparison(problems[oi]);
    per_kappa.push_back({{"omega", s.omega},
                         {"kappa", s.kappa},
                         {"kappa_global", cc.kappa_global},
                         {"L", problems[oi].smoothness()},
                         {"mu", problems[oi].strong_convexity()},
                         {"predicted_marker", s.predicted_marker},
                         {"onset_power", s.onset_power ? json(*s.onset_power) : json(nullptr)},
                         {"onset_chebyshev", s.onset_chebyshev ? json(*s.onset_chebyshev) : json(nullptr)},
                         {"oracle_residual", oracles[oi].residual}});
  }
  res.manifest = {{"experiment", "fig1"},
                  {"config", c},
                  {"seeds", seeds_json(c)},
                  {"graph", graph_json(draw, w)},
                  {"chebyshev_base", cheb_base},
                  {"power_base", c.mixing},
                  {"plateau_band", kPlateauBand},
                  {"kappas", per_kappa}};
  return res;
}

std::optional<long> evals_to(const RunTrace& t, double tol) {
  for (const auto& r : t.records)
    if (r.err_opt <= tol) return r.grad_evals;
  return std::nullopt;
}

Fig2Result run_fig2(const ExperimentConfig& c) {
  if (c.presets.empty()) throw InvalidArgument("fig2 needs a preset list");
  if (c.problem != "elastic_net") throw InvalidArgument("fig2 runs on the elastic-net problem");
  const ConnectedDraw draw = build_graph(c);
  const GossipMatrix w = mixing_matrix(c.mixing, draw.graph);
  const ProblemInstance p = build_problem(c, c.omega, 1.0);
  const OracleSolution orc = solve_oracle(c, p);
  const double L = p.smoothness(), mu = p.strong_convexity();

  const int n = static_cast<int>(c.presets.size());
  std::vector<Fig2Trace> traces(n);
  std::vector<json> notes(n);
  for_each_cell(n, c.threads, [&](int i) {
    const std::string& name = c.presets[i];
    AbcMatrices mats;
    std::string base = c.mixing;
    if (name == "atc") {
      mats = atc_from_mixing(w, "atc");
    } else {
      const Preset pr = parse_preset(name);
      PresetOptions opt;
      if (c.gamma) opt.gamma = *c.gamma;
      try {
        mats = make_preset(pr, w, opt);
      } catch (const InvalidArgument&) {
        // Presets that need a positive definite W get its lazy form.
        mats = make_preset(pr, lazy(w), opt);
        base = "lazy(" + c.mixing + ")";
      }
    }
    double gamma = 0.0;
    if (c.gamma_policy == "explicit") {
      gamma = *c.gamma;
    } else {
      if (!mats.D) throw InvalidArgument("preset " + name + " has no declared D for the optimal stepsize");
      gamma = gamma_star(std::min(1.0, lambda_min(symmetrize(*mats.D))), L, mu);
    }
    auto rate = delta_linear(mats, gamma, L, mu, LinearMode::G);
    RunConfig rc;
    rc.mats = &mats;
    rc.problem = &p;
    rc.gamma = gamma;
    rc.oracle = &orc;
    rc.stop = {c.max_iters, c.target, StopMetric::err_opt};
    rc.record_merit = false;
    rc.record_objective = false;
    traces[i] = {name, gamma, rate.delta, run(rc)};
    notes[i] = {{"algorithm", name},
                {"gamma", gamma},
                {"delta", rate.delta},
                {"sqrt_delta", std::sqrt(rate.delta)},
                {"feasible", rate.feasible},
                {"mixing", base},
                {"hops_per_iter", mats.hops_per_iter},
                {"status", traces[i].trace.status == RunStatus::converged ? "converged" : "censored"}};
  });

  Fig2Result res;
  res.traces = std::move(traces);
  res.manifest = {{"experiment", "fig2"},
                  {"config", c},
                  {"seeds", seeds_json(c)},
                  {"graph", graph_json(draw, w)},
                  {"kappa", p.condition_number()},
                  {"L", L},
                  {"mu", mu},
                  {"oracle_residual", orc.residual},
                  {"algorithms", notes}};
  return res;
}

Fig3Result run_fig3(const ExperimentConfig& c) {
  if (c.alphas.empty()) throw InvalidArgument("fig3 needs a list of alphas");
  if (c.problem != "logistic") throw InvalidArgument("fig3 runs on the logistic problem");
  const ConnectedDraw draw = build_graph(c);
  const GossipMatrix w = mixing_matrix(c.mixing, draw.graph);

  std::vector<ProblemInstance> problems;
  std::vector<OracleSolution> oracles;
  for (double a : c.alphas) {
    problems.push_back(build_problem(c, 0.0, a));
    oracles.push_back(solve_oracle(c, problems.back()));
  }
  const Matrix x0 = initial_point(c, problems[0].agents(), problems[0].dim());

  const std::vector<int> ks = c.k_list();
  const int nk = static_cast<int>(ks.size());
  const int cells = static_cast<int>(c.alphas.size()) * nk;
  std::vector<Fig3Row> rows(cells);

  for_each_cell(cells, c.threads, [&](int idx) {
    const int ai = idx / nk;
    const int K = ks[idx % nk];
    const ProblemInstance& p = problems[ai];
    AbcMatrices mats = atc_from_mixing(matrix_power(w, K), "atc");
    auto sc = sublinear_constants(mats, p, x0, oracles[ai].x_star);
    const double gamma = c.gamma_policy == "explicit" ? *c.gamma : sublinear_stepsize(sc, SublinearMode::G0);
    const double opt_cap = sc.lambda_min_D / sc.L;
    RunConfig rc;
    rc.mats = &mats;
    rc.problem = &p;
    rc.gamma = gamma;
    rc.oracle = &oracles[ai];
    rc.z0 = x0;
    rc.stop = {c.max_iters, c.target, StopMetric::merit};
    rc.record_objective = false;
    RunTrace t = run(rc);
    Fig3Row row;
    row.K = K;
    row.alpha = c.alphas[ai];
    row.L = p.smoothness();
    row.gamma = gamma;
    row.binding = gamma >= opt_cap ? "optimization" : "network";
    if (t.status == RunStatus::converged) row.iterations = *t.hit_iter;
    row.bound_constant = sublinear_bound(sc, gamma, 1, SublinearMode::G0);
    row.max_kM = 0.0;
    for (const auto& r : t.records)
      if (r.k >= 1 && !std::isnan(r.merit)) row.max_kM = std::max(row.max_kM, static_cast<double>(r.k) * r.merit);
    row.assumptions_ok = validate(mats, gamma, p.smoothness(), 0.0, AssumptionSet::sublinear_G0).ok();
    rows[idx] = row;
  });

  Fig3Result res;
  res.rows = rows;
  json per_alpha = json::array();
  for (std::size_t ai = 0; ai < c.alphas.size(); ++ai) {
    Fig3Summary s{c.alphas[ai], std::nullopt, true};
    double best = std::numeric_limits<double>::infinity();
    int best_i = -1;
    for (int ki = 0; ki < nk; ++ki) {
      const double v = count_or_inf(rows[ai * nk + ki].iterations);
      if (v < best) {
        best = v;
        best_i = ki;
      }
    }
    if (best_i >= 0) {
      s.turning_point = ks[best_i];
      for (int ki = 1; ki <= best_i; ++ki)
        if (count_or_inf(rows[ai * nk + ki].iterations) > count_or_inf(rows[ai * nk + ki - 1].iterations))
          s.non_increasing_before = false;
    }
    res.summary.push_back(s);
    per_alpha.push_back({{"alpha", s.alpha},
                         {"L", problems[ai].smoothness()},
                         {"turning_point", s.turning_point ? json(*s.turning_point) : json(nullptr)},
                         {"non_increasing_before", s.non_increasing_before},
                         {"oracle_residual", oracles[ai].residual},
                         {"grad_norm_at_optimum", sublinear_constants(atc_from_mixing(w, "atc"), problems[ai], x0,
                                                                      oracles[ai].x_star)
                                                      .grad_norm}});
  }
  res.manifest = {{"experiment", "fig3"},
                  {"config", c},
                  {"seeds", seeds_json(c)},
                  {"graph", graph_json(draw, w)},
                  {"mixing", c.mixing},
                  {"x0_norm", x0.norm()},
                  {"alphas", per_alpha}};
  return res;
}

AbcMatrices custom_matrices(const ExperimentConfig& c, const GossipMatrix& w, double gamma_hint) {
  if (c.presets.empty()) throw InvalidArgument("custom runs need one preset");
  const std::string& name = c.presets.front();
  if (name == "atc") return atc_from_mixing(matrix_power(w, c.k_min), "atc");
  PresetOptions opt;
  opt.K = c.k_min;
  opt.alpha = c.alpha;
  opt.gamma = gamma_hint;
  return make_preset(parse_preset(name), w, opt);
}

CustomSetup prepare_custom(const ExperimentConfig& c) {
  ConnectedDraw draw = build_graph(c);
  GossipMatrix w = mixing_matrix(c.mixing, draw.graph);
  ProblemInstance p = build_problem(c, c.omega, c.alpha);
  OracleSolution orc = solve_oracle(c, p);
  const double L = p.smoothness(), mu = p.strong_convexity();
  const Variant variant = parse_variant(c.variant);
  Matrix x0 = initial_point(c, p.agents(), p.dim());
  const bool smooth_only = p.regularizer().kind() == Regularizer::Kind::zero;

  AssumptionSet mode;
  if (!c.assumptions.empty()) mode = parse_assumption_set(c.assumptions);
  else if (mu > 0.0) mode = smooth_only ? AssumptionSet::linear_G0 : AssumptionSet::linear_G;
  else mode = variant == Variant::sublinear_prox ? AssumptionSet::sublinear_prox : AssumptionSet::sublinear_G0;

  const bool needs_gamma = !c.presets.empty() && c.presets.front().rfind("jakovetic", 0) == 0;
  if (needs_gamma && c.gamma_policy != "explicit")
    throw InvalidArgument("jakovetic presets need an explicit gamma");
  AbcMatrices mats = custom_matrices(c, w, c.gamma.value_or(0.0));

  double gamma = 0.0;
  if (c.gamma_policy == "explicit") {
    gamma = *c.gamma;
  } else {
    if (!mats.D) throw InvalidArgument("optimal stepsize needs a declared D");
    if (mu > 0.0) {
      gamma = gamma_star(std::min(1.0, lambda_min(symmetrize(*mats.D))), L, mu);
    } else {
      gamma = sublinear_stepsize(mats, p, x0, orc.x_star,
                                 mode == AssumptionSet::sublinear_prox ? SublinearMode::prox : SublinearMode::G0);
    }
  }
  ValidationReport report = validate(mats, gamma, L, mu, mode);
  return CustomSetup{std::move(draw), std::move(w),    std::move(p),     std::move(orc), std::move(x0),
                     mode,            std::move(mats), gamma,            std::move(report)};
}

CustomResult run_custom(const ExperimentConfig& c) {
  CustomSetup su = prepare_custom(c);
  const ProblemInstance& p = su.problem;
  const AbcMatrices& mats = su.mats;
  const double gamma = su.gamma;
  const double L = p.smoothness(), mu = p.strong_convexity();
  const bool smooth_only = p.regularizer().kind() == Regularizer::Kind::zero;
  const Variant variant = parse_variant(c.variant);
  const AssumptionSet mode = su.mode;
  const ConnectedDraw& draw = su.draw;
  const GossipMatrix& w = su.w;
  const OracleSolution& orc = su.oracle;
  const Matrix& x0 = su.x0;

  CustomResult res;
  res.report = su.report;
  if (!res.report.ok()) {
    std::string msg = "assumption set " + assumption_set_name(mode) + " fails:";
    for (const auto& f : res.report.failures()) msg += " " + f;
    throw ValidationError(msg);
  }

  RunConfig rc;
  rc.mats = &mats;
  rc.problem = &p;
  rc.gamma = gamma;
  rc.variant = variant;
  rc.oracle = &orc;
  if (c.x0_scale > 0.0) rc.z0 = x0;
  rc.stop = {c.max_iters, c.target, mu > 0.0 ? StopMetric::err_opt : StopMetric::merit};
  res.trace = run(rc);

  json rate = nullptr;
  if (mu > 0.0) {
    auto r = delta_linear(mats, gamma, L, mu, smooth_only ? LinearMode::G0 : LinearMode::G);
    rate = {{"delta", r.delta},
            {"q_sq", r.q_sq},
            {"lambda_term", r.lambda_term},
            {"consensus_term", r.consensus_term},
            {"binding", r.binding == Binding::network ? "network" : "optimization"}};
  }
  res.manifest = {{"experiment", "custom"},
                  {"config", c},
                  {"seeds", seeds_json(c)},
                  {"graph", graph_json(draw, w)},
                  {"matrices", mats.name},
                  {"assumptions", assumption_set_name(mode)},
                  {"gamma", gamma},
                  {"L", L},
                  {"mu", mu},
                  {"kappa", mu > 0.0 ? json(L / mu) : json(nullptr)},
                  {"rate", rate},
                  {"status", res.trace.status == RunStatus::converged ? "converged"
                             : res.trace.status == RunStatus::diverged ? "diverged"
                                                                        : "censored"},
                  {"iterations", res.trace.iterations},
                  {"oracle_residual", orc.residual}};
  return res;
}

void write_fig1_csv(std::ostream& os, const Fig1Result& r) {
  os << "K,omega,kappa,variant,iterations,censored,predicted_marker,delta\n" << std::setprecision(17);
  for (const auto& row : r.rows) {
    os << row.K << ',' << row.omega << ',' << row.kappa << ',' << row.variant << ',';
    if (row.iterations) os << *row.iterations;
    os << ',' << (row.iterations ? 0 : 1) << ',' << row.predicted_marker << ',' << row.delta << '\n';
  }
}

void write_fig2_csv(std::ostream& os, const Fig2Result& r) {
  os << "algorithm,k,grad_evals,comm_rounds,err_opt\n" << std::setprecision(17);
  for (const auto& t : r.traces)
    for (const auto& rec : t.trace.records)
      os << t.algorithm << ',' << rec.k << ',' << rec.grad_evals << ',' << rec.comm_rounds << ',' << rec.err_opt
         << '\n';
}

void write_fig3_csv(std::ostream& os, const Fig3Result& r) {
  os << "K,alpha,L,gamma,binding,iterations,censored,bound_constant,max_kM,assumptions_ok\n"
     << std::setprecision(17);
  for (const auto& row : r.rows) {
    os << row.K << ',' << row.alpha << ',' << row.L << ',' << row.gamma << ',' << row.binding << ',';
    if (row.iterations) os << *row.iterations;
    os << ',' << (row.iterations ? 0 : 1) << ',' << row.bound_constant << ',' << row.max_kM << ','
       << (row.assumptions_ok ? 1 : 0) << '\n';
  }
}

namespace {

std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  return path;
}

template <class Writer, class Result>
std::string render(Writer w, const Result& r) {
  std::ostringstream os;
  w(os, r);
  return os.str();
}

}  // namespace

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c) {
  const std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  json manifest;
  if (c.experiment == "fig1") {
    auto r = run_fig1(c);
    out.push_back(write_text(dir / "fig1.csv", render(write_fig1_csv, r)));
    manifest = r.manifest;
  } else if (c.experiment == "fig2") {
    auto r = run_fig2(c);
    out.push_back(write_text(dir / "fig2.csv", render(write_fig2_csv, r)));
    manifest = r.manifest;
  } else if (c.experiment == "fig3") {
    auto r = run_fig3(c);
    out.push_back(write_text(dir / "fig3.csv", render(write_fig3_csv, r)));
    manifest = r.manifest;
  } else {
    auto r = run_custom(c);
    std::ostringstream os;
    write_trace_csv(os, r.trace);
    out.push_back(write_text(dir / "trace.csv", os.str()));
    manifest = r.manifest;
    out.push_back(write_text(dir / "manifest.json", manifest.dump(2) + "\n"));
    if (r.trace.status == RunStatus::diverged)
      throw DivergenceError(r.trace.divergence_iter.value_or(r.trace.iterations), r.trace.message);
    return out;
  }
  out.push_back(write_text(dir / "manifest.json", manifest.dump(2) + "\n"));
  return out;
}

}  // namespace abc
