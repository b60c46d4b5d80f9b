// Command-line front end: run, rates, validate, experiment, data.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "abc/analysis.hpp"
#include "abc/error.hpp"
#include "abc/experiments.hpp"

using nlohmann::json;

namespace {

json clauses_json(const abc::ValidationReport& r) {
  json out = json::array();
  for (const auto& c : r.clauses)
    out.push_back({{"id", c.id}, {"passed", c.passed}, {"margin", c.margin}, {"description", c.description}});
  return out;
}

void print_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

int cmd_rates(const std::string& preset, const std::string& graph_file, double kappa,
              std::optional<double> gamma_opt, const std::string& mixing) {
  if (!(kappa >= 1.0)) throw abc::InvalidArgument("kappa must be >= 1");
  std::ifstream in(graph_file);
  if (!in) throw abc::InvalidArgument("cannot open graph file " + graph_file);
  abc::Graph g = abc::read_edge_list(in);
  abc::GossipMatrix w = abc::metropolis_weights(g);
  if (mixing == "lazy_metropolis") w = abc::lazy(w);
  else if (mixing != "metropolis") throw abc::InvalidArgument("mixing must be metropolis or lazy_metropolis");

  // Rates depend on (L, mu) only through kappa and gamma L; normalize mu = 1.
  const double L = kappa, mu = 1.0;
  abc::PresetOptions opt;
  if (gamma_opt) opt.gamma = *gamma_opt;
  abc::AbcMatrices mats = abc::make_preset(abc::parse_preset(preset), w, opt);
  if (!mats.D) throw abc::InvalidArgument("preset has no declared D");
  const double dmin = std::min(1.0, abc::lambda_min(abc::symmetrize(*mats.D)));
  const double gamma = gamma_opt ? *gamma_opt : abc::gamma_star(dmin, L, mu);
  auto g0 = abc::delta_linear(mats, gamma, L, mu, abc::LinearMode::G0);
  auto gg = abc::delta_linear(mats, gamma, L, mu, abc::LinearMode::G);
  auto spec = abc::spectral_summary(w);
  auto lazy_spec = abc::spectral_summary(abc::lazy(abc::metropolis_weights(g)));
  auto tr = abc::tradeoff(lazy_spec.rho_com, kappa);
  auto rate_json = [](const abc::RateReport& r) {
    return json{{"delta", r.delta},
                {"q_sq", r.q_sq},
                {"lambda_term", r.lambda_term},
                {"optimization_term", r.optimization_term},
                {"consensus_term", r.consensus_term},
                {"binding", r.binding == abc::Binding::network ? "network" : "optimization"},
                {"feasible", r.feasible},
                {"failed_clauses", r.failed_clauses}};
  };
  json out{{"preset", mats.name},
           {"kappa", kappa},
           {"L_over_mu_normalization", "mu = 1, L = kappa"},
           {"lambda_min_D", dmin},
           {"gamma", gamma},
           {"gamma_times_L", gamma * L},
           {"G0", rate_json(g0)},
           {"G", rate_json(gg)},
           {"mixing", mixing},
           {"rho_com", spec.rho_com},
           {"tradeoff",
            {{"rho_com_lazy", tr.rho_com},
             {"rho_opt", tr.rho_opt},
             {"K_plain", tr.K_plain},
             {"K_chebyshev", tr.K_chebyshev},
             {"rho_C", tr.rho_C},
             {"any_K", tr.any_K}}},
           {"predicted_marker", kappa > 1.0 ? json(abc::predicted_marker(kappa, spec.lambda_second_largest()))
                                            : json(nullptr)}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_validate(const std::string& config_path) {
  abc::ExperimentConfig c = abc::load_config(config_path);
  if (c.experiment != "custom") {
    std::cout << json{{"config", config_path}, {"experiment", c.experiment}, {"valid", true}}.dump(2) << '\n';
    return 0;
  }
  abc::CustomSetup su = abc::prepare_custom(c);
  json out{{"config", config_path},
           {"matrices", su.mats.name},
           {"assumptions", abc::assumption_set_name(su.mode)},
           {"gamma", su.gamma},
           {"ok", su.report.ok()},
           {"clauses", clauses_json(su.report)}};
  std::cout << out.dump(2) << '\n';
  return su.report.ok() ? 0 : 2;
}

int cmd_data(const std::string& kind, const std::string& path) {
  if (kind != "ionosphere") throw abc::InvalidArgument("unknown dataset '" + kind + "'");
  abc::LabeledData d = abc::load_ionosphere(path);
  long pos = 0;
  for (int i = 0; i < d.labels.size(); ++i)
    if (d.labels(i) > 0) ++pos;
  abc::ProblemInstance p = abc::logistic_instance(d, 1.0);
  json out{{"path", path},
           {"rows", d.features.rows()},
           {"features", d.features.cols()},
           {"positive", pos},
           {"negative", d.labels.size() - pos},
           {"logistic_L", p.smoothness()},
           {"fingerprint", p.fingerprint()}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ABC decentralized optimization toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::string preset, graph_file, mixing = "metropolis";
  double kappa = 0.0;
  std::optional<double> rate_gamma;
  auto* rates = app.add_subcommand("rates", "Rate bounds for a preset on a graph");
  rates->add_option("--preset", preset, "Preset name")->required();
  rates->add_option("--graph", graph_file, "Edge-list file")->required();
  rates->add_option("--kappa", kappa, "Condition number L/mu")->required();
  rates->add_option("--gamma", rate_gamma, "Stepsize in units of 1/mu (default: optimal)");
  rates->add_option("--mixing", mixing, "metropolis or lazy_metropolis");

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Check a config against its assumption set");
  validate->add_option("--config", validate_config, "JSON config")->required();

  std::string which, exp_out, data_override;
  std::uint64_t seed = 1;
  int threads = 1;
  auto* experiment = app.add_subcommand("experiment", "Reproduce one figure");
  experiment->add_option("name", which, "fig1, fig2 or fig3")->required()->check(CLI::IsMember({"fig1", "fig2", "fig3"}));
  experiment->add_option("--seed", seed, "Seed for every random draw");
  experiment->add_option("--out", exp_out, "Output directory")->required();
  experiment->add_option("--data", data_override, "Ionosphere file (fig3)");
  experiment->add_option("--threads", threads, "Worker threads");

  std::string dataset, data_path;
  auto* data = app.add_subcommand("data", "Inspect a dataset");
  data->add_option("name", dataset, "Dataset name")->required();
  data->add_option("--path", data_path, "File path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      abc::ExperimentConfig c = abc::load_config(config_path);
      if (!out_dir.empty()) c.output_dir = out_dir;
      print_paths(abc::run_experiment(c));
      return 0;
    }
    if (*rates) return cmd_rates(preset, graph_file, kappa, rate_gamma, mixing);
    if (*validate) return cmd_validate(validate_config);
    if (*experiment) {
      abc::ExperimentConfig c = abc::default_config(which, seed);
      c.output_dir = exp_out;
      c.threads = threads;
      if (!data_override.empty()) c.data_path = data_override;
      print_paths(abc::run_experiment(c));
      return 0;
    }
    if (*data) return cmd_data(dataset, data_path);
  } catch (const abc::ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return 2;
  } catch (const abc::DivergenceError& e) {
    std::cerr << "diverged at iteration " << e.iteration() << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
