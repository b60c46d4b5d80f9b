#include "abc/algorithm.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "abc/analysis.hpp"
#include "abc/error.hpp"

namespace abc {

namespace {

constexpr double kBlowUp = 1e12;

Matrix identity(int m) { return Matrix::Identity(m, m); }

void check_finite(const Matrix& a, long k, const char* what) {
  if (!a.allFinite()) throw DivergenceError(k, std::string("non-finite entries in ") + what + " at iteration " + std::to_string(k));
}

// Spectrum of W, used for the preset preconditions.
Vector spectrum(const GossipMatrix& w) { return symmetric_eigen(w.weights()).values; }

}  // namespace

Preset parse_preset(std::string_view name) {
  for (Preset p : all_presets())
    if (preset_name(p) == name) return p;
  throw InvalidArgument("unknown preset: " + std::string(name));
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::extra: return "extra";
    case Preset::nids_exact_diffusion: return "nids_exact_diffusion";
    case Preset::next_augdgm: return "next_augdgm";
    case Preset::diging_harnessing: return "diging_harnessing";
    case Preset::jakovetic_b0: return "jakovetic_b0";
    case Preset::jakovetic_bW: return "jakovetic_bW";
    case Preset::mansoori: return "mansoori";
    case Preset::alghunaim: return "alghunaim";
  }
  return "?";
}

std::vector<Preset> all_presets() {
  return {Preset::extra,        Preset::nids_exact_diffusion, Preset::next_augdgm, Preset::diging_harnessing,
          Preset::jakovetic_b0, Preset::jakovetic_bW,         Preset::mansoori,    Preset::alghunaim};
}

AbcMatrices make_preset(Preset p, const GossipMatrix& gw, const PresetOptions& opt) {
  const int m = gw.size();
  const int h = gw.hops();
  const Matrix id = identity(m);
  const Matrix& w = gw.weights();
  const Matrix wl = 0.5 * (id + w);   // lazy W
  const Matrix wc = 0.5 * (id - w);
  AbcMatrices out;
  out.name = preset_name(p);
  switch (p) {
    case Preset::extra:
      out.A = wl;
      out.B = id;
      out.C = wc;
      out.D = out.A;
      out.hops_per_iter = h;
      break;
    case Preset::nids_exact_diffusion:
      out.A = wl;
      out.B = wl;
      out.C = wc;
      out.D = id;
      out.hops_per_iter = h;
      break;
    case Preset::next_augdgm:
      out.A = symmetrize(wl * wl);
      out.B = out.A;
      out.C = symmetrize(wc * wc);
      out.D = id;
      out.hops_per_iter = 2 * h;
      break;
    case Preset::diging_harnessing:
      out.A = symmetrize(wl * wl);
      out.B = id;
      out.C = symmetrize(wc * wc);
      out.D = out.A;
      out.hops_per_iter = 2 * h;
      break;
    case Preset::jakovetic_b0:
    case Preset::jakovetic_bW: {
      if (!(opt.gamma > 0.0)) throw InvalidArgument("jakovetic presets need the stepsize gamma > 0");
      const double b = opt.b.value_or(1.0 / opt.gamma);
      if (!(b > 0.0)) throw InvalidArgument("jakovetic presets need b > 0");
      Matrix bprime = b * id;
      if (p == Preset::jakovetic_bW) {
        if (spectrum(gw)(0) <= 1e-12) throw InvalidArgument("jakovetic_bW requires W positive definite");
        bprime = b * w;
      }
      const Matrix iw = id - w;
      out.A = symmetrize(w * w + opt.gamma * iw * bprime);
      out.B = id;
      out.C = symmetrize(iw * iw + opt.gamma * iw * bprime);
      out.D = out.A;
      out.hops_per_iter = 2 * h;
      break;
    }
    case Preset::mansoori: {
      if (opt.K < 1) throw InvalidArgument("mansoori preset needs K >= 1");
      if (spectrum(gw)(0) <= 1e-12) throw InvalidArgument("mansoori preset requires W positive definite");
      Matrix wk = id, sum = Matrix::Zero(m, m);
      for (int i = 0; i < opt.K; ++i) {
        sum += wk;
        wk = symmetrize(wk * w);
      }
      // The gradient weight sum_{i<K} W^i is divided by K so that 1^T B = 1^T;
      // the native stepsize alpha corresponds to gamma = K alpha.
      out.A = wk;
      out.B = sum / opt.K;
      out.C = id - wk;
      out.D = symmetrize(out.B.ldlt().solve(out.A));
      out.hops_per_iter = opt.K * h;
      break;
    }
    case Preset::alghunaim: {
      if (!(opt.alpha > 0.0 && opt.alpha <= 1.0)) throw InvalidArgument("alghunaim preset needs 0 < alpha <= 1");
      Vector ev = spectrum(gw);
      if (ev(0) <= 1e-12 || ev(m - 1) > 1.0 + 1e-12) throw InvalidArgument("alghunaim preset requires 0 < W <= I");
      out.A = w;
      out.B = id;
      out.C = opt.alpha * (id - w);
      out.D = out.A;
      out.hops_per_iter = h;
      break;
    }
  }
  if (p == Preset::alghunaim && opt.alpha != 1.0) out.name += "(alpha=" + std::to_string(opt.alpha) + ")";
  if (p == Preset::mansoori) out.name += "(K=" + std::to_string(opt.K) + ")";
  return out;
}

AbcMatrices atc_from_mixing(const GossipMatrix& mixing, std::string name) {
  const int m = mixing.size();
  AbcMatrices out;
  out.name = std::move(name);
  out.A = mixing.weights();
  out.B = mixing.weights();
  out.C = identity(m) - mixing.weights();
  out.D = identity(m);
  out.hops_per_iter = mixing.hops();
  return out;
}

AssumptionSet parse_assumption_set(std::string_view name) {
  if (name == "linear_G0") return AssumptionSet::linear_G0;
  if (name == "linear_G") return AssumptionSet::linear_G;
  if (name == "sublinear_G0") return AssumptionSet::sublinear_G0;
  if (name == "sublinear_prox") return AssumptionSet::sublinear_prox;
  throw InvalidArgument("unknown assumption set: " + std::string(name));
}

std::string assumption_set_name(AssumptionSet a) {
  switch (a) {
    case AssumptionSet::linear_G0: return "linear_G0";
    case AssumptionSet::linear_G: return "linear_G";
    case AssumptionSet::sublinear_G0: return "sublinear_G0";
    case AssumptionSet::sublinear_prox: return "sublinear_prox";
  }
  return "?";
}

bool ValidationReport::ok() const {
  for (const auto& c : clauses)
    if (!c.passed) return false;
  return true;
}

const ClauseCheck* ValidationReport::find(std::string_view id) const {
  for (const auto& c : clauses)
    if (c.id == id) return &c;
  return nullptr;
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : clauses)
    if (!c.passed) out.push_back(c.id);
  return out;
}

ValidationReport validate(const AbcMatrices& mats, double gamma, double L, double mu, AssumptionSet mode) {
  ValidationReport rep{mode, {}};
  auto add = [&](std::string id, std::string desc, double margin, double slack = 0.0) {
    rep.clauses.push_back({std::move(id), std::move(desc), margin >= -slack, margin});
  };
  const int m = mats.size();
  const Matrix id = identity(m);
  const Vector ones = Vector::Ones(m);
  const bool shapes_ok = mats.A.rows() == m && mats.A.cols() == m && mats.B.rows() == m && mats.B.cols() == m &&
                         mats.C.rows() == m && mats.C.cols() == m &&
                         (!mats.D || (mats.D->rows() == m && mats.D->cols() == m));
  add("shapes", "A, B, C (and D) are m x m", shapes_ok ? 0.0 : -1.0);
  if (!shapes_ok) return rep;

  const Matrix& A = mats.A;
  const Matrix& B = mats.B;
  const Matrix& C = mats.C;

  // Exactness of fixed points.
  add("A3.sum_A", "1^T A 1 = m", 1e-10 - std::abs(ones.dot(A * ones) - m));
  add("A3.colsum_B", "1^T B = 1^T", 1e-10 - (B.transpose() * ones - ones).cwiseAbs().maxCoeff());

  // Consensus enforcing C.
  add("sym.B", "B symmetric", 1e-12 - (B - B.transpose()).cwiseAbs().maxCoeff());
  add("sym.C", "C symmetric", 1e-12 - (C - C.transpose()).cwiseAbs().maxCoeff());
  auto ec = symmetric_eigen(symmetrize(C)).values;
  add("A2.C_psd", "C positive semidefinite", ec(0), 1e-10);
  add("A2.null_C", "C 1 = 0 and lambda_2(C) > 1e-10",
      std::min(1e-10 - (C * ones).norm(), m >= 2 ? ec(1) - 1e-10 : 1.0));

  // Factorization and commutation.
  if (!mats.D) {
    add("A4.D_declared", "factor D with A = B D declared", -1.0);
    return rep;
  }
  const Matrix& D = *mats.D;
  add("sym.D", "D symmetric", 1e-12 - (D - D.transpose()).cwiseAbs().maxCoeff());
  add("A4.A_eq_BD", "A = B D", 1e-10 - (A - B * D).cwiseAbs().maxCoeff());
  add("A4.BC_commute", "B C = C B", 1e-10 - (B * C - C * B).cwiseAbs().maxCoeff());
  auto ed = symmetric_eigen(symmetrize(D)).values;
  const double dmin = ed(0);
  add("D_pd", "D positive definite", dmin - 1e-12);

  if (mode == AssumptionSet::linear_G0 || mode == AssumptionSet::linear_G) {
    add("A5.D_le_I", "D <= I", 1.0 - ed(m - 1), 1e-12);
    add("A5.sum_D", "1^T D 1 = m", 1e-10 - std::abs(ones.dot(D * ones) - m));
    add("A5.C_lt_I", "C < I", 1.0 - ec(m - 1) - 1e-12);
    add("strong_convexity", "mu > 0 and L >= mu", (mu > 0.0 && L >= mu) ? mu : -1.0);
    if (!(mu > 0.0 && L >= mu) || dmin <= 0.0) return rep;
    const double gs = gamma_star(dmin, L, mu);
    add("stepsize", "0 < gamma <= gamma*(D)", gamma > 0.0 ? gs - gamma : -1.0, 1e-12 * gs);
    if (!(gamma > 0.0)) return rep;
    const double q2 = 1.0 - 2.0 * gamma * L / (L / mu + dmin);
    const Matrix M = mode == AssumptionSet::linear_G0 ? symmetrize(A * B) : symmetrize(B * B);
    const double lm = symmetric_eigen(q2 * M - (id - symmetrize(C))).values(m - 1);
    add(mode == AssumptionSet::linear_G0 ? "A5.q2AB_lt_I_minus_C" : "A6.q2BB_lt_I_minus_C",
        mode == AssumptionSet::linear_G0 ? "q^2 A B < I - C" : "q^2 B^2 < I - C", -lm - 1e-14);
    if (mode == AssumptionSet::linear_G) add("A6.B_psd", "B positive semidefinite", symmetric_eigen(symmetrize(B)).values(0), 1e-12);
    return rep;
  }

  if (mode == AssumptionSet::sublinear_G0) {
    auto eb = symmetric_eigen(symmetrize(B)).values;
    add("A7.B_psd", "B positive semidefinite", eb(0), 1e-12);
    add("A7.D1_eq_1", "D 1 = 1", 1e-10 - (D * ones - ones).cwiseAbs().maxCoeff());
    if (eb(0) >= -1e-12) {
      Matrix sb = psd_sqrt(symmetrize(B), 1e-12);
      double lm = symmetric_eigen(id - 0.5 * symmetrize(C) - symmetrize(sb * D * sb)).values(0);
      add("A7.I_minus_C2_minus_sqrtBDsqrtB", "I - C/2 - sqrt(B) D sqrt(B) >= 0", lm, 1e-10);
    }
  } else {
    add("A8.B_eq_I", "B = I", 1e-12 - (B - id).cwiseAbs().maxCoeff());
    add("A8.sum_D", "1^T D 1 = m", 1e-10 - std::abs(ones.dot(D * ones) - m));
    double lm = symmetric_eigen(id - 0.5 * symmetrize(C) - symmetrize(D)).values(0);
    add("A8.D_le_I_minus_C2", "D <= I - C/2", lm, 1e-10);
  }
  add("stepsize", "0 < gamma <= lambda_min(D)/L", (gamma > 0.0 && L > 0.0) ? dmin / L - gamma : -1.0,
      L > 0.0 ? 1e-12 * dmin / L : 0.0);
  return rep;
}

Matrix AbcState::averaged() const {
  if (k < 1) throw InvalidArgument("averaged iterate needs k >= 1");
  return X_sum / static_cast<double>(k);
}

AbcState initial_state(const ProblemInstance& p, const AbcMatrices& mats, double gamma, const std::optional<Matrix>& z0) {
  if (!(gamma > 0.0)) throw InvalidArgument("stepsize gamma must be positive");
  const int m = p.agents(), d = p.dim();
  if (mats.size() != m) throw InvalidArgument("matrix size does not match the number of agents");
  AbcState s;
  s.Z = z0 ? *z0 : Matrix::Zero(m, d);
  if (s.Z.rows() != m || s.Z.cols() != d) throw InvalidArgument("initial Z has the wrong shape");
  s.X = p.prox_rows(gamma, s.Z);
  s.Y = Matrix::Zero(m, d);
  s.Yu = Matrix::Zero(m, d);
  Eigen::FullPivLU<Matrix> lu(mats.B);
  s.Xu = lu.isInvertible() ? Matrix(lu.solve(s.X)) : s.X;
  s.X_sum = Matrix::Zero(m, d);
  return s;
}

void step(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma) {
  Matrix g = p.stacked_gradient(s.X);
  // ATC instances share A and B; one product instead of two.
  Matrix z = mats.A == mats.B ? Matrix(mats.B * (s.X - gamma * g) - s.Y)
                              : Matrix(mats.A * s.X - gamma * (mats.B * g) - s.Y);
  check_finite(z, s.k + 1, "Z");
  s.Y += mats.C * z;
  s.X_prev = std::move(s.X);
  s.G_prev = std::move(g);
  s.Z = std::move(z);
  s.X = p.prox_rows(gamma, s.Z);
  ++s.k;
  s.X_sum += s.X;
  ++s.grad_evals;
  s.comm_rounds += mats.hops_per_iter;
}

void step_eliminated(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma) {
  if (s.k < 1 || s.X_prev.size() == 0) throw InvalidArgument("two-term recursion needs k >= 1");
  Matrix g = p.stacked_gradient(s.X);
  Matrix z = s.Z - mats.C * s.Z + mats.A * (s.X - s.X_prev) - gamma * (mats.B * (g - s.G_prev));
  check_finite(z, s.k + 1, "Z");
  s.Y += mats.C * z;
  s.X_prev = std::move(s.X);
  s.G_prev = std::move(g);
  s.Z = std::move(z);
  s.X = p.prox_rows(gamma, s.Z);
  ++s.k;
  s.X_sum += s.X;
  ++s.grad_evals;
  s.comm_rounds += mats.hops_per_iter;
}

void step_sublinear_prox(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma) {
  if (!mats.D) throw InvalidArgument("gradient-first form needs the factor D");
  Matrix g = p.stacked_gradient(s.X);
  Matrix xu = *mats.D * s.X - gamma * (g + s.Yu);
  check_finite(xu, s.k + 1, "X");
  s.Xu = std::move(xu);
  s.Z = mats.B * s.Xu;
  s.X_prev = std::move(s.X);
  s.G_prev = std::move(g);
  s.X = p.prox_rows(gamma, s.Z);
  s.Yu += (mats.C * s.X) / gamma;
  ++s.k;
  s.X_sum += s.X;
  ++s.grad_evals;
  s.comm_rounds += mats.hops_per_iter;
}

void step_underline(AbcState& s, const AbcMatrices& mats, const ProblemInstance& p, double gamma) {
  if (!mats.D) throw InvalidArgument("gradient-first form needs the factor D");
  if (p.regularizer().kind() != Regularizer::Kind::zero) throw InvalidArgument("underline form is for G = 0");
  Matrix g = p.stacked_gradient(s.X);
  Matrix xu = *mats.D * s.X - gamma * (g + s.Yu);
  check_finite(xu, s.k + 1, "X");
  s.Yu += (mats.C * xu) / gamma;
  s.Xu = std::move(xu);
  s.X_prev = std::move(s.X);
  s.G_prev = std::move(g);
  s.X = mats.B * s.Xu;
  s.Z = s.X;
  ++s.k;
  s.X_sum += s.X;
  ++s.grad_evals;
  s.comm_rounds += mats.hops_per_iter;
}

Variant parse_variant(std::string_view name) {
  if (name == "abc") return Variant::abc;
  if (name == "eliminated") return Variant::eliminated;
  if (name == "sublinear_prox") return Variant::sublinear_prox;
  throw InvalidArgument("unknown variant: " + std::string(name));
}

StopMetric parse_stop_metric(std::string_view name) {
  if (name == "err_opt") return StopMetric::err_opt;
  if (name == "merit") return StopMetric::merit;
  if (name == "fixed_point") return StopMetric::fixed_point;
  throw InvalidArgument("unknown stop metric: " + std::string(name));
}

RunTrace run(const RunConfig& cfg) {
  if (!cfg.mats || !cfg.problem) throw InvalidArgument("run needs matrices and a problem");
  const AbcMatrices& mats = *cfg.mats;
  const ProblemInstance& p = *cfg.problem;
  const int m = p.agents();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const StopMetric metric = cfg.stop.metric.value_or(cfg.oracle ? StopMetric::err_opt : StopMetric::fixed_point);
  if ((metric == StopMetric::err_opt || metric == StopMetric::merit) && !cfg.oracle)
    throw InvalidArgument("stop metric needs an oracle solution");
  if (cfg.record_every < 1) throw InvalidArgument("record_every must be >= 1");

  std::optional<Matrix> xstar;
  std::optional<MeritEvaluator> merit_eval;
  if (cfg.oracle) {
    xstar = Matrix(Vector::Ones(m) * cfg.oracle->x_star.transpose());
    if (cfg.record_merit || metric == StopMetric::merit)
      merit_eval.emplace(p, cfg.oracle->x_star,
                         p.regularizer().kind() == Regularizer::Kind::zero ? MeritMode::G0 : MeritMode::G);
  }

  AbcState s = initial_state(p, mats, cfg.gamma, cfg.z0);
  RunTrace trace;

  auto make_record = [&](double merit) {
    TraceRecord r{s.k, s.grad_evals, s.comm_rounds, nan, (s.X.rowwise() - s.X.colwise().mean()).norm(), merit, nan};
    if (xstar) r.err_opt = (s.X - *xstar).norm();
    if (cfg.record_objective) r.objective = p.stacked_value(s.X) + p.stacked_regularizer(s.X);
    return r;
  };
  trace.records.push_back(make_record(nan));

  Matrix z_before;
  for (long it = 0; it < cfg.stop.max_iters; ++it) {
    z_before = cfg.variant == Variant::sublinear_prox ? s.X : s.Z;
    try {
      if (cfg.variant == Variant::abc || (cfg.variant == Variant::eliminated && s.k == 0)) step(s, mats, p, cfg.gamma);
      else if (cfg.variant == Variant::eliminated) step_eliminated(s, mats, p, cfg.gamma);
      else step_sublinear_prox(s, mats, p, cfg.gamma);
    } catch (const DivergenceError& e) {
      trace.status = RunStatus::diverged;
      trace.divergence_iter = e.iteration();
      trace.message = e.what();
      break;
    }
    double err = xstar ? (s.X - *xstar).norm() : s.X.norm();
    if (!std::isfinite(err) || err > kBlowUp) {
      trace.status = RunStatus::diverged;
      trace.divergence_iter = s.k;
      trace.message = "error exceeded 1e12 at iteration " + std::to_string(s.k);
      trace.records.push_back(make_record(nan));
      break;
    }
    double merit = nan;
    if (merit_eval) merit = (*merit_eval)(s.averaged()).value;
    double stop_value = 0.0;
    switch (metric) {
      case StopMetric::err_opt: stop_value = err; break;
      case StopMetric::merit: stop_value = merit; break;
      case StopMetric::fixed_point:
        stop_value = ((cfg.variant == Variant::sublinear_prox ? s.X : s.Z) - z_before).norm();
        break;
    }
    bool hit = stop_value <= cfg.stop.tol;
    bool last = hit || it + 1 == cfg.stop.max_iters;
    if (last || s.k % cfg.record_every == 0) trace.records.push_back(make_record(merit));
    if (hit) {
      trace.status = RunStatus::converged;
      trace.hit_iter = s.k;
      break;
    }
  }
  trace.iterations = s.k;
  trace.final_X = s.X;
  if (trace.status == RunStatus::max_iters) trace.message = "iteration cap reached";
  return trace;
}

void write_trace_csv(std::ostream& os, const RunTrace& t) {
  auto cell = [&](double v) {
    if (std::isnan(v)) return;
    os << v;
  };
  os << "k,grad_evals,comm_rounds,err_opt,err_consensus,merit,objective\n";
  os << std::setprecision(17);
  for (const auto& r : t.records) {
    os << r.k << ',' << r.grad_evals << ',' << r.comm_rounds << ',';
    cell(r.err_opt);
    os << ',';
    cell(r.err_consensus);
    os << ',';
    cell(r.merit);
    os << ',';
    cell(r.objective);
    os << '\n';
  }
}

}  // namespace abc
