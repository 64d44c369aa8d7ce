#include "ampscape/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ampscape/csv_io.hpp"
#include "ampscape/phasecut.hpp"
#include "ampscape/rng.hpp"

namespace ampscape {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(SolveMethod m) { return m == SolveMethod::Factored ? "factored" : "phasecut"; }

SolveMethod parse_solve_method(std::string_view s) {
  if (s == "factored") return SolveMethod::Factored;
  if (s == "phasecut") return SolveMethod::PhaseCut;
  throw ArgumentError("unknown method '" + std::string(s) + "' (expected factored|phasecut)");
}

double ExperimentConfig::lambda_floor() const {
  if (!spectral()) return 0.0;
  return ensemble.spectrum.lambda_floor(effective_d, ensemble.n, lambda_floor_constant);
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ArgumentError("config: trials must be >= 1");
  if (methods.empty() || noise.empty() || p.empty()) throw ArgumentError("config: grids must be nonempty");
  if (lambda.empty() && lambda_floor_multiples.empty()) throw ArgumentError("config: lambda grid must be nonempty");
  if (ensemble.n < 1) throw ArgumentError("config: n must be >= 1");
  if (spectral()) {
    ensemble.spectrum.validate();
    if (effective_d < 1 || effective_d > ensemble.spectrum.dim())
      throw ArgumentError("config: effective_d must lie in [1, spectrum dimension]");
  } else {
    if (ensemble.d < 1) throw ArgumentError("config: d must be >= 1");
    if (!lambda_floor_multiples.empty())
      throw ArgumentError("config: lambda_floor_multiples needs a spectral ensemble");
  }
  if (truth.rank < 1) throw ArgumentError("config: truth rank must be >= 1");
  if (truth.kind != "gaussian" && truth.kind != "flat" && truth.kind != "spiky")
    throw ArgumentError("config: truth kind must be gaussian|flat|spiky");
  if (truth.kind != "gaussian" && truth.rank != 1) throw ArgumentError("config: flat/spiky truths are rank one");
  if (!(truth.norm > 0.0)) throw ArgumentError("config: truth norm must be positive");
  for (double s : noise)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("config: noise levels must be finite and >= 0");
  for (double l : lambda)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ArgumentError("config: lambda values must be finite and >= 0");
  for (double m : lambda_floor_multiples)
    if (!(m >= 1.0)) throw ArgumentError("config: lambda_floor_multiples must be >= 1");
  if (delta && !(*delta >= 0.0)) throw ArgumentError("config: delta must be >= 0");
  if (spectral() && lambda_floor_multiples.empty()) {
    const double fl = lambda_floor();
    for (double l : lambda)
      if (l < fl * (1.0 - 1e-12))
        throw ArgumentError("config: lambda " + format_double(l) + " is below the floor " + format_double(fl));
  }
  const Field field = ensemble.field;
  for (SolveMethod m : methods) {
    for (Index pp : p) {
      if (m == SolveMethod::Factored) {
        check_rank_floor(loss, field, pp);
      } else {
        if (loss != LossFamily::Amplitude) throw ArgumentError("config: phasecut pairs with the amplitude loss");
        if (ensemble.dist == Distribution::RealPartOfComplex)
          throw ArgumentError("config: phasecut requires rank-one measurements");
        check_theorem_floor(Theorem::PhaseCut, field, pp);
      }
    }
  }
  solver.validate();
}

namespace {

template <class T>
T take(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ArgumentError(std::string("config: unknown key '") + it.key() + "' in " + where);
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("config: top level must be an object");
  ExperimentConfig c;
  try {
    reject_unknown(j, {"name", "ensemble", "truth", "loss", "solver", "methods", "noise", "p", "lambda",
                       "lambda_floor_multiples", "lambda_floor_constant", "trials", "seed", "success_threshold",
                       "output", "summary", "threads"},
                   "top level");
    c.name = take<std::string>(j, "name", c.name);

    const json e = j.value("ensemble", json::object());
    reject_unknown(e, {"d", "n", "field", "dist", "spectrum", "effective_d"}, "ensemble");
    c.ensemble.field = parse_field(take<std::string>(e, "field", "real"));
    c.ensemble.dist = parse_distribution(take<std::string>(e, "dist", "gaussian"));
    c.ensemble.d = take<Index>(e, "d", 0);
    if (e.contains("spectrum")) {
      const json& s = e.at("spectrum");
      reject_unknown(s, {"power_law", "dim", "sigmas"}, "spectrum");
      if (s.contains("sigmas")) {
        c.ensemble.spectrum.sigmas = s.at("sigmas").get<std::vector<double>>();
      } else {
        c.ensemble.spectrum =
            SpectralCovariance::power_law(take<Index>(s, "dim", 512), take<double>(s, "power_law", 2.0));
      }
    } else if (c.ensemble.dist == Distribution::SpectralGaussian) {
      c.ensemble.spectrum = SpectralCovariance::power_law(512, 2.0);
    }
    if (c.ensemble.dist == Distribution::SpectralGaussian) {
      c.ensemble.d = c.ensemble.spectrum.dim();
      c.effective_d = take<Index>(e, "effective_d", std::min<Index>(16, c.ensemble.d));
    }
    c.ensemble.n = take<Index>(e, "n", 8 * (c.spectral() ? c.effective_d : c.ensemble.d));

    if (j.contains("truth")) {
      const json& t = j.at("truth");
      reject_unknown(t, {"kind", "rank", "norm"}, "truth");
      c.truth.kind = take<std::string>(t, "kind", c.truth.kind);
      c.truth.rank = take<Index>(t, "rank", c.truth.rank);
      c.truth.norm = take<double>(t, "norm", c.truth.norm);
    }
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      reject_unknown(l, {"family", "delta"}, "loss");
      c.loss = parse_loss_family(take<std::string>(l, "family", "amplitude"));
      if (l.contains("delta") && !l.at("delta").is_null()) c.delta = l.at("delta").get<double>();
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      reject_unknown(s, {"max_iters", "method", "grad_tol", "curv_tol", "max_escapes", "lanczos_starts",
                         "initial_step", "shrink", "sufficient_decrease", "escape_radius"},
                     "solver");
      c.solver.max_iters = take<int>(s, "max_iters", c.solver.max_iters);
      c.solver.method = parse_method(take<std::string>(s, "method", "trust_region"));
      c.solver.grad_tol = take<double>(s, "grad_tol", c.solver.grad_tol);
      c.solver.curv_tol = take<double>(s, "curv_tol", c.solver.curv_tol);
      c.solver.max_escapes = take<int>(s, "max_escapes", c.solver.max_escapes);
      c.solver.lanczos_starts = take<int>(s, "lanczos_starts", c.solver.lanczos_starts);
      c.solver.initial_step = take<double>(s, "initial_step", c.solver.initial_step);
      c.solver.shrink = take<double>(s, "shrink", c.solver.shrink);
      c.solver.sufficient_decrease = take<double>(s, "sufficient_decrease", c.solver.sufficient_decrease);
      c.solver.escape_radius = take<double>(s, "escape_radius", c.solver.escape_radius);
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_solve_method(m.get<std::string>()));
    }
    c.noise = take<std::vector<double>>(j, "noise", c.noise);
    c.p = take<std::vector<Index>>(j, "p", c.p);
    c.lambda = take<std::vector<double>>(j, "lambda", c.lambda);
    c.lambda_floor_multiples = take<std::vector<double>>(j, "lambda_floor_multiples", {});
    if (!c.lambda_floor_multiples.empty() && !j.contains("lambda")) c.lambda.clear();
    c.lambda_floor_constant = take<double>(j, "lambda_floor_constant", c.lambda_floor_constant);
    c.trials = take<int>(j, "trials", c.trials);
    c.seed = take<std::uint64_t>(j, "seed", c.seed);
    c.success_threshold = take<double>(j, "success_threshold", c.success_threshold);
    c.output = take<std::string>(j, "output", "");
    c.summary = take<std::string>(j, "summary", "");
    c.threads = take<int>(j, "threads", 0);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  ojson j;
  j["name"] = c.name;
  ojson e;
  e["d"] = c.ensemble.d;
  e["n"] = c.ensemble.n;
  e["field"] = std::string(to_string(c.ensemble.field));
  e["dist"] = std::string(to_string(c.ensemble.dist));
  if (c.spectral()) {
    e["spectrum"] = {{"sigmas", c.ensemble.spectrum.sigmas}};
    e["effective_d"] = c.effective_d;
  }
  j["ensemble"] = e;
  j["truth"] = {{"kind", c.truth.kind}, {"rank", c.truth.rank}, {"norm", c.truth.norm}};
  ojson l;
  l["family"] = std::string(to_string(c.loss));
  if (c.delta) l["delta"] = *c.delta;
  j["loss"] = l;
  j["solver"] = {{"max_iters", c.solver.max_iters},
                 {"method", std::string(to_string(c.solver.method))},
                 {"grad_tol", c.solver.grad_tol},
                 {"curv_tol", c.solver.curv_tol},
                 {"max_escapes", c.solver.max_escapes},
                 {"lanczos_starts", c.solver.lanczos_starts}};
  std::vector<std::string> ms;
  for (auto m : c.methods) ms.emplace_back(to_string(m));
  j["methods"] = ms;
  j["noise"] = c.noise;
  j["p"] = c.p;
  if (!c.lambda.empty()) j["lambda"] = c.lambda;
  if (!c.lambda_floor_multiples.empty()) j["lambda_floor_multiples"] = c.lambda_floor_multiples;
  j["lambda_floor_constant"] = c.lambda_floor_constant;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["success_threshold"] = c.success_threshold;
  if (!c.output.empty()) j["output"] = c.output;
  if (!c.summary.empty()) j["summary"] = c.summary;
  return j.dump(2);
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& config) {
  std::vector<double> lambdas = config.lambda;
  if (!config.lambda_floor_multiples.empty()) {
    lambdas.clear();
    const double fl = config.lambda_floor();
    for (double m : config.lambda_floor_multiples) lambdas.push_back(m * fl);
  }
  std::vector<GridPoint> grid;
  for (SolveMethod m : config.methods)
    for (double s : config.noise)
      for (Index pp : config.p)
        for (double l : lambdas) {
          GridPoint g;
          g.index = static_cast<int>(grid.size());
          g.method = m;
          g.noise = s;
          g.p = pp;
          g.lambda = l;
          grid.push_back(g);
        }
  return grid;
}

std::uint64_t trial_seed(const ExperimentConfig& config, int trial) {
  return mix_seed(config.seed, static_cast<std::uint64_t>(trial));
}

CMatrix make_truth(const ExperimentConfig& config, std::uint64_t seed) {
  const Index d = config.ensemble.d;
  const Field field = config.ensemble.field;
  CMatrix x = CMatrix::Zero(d, config.truth.rank);
  if (config.truth.kind == "spiky") {
    x(0, 0) = 1.0;
  } else if (config.truth.kind == "flat") {
    Rng rng(seed);
    for (Index i = 0; i < d; ++i) x(i, 0) = rng.coin() ? 1.0 : -1.0;
  } else {
    Rng rng(seed);
    const Index support = config.spectral() ? config.effective_d : d;
    x.topRows(support) = rng.gaussian(support, config.truth.rank, field);
  }
  x *= config.truth.norm / x.norm();
  return x;
}

TrialRecord run_trial(const ExperimentConfig& config, const GridPoint& point, int trial) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = trial_seed(config, trial);
  TrialRecord rec;
  rec.grid = point.index;
  rec.trial = trial;
  rec.method = std::string(to_string(point.method));
  rec.seed = seed;
  rec.d = config.ensemble.d;
  rec.n = config.ensemble.n;
  rec.p = point.p;
  rec.field = std::string(to_string(config.ensemble.field));
  rec.loss = std::string(to_string(config.loss));
  rec.noise = point.noise;
  rec.lambda = point.lambda;

  const MeasurementEnsemble ens = gen_ensemble(config.ensemble, mix_seed(seed, 11));
  const GroundTruth truth{make_truth(config, mix_seed(seed, 12))};
  const NoiseSpec noise = point.noise > 0.0 ? NoiseSpec::gaussian(point.noise) : NoiseSpec::none();
  const Observation obs = observe(ens, truth, noise, mix_seed(seed, 13));
  rec.clamped = obs.clamped_count(ens);
  rec.coherence = truth.xstar.col(0).cwiseAbs().maxCoeff() / truth.xstar.col(0).norm();

  LossSpec spec;
  spec.family = config.loss;
  spec.lambda = point.lambda;
  spec.delta = config.delta ? *config.delta : default_delta(config.loss, obs.y);

  CMatrix x;
  Theorem theorem;
  CriticalityCertificate cert;
  if (point.method == SolveMethod::Factored) {
    SolverConfig sc = config.solver;
    sc.p = point.p;
    sc.seed = mix_seed(seed, 14);
    sc.x0.reset();
    const FactoredResult r = solve_factored(spec, ens, obs.y, sc);
    x = r.x;
    cert = r.cert;
    rec.iterations = r.iterations;
    rec.escapes = r.escapes;
    rec.status = r.status;
    theorem = config.loss == LossFamily::Quartic ? Theorem::Quartic
              : config.loss == LossFamily::Poisson ? Theorem::Poisson
                                                   : Theorem::Amplitude;
    rec.delta = spec.delta;
  } else {
    const PhaseCutProblem prob = build_phasecut(ens, obs.y, point.lambda);
    PhaseCutConfig pc;
    pc.p = point.p;
    pc.max_iters = config.solver.max_iters;
    pc.grad_tol = config.solver.grad_tol;
    pc.curv_tol = config.solver.curv_tol;
    pc.method = config.solver.method;
    pc.max_escapes = config.solver.max_escapes;
    pc.lanczos_starts = config.solver.lanczos_starts;
    pc.seed = mix_seed(seed, 14);
    const PhaseCutResult r = solve_phasecut(prob, pc);
    x = r.x;
    cert = r.cert;
    rec.iterations = r.iterations;
    rec.escapes = r.escapes;
    rec.status = r.status;
    theorem = Theorem::PhaseCut;
    spec.delta = 0.0;
    rec.delta = 0.0;
    rec.xlam_bound_check = build_Xlambda(prob, truth.xstar).bound_check;
  }
  rec.theorem = std::string(to_string(theorem));
  rec.grad_norm = cert.grad_norm;
  rec.min_curvature = cert.min_curvature;
  rec.certified = cert.certified;

  try {
    const LandscapeReport rep = theorem_slack(theorem, spec, ens, obs.y, RVector(), truth.xstar, x);
    rec.lhs = rep.lhs;
    rec.rhs = rep.rhs;
    rec.slack = rep.slack;
    rec.scale = rep.scale;
  } catch (const NonsmoothPoint& e) {
    rec.lhs = rec.rhs = rec.slack = std::numeric_limits<double>::quiet_NaN();
    rec.scale = slack_scale(obs.y, truth.xstar);
    rec.status += ";nonsmooth";
  }

  std::optional<RVector> sigma;
  if (config.spectral()) {
    sigma = Eigen::Map<const RVector>(config.ensemble.spectrum.sigmas.data(), config.ensemble.spectrum.dim());
    rec.weighted = true;
  }
  const RecoveryMetrics m = recovery_metrics(x, truth.xstar.col(0), sigma);
  rec.nuclear_error = m.nuclear_error;
  rec.relative_nuclear_error = m.relative_nuclear_error;
  rec.vector_error = m.vector_error;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

TrialRecord run_trial(const ExperimentConfig& config, int trial) {
  const auto grid = expand_grid(config);
  return run_trial(config, grid.front(), trial);
}

std::string trial_csv_header() {
  return "grid,trial,method,theorem,seed,d,n,p,field,loss,noise,delta,lambda,lhs,rhs,slack,scale,grad_norm,"
         "min_curvature,certified,nuclear_error,relative_nuclear_error,vector_error,weighted,iterations,escapes,"
         "clamped,xlam_bound_check,coherence,status";
}

std::string trial_csv_row(const TrialRecord& r) {
  std::ostringstream os;
  const auto f = [](double v) { return format_double(v); };
  os << r.grid << ',' << r.trial << ',' << r.method << ',' << r.theorem << ',' << r.seed << ',' << r.d << ','
     << r.n << ',' << r.p << ',' << r.field << ',' << r.loss << ',' << f(r.noise) << ',' << f(r.delta) << ','
     << f(r.lambda) << ',' << f(r.lhs) << ',' << f(r.rhs) << ',' << f(r.slack) << ',' << f(r.scale) << ','
     << f(r.grad_norm) << ',' << f(r.min_curvature) << ',' << (r.certified ? 1 : 0) << ',' << f(r.nuclear_error)
     << ',' << f(r.relative_nuclear_error) << ',' << f(r.vector_error) << ',' << (r.weighted ? 1 : 0) << ','
     << r.iterations << ',' << r.escapes << ',' << r.clamped << ',' << f(r.xlam_bound_check) << ','
     << f(r.coherence) << ',' << r.status;
  return os.str();
}

void write_sweep_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << trial_csv_header() << '\n';
  for (const auto& r : records) os << trial_csv_row(r) << '\n';
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double k = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

namespace {

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

}  // namespace

std::string sweep_summary_json(const ExperimentConfig& config, const std::vector<TrialRecord>& records) {
  const auto grid = expand_grid(config);
  ojson out;
  out["name"] = config.name;
  out["trials"] = config.trials;
  out["seed"] = config.seed;
  out["d"] = config.ensemble.d;
  out["n"] = config.ensemble.n;
  out["field"] = std::string(to_string(config.ensemble.field));
  out["dist"] = std::string(to_string(config.ensemble.dist));
  out["loss"] = std::string(to_string(config.loss));
  out["success_threshold"] = config.success_threshold;
  if (config.spectral()) {
    out["effective_d"] = config.effective_d;
    out["lambda_floor"] = config.lambda_floor();
    out["lambda_floor_constant"] = config.lambda_floor_constant;
  }

  std::vector<std::vector<const TrialRecord*>> by_grid(grid.size());
  for (const auto& r : records) by_grid[static_cast<std::size_t>(r.grid)].push_back(&r);

  std::vector<double> med_vec(grid.size());
  int violations_total = 0;
  double wall_total = 0.0;
  ojson points = ojson::array();
  for (const auto& g : grid) {
    const auto& rs = by_grid[static_cast<std::size_t>(g.index)];
    std::vector<double> nuc, rel, vec, iters;
    int certified = 0, success = 0, violations = 0;
    double min_slack = std::numeric_limits<double>::infinity(), wall = 0.0;
    for (const TrialRecord* r : rs) {
      nuc.push_back(r->nuclear_error);
      rel.push_back(r->relative_nuclear_error);
      vec.push_back(r->vector_error);
      iters.push_back(r->iterations);
      wall += r->wall_seconds;
      if (r->relative_nuclear_error <= config.success_threshold) ++success;
      if (r->certified) {
        ++certified;
        const double s = r->slack / r->scale;
        min_slack = std::min(min_slack, std::isnan(s) ? -std::numeric_limits<double>::infinity() : s);
        if (!(r->slack >= -1e-6 * r->scale)) ++violations;
      }
    }
    violations_total += violations;
    wall_total += wall;
    med_vec[static_cast<std::size_t>(g.index)] = median(vec);
    ojson pj;
    pj["index"] = g.index;
    pj["method"] = std::string(to_string(g.method));
    pj["noise"] = g.noise;
    pj["p"] = g.p;
    pj["lambda"] = g.lambda;
    pj["trials"] = rs.size();
    pj["certified"] = certified;
    pj["success_rate"] = rs.empty() ? 0.0 : static_cast<double>(success) / static_cast<double>(rs.size());
    pj["median_nuclear_error"] = num(median(nuc));
    pj["median_relative_nuclear_error"] = num(median(rel));
    pj["median_vector_error"] = num(median(vec));
    pj["median_iterations"] = num(median(iters));
    pj["min_scaled_slack_certified"] = num(min_slack);
    pj["slack_violations"] = violations;
    pj["wall_seconds"] = wall;
    points.push_back(pj);
  }
  out["grid"] = points;

  // Slopes of median vector error against noise (fixed method, p, lambda)
  // and against lambda (fixed method, noise, p).
  ojson vs_noise = ojson::array(), vs_lambda = ojson::array();
  std::map<std::tuple<int, Index, double>, std::pair<std::vector<double>, std::vector<double>>> gn;
  std::map<std::tuple<int, double, Index>, std::pair<std::vector<double>, std::vector<double>>> gl;
  for (const auto& g : grid) {
    auto& a = gn[{static_cast<int>(g.method), g.p, g.lambda}];
    a.first.push_back(g.noise);
    a.second.push_back(med_vec[static_cast<std::size_t>(g.index)]);
    auto& b = gl[{static_cast<int>(g.method), g.noise, g.p}];
    b.first.push_back(g.lambda);
    b.second.push_back(med_vec[static_cast<std::size_t>(g.index)]);
  }
  for (const auto& [k, v] : gn) {
    const double s = loglog_slope(v.first, v.second);
    if (std::isnan(s)) continue;
    vs_noise.push_back({{"method", std::string(to_string(static_cast<SolveMethod>(std::get<0>(k))))},
                        {"p", std::get<1>(k)},
                        {"lambda", std::get<2>(k)},
                        {"slope", s}});
  }
  for (const auto& [k, v] : gl) {
    const double s = loglog_slope(v.first, v.second);
    if (std::isnan(s)) continue;
    vs_lambda.push_back({{"method", std::string(to_string(static_cast<SolveMethod>(std::get<0>(k))))},
                         {"noise", std::get<1>(k)},
                         {"p", std::get<2>(k)},
                         {"slope", s}});
  }
  out["slope_vector_error_vs_noise"] = vs_noise;
  out["slope_vector_error_vs_lambda"] = vs_lambda;
  out["slack_violations_total"] = violations_total;
  out["total_trial_seconds"] = wall_total;
  return out.dump(2);
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("AMPSCAPE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto grid = expand_grid(config);
  const std::size_t tasks = grid.size() * static_cast<std::size_t>(config.trials);
  std::vector<TrialRecord> records(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < tasks; k = next++) {
      const std::size_t g = k / static_cast<std::size_t>(config.trials);
      const int t = static_cast<int>(k % static_cast<std::size_t>(config.trials));
      try {
        records[k] = run_trial(config, grid[g], t);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(resolve_thread_count(config.threads)), std::max<std::size_t>(tasks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepResult res;
  res.records = std::move(records);
  res.summary_json = sweep_summary_json(config, res.records);
  if (!config.output.empty()) {
    std::ofstream os(config.output, std::ios::binary);
    if (!os) throw IoError("cannot open '" + config.output + "' for writing");
    write_sweep_csv(os, res.records);
    if (!os) throw IoError("write failed for '" + config.output + "'");
  }
  std::string summary = config.summary;
  if (summary.empty() && !config.output.empty()) summary = config.output + ".summary.json";
  if (!summary.empty()) {
    std::ofstream os(summary, std::ios::binary);
    if (!os) throw IoError("cannot open '" + summary + "' for writing");
    os << res.summary_json << '\n';
    if (!os) throw IoError("write failed for '" + summary + "'");
  }
  return res;
}

}  // namespace ampscape
