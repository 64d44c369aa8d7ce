#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ampscape/csv_io.hpp"
#include "ampscape/experiments.hpp"
#include "ampscape/factored_solver.hpp"
#include "ampscape/landscape.hpp"
#include "ampscape/phasecut.hpp"
#include "ampscape/rng.hpp"

namespace fs = std::filesystem;
using namespace ampscape;

namespace {

constexpr int kOk = 0;
constexpr int kArgError = 1;
constexpr int kIoError = 2;

struct Instance {
  MeasurementEnsemble ens;
  RVector y;
  std::optional<RVector> eps;
  std::optional<CMatrix> xstar;
};

std::string in_path(const std::string& dir, const char* file) { return (fs::path(dir) / file).string(); }

Instance load_instance(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("input directory '" + dir + "' does not exist");
  MatrixData f = read_matrix_file(in_path(dir, "F.csv"));
  ObservationData obs = read_observation_file(in_path(dir, "obs.csv"));
  if (obs.y.size() != f.values.rows())
    throw ArgumentError("obs.csv has " + std::to_string(obs.y.size()) + " entries but F.csv has " +
                        std::to_string(f.values.rows()) + " rows");
  std::optional<CMatrix> xstar;
  if (fs::exists(in_path(dir, "truth.csv"))) xstar = read_matrix_file(in_path(dir, "truth.csv")).values;
  return Instance{MeasurementEnsemble::rank_one(f.field, std::move(f.values)), std::move(obs.y),
                  std::move(obs.eps), std::move(xstar)};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw IoError("write failed for '" + path + "'");
}

LossSpec make_spec(const std::string& loss, double lambda, std::optional<double> delta, const RVector& y) {
  LossSpec spec;
  spec.family = parse_loss_family(loss);
  spec.lambda = lambda;
  spec.delta = delta ? *delta : default_delta(spec.family, y);
  spec.validate();
  return spec;
}

nlohmann::ordered_json cert_json(const CriticalityCertificate& c) {
  nlohmann::ordered_json j;
  j["grad_norm"] = c.grad_norm;
  j["min_curvature"] = std::isfinite(c.min_curvature) ? nlohmann::ordered_json(c.min_curvature)
                                                      : nlohmann::ordered_json(format_double(c.min_curvature));
  j["grad_tol"] = c.grad_tol;
  j["curv_tol"] = c.curv_tol;
  j["certified"] = c.certified;
  return j;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  Index d = 10;
  Index n = 0;
  std::string field = "real";
  std::string dist = "gaussian";
  double power = 2.0;
  Index spectrum_dim = 512;
  std::string truth = "gaussian";
  Index rank = 1;
  double norm = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& a) {
  ExperimentConfig c;
  c.ensemble.field = parse_field(a.field);
  c.ensemble.dist = parse_distribution(a.dist);
  if (c.ensemble.dist == Distribution::RealPartOfComplex)
    throw ArgumentError("gen writes rank-one ensembles only; real_part_of_complex has no F matrix");
  c.ensemble.d = a.d;
  if (c.spectral()) {
    c.ensemble.spectrum = SpectralCovariance::power_law(a.spectrum_dim, a.power);
    c.ensemble.d = a.spectrum_dim;
    c.effective_d = std::min<Index>(16, a.spectrum_dim);
  }
  c.ensemble.n = a.n > 0 ? a.n : 8 * (c.spectral() ? c.effective_d : c.ensemble.d);
  c.truth = TruthSpec{a.truth, a.rank, a.norm};
  c.noise = {a.noise};
  c.seed = a.seed;
  c.validate();

  // Same seed derivation as one sweep trial so instances can be replayed.
  const std::uint64_t s = trial_seed(c, 0);
  const MeasurementEnsemble ens = gen_ensemble(c.ensemble, mix_seed(s, 11));
  const CMatrix xstar = make_truth(c, mix_seed(s, 12));
  const NoiseSpec noise = a.noise > 0.0 ? NoiseSpec::gaussian(a.noise) : NoiseSpec::none();
  const Observation obs = observe(ens, GroundTruth{xstar}, noise, mix_seed(s, 13));

  ensure_dir(a.out);
  write_matrix_file(in_path(a.out, "F.csv"), ens.rows(), ens.field());
  write_matrix_file(in_path(a.out, "truth.csv"), xstar, ens.field());
  write_observation_file(in_path(a.out, "obs.csv"), obs.y, obs.eps);
  nlohmann::ordered_json meta;
  meta["d"] = ens.d();
  meta["n"] = ens.n();
  meta["field"] = std::string(to_string(ens.field()));
  meta["dist"] = std::string(to_string(c.ensemble.dist));
  meta["truth"] = a.truth;
  meta["rank"] = a.rank;
  meta["norm"] = a.norm;
  meta["noise"] = a.noise;
  meta["seed"] = a.seed;
  meta["clamped"] = obs.clamped_count(ens);
  write_text(in_path(a.out, "ensemble.json"), meta.dump(2) + "\n");
  std::cout << "wrote " << a.out << " (d=" << ens.d() << ", n=" << ens.n() << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string in;
  std::string out;
  std::string loss = "amplitude";
  std::string method = "factored";
  std::string optimizer = "trust_region";
  Index p = 3;
  double lambda = 0.0;
  std::optional<double> delta;
  std::uint64_t seed = 0;
  int max_iters = 2000;
};

int run_solve(const SolveArgs& a) {
  const Instance inst = load_instance(a.in);
  const SolveMethod method = parse_solve_method(a.method);
  nlohmann::ordered_json report;
  report["method"] = a.method;
  report["p"] = a.p;
  report["lambda"] = a.lambda;
  CMatrix x;
  if (method == SolveMethod::Factored) {
    const LossSpec spec = make_spec(a.loss, a.lambda, a.delta, inst.y);
    SolverConfig sc;
    sc.p = a.p;
    sc.max_iters = a.max_iters;
    sc.method = parse_method(a.optimizer);
    sc.seed = a.seed;
    const FactoredResult r = solve_factored(spec, inst.ens, inst.y, sc);
    x = r.x;
    report["loss"] = a.loss;
    report["delta"] = spec.delta;
    report["objective"] = r.objective;
    report["iterations"] = r.iterations;
    report["escapes"] = r.escapes;
    report["status"] = r.status;
    report["certificate"] = cert_json(r.cert);
    if (!a.out.empty()) {
      ensure_dir(a.out);
      std::ofstream os(in_path(a.out, "trace.csv"));
      if (!os) throw IoError("cannot write trace.csv");
      write_trace_csv(os, r.trace);
    }
  } else {
    if (parse_loss_family(a.loss) != LossFamily::Amplitude)
      throw ArgumentError("the phasecut method pairs with the amplitude loss");
    const PhaseCutProblem prob = build_phasecut(inst.ens, inst.y, a.lambda);
    PhaseCutConfig pc;
    pc.p = a.p;
    pc.max_iters = a.max_iters;
    pc.method = parse_method(a.optimizer);
    pc.seed = a.seed;
    const PhaseCutResult r = solve_phasecut(prob, pc);
    x = r.x;
    report["objective"] = r.objective;
    report["iterations"] = r.iterations;
    report["escapes"] = r.escapes;
    report["status"] = r.status;
    report["certificate"] = cert_json(r.cert);
    if (!a.out.empty()) {
      ensure_dir(a.out);
      write_matrix_file(in_path(a.out, "U.csv"), r.u, inst.ens.field());
      std::ofstream os(in_path(a.out, "trace.csv"));
      if (!os) throw IoError("cannot write trace.csv");
      write_trace_csv(os, r.trace);
    }
  }
  if (inst.xstar) {
    const RecoveryMetrics m = recovery_metrics(x, inst.xstar->col(0));
    report["nuclear_error"] = m.nuclear_error;
    report["relative_nuclear_error"] = m.relative_nuclear_error;
    report["vector_error"] = m.vector_error;
  }
  if (!a.out.empty()) {
    write_matrix_file(in_path(a.out, "X.csv"), x, inst.ens.field());
    write_text(in_path(a.out, "report.json"), report.dump(2) + "\n");
  }
  std::cout << report.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  std::string in;
  std::string x;
  std::string u;
  std::string loss = "amplitude";
  std::string method = "factored";
  double lambda = 0.0;
  std::optional<double> delta;
  std::uint64_t seed = 0;
  double grad_tol = -1.0;
  double curv_tol = -1.0;
};

struct Evaluated {
  CMatrix x;
  LossSpec spec;
  Theorem theorem = Theorem::Amplitude;
  CriticalityCertificate cert;
};

Evaluated evaluate_point(const Instance& inst, const CheckArgs& a) {
  Evaluated e;
  const SolveMethod method = parse_solve_method(a.method);
  if (method == SolveMethod::Factored) {
    if (a.x.empty()) throw ArgumentError("--x is required for the factored method");
    e.spec = make_spec(a.loss, a.lambda, a.delta, inst.y);
    e.x = read_matrix_file(a.x).values;
    const double scale = certification_scale(inst.y, a.lambda, inst.ens.d());
    const double gt = a.grad_tol > 0.0 ? a.grad_tol : 1e-8 * scale;
    const double ct = a.curv_tol > 0.0 ? a.curv_tol : 1e-6 * scale;
    e.cert = certify_factored(e.spec, inst.ens, inst.y, e.x, gt, ct, a.seed);
    e.theorem = parse_theorem(a.loss);
  } else {
    if (a.u.empty()) throw ArgumentError("--u is required for the phasecut method");
    if (parse_loss_family(a.loss) != LossFamily::Amplitude)
      throw ArgumentError("the phasecut method pairs with the amplitude loss");
    const PhaseCutProblem prob = build_phasecut(inst.ens, inst.y, a.lambda);
    const CMatrix u = read_matrix_file(a.u).values;
    const double scale = phasecut_scale(prob);
    const double gt = a.grad_tol > 0.0 ? a.grad_tol : 1e-8 * scale;
    const double ct = a.curv_tol > 0.0 ? a.curv_tol : 1e-6 * scale;
    e.cert = certify_phasecut(prob.M, u, gt, ct, prob.field, a.seed);
    e.x = ridge_recover(prob, u);
    e.spec.lambda = a.lambda;
    e.theorem = Theorem::PhaseCut;
  }
  return e;
}

int run_certify(const CheckArgs& a) {
  const Instance inst = load_instance(a.in);
  const Evaluated e = evaluate_point(inst, a);
  std::cout << cert_json(e.cert).dump(2) << "\n";
  return kOk;
}

int run_landscape_check(const CheckArgs& a) {
  const Instance inst = load_instance(a.in);
  if (!inst.xstar) throw ArgumentError("landscape-check needs truth.csv in the input directory");
  const Evaluated e = evaluate_point(inst, a);
  const LandscapeReport rep = theorem_slack(e.theorem, e.spec, inst.ens, inst.y, RVector(), *inst.xstar, e.x);
  const RecoveryMetrics m = recovery_metrics(e.x, inst.xstar->col(0));
  std::cout << "theorem,seed,d,n,p,field,loss,delta,lambda,lhs,rhs,slack,grad_norm,min_curvature,"
               "nuclear_error,vector_error\n";
  std::cout << to_string(e.theorem) << ',' << a.seed << ',' << inst.ens.d() << ',' << inst.ens.n() << ','
            << e.x.cols() << ',' << to_string(inst.ens.field()) << ',' << a.loss << ','
            << format_double(e.spec.delta) << ',' << format_double(a.lambda) << ',' << format_double(rep.lhs)
            << ',' << format_double(rep.rhs) << ',' << format_double(rep.slack) << ','
            << format_double(e.cert.grad_norm) << ',' << format_double(e.cert.min_curvature) << ','
            << format_double(m.nuclear_error) << ',' << format_double(m.vector_error) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

int run_sweep_cmd(const std::string& config_path, const std::string& output, int threads) {
  ExperimentConfig c = load_experiment_config(config_path);
  if (!output.empty()) c.output = output;
  if (threads > 0) c.threads = threads;
  if (c.output.empty()) throw ArgumentError("sweep: no output path (set \"output\" or pass --output)");
  const SweepResult r = run_sweep(c);
  int certified = 0;
  for (const auto& rec : r.records) certified += rec.certified ? 1 : 0;
  std::cout << "wrote " << r.records.size() << " rows to " << c.output << " (" << certified << " certified)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Burer-Monteiro phase retrieval: solvers, certificates and landscape checks"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate an ensemble, ground truth and observations");
  g->add_option("--d", gen.d, "Signal dimension")->check(CLI::PositiveNumber);
  g->add_option("--n", gen.n, "Number of measurements (default 8d)");
  g->add_option("--field", gen.field, "real|complex");
  g->add_option("--dist", gen.dist, "gaussian|rademacher|complex_gaussian|spectral_gaussian");
  g->add_option("--power", gen.power, "Spectral decay exponent");
  g->add_option("--spectrum-dim", gen.spectrum_dim, "Spectral truncation D");
  g->add_option("--truth", gen.truth, "gaussian|flat|spiky");
  g->add_option("--rank", gen.rank, "Ground-truth rank");
  g->add_option("--norm", gen.norm, "Ground-truth Frobenius norm");
  g->add_option("--noise", gen.noise, "Gaussian noise level");
  g->add_option("--seed", gen.seed, "Seed");
  g->add_option("--out", gen.out, "Output directory")->required();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve one instance");
  s->add_option("--in", solve.in, "Instance directory (from gen)")->required();
  s->add_option("--out", solve.out, "Output directory");
  s->add_option("--loss", solve.loss, "quartic|amplitude|poisson");
  s->add_option("--method", solve.method, "factored|phasecut");
  s->add_option("--optimizer", solve.optimizer, "trust_region|gradient_descent");
  s->add_option("--p", solve.p, "Factor rank")->check(CLI::PositiveNumber);
  s->add_option("--lambda", solve.lambda, "Ridge parameter");
  s->add_option("--delta", solve.delta, "Smoothing (default 1e-10 median(y)^2)");
  s->add_option("--seed", solve.seed, "Seed");
  s->add_option("--max-iters", solve.max_iters, "Iteration cap");

  CheckArgs cert_args;
  auto* c = app.add_subcommand("certify", "Certify a candidate point as second-order critical");
  CheckArgs land_args;
  auto* l = app.add_subcommand("landscape-check", "Evaluate the landscape inequality at a candidate point");
  for (auto [cmd, a] : {std::pair{c, &cert_args}, std::pair{l, &land_args}}) {
    cmd->add_option("--in", a->in, "Instance directory")->required();
    cmd->add_option("--x", a->x, "Factor X (factored method)");
    cmd->add_option("--u", a->u, "Directions U (phasecut method)");
    cmd->add_option("--loss", a->loss, "quartic|amplitude|poisson");
    cmd->add_option("--method", a->method, "factored|phasecut");
    cmd->add_option("--lambda", a->lambda, "Ridge parameter");
    cmd->add_option("--delta", a->delta, "Smoothing");
    cmd->add_option("--seed", a->seed, "Lanczos seed");
    cmd->add_option("--grad-tol", a->grad_tol, "Gradient tolerance");
    cmd->add_option("--curv-tol", a->curv_tol, "Curvature tolerance");
  }

  std::string config_path, sweep_out;
  int threads = 0;
  auto* w = app.add_subcommand("sweep", "Run a Monte Carlo sweep from a JSON config");
  w->add_option("--config", config_path, "JSON config")->required();
  w->add_option("--output", sweep_out, "CSV path (overrides the config)");
  w->add_option("--threads", threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kArgError;
  }

  try {
    if (g->parsed()) return run_gen(gen);
    if (s->parsed()) return run_solve(solve);
    if (c->parsed()) return run_certify(cert_args);
    if (l->parsed()) return run_landscape_check(land_args);
    if (w->parsed()) return run_sweep_cmd(config_path, sweep_out, threads);
  } catch (const IoError& e) {
    std::cerr << "ampscape: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "ampscape: " << e.what() << "\n";
    return kArgError;
  }
  return kArgError;
}
