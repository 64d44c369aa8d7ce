#include "ampscape/factored_solver.hpp"

#include <cmath>
#include <memory>

#include "ampscape/rng.hpp"

namespace ampscape {

void SolverConfig::validate() const {
  if (p < 1) throw ArgumentError("solver: p must be >= 1");
  if (max_iters < 0) throw ArgumentError("solver: max_iters must be >= 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ArgumentError("solver: shrink must lie in (0, 1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
    throw ArgumentError("solver: sufficient_decrease must lie in (0, 1)");
  if (lanczos_starts < 1) throw ArgumentError("solver: lanczos_starts must be >= 1");
  if (max_escapes < 0) throw ArgumentError("solver: max_escapes must be >= 0");
}

void check_rank_floor(LossFamily family, Field field, Index p) {
  if (p < 1) throw PreconditionViolated("rank p must be >= 1");
  if (family == LossFamily::Amplitude && field == Field::Real && p < 2)
    throw PreconditionViolated("amplitude loss over the reals requires p >= 2");
  if (family == LossFamily::Poisson && field == Field::Real && p < 3)
    throw PreconditionViolated("Poisson loss over the reals requires p >= 3");
  if (family == LossFamily::Poisson && field == Field::Complex && p < 2)
    throw PreconditionViolated("Poisson loss over the complex numbers requires p >= 2");
}

FactoredProblem::FactoredProblem(LossSpec spec, const MeasurementEnsemble& ens, RVector y)
    : spec_(spec), ens_(ens), y_(std::move(y)) {
  spec_.validate();
  if (y_.size() != ens_.n()) throw ArgumentError("dimension mismatch: y length != n");
}

double FactoredProblem::cost(const CMatrix& x) const { return objective_value(spec_, ens_, y_, x); }

LocalModel FactoredProblem::expand(const CMatrix& x) const {
  auto ev = std::make_shared<LossEvaluation>(evaluate_loss(spec_, ens_, y_, x));
  LocalModel m;
  m.cost = ev->value;
  m.grad = ev->grad;
  const LossSpec spec = spec_;
  const MeasurementEnsemble* ens = &ens_;
  m.hess = [spec, ens, ev](const CMatrix& v) { return hess_vec(spec, *ens, *ev, v); };
  m.project = [](const CMatrix& v) { return v; };
  return m;
}

CMatrix default_init(const MeasurementEnsemble& ens, const RVector& y, Index p, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix x = rng.gaussian(ens.d(), p, ens.field());
  const double mean_y2 = y.squaredNorm() / static_cast<double>(ens.n());
  const double mean_tr = ens.traces().mean();
  double target = mean_tr > 0.0 ? mean_y2 / mean_tr : 0.0;
  if (!(target > 0.0)) target = 1e-6;
  x *= std::sqrt(target) / x.norm();
  return x;
}

double resolved_grad_tol(const SolverConfig& config, double scale) {
  return config.grad_tol >= 0.0 ? config.grad_tol : 1e-8 * scale;
}

double resolved_curv_tol(const SolverConfig& config, double scale) {
  return config.curv_tol >= 0.0 ? config.curv_tol : 1e-6 * scale;
}

FactoredResult solve_factored(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y,
                              const SolverConfig& config) {
  config.validate();
  spec.validate();
  check_rank_floor(spec.family, ens.field(), config.p);
  CMatrix x0 = config.x0 ? *config.x0 : default_init(ens, y, config.p, mix_seed(config.seed, 1));
  if (x0.rows() != ens.d() || x0.cols() != config.p)
    throw ArgumentError("solver: initial point must be d x p");
  if (ens.field() == Field::Real && !is_real(x0)) throw ArgumentError("solver: real problem needs a real X0");

  const double scale = certification_scale(y, spec.lambda, ens.d());
  const FactoredProblem problem(spec, ens, y);

  OptimizerOptions opts;
  opts.method = config.method;
  opts.max_iters = config.max_iters;
  opts.grad_tol = resolved_grad_tol(config, scale);
  opts.curv_tol = resolved_curv_tol(config, scale);
  const double mean_tr = ens.traces().mean();
  opts.radius_scale = std::max(x0.norm(), std::sqrt(std::max(scale, 1e-300) / std::max(mean_tr, 1e-300)));
  opts.initial_step = config.initial_step > 0.0 ? config.initial_step : 0.5 / std::max(mean_tr * scale, 1e-300);
  opts.shrink = config.shrink;
  opts.sufficient_decrease = config.sufficient_decrease;
  opts.escape_radius = config.escape_radius;
  opts.max_escapes = config.max_escapes;
  opts.lanczos_starts = config.lanczos_starts;
  opts.lanczos.tol = 1e-8 * scale;
  opts.lanczos.value_tol = 1e-2 * opts.curv_tol;
  opts.seed = mix_seed(config.seed, 2);

  OptimizeResult r = optimize(problem, std::move(x0), opts);
  FactoredResult out;
  out.x = std::move(r.x);
  out.objective = r.objective;
  out.trace = std::move(r.trace);
  out.iterations = r.iterations;
  out.escapes = r.escapes;
  out.status = r.status;
  if (r.status == "certified") {
    out.cert = r.cert;
  } else {
    out.cert = certify_factored(spec, ens, y, out.x, opts.grad_tol, opts.curv_tol, mix_seed(config.seed, 3),
                                config.lanczos_starts);
  }
  return out;
}

CriticalityCertificate certify_factored(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y,
                                        const CMatrix& x, double grad_tol, double curv_tol, std::uint64_t seed,
                                        int starts) {
  if (x.rows() != ens.d()) throw ArgumentError("dimension mismatch: X must have d rows");
  const FactoredProblem problem(spec, ens, y);
  const double scale = certification_scale(y, spec.lambda, ens.d());
  LanczosOptions lo;
  lo.tol = 1e-8 * std::max(scale, 1e-300);
  lo.value_tol = 1e-2 * curv_tol;
  return certify_point(problem, x, grad_tol, curv_tol, seed, std::max(3, starts), lo);
}

}  // namespace ampscape
