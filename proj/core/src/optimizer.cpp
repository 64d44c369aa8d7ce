#include "ampscape/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <ostream>

#include "ampscape/csv_io.hpp"
#include "ampscape/rng.hpp"

namespace ampscape {

std::string_view to_string(Method m) {
  return m == Method::TrustRegion ? "trust_region" : "gradient_descent";
}

Method parse_method(std::string_view s) {
  if (s == "trust_region" || s == "tr") return Method::TrustRegion;
  if (s == "gradient_descent" || s == "gd") return Method::GradientDescent;
  throw ArgumentError("unknown optimizer '" + std::string(s) + "' (expected trust_region|gradient_descent)");
}

CriticalityCertificate CriticalityCertificate::make(double grad_norm, double min_curvature, double grad_tol,
                                                    double curv_tol) {
  CriticalityCertificate c;
  c.grad_norm = grad_norm;
  c.min_curvature = min_curvature;
  c.grad_tol = grad_tol;
  c.curv_tol = curv_tol;
  c.certified = grad_norm <= grad_tol && min_curvature >= -curv_tol;
  return c;
}

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
  os << "iter,objective,grad_norm,step_size\n";
  for (const auto& r : trace)
    os << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.grad_norm) << ','
       << format_double(r.step_size) << '\n';
}

Eigenpair minimum_curvature(const SmoothProblem& problem, const CMatrix& x, const LocalModel& model,
                            std::uint64_t seed, int starts, const LanczosOptions& opts) {
  return smallest_eigenpair(model.hess, model.project, x.rows(), x.cols(), problem.field(),
                            problem.tangent_dim(x), seed, starts, opts);
}

CriticalityCertificate certify_point(const SmoothProblem& problem, const CMatrix& x, double grad_tol,
                                     double curv_tol, std::uint64_t seed, int starts,
                                     const LanczosOptions& opts) {
  const LocalModel model = problem.expand(x);
  const double factor = problem.certificate_factor();
  const Eigenpair e = minimum_curvature(problem, x, model, seed, starts, opts);
  auto cert = CriticalityCertificate::make(factor * model.grad.norm(), factor * e.value, grad_tol, curv_tol);
  cert.matvecs = e.matvecs;
  return cert;
}

namespace {

struct TcgResult {
  CMatrix eta;
  CMatrix heta;
  bool boundary = false;
};

// Steihaug-Toint truncated conjugate gradients on the tangent space.
TcgResult truncated_cg(const LocalModel& m, double radius, int max_inner, double kappa, double g_ref) {
  TcgResult out;
  out.eta = CMatrix::Zero(m.grad.rows(), m.grad.cols());
  out.heta = out.eta;
  CMatrix r = m.grad;
  const double r0 = r.norm();
  if (!(r0 > 0.0)) return out;
  const double target = r0 * std::min(kappa, r0 / std::max(g_ref, 1e-300));
  CMatrix d = -r;
  double rr = r.squaredNorm();
  for (int j = 0; j < max_inner; ++j) {
    const CMatrix hd = m.project(m.hess(d));
    const double dhd = re_dot(d, hd);
    const double alpha = rr / dhd;
    const CMatrix next = out.eta + alpha * d;
    if (!(dhd > 0.0) || next.norm() >= radius) {
      // Move to the boundary along d.
      const double ed = re_dot(out.eta, d);
      const double dd = d.squaredNorm();
      const double ee = out.eta.squaredNorm();
      const double disc = std::max(0.0, ed * ed + dd * (radius * radius - ee));
      const double tau = (-ed + std::sqrt(disc)) / dd;
      out.eta += tau * d;
      out.heta += tau * hd;
      out.boundary = true;
      return out;
    }
    out.eta = next;
    out.heta += alpha * hd;
    r = m.project(r + alpha * hd);
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= target) break;
    d = -r + (rr_new / rr) * d;
    d = m.project(d);
    rr = rr_new;
  }
  return out;
}

}  // namespace

OptimizeResult optimize(const SmoothProblem& problem, CMatrix x0, const OptimizerOptions& opts) {
  if (opts.max_iters < 0) throw ArgumentError("optimizer: max_iters must be >= 0");
  if (!(opts.grad_tol >= 0.0) || !(opts.curv_tol >= 0.0)) throw ArgumentError("optimizer: tolerances must be >= 0");
  if (!(opts.shrink > 0.0 && opts.shrink < 1.0)) throw ArgumentError("optimizer: shrink must lie in (0, 1)");

  OptimizeResult res;
  CMatrix x = std::move(x0);
  const double factor = problem.certificate_factor();
  const double radius_max = 4.0 * std::max(opts.radius_scale, 1e-300);
  double radius = radius_max / 8.0;
  double step = opts.initial_step > 0.0 ? opts.initial_step : 1.0;
  double g_ref = 0.0;
  int rejections = 0;
  std::uint64_t lanczos_calls = 0;

  LocalModel model = problem.expand(x);
  res.status = "max_iters";
  for (int iter = 0;; ++iter) {
    const double gnorm = model.grad.norm();
    if (iter == 0) g_ref = gnorm;
    res.iterations = iter;
    IterationRecord rec{iter, model.cost, factor * gnorm, 0.0};

    if (factor * gnorm <= opts.grad_tol) {
      if (!opts.check_curvature) {
        res.trace.push_back(rec);
        res.status = "first_order";
        res.cert = CriticalityCertificate::make(factor * gnorm, std::numeric_limits<double>::quiet_NaN(),
                                                opts.grad_tol, opts.curv_tol);
        res.cert.certified = false;
        break;
      }
      const Eigenpair e = minimum_curvature(problem, x, model, mix_seed(opts.seed, lanczos_calls++),
                                            opts.lanczos_starts, opts.lanczos);
      if (factor * e.value >= -opts.curv_tol) {
        res.trace.push_back(rec);
        res.status = "certified";
        res.cert = CriticalityCertificate::make(factor * gnorm, factor * e.value, opts.grad_tol, opts.curv_tol);
        res.cert.matvecs = e.matvecs;
        break;
      }
      if (res.escapes >= opts.max_escapes || iter >= opts.max_iters) {
        res.trace.push_back(rec);
        res.status = res.escapes >= opts.max_escapes ? "escape_failed" : "max_iters";
        res.cert = CriticalityCertificate::make(factor * gnorm, factor * e.value, opts.grad_tol, opts.curv_tol);
        break;
      }
      // Step along the negative-curvature direction, oriented downhill.
      CMatrix v = model.project(e.vector);
      v /= v.norm();
      if (re_dot(model.grad, v) > 0.0) v = -v;
      double t = opts.escape_radius > 0.0 ? opts.escape_radius : opts.radius_scale;
      bool moved = false;
      for (int k = 0; k < 60; ++k, t *= opts.shrink) {
        CMatrix cand = problem.retract(x, t * v);
        const double fc = problem.cost(cand);
        if (fc <= model.cost - opts.sufficient_decrease * 0.5 * t * t * std::abs(e.value)) {
          x = std::move(cand);
          moved = true;
          break;
        }
      }
      ++res.escapes;
      if (!moved) {
        res.trace.push_back(rec);
        res.status = "escape_failed";
        res.cert = CriticalityCertificate::make(factor * gnorm, factor * e.value, opts.grad_tol, opts.curv_tol);
        break;
      }
      rec.step_size = t;
      res.trace.push_back(rec);
      model = problem.expand(x);
      radius = radius_max / 8.0;
      g_ref = model.grad.norm();
      continue;
    }

    if (iter >= opts.max_iters) {
      res.trace.push_back(rec);
      break;
    }

    if (opts.method == Method::GradientDescent) {
      double t = std::min(2.0 * step, opts.initial_step > 0.0 ? 1e12 * opts.initial_step : 1e12);
      bool moved = false;
      for (int k = 0; k < 80; ++k, t *= opts.shrink) {
        CMatrix cand = problem.retract(x, -t * model.grad);
        const double fc = problem.cost(cand);
        if (fc <= model.cost - opts.sufficient_decrease * t * gnorm * gnorm) {
          x = std::move(cand);
          moved = true;
          break;
        }
      }
      if (!moved) {
        res.trace.push_back(rec);
        res.status = "stalled";
        break;
      }
      step = t;
      rec.step_size = t * gnorm;
      res.trace.push_back(rec);
      model = problem.expand(x);
      continue;
    }

    const int inner = static_cast<int>(std::min<Index>(opts.max_inner, std::max<Index>(1, problem.tangent_dim(x))));
    const TcgResult tr = truncated_cg(model, radius, inner, opts.kappa, g_ref);
    const double model_decrease = -(re_dot(model.grad, tr.eta) + 0.5 * re_dot(tr.eta, tr.heta));
    CMatrix cand = problem.retract(x, tr.eta);
    const double fc = problem.cost(cand);
    const double reg = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(model.cost));
    const double rho = (model.cost - fc + reg) / (model_decrease + reg);
    const double eta_norm = tr.eta.norm();

    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && tr.boundary) {
      radius = std::min(2.0 * radius, radius_max);
    }
    if (rho > 0.1 && fc <= model.cost + reg && std::isfinite(fc)) {
      x = std::move(cand);
      rec.step_size = eta_norm;
      res.trace.push_back(rec);
      model = problem.expand(x);
      rejections = 0;
    } else {
      res.trace.push_back(rec);
      if (++rejections > 40 || radius < 1e-15 * radius_max) {
        res.status = "stalled";
        res.iterations = iter + 1;
        res.cert = CriticalityCertificate::make(factor * model.grad.norm(),
                                                std::numeric_limits<double>::quiet_NaN(), opts.grad_tol,
                                                opts.curv_tol);
        res.cert.certified = false;
        break;
      }
    }
  }
  if (res.status == "max_iters" && res.cert.grad_tol == 0.0 && res.cert.curv_tol == 0.0) {
    res.cert = CriticalityCertificate::make(factor * model.grad.norm(), std::numeric_limits<double>::quiet_NaN(),
                                            opts.grad_tol, opts.curv_tol);
    res.cert.certified = false;
  }
  res.x = std::move(x);
  res.objective = model.cost;
  return res;
}

}  // namespace ampscape
