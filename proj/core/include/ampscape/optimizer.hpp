#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ampscape/linalg.hpp"
#include "ampscape/types.hpp"

namespace ampscape {

/// First- and second-order information at one point of a manifold
/// (Euclidean space or a product of spheres).
struct LocalModel {
  double cost = 0.0;
  CMatrix grad;        // Riemannian gradient, already tangent
  LinearMap hess;      // Riemannian Hessian on tangent vectors
  LinearMap project;   // orthogonal projection onto the tangent space
};

class SmoothProblem {
 public:
  virtual ~SmoothProblem() = default;

  virtual double cost(const CMatrix& x) const = 0;
  virtual LocalModel expand(const CMatrix& x) const = 0;
  virtual CMatrix retract(const CMatrix& x, const CMatrix& v) const = 0;
  virtual Field field() const = 0;
  /// Real dimension of the tangent space at x.
  virtual Index tangent_dim(const CMatrix& x) const = 0;
  /// Reported gradient norms and curvatures are this multiple of the
  /// Riemannian ones (lets a problem certify a rescaled objective).
  virtual double certificate_factor() const { return 1.0; }
};

enum class Method { TrustRegion, GradientDescent };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct OptimizerOptions {
  Method method = Method::TrustRegion;
  int max_iters = 2000;
  double grad_tol = 1e-8;
  double curv_tol = 1e-6;
  /// Typical length of x; sets the trust-region and escape radii.
  double radius_scale = 1.0;

  // gradient descent
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;

  // trust region
  int max_inner = 1000;
  double kappa = 0.1;

  // negative-curvature escape
  int max_escapes = 50;
  double escape_radius = 0.0;  // 0: radius_scale

  // minimum-curvature estimation
  bool check_curvature = true;
  int lanczos_starts = 3;
  LanczosOptions lanczos;
  std::uint64_t seed = 0;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
};

struct CriticalityCertificate {
  double grad_norm = 0.0;
  double min_curvature = std::numeric_limits<double>::infinity();
  double grad_tol = 0.0;
  double curv_tol = 0.0;
  bool certified = false;
  int matvecs = 0;

  /// certified <=> grad_norm <= grad_tol and min_curvature >= -curv_tol.
  static CriticalityCertificate make(double grad_norm, double min_curvature, double grad_tol, double curv_tol);
};

struct OptimizeResult {
  CMatrix x;
  double objective = 0.0;
  std::vector<IterationRecord> trace;
  CriticalityCertificate cert;
  int iterations = 0;
  int escapes = 0;
  std::string status;  // "certified", "max_iters", "stalled", "escape_failed", "first_order"
};

/// Smallest eigenpair of the Riemannian Hessian (unscaled).
Eigenpair minimum_curvature(const SmoothProblem& problem, const CMatrix& x, const LocalModel& model,
                            std::uint64_t seed, int starts, const LanczosOptions& opts);

CriticalityCertificate certify_point(const SmoothProblem& problem, const CMatrix& x, double grad_tol,
                                     double curv_tol, std::uint64_t seed, int starts,
                                     const LanczosOptions& opts);

/// Columns iter,objective,grad_norm,step_size.
void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace);

/// Monotone descent to an approximate second-order critical point.
OptimizeResult optimize(const SmoothProblem& problem, CMatrix x0, const OptimizerOptions& opts);

}  // namespace ampscape
