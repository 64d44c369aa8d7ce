#pragma once

#include <string_view>

#include "ampscape/measurement_model.hpp"
#include "ampscape/types.hpp"

namespace ampscape {

enum class LossFamily { Quartic, Amplitude, Poisson };

std::string_view to_string(LossFamily f);
LossFamily parse_loss_family(std::string_view s);

/// Loss l(b, y) with smoothing l_delta(b, y) = l(b + delta, sqrt(y^2 + delta))
/// and ridge weight lambda.
struct LossSpec {
  LossFamily family = LossFamily::Amplitude;
  double delta = 0.0;
  double lambda = 0.0;

  void validate() const;
};

/// Value and first two derivatives in b of the smoothed loss.
struct LossDerivatives {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Quartic 0.5 (b - y^2)^2, Amplitude (sqrt b - y)^2, Poisson b - y^2 log b.
/// At b + delta = 0 the one-sided limits are returned (d1 may be -inf,
/// Poisson value may be +inf).
LossDerivatives loss_derivatives(const LossSpec& spec, double b, double upsilon);

/// 0 for Quartic; 1e-10 * median(y)^2 otherwise (falls back to mean(y^2)).
double default_delta(LossFamily family, const RVector& y);

/// Everything needed to evaluate the gradient and Hessian at one point.
struct LossEvaluation {
  CMatrix x;
  RVector b;       // <A_i, X X^*>
  RVector d1;      // l'(b_i, y_i)
  RVector d2;      // l''(b_i, y_i), zero where b_i = 0 and delta = 0
  double value = 0.0;
  CMatrix grad;    // 2 grad L(X X^*) X
};

/// (1/n) sum_i l(b_i, y_i) + lambda ||X||^2. May be +inf (Poisson, delta = 0).
double objective_value(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x);

/// Throws NonsmoothPoint when some l'(b_i, y_i) is -inf.
LossEvaluation evaluate_loss(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x);

struct ObjectiveGrad {
  double value = 0.0;
  CMatrix grad;
};
ObjectiveGrad objective_grad(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x);

/// grad L(X X^*) = (1/n) sum_i l'_i A_i + lambda I as an explicit d x d matrix.
CMatrix gradient_matrix(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev);

/// grad L(X X^*) V.
CMatrix apply_gradient_matrix(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev,
                              const CMatrix& v);

/// Hessian of X -> objective applied to Xdot.
CMatrix hess_vec(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev, const CMatrix& xdot);

/// 2 <grad L, Xdot Xdot^*> + (1/n) sum_i l''_i <A_i, X Xdot^* + Xdot X^*>^2.
double hess_quadform(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x,
                     const CMatrix& xdot);
double hess_quadform(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev,
                     const CMatrix& xdot);

/// (1/n) ||y||^2 + lambda d: the scale used for solver tolerances.
double certification_scale(const RVector& y, double lambda, Index d);

}  // namespace ampscape
