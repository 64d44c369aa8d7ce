#include "ampscape/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ampscape {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(LossFamily f) {
  switch (f) {
    case LossFamily::Quartic: return "quartic";
    case LossFamily::Amplitude: return "amplitude";
    case LossFamily::Poisson: return "poisson";
  }
  return "unknown";
}

LossFamily parse_loss_family(std::string_view s) {
  if (s == "quartic") return LossFamily::Quartic;
  if (s == "amplitude") return LossFamily::Amplitude;
  if (s == "poisson") return LossFamily::Poisson;
  throw ArgumentError("unknown loss '" + std::string(s) + "' (expected quartic|amplitude|poisson)");
}

void LossSpec::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ArgumentError("loss: delta must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("loss: lambda must be finite and >= 0");
}

LossDerivatives loss_derivatives(const LossSpec& spec, double b, double upsilon) {
  if (!(b >= 0.0)) throw ArgumentError("loss: b must be >= 0");
  if (!(upsilon >= 0.0)) throw ArgumentError("loss: upsilon must be >= 0");
  LossDerivatives r;
  if (spec.family == LossFamily::Quartic) {
    // Smoothing shifts b and upsilon^2 by the same amount and cancels.
    const double diff = b - upsilon * upsilon;
    r.value = 0.5 * diff * diff;
    r.d1 = diff;
    r.d2 = 1.0;
    return r;
  }
  const double bb = b + spec.delta;
  const double y2 = upsilon * upsilon + spec.delta;
  const double yy = std::sqrt(y2);
  if (bb == 0.0) {
    if (yy > 0.0) {
      r.value = spec.family == LossFamily::Amplitude ? y2 : kInf;
      r.d1 = -kInf;
      r.d2 = kInf;
    } else {
      r.value = 0.0;
      r.d1 = 1.0;
      r.d2 = 0.0;
    }
    return r;
  }
  if (spec.family == LossFamily::Amplitude) {
    const double sb = std::sqrt(bb);
    const double diff = sb - yy;
    r.value = diff * diff;
    r.d1 = 1.0 - yy / sb;
    r.d2 = yy / (2.0 * bb * sb);
  } else {
    r.value = bb - (y2 > 0.0 ? y2 * std::log(bb) : 0.0);
    r.d1 = 1.0 - y2 / bb;
    r.d2 = y2 / (bb * bb);
  }
  return r;
}

double default_delta(LossFamily family, const RVector& y) {
  if (family == LossFamily::Quartic) return 0.0;
  if (y.size() == 0) return 1e-10;
  std::vector<double> v(y.data(), y.data() + y.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double med = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lo);
  }
  double s = med * med;
  if (!(s > 0.0)) s = y.squaredNorm() / static_cast<double>(y.size());
  if (!(s > 0.0)) s = 1.0;
  return 1e-10 * s;
}

double certification_scale(const RVector& y, double lambda, Index d) {
  return y.squaredNorm() / static_cast<double>(std::max<Index>(1, y.size())) + lambda * static_cast<double>(d);
}

namespace {

void check_inputs(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y) {
  spec.validate();
  if (y.size() != ens.n()) throw ArgumentError("dimension mismatch: y has length " + std::to_string(y.size()) +
                                               ", expected n = " + std::to_string(ens.n()));
  if ((y.array() < 0.0).any()) throw ArgumentError("observations y must be nonnegative");
}

}  // namespace

double objective_value(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x) {
  check_inputs(spec, ens, y);
  const RVector b = ens.beta(x);
  double sum = 0.0;
  for (Index i = 0; i < b.size(); ++i) sum += loss_derivatives(spec, b(i), y(i)).value;
  return sum / static_cast<double>(ens.n()) + spec.lambda * x.squaredNorm();
}

LossEvaluation evaluate_loss(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y,
                             const CMatrix& x) {
  check_inputs(spec, ens, y);
  LossEvaluation ev;
  ev.x = x;
  ev.b = ens.beta(x);
  const Index n = ens.n();
  ev.d1.resize(n);
  ev.d2.resize(n);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const LossDerivatives r = loss_derivatives(spec, ev.b(i), y(i));
    if (std::isinf(r.d1))
      throw NonsmoothPoint("loss derivative is -inf at measurement " + std::to_string(i) +
                           " (<A_i, X X^*> = 0 with y_i > 0); use delta > 0");
    sum += r.value;
    ev.d1(i) = r.d1;
    // Terms with <A_i, X X^*> = 0 have A_i X = 0 and drop out of the Hessian.
    ev.d2(i) = ev.b(i) > 0.0 || spec.delta > 0.0 ? r.d2 : 0.0;
  }
  ev.value = sum / static_cast<double>(n) + spec.lambda * x.squaredNorm();
  ev.grad = 2.0 * apply_gradient_matrix(spec, ens, ev, x);
  return ev;
}

ObjectiveGrad objective_grad(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y,
                             const CMatrix& x) {
  LossEvaluation ev = evaluate_loss(spec, ens, y, x);
  return {ev.value, std::move(ev.grad)};
}

CMatrix gradient_matrix(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev) {
  CMatrix g = ens.weighted_sum(ev.d1 / static_cast<double>(ens.n()));
  g.diagonal().array() += spec.lambda;
  return g;
}

CMatrix apply_gradient_matrix(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev,
                              const CMatrix& v) {
  CMatrix out = ens.weighted_apply(ev.d1 / static_cast<double>(ens.n()), v);
  out += spec.lambda * v;
  return out;
}

CMatrix hess_vec(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev,
                 const CMatrix& xdot) {
  const RVector c = ens.cross(ev.x, xdot);
  const RVector w = (4.0 / static_cast<double>(ens.n())) * ev.d2.cwiseProduct(c);
  return 2.0 * apply_gradient_matrix(spec, ens, ev, xdot) + ens.weighted_apply(w, ev.x);
}

double hess_quadform(const LossSpec& spec, const MeasurementEnsemble& ens, const LossEvaluation& ev,
                     const CMatrix& xdot) {
  const RVector c = ens.cross(ev.x, xdot);
  const double curvature = 4.0 * ev.d2.dot(c.cwiseAbs2()) / static_cast<double>(ens.n());
  return 2.0 * re_dot(xdot, apply_gradient_matrix(spec, ens, ev, xdot)) + curvature;
}

double hess_quadform(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x,
                     const CMatrix& xdot) {
  if (xdot.rows() != x.rows() || xdot.cols() != x.cols())
    throw ArgumentError("dimension mismatch: Xdot must have the shape of X");
  return hess_quadform(spec, ens, evaluate_loss(spec, ens, y, x), xdot);
}

}  // namespace ampscape
