#include "ampscape/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ampscape/linalg.hpp"
#include "ampscape/rng.hpp"

namespace ampscape {

std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::Quartic: return "quartic";
    case Theorem::Amplitude: return "amplitude";
    case Theorem::Poisson: return "poisson";
    case Theorem::PhaseCut: return "phasecut";
  }
  return "unknown";
}

Theorem parse_theorem(std::string_view s) {
  if (s == "quartic") return Theorem::Quartic;
  if (s == "amplitude") return Theorem::Amplitude;
  if (s == "poisson") return Theorem::Poisson;
  if (s == "phasecut") return Theorem::PhaseCut;
  throw ArgumentError("unknown theorem '" + std::string(s) + "'");
}

CMatrix align_R(const CMatrix& h, const CMatrix& x, const CMatrix& target) {
  if (h.rows() != h.cols() || h.rows() != x.rows() || target.rows() != x.rows())
    throw ArgumentError("align_R: H must be d x d and X, target must have d rows");
  const CMatrix hx = h * x;
  CMatrix g = x.adjoint() * hx;
  g = 0.5 * (g + g.adjoint()).eval();
  const CMatrix b = hx.adjoint() * target;
  return hermitian_pinv(g, 1e-12) * b;
}

double alignment_penalty(const CMatrix& h, const CMatrix& x, const CMatrix& target, const CMatrix& r) {
  const CMatrix diff = target - x * r;
  return re_dot(diff, h * diff);
}

XlambdaResult build_Xlambda(const PhaseCutProblem& prob, const CMatrix& xstar) {
  if (xstar.rows() != prob.d()) throw ArgumentError("build_Xlambda: X_* must have d rows");
  XlambdaResult out;
  const CMatrix fx = prob.F * xstar;
  out.ustar = normalize_rows(fx);
  out.xlam = prob.ridge * out.ustar;
  const double n = static_cast<double>(prob.n());
  const RVector eps = prob.y - fx.rowwise().norm();
  const CMatrix diff = out.xlam - xstar;
  out.lhs = (prob.F * diff).squaredNorm() / n + prob.lambda * diff.squaredNorm();
  const double root = std::sqrt(prob.lambda) * xstar.norm() + eps.norm() / std::sqrt(n);
  out.rhs = root * root;
  out.bound_check = out.rhs - out.lhs;
  return out;
}

XlambdaResult build_Xlambda(const CMatrix& F, const RVector& y, double lambda, const CMatrix& xstar, Field field) {
  return build_Xlambda(build_phasecut(F, y, lambda, field), xstar);
}

double slack_scale(const RVector& y, const CMatrix& xstar) {
  const double ny = y.size() > 0 ? y.squaredNorm() / static_cast<double>(y.size()) : 0.0;
  return std::max({1.0, ny, xstar.squaredNorm()});
}

void check_theorem_floor(Theorem theorem, Field field, Index p) {
  if (p < 1) throw PreconditionViolated("rank p must be >= 1");
  const bool real = field == Field::Real;
  switch (theorem) {
    case Theorem::Quartic: break;
    case Theorem::Amplitude:
    case Theorem::PhaseCut:
      if (real && p < 2) throw PreconditionViolated(std::string(to_string(theorem)) + " bound over the reals requires p >= 2");
      break;
    case Theorem::Poisson:
      if (real && p < 3) throw PreconditionViolated("Poisson bound over the reals requires p >= 3");
      if (!real && p < 2) throw PreconditionViolated("Poisson bound over the complex numbers requires p >= 2");
      break;
  }
}

LandscapeReport theorem_slack(Theorem theorem, const LossSpec& spec, const MeasurementEnsemble& ens,
                              const RVector& y, const RVector& eps_in, const CMatrix& xstar, const CMatrix& x,
                              const std::optional<CMatrix>& R) {
  spec.validate();
  const Index d = ens.d();
  const Index n_i = ens.n();
  if (x.rows() != d || xstar.rows() != d) throw ArgumentError("theorem_slack: X and X_* must have d rows");
  if (y.size() != n_i) throw ArgumentError("theorem_slack: y length != n");
  const Index p = x.cols();
  check_theorem_floor(theorem, ens.field(), p);
  const double n = static_cast<double>(n_i);
  const double cfp = static_cast<double>(field_constant(ens.field()) * p);

  const RVector bstar = ens.beta(xstar);
  const RVector astar = bstar.cwiseSqrt();
  const RVector b = ens.beta(x);
  const RVector a = b.cwiseSqrt();
  RVector eps = eps_in.size() == 0 ? RVector(y - astar) : eps_in;
  if (eps.size() != n_i) throw ArgumentError("theorem_slack: eps length != n");
  if (((astar + eps - y).array().abs() > 1e-9 * (1.0 + y.array().abs())).any())
    throw ArgumentError("theorem_slack: eps must satisfy y = alpha(X_*) + eps (use the effective noise)");

  LandscapeReport rep;
  rep.theorem = theorem;
  rep.lambda = spec.lambda;
  rep.delta = theorem == Theorem::PhaseCut || theorem == Theorem::Quartic ? 0.0 : spec.delta;
  rep.p = p;
  rep.scale = slack_scale(y, xstar);
  const double reg = spec.lambda * (xstar.squaredNorm() - x.squaredNorm());

  CMatrix h;
  CMatrix target = xstar;
  if (theorem == Theorem::Quartic) {
    // The penalty weight is (1/n) sum y_i^2 A_i - lambda I; use it when it is PSD so the chosen R
    // minimises the actual penalty.
    h = ens.weighted_sum(y.cwiseAbs2() / n);
    if (spec.lambda > 0.0) {
      CMatrix shifted = h;
      shifted.diagonal().array() -= spec.lambda;
      Eigen::SelfAdjointEigenSolver<CMatrix> es(shifted, Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) >= 0.0) h = shifted;
    }
  } else if (theorem == Theorem::PhaseCut) {
    if (!ens.is_rank_one()) throw ArgumentError("theorem_slack: PhaseCut requires rank-one measurements");
    const PhaseCutProblem prob = build_phasecut(ens, y, spec.lambda);
    target = build_Xlambda(prob, xstar).xlam;
    h = prob.F.adjoint() * prob.F / n;
    h.diagonal().array() += spec.lambda;
  } else {
    h = ens.weighted_sum(RVector::Constant(n_i, 1.0 / n));
    h.diagonal().array() += spec.lambda;
  }
  rep.R = R ? *R : align_R(h, x, target);
  if (rep.R.rows() != p || rep.R.cols() != xstar.cols()) throw ArgumentError("theorem_slack: R must be p x r");
  const CMatrix diff = target - x * rep.R;

  switch (theorem) {
    case Theorem::Quartic: {
      const RVector xi = y.cwiseAbs2() - bstar;
      const RVector db = b - bstar;
      rep.lhs = db.squaredNorm() / n;
      const double pen = y.cwiseAbs2().dot(ens.beta(diff)) / n - spec.lambda * diff.squaredNorm();
      rep.rhs = xi.dot(db) / n + reg + 2.0 / (cfp + 2.0) * pen;
      break;
    }
    case Theorem::Amplitude: {
      RVector ad = a, asd = astar, ed = eps;
      if (spec.delta > 0.0) {
        ad = (b.array() + spec.delta).sqrt();
        asd = (bstar.array() + spec.delta).sqrt();
        ed = (y.array().square() + spec.delta).sqrt().matrix() - asd;
      }
      const RVector da = ad - asd;
      rep.lhs = da.squaredNorm() / n;
      const double pen = ens.beta(diff).sum() / n + spec.lambda * diff.squaredNorm();
      rep.rhs = 2.0 * ed.dot(da) / n + reg + pen / (cfp - 1.0);
      break;
    }
    case Theorem::Poisson: {
      double sum = 0.0;
      for (Index i = 0; i < n_i; ++i) {
        const LossDerivatives ld = loss_derivatives(spec, b(i), y(i));
        if (std::isinf(ld.d1))
          throw NonsmoothPoint("theorem_slack: <A_i, X X^*> = 0 with y_i > 0 at measurement " + std::to_string(i));
        sum += ld.d1 * (b(i) - bstar(i));
      }
      rep.lhs = sum / n;
      const double pen = ens.beta(diff).sum() / n + spec.lambda * diff.squaredNorm();
      rep.rhs = reg + 2.0 / (cfp - 2.0) * pen;
      break;
    }
    case Theorem::PhaseCut: {
      const RVector da = a - astar;
      rep.lhs = da.squaredNorm() / n;
      const double pen = (ens.rows() * diff).squaredNorm() / n + spec.lambda * diff.squaredNorm();
      rep.rhs = 2.0 * eps.dot(da) / n + reg + pen / (cfp - 1.0);
      break;
    }
  }
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

LemmaCheck check_ab_ineq(const MeasurementEnsemble& ens, const CMatrix& x1, const CMatrix& x2) {
  const double n = static_cast<double>(ens.n());
  const RVector b1 = ens.beta(x1), b2 = ens.beta(x2);
  const RVector a1 = b1.cwiseSqrt(), a2 = b2.cwiseSqrt();
  LemmaCheck c;
  c.lhs = (a1 - a2).squaredNorm() / n;
  const double den = n * (a1 + a2).squaredNorm();
  if (!(den > 0.0)) {
    c.degenerate = true;
    c.rhs = 0.0;
    c.slack = std::numeric_limits<double>::infinity();
    return c;
  }
  const double l1 = (b1 - b2).cwiseAbs().sum();
  c.rhs = l1 * l1 / den;
  c.slack = c.lhs - c.rhs;
  return c;
}

NucnormCheck check_nucnorm_lb(const CMatrix& x, const CVector& xstar) {
  if (x.rows() != xstar.size()) throw ArgumentError("check_nucnorm_lb: X must have d rows");
  NucnormCheck c;
  Eigen::JacobiSVD<CMatrix> svd(x, Eigen::ComputeFullV);
  c.v = svd.matrixV().col(0);
  const Complex ip = (xstar.adjoint() * (x * c.v))(0, 0);
  if (std::abs(ip) > 0.0) c.v *= std::conj(ip) / std::abs(ip);
  c.lhs = nuclear_norm_gram_difference(x, xstar);
  c.rhs = xstar.norm() * (xstar - x * c.v).norm() / (2.0 * std::sqrt(2.0));
  c.slack = c.lhs - c.rhs;
  return c;
}

LemmaCheck check_a_ineq(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x) {
  if (y.size() != ens.n()) throw ArgumentError("check_a_ineq: y length != n");
  const double n = static_cast<double>(ens.n());
  LemmaCheck c;
  c.lhs = ens.beta(x).sum() / n + spec.lambda * x.squaredNorm();
  c.rhs = y.squaredNorm() / n;
  c.slack = c.rhs - c.lhs;
  return c;
}

SubGRatio sample_subG_ratio(const MeasurementEnsemble& ens, const CVector& xstar, int trials, std::uint64_t seed) {
  if (xstar.size() != ens.d()) throw ArgumentError("sample_subG_ratio: x_* must have length d");
  if (trials < 1) throw ArgumentError("sample_subG_ratio: trials must be >= 1");
  const Index d = ens.d();
  const double n = static_cast<double>(ens.n());
  const CMatrix xs = xstar;
  const RVector bstar = ens.beta(xs);
  const CMatrix zstar = xs * xs.adjoint();
  const double scale = std::max(xstar.squaredNorm(), 1e-300);
  Rng rng(seed);
  SubGRatio out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    CMatrix g;
    switch (t % 4) {
      case 0: {  // random Gram matrix of random rank
        const Index k = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(d));
        g = rng.gaussian(d, std::min(k, d), ens.field());
        g *= std::sqrt(scale * 2.0 * rng.uniform() / std::max(g.squaredNorm(), 1e-300));
        break;
      }
      case 1: {  // rank-one perturbation of x_*
        const double r = std::pow(10.0, -4.0 * rng.uniform());
        CMatrix w = rng.gaussian(d, 1, ens.field());
        g = xs + r * std::sqrt(scale) * w / w.norm();
        break;
      }
      case 2: {  // x_* plus a small higher-rank component
        const double r = std::pow(10.0, -3.0 * rng.uniform());
        CMatrix w = rng.gaussian(d, 2, ens.field());
        g.resize(d, 3);
        g.col(0) = xs.col(0) * (1.0 + 0.1 * (rng.uniform() - 0.5));
        g.rightCols(2) = r * std::sqrt(scale) * w / w.norm();
        break;
      }
      default: {  // rescaled x_*
        g = xs * std::sqrt(std::max(0.0, 2.0 * rng.uniform()));
        break;
      }
    }
    const double dist = hermitian_nuclear_norm(g * g.adjoint() - zstar);
    if (!(dist >= 1e-12 * scale)) {
      ++out.skipped;
      continue;
    }
    const double lhs = (ens.beta(g) - bstar).cwiseAbs().sum() / n;
    out.min_ratio = std::min(out.min_ratio, lhs / dist);
    ++out.evaluated;
  }
  return out;
}

RecoveryMetrics recovery_metrics(const CMatrix& x, const CVector& xstar, const std::optional<RVector>& sigma) {
  if (x.rows() != xstar.size()) throw ArgumentError("recovery_metrics: X must have d rows");
  CMatrix xw = x;
  CVector sw = xstar;
  if (sigma) {
    if (sigma->size() != x.rows()) throw ArgumentError("recovery_metrics: Sigma must have length d");
    if ((sigma->array() < 0.0).any()) throw ArgumentError("recovery_metrics: Sigma must be PSD");
    const RVector root = sigma->cwiseSqrt();
    xw = root.cast<Complex>().asDiagonal() * x;
    sw = root.cast<Complex>().asDiagonal() * xstar;
  }
  RecoveryMetrics m;
  Eigen::JacobiSVD<CMatrix> svd(xw, Eigen::ComputeFullV);
  const CVector v = svd.matrixV().col(0);
  m.xhat = x * v;
  const CVector xhw = xw * v;
  const Complex ip = (sw.adjoint() * xhw)(0, 0);
  const Complex s = std::abs(ip) > 0.0 ? ip / std::abs(ip) : Complex(1.0, 0.0);
  m.vector_error = (xhw - s * sw).norm();
  m.nuclear_error = nuclear_norm_gram_difference(xw, sw);
  const double ref = sw.squaredNorm();
  m.relative_nuclear_error = ref > 0.0 ? m.nuclear_error / ref : m.nuclear_error;
  return m;
}

}  // namespace ampscape
