#include "ampscape/phasecut.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ampscape/linalg.hpp"
#include "ampscape/rng.hpp"

namespace ampscape {

PhaseCutProblem build_phasecut(const CMatrix& F, const RVector& y, double lambda, Field field) {
  const Index n = F.rows();
  const Index d = F.cols();
  if (n < 1 || d < 1) throw ArgumentError("phasecut: F must be nonempty");
  if (y.size() != n) throw ArgumentError("phasecut: y length != n");
  if ((y.array() < 0.0).any()) throw ArgumentError("phasecut: y must be nonnegative");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("phasecut: lambda must be finite and >= 0");
  if (field == Field::Real && !is_real(F)) throw ArgumentError("phasecut: real field requires real F");

  PhaseCutProblem prob;
  prob.F = F;
  prob.y = y;
  prob.lambda = lambda;
  prob.field = field;
  const auto dy = y.cast<Complex>().asDiagonal();
  const double nl = static_cast<double>(n) * lambda;

  if (lambda > 0.0) {
    if (n <= d) {
      CMatrix k = F * F.adjoint();
      k.diagonal().array() += nl;
      Eigen::LLT<CMatrix> llt(k);
      if (llt.info() != Eigen::Success) throw ArgumentError("phasecut: Cholesky failed");
      const CMatrix kinv_dy = llt.solve(CMatrix(dy));
      prob.ridge = F.adjoint() * kinv_dy;
      prob.M = lambda * (dy * kinv_dy);
    } else {
      CMatrix g = F.adjoint() * F;
      g.diagonal().array() += nl;
      Eigen::LLT<CMatrix> llt(g);
      if (llt.info() != Eigen::Success) throw ArgumentError("phasecut: Cholesky failed");
      const CMatrix ginv_fs = llt.solve(CMatrix(F.adjoint()));
      prob.ridge = ginv_fs * dy;
      CMatrix proj = -(F * ginv_fs);
      proj.diagonal().array() += 1.0;
      prob.M = (dy * proj * dy) / static_cast<double>(n);
    }
  } else {
    Eigen::JacobiSVD<CMatrix> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    const double cutoff = 1e-12 * (s.size() > 0 ? s(0) : 0.0);
    Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff) ++rank;
    const CMatrix ur = svd.matrixU().leftCols(rank);
    RVector inv = s.head(rank).cwiseInverse();
    const CMatrix fpinv = svd.matrixV().leftCols(rank) * inv.asDiagonal() * ur.adjoint();
    prob.ridge = fpinv * dy;
    CMatrix proj = -(ur * ur.adjoint());
    proj.diagonal().array() += 1.0;
    prob.M = (dy * proj * dy) / static_cast<double>(n);
  }
  prob.M = 0.5 * (prob.M + prob.M.adjoint()).eval();
  if (field == Field::Real) {
    prob.M = prob.M.real().cast<Complex>();
    prob.ridge = prob.ridge.real().cast<Complex>();
  }
  return prob;
}

PhaseCutProblem build_phasecut(const MeasurementEnsemble& ens, const RVector& y, double lambda) {
  if (!ens.is_rank_one()) throw ArgumentError("phasecut: requires rank-one measurements A_i = f_i f_i^*");
  return build_phasecut(ens.rows(), y, lambda, ens.field());
}

double quad_identity_residual(const PhaseCutProblem& prob, const CMatrix& w) {
  if (w.rows() != prob.n()) throw ArgumentError("phasecut: W must have n rows");
  const double n = static_cast<double>(prob.n());
  const double lhs = re_dot(prob.M * w, w);
  const CMatrix rw = prob.ridge * w;
  const double rhs = (prob.y.cast<Complex>().asDiagonal() * w).squaredNorm() / n -
                     (prob.F * rw).squaredNorm() / n - prob.lambda * rw.squaredNorm();
  return std::abs(lhs - rhs);
}

CMatrix ridge_recover(const PhaseCutProblem& prob, const CMatrix& u) {
  if (u.rows() != prob.n()) throw ArgumentError("phasecut: U must have n rows");
  return prob.ridge * u;
}

CMatrix s_matrix(const CMatrix& m, const CMatrix& u) {
  if (m.rows() != m.cols() || m.rows() != u.rows()) throw ArgumentError("phasecut: M must be n x n, U n x p");
  CMatrix s = m;
  const CMatrix mu = m * u;
  for (Index i = 0; i < m.rows(); ++i) s(i, i) -= Complex((mu.row(i) * u.row(i).adjoint())(0, 0).real(), 0.0);
  return s;
}

CMatrix normalize_rows(const CMatrix& u) {
  CMatrix out = u;
  for (Index i = 0; i < u.rows(); ++i) {
    const double nr = u.row(i).norm();
    if (nr > 0.0) {
      out.row(i) /= nr;
    } else {
      out.row(i).setZero();
      out(i, 0) = 1.0;
    }
  }
  return out;
}

CMatrix truth_directions(const CMatrix& F, const CMatrix& xstar) {
  if (F.cols() != xstar.rows()) throw ArgumentError("phasecut: X_* must have d rows");
  return normalize_rows(F * xstar);
}

CMatrix oblique_project(const CMatrix& u, const CMatrix& v) {
  const RVector c = (u.conjugate().cwiseProduct(v)).rowwise().sum().real();
  return v - c.cast<Complex>().asDiagonal() * u;
}

double SphereProductProblem::cost(const CMatrix& u) const { return re_dot(u, m_ * u); }

LocalModel SphereProductProblem::expand(const CMatrix& u) const {
  auto s = std::make_shared<CMatrix>(s_matrix(m_, u));
  LocalModel lm;
  lm.cost = cost(u);
  lm.grad = 2.0 * oblique_project(u, *s * u);
  const CMatrix uu = u;
  lm.project = [uu](const CMatrix& v) { return oblique_project(uu, v); };
  if (field_ == Field::Real) {
    // Real problems: skip the complex arithmetic in the dominant product.
    auto sr = std::make_shared<RMatrix>(s->real());
    lm.hess = [uu, sr](const CMatrix& v) {
      return CMatrix(2.0 * oblique_project(uu, (*sr * v.real()).cast<Complex>()));
    };
  } else {
    lm.hess = [uu, s](const CMatrix& v) { return CMatrix(2.0 * oblique_project(uu, *s * v)); };
  }
  return lm;
}

void PhaseCutConfig::validate(Field field) const {
  if (p < 1) throw ArgumentError("phasecut: p must be >= 1");
  if (field == Field::Real && p < 2) throw PreconditionViolated("phasecut over the reals requires p >= 2");
  if (max_iters < 0) throw ArgumentError("phasecut: max_iters must be >= 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ArgumentError("phasecut: shrink must lie in (0, 1)");
  if (lanczos_starts < 1) throw ArgumentError("phasecut: lanczos_starts must be >= 1");
}

double phasecut_scale(const PhaseCutProblem& prob) {
  return std::max(prob.y.squaredNorm() / static_cast<double>(prob.n()), 1e-300);
}

PhaseCutResult solve_phasecut(const PhaseCutProblem& prob, const PhaseCutConfig& config) {
  config.validate(prob.field);
  CMatrix u0;
  if (config.u0) {
    u0 = *config.u0;
    if (u0.rows() != prob.n() || u0.cols() != config.p) throw ArgumentError("phasecut: U0 must be n x p");
    if (prob.field == Field::Real && !is_real(u0)) throw ArgumentError("phasecut: real problem needs a real U0");
    u0 = normalize_rows(u0);
  } else {
    Rng rng(mix_seed(config.seed, 1));
    u0 = normalize_rows(rng.gaussian(prob.n(), config.p, prob.field));
  }
  const double scale = phasecut_scale(prob);
  const SphereProductProblem problem(prob.M, prob.field);

  OptimizerOptions opts;
  opts.method = config.method;
  opts.max_iters = config.max_iters;
  opts.grad_tol = config.grad_tol >= 0.0 ? config.grad_tol : 1e-8 * scale;
  opts.curv_tol = config.curv_tol >= 0.0 ? config.curv_tol : 1e-6 * scale;
  opts.radius_scale = std::sqrt(static_cast<double>(prob.n()));
  const double mnorm = std::max(prob.M.cwiseAbs().maxCoeff() * static_cast<double>(prob.n()), 1e-300);
  opts.initial_step = config.initial_step > 0.0 ? config.initial_step : 0.25 / mnorm;
  opts.shrink = config.shrink;
  opts.sufficient_decrease = config.sufficient_decrease;
  opts.max_escapes = config.max_escapes;
  opts.lanczos_starts = config.lanczos_starts;
  opts.lanczos.tol = 1e-8 * scale;
  opts.lanczos.value_tol = 1e-2 * opts.curv_tol;
  opts.seed = mix_seed(config.seed, 2);

  OptimizeResult r = optimize(problem, std::move(u0), opts);
  PhaseCutResult out;
  out.u = std::move(r.x);
  out.x = ridge_recover(prob, out.u);
  out.objective = r.objective;
  out.trace = std::move(r.trace);
  out.iterations = r.iterations;
  out.escapes = r.escapes;
  out.status = r.status;
  if (r.status == "certified") {
    out.cert = r.cert;
  } else {
    out.cert = certify_phasecut(prob.M, out.u, opts.grad_tol, opts.curv_tol, prob.field,
                                mix_seed(config.seed, 3), config.lanczos_starts);
  }
  return out;
}

CriticalityCertificate certify_phasecut(const CMatrix& m, const CMatrix& u, double grad_tol, double curv_tol,
                                        Field field, std::uint64_t seed, int starts) {
  if (m.rows() != u.rows() || m.cols() != m.rows()) throw ArgumentError("phasecut: M must be n x n, U n x p");
  const RVector rn = u.rowwise().norm();
  if (((rn.array() - 1.0).abs() > 1e-10).any()) throw ArgumentError("phasecut: U rows must have unit norm");
  const SphereProductProblem problem(m, field);
  LanczosOptions lo;
  lo.tol = 1e-8 * std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  lo.value_tol = 1e-2 * curv_tol;
  return certify_point(problem, u, grad_tol, curv_tol, seed, std::max(3, starts), lo);
}

double phasecut_socp_form(const CMatrix& m, const CMatrix& u, const CVector& z, Field field) {
  const Index n = u.rows();
  if (z.size() != n) throw ArgumentError("phasecut: z must have length n");
  const CMatrix s = s_matrix(m, u);
  const CMatrix g = u * u.adjoint();
  const double coef = static_cast<double>(field_constant(field) * u.cols() - 2);
  // Re(D_z^* G D_z) o G, entry (i, j) = Re(conj(z_i) G_ij z_j) G_ij.
  CMatrix t = coef * (z * z.adjoint());
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) t(i, j) += (std::conj(z(i)) * g(i, j) * z(j)).real() * g(i, j);
  return re_dot(s, t);
}

}  // namespace ampscape
