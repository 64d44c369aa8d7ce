#include "ampscape/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ampscape/rng.hpp"

namespace ampscape {

namespace {

void orthogonalize(CMatrix& w, const std::vector<CMatrix>& basis) {
  // Two passes of classical Gram-Schmidt keeps the basis orthonormal to
  // working precision.
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& v : basis) w -= re_dot(v, w) * v;
}

}  // namespace

Eigenpair lanczos_smallest(const LinearMap& op, const LinearMap& project,
                           const CMatrix& start, Index real_dim,
                           const LanczosOptions& opts) {
  Eigenpair best;
  best.value = std::numeric_limits<double>::infinity();
  best.vector = CMatrix::Zero(start.rows(), start.cols());
  if (real_dim <= 0) return best;

  CMatrix v = project(start);
  double nv = v.norm();
  if (!(nv > 0.0)) return best;
  v /= nv;

  const Index m_max = std::max<Index>(1, std::min<Index>(opts.krylov_dim, real_dim));
  double prev_theta = std::numeric_limits<double>::infinity();
  for (int cycle = 0; cycle <= opts.max_restarts; ++cycle) {
    std::vector<CMatrix> basis;
    basis.reserve(static_cast<std::size_t>(m_max));
    std::vector<double> alpha, beta;
    basis.push_back(v);
    bool invariant = false;
    for (Index j = 0; j < m_max; ++j) {
      CMatrix w = project(op(basis.back()));
      ++best.matvecs;
      const double a = re_dot(basis.back(), w);
      alpha.push_back(a);
      orthogonalize(w, basis);
      const double b = w.norm();
      const double ref = std::abs(a) + (beta.empty() ? 0.0 : beta.back());
      if (j + 1 == m_max) break;
      if (b <= 1e-13 * std::max(ref, 1e-300)) {
        invariant = true;
        break;
      }
      beta.push_back(b);
      basis.push_back(w / b);
    }

    const Index m = static_cast<Index>(alpha.size());
    RMatrix t = RMatrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) {
        t(i, i + 1) = beta[static_cast<std::size_t>(i)];
        t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(t);
    const double theta = es.eigenvalues()(0);
    const RVector s = es.eigenvectors().col(0);
    CMatrix x = CMatrix::Zero(start.rows(), start.cols());
    for (Index i = 0; i < m; ++i) x += s(i) * basis[static_cast<std::size_t>(i)];
    x /= x.norm();

    const CMatrix r = project(op(x)) - theta * x;
    ++best.matvecs;
    const double res = r.norm();
    if (theta < best.value || cycle == 0) {
      best.value = theta;
      best.vector = x;
      best.residual = res;
    }
    if (invariant || res <= opts.tol || m >= real_dim) break;
    if (opts.value_tol > 0.0 && std::abs(theta - prev_theta) <= opts.value_tol) break;
    prev_theta = theta;
    v = x;
  }
  return best;
}

Eigenpair smallest_eigenpair(const LinearMap& op, const LinearMap& project,
                             Index rows, Index cols, Field field, Index real_dim,
                             std::uint64_t seed, int starts,
                             const LanczosOptions& opts) {
  Eigenpair best;
  best.value = std::numeric_limits<double>::infinity();
  best.vector = CMatrix::Zero(rows, cols);
  Rng rng(seed);
  int total = 0;
  for (int k = 0; k < std::max(1, starts); ++k) {
    const CMatrix start = rng.gaussian(rows, cols, field);
    Eigenpair e = lanczos_smallest(op, project, start, real_dim, opts);
    total += e.matvecs;
    if (e.value < best.value) best = std::move(e);
  }
  best.matvecs = total;
  return best;
}

CMatrix hermitian_pinv(const CMatrix& h, double rel_cutoff) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  RVector inv = RVector::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) > rel_cutoff * top && top > 0.0) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix pinv(const CMatrix& a, double rel_cutoff) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double top = s.size() > 0 ? s(0) : 0.0;
  RVector inv = RVector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_cutoff * top && top > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

double nuclear_norm_gram_difference(const CMatrix& y, const CVector& z) {
  const Index d = y.rows();
  const Index k = y.cols() + 1;
  CMatrix w(d, k);
  w.leftCols(k - 1) = y;
  w.col(k - 1) = z;
  // Y Y^* - z z^* = W J W^*, J = diag(1,...,1,-1); with W = Q R its nonzero
  // spectrum equals that of R J R^*.
  Eigen::HouseholderQR<CMatrix> qr(w);
  const Index r = std::min(d, k);
  CMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  RVector j = RVector::Ones(k);
  j(k - 1) = -1.0;
  const CMatrix small = rr * j.asDiagonal() * rr.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(small, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double hermitian_nuclear_norm(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double hermitian_operator_norm(const CMatrix& h, double rel_tol) {
  const Index d = h.rows();
  if (d == 0) return 0.0;
  const Field field = is_real(h) ? Field::Real : Field::Complex;
  const Index dim = d * field_constant(field);
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
  LanczosOptions opts;
  opts.krylov_dim = 60;
  opts.tol = rel_tol * scale;
  const LinearMap id = [](const CMatrix& v) { return v; };
  const LinearMap pos = [&](const CMatrix& v) { return CMatrix(h * v); };
  const LinearMap neg = [&](const CMatrix& v) { return CMatrix(-(h * v)); };
  const Eigenpair lo = smallest_eigenpair(pos, id, d, 1, field, dim, 0x5eedULL, 2, opts);
  const Eigenpair hi = smallest_eigenpair(neg, id, d, 1, field, dim, 0x5eed2ULL, 2, opts);
  return std::max(std::abs(lo.value), std::abs(hi.value));
}

RVector row_norms(const CMatrix& m) { return m.rowwise().norm(); }

}  // namespace ampscape
