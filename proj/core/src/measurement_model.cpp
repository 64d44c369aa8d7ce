#include "ampscape/measurement_model.hpp"

#include <algorithm>
#include <cmath>

#include "ampscape/linalg.hpp"
#include "ampscape/rng.hpp"

namespace ampscape {

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::GaussianIID: return "gaussian";
    case Distribution::RademacherIID: return "rademacher";
    case Distribution::ComplexGaussianIID: return "complex_gaussian";
    case Distribution::SpectralGaussian: return "spectral_gaussian";
    case Distribution::RealPartOfComplex: return "real_part_of_complex";
  }
  return "unknown";
}

Distribution parse_distribution(std::string_view s) {
  if (s == "gaussian") return Distribution::GaussianIID;
  if (s == "rademacher") return Distribution::RademacherIID;
  if (s == "complex_gaussian") return Distribution::ComplexGaussianIID;
  if (s == "spectral_gaussian" || s == "spectral") return Distribution::SpectralGaussian;
  if (s == "real_part_of_complex") return Distribution::RealPartOfComplex;
  throw ArgumentError("unknown distribution '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// SpectralCovariance

SpectralCovariance SpectralCovariance::power_law(Index dim, double exponent) {
  if (dim < 1) throw ArgumentError("spectral covariance needs at least one eigenvalue");
  SpectralCovariance s;
  s.sigmas.resize(static_cast<std::size_t>(dim));
  for (Index m = 1; m <= dim; ++m)
    s.sigmas[static_cast<std::size_t>(m - 1)] = std::pow(static_cast<double>(m), -exponent);
  return s;
}

double SpectralCovariance::tail_sum(Index d) const {
  double t = 0.0;
  // Smallest first for a stable sum.
  for (Index m = dim(); m > d; --m) t += sigmas[static_cast<std::size_t>(m - 1)];
  return t;
}

double SpectralCovariance::sigma_after(Index d) const {
  return d < dim() ? sigmas[static_cast<std::size_t>(d)] : 0.0;
}

double SpectralCovariance::lambda_floor(Index d, Index n, double constant) const {
  return constant * (sigma_after(d) + tail_sum(d) / static_cast<double>(n));
}

void SpectralCovariance::validate() const {
  if (sigmas.empty()) throw ArgumentError("spectral covariance: empty eigenvalue list");
  for (std::size_t m = 0; m < sigmas.size(); ++m) {
    if (!std::isfinite(sigmas[m]) || sigmas[m] < 0.0)
      throw ArgumentError("spectral covariance: eigenvalues must be finite and nonnegative");
    if (m > 0 && sigmas[m] > sigmas[m - 1])
      throw ArgumentError("spectral covariance: eigenvalues must be nonincreasing");
  }
}

// ---------------------------------------------------------------------------
// MeasurementEnsemble

MeasurementEnsemble::MeasurementEnsemble(Field field, Index d, Index n,
                                         std::variant<RankOne, Explicit> form,
                                         std::string distribution)
    : field_(field), d_(d), n_(n), form_(std::move(form)), distribution_(std::move(distribution)) {}

MeasurementEnsemble MeasurementEnsemble::rank_one(Field field, CMatrix rows, std::string distribution) {
  if (rows.rows() < 1 || rows.cols() < 1) throw ArgumentError("ensemble: F must be nonempty");
  if (field == Field::Real && !is_real(rows))
    throw ArgumentError("ensemble: real field requires real measurement vectors");
  const RVector norms = row_norms(rows);
  for (Index i = 0; i < norms.size(); ++i)
    if (!(norms(i) > 0.0)) throw ArgumentError("ensemble: zero measurement vector at row " + std::to_string(i));
  const Index n = rows.rows();
  const Index d = rows.cols();
  return MeasurementEnsemble(field, d, n, RankOne{std::move(rows)}, std::move(distribution));
}

MeasurementEnsemble MeasurementEnsemble::psd(Field field, std::vector<CMatrix> mats, std::string distribution) {
  if (mats.empty()) throw ArgumentError("ensemble: no measurement matrices");
  const Index d = mats.front().rows();
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const CMatrix& a = mats[i];
    if (a.rows() != d || a.cols() != d) throw ArgumentError("ensemble: matrices must all be d x d");
    if (field == Field::Real && !is_real(a))
      throw ArgumentError("ensemble: real field requires real measurement matrices");
    const double scale = a.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw ArgumentError("ensemble: zero measurement matrix at index " + std::to_string(i));
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ArgumentError("ensemble: measurement matrix " + std::to_string(i) + " is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
    const double opn = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues()(0) < -1e-10 * opn)
      throw ArgumentError("ensemble: measurement matrix " + std::to_string(i) + " is not PSD");
  }
  const Index n = static_cast<Index>(mats.size());
  return MeasurementEnsemble(field, d, n, Explicit{std::move(mats)}, std::move(distribution));
}

const CMatrix& MeasurementEnsemble::rows() const {
  if (const auto* r = std::get_if<RankOne>(&form_)) return r->rows;
  throw ArgumentError("ensemble: explicit-PSD form has no measurement-vector matrix F");
}

const std::vector<CMatrix>& MeasurementEnsemble::explicit_matrices() const {
  if (const auto* e = std::get_if<Explicit>(&form_)) return e->mats;
  throw ArgumentError("ensemble: rank-one form has no explicit matrices");
}

CMatrix MeasurementEnsemble::matrix(Index i) const {
  if (i < 0 || i >= n_) throw ArgumentError("ensemble: index out of range");
  if (const auto* r = std::get_if<RankOne>(&form_)) {
    const CVector f = r->rows.row(i).adjoint();
    return f * f.adjoint();
  }
  return std::get<Explicit>(form_).mats[static_cast<std::size_t>(i)];
}

MeasurementEnsemble MeasurementEnsemble::to_explicit() const {
  std::vector<CMatrix> mats;
  mats.reserve(static_cast<std::size_t>(n_));
  for (Index i = 0; i < n_; ++i) mats.push_back(matrix(i));
  return MeasurementEnsemble(field_, d_, n_, Explicit{std::move(mats)}, distribution_);
}

void MeasurementEnsemble::check_rows(const CMatrix& x) const {
  if (x.rows() != d_)
    throw ArgumentError("dimension mismatch: X has " + std::to_string(x.rows()) + " rows, expected d = " +
                        std::to_string(d_));
  if (x.cols() < 1) throw ArgumentError("dimension mismatch: X must have at least one column");
}

RVector MeasurementEnsemble::beta(const CMatrix& x) const {
  check_rows(x);
  RVector b(n_);
  if (const auto* r = std::get_if<RankOne>(&form_)) {
    b = (r->rows * x).rowwise().squaredNorm();
  } else {
    const auto& mats = std::get<Explicit>(form_).mats;
    for (Index i = 0; i < n_; ++i)
      b(i) = std::max(0.0, (x.adjoint() * mats[static_cast<std::size_t>(i)] * x).trace().real());
  }
  return b;
}

RVector MeasurementEnsemble::alpha(const CMatrix& x) const { return beta(x).cwiseSqrt(); }

RVector MeasurementEnsemble::cross(const CMatrix& x, const CMatrix& y) const {
  check_rows(x);
  check_rows(y);
  if (x.cols() != y.cols()) throw ArgumentError("dimension mismatch: X and Y need equal column counts");
  RVector c(n_);
  if (const auto* r = std::get_if<RankOne>(&form_)) {
    const CMatrix gx = r->rows * x;
    const CMatrix gy = r->rows * y;
    c = (gx.conjugate().cwiseProduct(gy)).rowwise().sum().real();
  } else {
    const auto& mats = std::get<Explicit>(form_).mats;
    for (Index i = 0; i < n_; ++i) c(i) = re_dot(x, mats[static_cast<std::size_t>(i)] * y);
  }
  return c;
}

CMatrix MeasurementEnsemble::weighted_apply(const RVector& c, const CMatrix& v) const {
  check_rows(v);
  if (c.size() != n_) throw ArgumentError("dimension mismatch: weight vector length != n");
  if (const auto* r = std::get_if<RankOne>(&form_)) {
    const CMatrix g = r->rows * v;
    return r->rows.adjoint() * (c.cast<Complex>().asDiagonal() * g);
  }
  const auto& mats = std::get<Explicit>(form_).mats;
  CMatrix out = CMatrix::Zero(d_, v.cols());
  for (Index i = 0; i < n_; ++i)
    if (c(i) != 0.0) out.noalias() += c(i) * (mats[static_cast<std::size_t>(i)] * v);
  return out;
}

CMatrix MeasurementEnsemble::weighted_sum(const RVector& c) const {
  if (c.size() != n_) throw ArgumentError("dimension mismatch: weight vector length != n");
  if (const auto* r = std::get_if<RankOne>(&form_))
    return r->rows.adjoint() * c.cast<Complex>().asDiagonal() * r->rows;
  const auto& mats = std::get<Explicit>(form_).mats;
  CMatrix out = CMatrix::Zero(d_, d_);
  for (Index i = 0; i < n_; ++i) out += c(i) * mats[static_cast<std::size_t>(i)];
  return out;
}

RVector MeasurementEnsemble::traces() const {
  if (const auto* r = std::get_if<RankOne>(&form_)) return r->rows.rowwise().squaredNorm();
  const auto& mats = std::get<Explicit>(form_).mats;
  RVector t(n_);
  for (Index i = 0; i < n_; ++i) t(i) = mats[static_cast<std::size_t>(i)].trace().real();
  return t;
}

// ---------------------------------------------------------------------------
// Generation

MeasurementEnsemble gen_ensemble(const EnsembleSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) throw ArgumentError("gen_ensemble: n must be positive");
  Rng rng(seed);
  const std::string name(to_string(spec.dist));
  switch (spec.dist) {
    case Distribution::GaussianIID:
    case Distribution::ComplexGaussianIID: {
      if (spec.dist == Distribution::ComplexGaussianIID && spec.field != Field::Complex)
        throw ArgumentError("gen_ensemble: complex_gaussian requires the complex field");
      if (spec.d < 1) throw ArgumentError("gen_ensemble: d must be positive");
      return MeasurementEnsemble::rank_one(spec.field, rng.gaussian(spec.n, spec.d, spec.field), name);
    }
    case Distribution::RademacherIID: {
      if (spec.d < 1) throw ArgumentError("gen_ensemble: d must be positive");
      CMatrix f(spec.n, spec.d);
      const double s = std::sqrt(0.5);
      for (Index j = 0; j < spec.d; ++j)
        for (Index i = 0; i < spec.n; ++i) {
          if (spec.field == Field::Real) {
            f(i, j) = Complex(rng.coin() ? 1.0 : -1.0, 0.0);
          } else {
            const double re = rng.coin() ? s : -s;
            const double im = rng.coin() ? s : -s;
            f(i, j) = Complex(re, im);
          }
        }
      return MeasurementEnsemble::rank_one(spec.field, std::move(f), name);
    }
    case Distribution::SpectralGaussian: {
      spec.spectrum.validate();
      const Index dim = spec.spectrum.dim();
      if (spec.d != 0 && spec.d != dim)
        throw ArgumentError("gen_ensemble: d must equal the number of spectral eigenvalues");
      CMatrix f = rng.gaussian(spec.n, dim, spec.field);
      for (Index m = 0; m < dim; ++m) f.col(m) *= std::sqrt(spec.spectrum.sigmas[static_cast<std::size_t>(m)]);
      return MeasurementEnsemble::rank_one(spec.field, std::move(f), name);
    }
    case Distribution::RealPartOfComplex: {
      if (spec.field != Field::Real)
        throw ArgumentError("gen_ensemble: real_part_of_complex produces a real-field ensemble");
      if (spec.d < 1) throw ArgumentError("gen_ensemble: d must be positive");
      const CMatrix g = rng.gaussian(spec.n, spec.d, Field::Complex);
      std::vector<CMatrix> mats;
      mats.reserve(static_cast<std::size_t>(spec.n));
      for (Index i = 0; i < spec.n; ++i) {
        const CVector f = g.row(i).adjoint();
        const RMatrix a = (f * f.adjoint()).real();
        mats.push_back(a.cast<Complex>());
      }
      return MeasurementEnsemble::psd(Field::Real, std::move(mats), name);
    }
  }
  throw ArgumentError("gen_ensemble: unknown distribution");
}

// ---------------------------------------------------------------------------
// Observations

Index Observation::clamped_count(const MeasurementEnsemble& ens) const {
  if (!eps || !truth) return 0;
  const RVector a = ens.alpha(truth->xstar);
  Index count = 0;
  for (Index i = 0; i < a.size(); ++i)
    if (a(i) + (*eps)(i) < 0.0) ++count;
  return count;
}

RVector Observation::effective_noise(const MeasurementEnsemble& ens) const {
  if (!truth) throw ArgumentError("observation has no ground truth");
  return y - ens.alpha(truth->xstar);
}

RVector Observation::xi(const MeasurementEnsemble& ens) const {
  if (!truth) throw ArgumentError("observation has no ground truth");
  return y.cwiseAbs2() - ens.beta(truth->xstar);
}

Observation observe(const MeasurementEnsemble& ens, const GroundTruth& truth,
                    const NoiseSpec& noise, std::uint64_t seed) {
  if (truth.xstar.rows() != ens.d())
    throw ArgumentError("observe: ground truth has the wrong number of rows");
  if (truth.rank() < 1) throw ArgumentError("observe: ground truth rank must be >= 1");
  if (!truth.xstar.allFinite()) throw ArgumentError("observe: ground truth must be finite");

  Observation obs;
  obs.truth = truth;
  const RVector a = ens.alpha(truth.xstar);
  obs.y = a;

  std::optional<RVector> eps;
  if (const auto* g = std::get_if<NoiseSpec::Gaussian>(&noise.kind)) {
    if (!(g->sigma >= 0.0)) throw ArgumentError("observe: noise sigma must be nonnegative");
    Rng rng(seed);
    RVector e(ens.n());
    for (Index i = 0; i < e.size(); ++i) e(i) = g->sigma * rng.normal();
    eps = std::move(e);
  } else if (const auto* c = std::get_if<NoiseSpec::Custom>(&noise.kind)) {
    if (c->eps.size() != ens.n()) throw ArgumentError("observe: custom noise length != n");
    eps = c->eps;
  }
  if (eps) {
    for (Index i = 0; i < obs.y.size(); ++i) obs.y(i) = std::max(a(i) + (*eps)(i), 0.0);
    obs.eps = std::move(eps);
  }
  return obs;
}

double empirical_cov_deviation(const MeasurementEnsemble& ens, const CMatrix& target) {
  if (target.rows() != ens.d() || target.cols() != ens.d())
    throw ArgumentError("empirical_cov_deviation: target must be d x d");
  const double scale = std::max(target.cwiseAbs().maxCoeff(), 1e-300);
  if ((target - target.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ArgumentError("empirical_cov_deviation: target must be Hermitian");
  const CMatrix diff =
      ens.weighted_sum(RVector::Constant(ens.n(), 1.0 / static_cast<double>(ens.n()))) - target;
  return hermitian_operator_norm(diff, 1e-10);
}

}  // namespace ampscape
