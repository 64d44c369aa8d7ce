#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ampscape/measurement_model.hpp"
#include "ampscape/rng.hpp"
#include "ampscape/types.hpp"

namespace ampscape::testing {

inline MeasurementEnsemble gaussian_ensemble(Index d, Index n, Field field, std::uint64_t seed) {
  EnsembleSpec spec;
  spec.d = d;
  spec.n = n;
  spec.field = field;
  spec.dist = field == Field::Real ? Distribution::GaussianIID : Distribution::ComplexGaussianIID;
  return gen_ensemble(spec, seed);
}

inline MeasurementEnsemble single(double a) {
  CMatrix f(1, 1);
  f(0, 0) = std::sqrt(a);
  return MeasurementEnsemble::rank_one(Field::Real, f);
}

inline RVector vec(std::initializer_list<double> v) {
  RVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline CMatrix cmat(Index rows, Index cols, std::initializer_list<double> row_major) {
  CMatrix m(rows, cols);
  auto it = row_major.begin();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

/// Central-difference gradient of f at x in the real coordinates of F^{d x p}.
inline CMatrix fd_gradient(const std::function<double(const CMatrix&)>& f, const CMatrix& x, Field field,
                           double h) {
  CMatrix g = CMatrix::Zero(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      for (int part = 0; part < field_constant(field); ++part) {
        const Complex e = part == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
        CMatrix xp = x, xm = x;
        xp(i, j) += h * e;
        xm(i, j) -= h * e;
        g(i, j) += e * ((f(xp) - f(xm)) / (2.0 * h));
      }
    }
  return g;
}

/// Second difference of t -> f(x + t v) at t = 0.
inline double fd_second(const std::function<double(const CMatrix&)>& f, const CMatrix& x, const CMatrix& v,
                        double h) {
  return (f(x + h * v) - 2.0 * f(x) + f(x - h * v)) / (h * h);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double max_rel_err(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

/// Unitary p x p matrix from the QR factor of a Gaussian matrix.
inline CMatrix random_unitary(Index p, Field field, Rng& rng) {
  Eigen::HouseholderQR<CMatrix> qr(rng.gaussian(p, p, field));
  return qr.householderQ() * CMatrix::Identity(p, p);
}

}  // namespace ampscape::testing
