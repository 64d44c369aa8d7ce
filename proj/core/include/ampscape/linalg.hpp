#pragma once

#include <cstdint>
#include <functional>

#include "ampscape/types.hpp"

namespace ampscape {

/// Linear map on F^{m x k} (viewed as a real inner-product space).
using LinearMap = std::function<CMatrix(const CMatrix&)>;

struct LanczosOptions {
  int krylov_dim = 60;     // per cycle; capped by the real dimension
  int max_restarts = 40;
  double tol = 1e-8;       // absolute residual target ||A v - theta v||
  /// Also stop once the Ritz value moves less than this between restarts
  /// (0 disables). Clustered spectra converge far faster in value than in
  /// residual.
  double value_tol = 0.0;
};

struct Eigenpair {
  double value = 0.0;
  CMatrix vector;          // unit norm
  double residual = 0.0;
  int matvecs = 0;
};

/// Smallest eigenpair of a self-adjoint map restricted to the subspace onto
/// which `project` maps (pass an identity for the whole space). Lanczos with
/// full reorthogonalisation, restarted from the current Ritz vector.
Eigenpair lanczos_smallest(const LinearMap& op, const LinearMap& project,
                           const CMatrix& start, Index real_dim,
                           const LanczosOptions& opts = {});

/// Minimum over `starts` random starting vectors of lanczos_smallest.
Eigenpair smallest_eigenpair(const LinearMap& op, const LinearMap& project,
                             Index rows, Index cols, Field field, Index real_dim,
                             std::uint64_t seed, int starts,
                             const LanczosOptions& opts = {});

/// Hermitian pseudo-inverse; eigenvalues below cutoff * max|eig| are dropped.
CMatrix hermitian_pinv(const CMatrix& h, double rel_cutoff = 1e-12);

/// Moore-Penrose pseudo-inverse via SVD with relative singular-value cutoff.
CMatrix pinv(const CMatrix& a, double rel_cutoff = 1e-12);

/// Nuclear norm of Y Y^* - z z^* (Y: d x p, z: d-vector) without forming d x d.
double nuclear_norm_gram_difference(const CMatrix& y, const CVector& z);

/// Nuclear norm of a Hermitian matrix.
double hermitian_nuclear_norm(const CMatrix& h);

/// Spectral norm of a Hermitian matrix via Lanczos at both ends.
double hermitian_operator_norm(const CMatrix& h, double rel_tol = 1e-10);

/// Row-wise Euclidean norms.
RVector row_norms(const CMatrix& m);

}  // namespace ampscape
