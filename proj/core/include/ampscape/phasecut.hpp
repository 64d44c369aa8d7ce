#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ampscape/measurement_model.hpp"
#include "ampscape/optimizer.hpp"

namespace ampscape {

/// min <M, U U^*> over U with unit-norm rows, plus the ridge map X = R U.
struct PhaseCutProblem {
  CMatrix M;      // n x n, Hermitian PSD
  CMatrix ridge;  // d x n: (n lambda I_d + F^* F)^{-1} F^* diag(y)
  CMatrix F;      // n x d
  RVector y;
  double lambda = 0.0;
  Field field = Field::Real;

  Index n() const { return F.rows(); }
  Index d() const { return F.cols(); }
};

/// lambda > 0 uses a Cholesky solve in the smaller of the n x n and d x d
/// systems; lambda = 0 uses the pseudoinverse with cutoff 1e-12 sigma_max.
PhaseCutProblem build_phasecut(const CMatrix& F, const RVector& y, double lambda, Field field);
/// Requires the rank-one form.
PhaseCutProblem build_phasecut(const MeasurementEnsemble& ens, const RVector& y, double lambda);

/// | <M W, W> - ((1/n)||diag(y) W||^2 - (1/n)||F R W||^2 - lambda ||R W||^2) |.
double quad_identity_residual(const PhaseCutProblem& prob, const CMatrix& w);

/// X = R U.
CMatrix ridge_recover(const PhaseCutProblem& prob, const CMatrix& u);

/// S(U) = M - Re ddiag(M U U^*).
CMatrix s_matrix(const CMatrix& m, const CMatrix& u);

/// Rows scaled to unit norm; zero rows become the first basis vector.
CMatrix normalize_rows(const CMatrix& u);

/// Unit-norm rows U_* with F X_* = diag(|F X_*|) U_*; zero rows get e_1.
CMatrix truth_directions(const CMatrix& F, const CMatrix& xstar);

/// Projection onto {V : Re diag(U V^*) = 0}.
CMatrix oblique_project(const CMatrix& u, const CMatrix& v);

/// The oblique-manifold problem with cost <M, U U^*>. Certificates report
/// ||S(U) U|| and the curvature of V -> P(S V), half the Riemannian values.
class SphereProductProblem : public SmoothProblem {
 public:
  SphereProductProblem(const CMatrix& m, Field field) : m_(m), field_(field) {}

  double cost(const CMatrix& u) const override;
  LocalModel expand(const CMatrix& u) const override;
  CMatrix retract(const CMatrix& u, const CMatrix& v) const override { return normalize_rows(u + v); }
  Field field() const override { return field_; }
  Index tangent_dim(const CMatrix& u) const override {
    return u.rows() * (u.cols() * field_constant(field_) - 1);
  }
  double certificate_factor() const override { return 0.5; }

 private:
  const CMatrix& m_;
  Field field_;
};

struct PhaseCutConfig {
  Index p = 3;
  int max_iters = 2000;
  double grad_tol = -1.0;  // < 0: 1e-8 * (1/n)||y||^2
  double curv_tol = -1.0;  // < 0: 1e-6 * (1/n)||y||^2
  Method method = Method::TrustRegion;
  double initial_step = 0.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_escapes = 50;
  int lanczos_starts = 3;
  std::uint64_t seed = 0;
  std::optional<CMatrix> u0;

  void validate(Field field) const;
};

struct PhaseCutResult {
  CMatrix u;
  CMatrix x;
  double objective = 0.0;
  std::vector<IterationRecord> trace;
  CriticalityCertificate cert;
  int iterations = 0;
  int escapes = 0;
  std::string status;
};

/// (1/n)||y||^2, floored away from zero.
double phasecut_scale(const PhaseCutProblem& prob);

PhaseCutResult solve_phasecut(const PhaseCutProblem& prob, const PhaseCutConfig& config);

CriticalityCertificate certify_phasecut(const CMatrix& m, const CMatrix& u, double grad_tol, double curv_tol,
                                        Field field, std::uint64_t seed = 0, int starts = 3);

/// <S(U), (c_F p - 2) z z^* + Re(D_z^* U U^* D_z) o (U U^*)>, D_z = diag(z).
double phasecut_socp_form(const CMatrix& m, const CMatrix& u, const CVector& z, Field field);

}  // namespace ampscape
