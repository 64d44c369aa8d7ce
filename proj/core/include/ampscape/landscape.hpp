#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "ampscape/losses.hpp"
#include "ampscape/measurement_model.hpp"
#include "ampscape/optimizer.hpp"
#include "ampscape/phasecut.hpp"

namespace ampscape {

enum class Theorem { Quartic, Amplitude, Poisson, PhaseCut };

std::string_view to_string(Theorem t);
Theorem parse_theorem(std::string_view s);

/// R minimising <H, (T - X R)(T - X R)^*>: solves X^* H X R = X^* H T with a
/// Hermitian pseudo-inverse.
CMatrix align_R(const CMatrix& h, const CMatrix& x, const CMatrix& target);
double alignment_penalty(const CMatrix& h, const CMatrix& x, const CMatrix& target, const CMatrix& r);

struct XlambdaResult {
  CMatrix xlam;   // d x r
  CMatrix ustar;  // n x r truth directions
  double lhs = 0.0;  // (1/n)||F(X_lam - X_*)||^2 + lambda ||X_lam - X_*||^2
  double rhs = 0.0;  // (sqrt(lambda) ||X_*|| + ||eps|| / sqrt(n))^2
  double bound_check = 0.0;  // rhs - lhs
};

/// X_lam = R_lam U_* with eps = y - |F X_*|.
XlambdaResult build_Xlambda(const PhaseCutProblem& prob, const CMatrix& xstar);
XlambdaResult build_Xlambda(const CMatrix& F, const RVector& y, double lambda, const CMatrix& xstar, Field field);

struct LandscapeReport {
  Theorem theorem = Theorem::Amplitude;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  CMatrix R;
  double delta = 0.0;
  double lambda = 0.0;
  Index p = 0;
  double scale = 1.0;  // max(1, (1/n)||y||^2, ||X_*||^2)
  std::optional<CriticalityCertificate> cert;
};

/// max(1, (1/n)||y||^2, ||X_*||^2).
double slack_scale(const RVector& y, const CMatrix& xstar);

/// Evaluates both sides of the landscape inequality for `theorem` at X.
/// `eps` must satisfy y = alpha(X_*) + eps; pass an empty vector to use
/// y - alpha(X_*). Smoothed losses are checked in their smoothed form (exact
/// at delta = 0). When R is absent the penalty-minimising alignment is used.
/// PhaseCut requires the rank-one form and X = ridge_recover(U).
LandscapeReport theorem_slack(Theorem theorem, const LossSpec& spec, const MeasurementEnsemble& ens,
                              const RVector& y, const RVector& eps, const CMatrix& xstar, const CMatrix& x,
                              const std::optional<CMatrix>& R = std::nullopt);

/// The theorem's rank floor (PreconditionViolated when unmet).
void check_theorem_floor(Theorem theorem, Field field, Index p);

struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool degenerate = false;
};

/// (1/n)||alpha(X1) - alpha(X2)||^2 - ||beta(X1) - beta(X2)||_1^2 / (n ||alpha(X1) + alpha(X2)||^2).
LemmaCheck check_ab_ineq(const MeasurementEnsemble& ens, const CMatrix& x1, const CMatrix& x2);

struct NucnormCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  CVector v;
};

/// ||X X^* - x x^*||_* - ||x|| ||x - X v|| / (2 sqrt 2), v a leading right
/// singular vector with <X v, x> >= 0.
NucnormCheck check_nucnorm_lb(const CMatrix& x, const CVector& xstar);

/// (1/n)||y||^2 - ((1/n)||alpha(X)||^2 + lambda ||X||^2).
LemmaCheck check_a_ineq(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y, const CMatrix& x);

struct SubGRatio {
  double min_ratio = 0.0;
  int evaluated = 0;
  int skipped = 0;
};

/// min over sampled Z >= 0 of (1/n) sum_i |<A_i, Z - x x^*>| / ||Z - x x^*||_*.
SubGRatio sample_subG_ratio(const MeasurementEnsemble& ens, const CVector& xstar, int trials, std::uint64_t seed);

struct RecoveryMetrics {
  double nuclear_error = 0.0;
  double relative_nuclear_error = 0.0;
  double vector_error = 0.0;
  CVector xhat;
};

/// Errors of X against x_*; with sigma (diagonal of Sigma) all norms are
/// Sigma-weighted and xhat comes from the weighted best rank-1 approximation.
RecoveryMetrics recovery_metrics(const CMatrix& x, const CVector& xstar,
                                 const std::optional<RVector>& sigma = std::nullopt);

}  // namespace ampscape
