#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ampscape/losses.hpp"
#include "ampscape/measurement_model.hpp"
#include "ampscape/optimizer.hpp"

namespace ampscape {

struct SolverConfig {
  Index p = 3;
  int max_iters = 2000;
  double grad_tol = -1.0;  // < 0: 1e-8 * scale
  double curv_tol = -1.0;  // < 0: 1e-6 * scale
  Method method = Method::TrustRegion;
  double initial_step = 0.0;  // gradient descent; 0 picks 1 / (2 scale-ish)
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  double escape_radius = 0.0;
  int max_escapes = 50;
  int lanczos_starts = 3;
  std::uint64_t seed = 0;
  std::optional<CMatrix> x0;

  void validate() const;
};

/// Rank floors under which the landscape theorems are stated:
/// real amplitude needs p >= 2, real Poisson p >= 3, complex Poisson p >= 2.
/// Throws PreconditionViolated.
void check_rank_floor(LossFamily family, Field field, Index p);

/// min over X of the loss objective, as a problem on F^{d x p}.
class FactoredProblem : public SmoothProblem {
 public:
  FactoredProblem(LossSpec spec, const MeasurementEnsemble& ens, RVector y);

  double cost(const CMatrix& x) const override;
  LocalModel expand(const CMatrix& x) const override;
  CMatrix retract(const CMatrix& x, const CMatrix& v) const override { return x + v; }
  Field field() const override { return ens_.field(); }
  Index tangent_dim(const CMatrix& x) const override { return x.size() * field_constant(ens_.field()); }

 private:
  LossSpec spec_;
  const MeasurementEnsemble& ens_;
  RVector y_;
};

/// Gaussian X0 with ||X0||^2 = ((1/n) sum y_i^2) / ((1/n) sum tr A_i).
CMatrix default_init(const MeasurementEnsemble& ens, const RVector& y, Index p, std::uint64_t seed);

struct FactoredResult {
  CMatrix x;
  double objective = 0.0;
  std::vector<IterationRecord> trace;
  CriticalityCertificate cert;
  int iterations = 0;
  int escapes = 0;
  std::string status;
};

FactoredResult solve_factored(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y,
                              const SolverConfig& config);

CriticalityCertificate certify_factored(const LossSpec& spec, const MeasurementEnsemble& ens, const RVector& y,
                                        const CMatrix& x, double grad_tol, double curv_tol,
                                        std::uint64_t seed = 0, int starts = 3);

/// Tolerances actually used by solve_factored for this configuration.
double resolved_grad_tol(const SolverConfig& config, double scale);
double resolved_curv_tol(const SolverConfig& config, double scale);

}  // namespace ampscape
