#include <gtest/gtest.h>

#include <limits>

#include "ampscape/factored_solver.hpp"
#include "ampscape/landscape.hpp"
#include "test_support.hpp"

using namespace ampscape;
using namespace ampscape::testing;

namespace {

LossSpec make(LossFamily f, double delta, double lambda = 0.0) {
  LossSpec s;
  s.family = f;
  s.delta = delta;
  s.lambda = lambda;
  return s;
}

}  // namespace

TEST(SolveFactored, ScalarAmplitudeReachesCircle) {
  const auto ens = single(1.0);
  SolverConfig cfg;
  cfg.p = 2;
  cfg.x0 = cmat(1, 2, {0.3, 0.1});
  const auto r = solve_factored(make(LossFamily::Amplitude, 1e-12), ens, vec({2}), cfg);
  EXPECT_TRUE(r.cert.certified);
  EXPECT_NEAR(r.x.norm(), 2.0, 1e-6);
}

TEST(SolveFactored, CertifiedStartReturnsImmediately) {
  const auto ens = single(1.0);
  SolverConfig cfg;
  cfg.p = 2;
  cfg.x0 = cmat(1, 2, {2.0, 0.0});
  const auto r = solve_factored(make(LossFamily::Amplitude, 1e-12), ens, vec({2}), cfg);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.status, "certified");
  EXPECT_EQ(r.x, *cfg.x0);
}

TEST(SolveFactored, ObjectiveNonincreasing) {
  const auto ens = gaussian_ensemble(6, 48, Field::Complex, 3);
  Rng rng(4);
  const RVector y = ens.alpha(rng.gaussian(6, 1, Field::Complex));
  for (Method m : {Method::TrustRegion, Method::GradientDescent}) {
    SolverConfig cfg;
    cfg.method = m;
    cfg.max_iters = 300;
    cfg.seed = 5;
    const auto r = solve_factored(make(LossFamily::Amplitude, 1e-10), ens, y, cfg);
    for (std::size_t k = 1; k < r.trace.size(); ++k)
      EXPECT_LE(r.trace[k].objective, r.trace[k - 1].objective * (1 + 1e-12) + 1e-15);
  }
}

TEST(SolveFactored, NoiselessGaussianRecovery) {
  int success = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ens = gaussian_ensemble(10, 80, Field::Real, mix_seed(seed, 1));
    Rng rng(mix_seed(seed, 2));
    const CMatrix xs = rng.gaussian(10, 1, Field::Real);
    const RVector y = ens.alpha(xs);
    SolverConfig cfg;
    cfg.seed = seed;
    const auto r = solve_factored(make(LossFamily::Amplitude, default_delta(LossFamily::Amplitude, y)), ens, y, cfg);
    const auto m = recovery_metrics(r.x, xs.col(0));
    if (r.cert.certified && m.relative_nuclear_error <= 1e-4) ++success;
  }
  EXPECT_GE(success, 18);
}

TEST(SolveFactored, RankFloors) {
  EXPECT_THROW(check_rank_floor(LossFamily::Amplitude, Field::Real, 1), PreconditionViolated);
  EXPECT_NO_THROW(check_rank_floor(LossFamily::Amplitude, Field::Complex, 1));
  EXPECT_THROW(check_rank_floor(LossFamily::Poisson, Field::Real, 2), PreconditionViolated);
  EXPECT_THROW(check_rank_floor(LossFamily::Poisson, Field::Complex, 1), PreconditionViolated);
  EXPECT_NO_THROW(check_rank_floor(LossFamily::Quartic, Field::Real, 1));
  SolverConfig cfg;
  cfg.p = 1;
  EXPECT_THROW(solve_factored(make(LossFamily::Amplitude, 1e-8), single(1.0), vec({1}), cfg), PreconditionViolated);
}

TEST(CertifyFactored, AnalyticOptimum) {
  const auto c = certify_factored(make(LossFamily::Amplitude, 1e-12), single(1.0), vec({2}), cmat(1, 2, {2, 0}),
                                  1e-8, 1e-8);
  EXPECT_LE(c.grad_norm, 1e-8);
  EXPECT_GE(c.min_curvature, -1e-8);
  EXPECT_TRUE(c.certified);
}

TEST(CertifyFactored, OriginIsQuarticSaddle) {
  // Small instance: the curvature at 0 along direction v is -(2/n) sum y_i^2 <A_i, v v^*>, minimised by
  // the top eigenvector of (1/n) sum y_i^2 A_i; brute-force over coordinate-aligned ensembles.
  const auto ens = MeasurementEnsemble::rank_one(Field::Real, cmat(2, 2, {1, 0, 0, 1}));
  const RVector y = vec({1, 2});
  const auto c = certify_factored(make(LossFamily::Quartic, 0.0), ens, y, CMatrix::Zero(2, 1), 1e-8, 1e-6);
  EXPECT_EQ(c.grad_norm, 0.0);
  EXPECT_NEAR(c.min_curvature, -2.0 * 4.0 / 2.0, 1e-8);
  EXPECT_FALSE(c.certified);
}

TEST(CertifyFactored, InfiniteTolerancesCertifyAnything) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto ens = gaussian_ensemble(3, 9, Field::Real, 1);
  Rng rng(2);
  const auto c = certify_factored(make(LossFamily::Quartic, 0.0), ens, RVector::Ones(9), rng.gaussian(3, 2, Field::Real),
                                  inf, inf);
  EXPECT_TRUE(c.certified);
}

TEST(CertifyFactored, SoundAndGaugeInvariant) {
  for (Field field : {Field::Real, Field::Complex}) {
    for (LossFamily fam : {LossFamily::Quartic, LossFamily::Amplitude, LossFamily::Poisson}) {
      const auto ens = gaussian_ensemble(6, 40, field, 31);
      Rng rng(32);
      RVector y = ens.alpha(rng.gaussian(6, 1, field));
      for (Index i = 0; i < y.size(); ++i) y(i) = std::abs(y(i) + 0.05 * rng.normal());
      const LossSpec spec = make(fam, default_delta(fam, y), 0.01);
      SolverConfig cfg;
      cfg.p = 3;
      cfg.seed = 33;
      const auto r = solve_factored(spec, ens, y, cfg);
      ASSERT_TRUE(r.cert.certified) << to_string(fam) << " " << r.status;
      for (int k = 0; k < 100; ++k) {
        CMatrix v = rng.gaussian(6, 3, field);
        v /= v.norm();
        EXPECT_GE(hess_quadform(spec, ens, y, r.x, v), -2.0 * r.cert.curv_tol);
      }
      const CMatrix q = random_unitary(3, field, rng);
      const auto c = certify_factored(spec, ens, y, r.x * q, r.cert.grad_tol, r.cert.curv_tol, 1);
      EXPECT_NEAR(c.grad_norm, r.cert.grad_norm, 1e-8 * std::max(r.cert.grad_norm, 1e-12) + 1e-14);
      if (fam == LossFamily::Amplitude) {
        const double scale = y.squaredNorm() / static_cast<double>(y.size());
        EXPECT_GE(check_a_ineq(spec, ens, y, r.x).slack, -1e-6 * scale);
      }
    }
  }
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.p = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg.p = 2;
  cfg.shrink = 1.5;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}
