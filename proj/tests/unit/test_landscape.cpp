#include <gtest/gtest.h>

#include "ampscape/factored_solver.hpp"
#include "ampscape/landscape.hpp"
#include "ampscape/phasecut.hpp"
#include "test_support.hpp"

using namespace ampscape;
using namespace ampscape::testing;

namespace {

LossSpec make(LossFamily f, double delta, double lambda) {
  LossSpec s;
  s.family = f;
  s.delta = delta;
  s.lambda = lambda;
  return s;
}

CMatrix pad(const CMatrix& xs, Index p) {
  CMatrix x = CMatrix::Zero(xs.rows(), p);
  x.leftCols(xs.cols()) = xs;
  return x;
}

CMatrix selector(Index p, Index r) {
  CMatrix s = CMatrix::Zero(p, r);
  s.topRows(r) = CMatrix::Identity(r, r);
  return s;
}

}  // namespace

TEST(AlignR, PaddingIsExact) {
  Rng rng(1);
  const CMatrix target = rng.gaussian(4, 1, Field::Complex);
  const CMatrix x = pad(target, 3);
  const CMatrix h = CMatrix::Identity(4, 4);
  const CMatrix r = align_R(h, x, target);
  EXPECT_LE((x * r - target).norm(), 1e-12);
  EXPECT_NEAR(alignment_penalty(h, x, target, r), 0.0, 1e-24);
}

TEST(AlignR, InvertibleSquareCase) {
  Rng rng(2);
  const CMatrix x = rng.gaussian(3, 3, Field::Real);
  const CMatrix target = rng.gaussian(3, 1, Field::Real);
  EXPECT_LE((align_R(CMatrix::Identity(3, 3), x, target) - x.inverse() * target).norm(), 1e-10);
}

TEST(AlignR, BeatsRandomSearch) {
  Rng rng(3);
  const CMatrix g = rng.gaussian(4, 4, Field::Real);
  const CMatrix h = g * g.adjoint();
  const CMatrix x = rng.gaussian(4, 3, Field::Real);
  const CMatrix target = rng.gaussian(4, 1, Field::Real);
  const double best = alignment_penalty(h, x, target, align_R(h, x, target));
  for (int k = 0; k < 1000; ++k)
    EXPECT_LE(best, alignment_penalty(h, x, target, rng.gaussian(3, 1, Field::Real)) + 1e-12);
}

TEST(BuildXlambda, NoiselessInvertibleIsTruth) {
  Rng rng(4);
  const CMatrix F = rng.gaussian(4, 4, Field::Real);
  const CMatrix xs = rng.gaussian(4, 1, Field::Real);
  const auto r = build_Xlambda(F, (F * xs).rowwise().norm(), 0.0, xs, Field::Real);
  EXPECT_LE((r.xlam - xs).norm(), 1e-10);
  EXPECT_NEAR(r.lhs, 0.0, 1e-20);
}

TEST(BuildXlambda, ScalarExample) {
  const auto r = build_Xlambda(cmat(1, 1, {1}), vec({2}), 1.0, cmat(1, 1, {2}), Field::Real);
  EXPECT_NEAR(r.xlam(0, 0).real(), 1.0, 1e-15);
  EXPECT_NEAR(r.lhs, 2.0, 1e-14);
  EXPECT_NEAR(r.rhs, 4.0, 1e-14);
}

TEST(BuildXlambda, BoundHoldsOnNoisyInstances) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const Field field = k % 2 ? Field::Complex : Field::Real;
    const Index n = 5 + k % 20, d = 1 + k % 5, r = 1 + k % 2;
    const CMatrix F = rng.gaussian(n, d, field);
    const CMatrix xs = rng.gaussian(d, r, field);
    RVector y = (F * xs).rowwise().norm();
    for (Index i = 0; i < n; ++i) y(i) = std::max(0.0, y(i) + 0.3 * rng.normal());
    const double lambda = k % 4 == 0 ? 0.0 : std::exp(rng.normal());
    const auto out = build_Xlambda(F, y, lambda, xs, field);
    const double scale = std::max({1.0, y.squaredNorm() / static_cast<double>(n), xs.squaredNorm()});
    EXPECT_GE(out.bound_check, -1e-10 * scale) << k;
  }
}

TEST(TheoremSlack, ExactFitIsTight) {
  Rng rng(6);
  const auto ens = gaussian_ensemble(5, 30, Field::Real, 7);
  const CMatrix xs = rng.gaussian(5, 1, Field::Real);
  const RVector y = ens.alpha(xs);
  const RVector eps = RVector::Zero(30);
  for (auto [th, fam] : {std::pair{Theorem::Quartic, LossFamily::Quartic},
                         std::pair{Theorem::Amplitude, LossFamily::Amplitude}}) {
    const auto rep = theorem_slack(th, make(fam, 0.0, 0.0), ens, y, eps, xs, pad(xs, 3), selector(3, 1));
    EXPECT_NEAR(rep.lhs, 0.0, 1e-12);
    EXPECT_NEAR(rep.rhs, 0.0, 1e-12);
    EXPECT_NEAR(rep.slack, 0.0, 1e-12);
  }
  const auto poi = theorem_slack(Theorem::Poisson, make(LossFamily::Poisson, 0.0, 0.0), ens, y, eps, xs, pad(xs, 3),
                                 selector(3, 1));
  EXPECT_NEAR(poi.lhs, 0.0, 1e-12);
  EXPECT_GE(poi.slack, 0.0);
  EXPECT_DOUBLE_EQ(poi.slack, poi.rhs - poi.lhs);
}

TEST(TheoremSlack, PreconditionsEnforced) {
  Rng rng(8);
  const auto ens = gaussian_ensemble(3, 12, Field::Real, 9);
  const CMatrix xs = rng.gaussian(3, 1, Field::Real);
  const RVector y = ens.alpha(xs);
  EXPECT_THROW(theorem_slack(Theorem::Amplitude, make(LossFamily::Amplitude, 0, 0), ens, y, RVector(), xs, xs),
               PreconditionViolated);
  EXPECT_THROW(theorem_slack(Theorem::Poisson, make(LossFamily::Poisson, 0, 0), ens, y, RVector(), xs, pad(xs, 2)),
               PreconditionViolated);
  EXPECT_THROW(theorem_slack(Theorem::Amplitude, make(LossFamily::Amplitude, 0, 0), ens, y,
                             RVector::Constant(12, 1.0), xs, pad(xs, 2)),
               ArgumentError);
  CMatrix x = pad(xs, 3);
  x.setZero();
  EXPECT_THROW(theorem_slack(Theorem::Poisson, make(LossFamily::Poisson, 0, 0), ens, y, RVector(), xs, x),
               NonsmoothPoint);
}

TEST(TheoremSlack, AlignedRDominatesBaselines) {
  Rng rng(10);
  for (int k = 0; k < 40; ++k) {
    const Field field = k % 2 ? Field::Complex : Field::Real;
    const auto ens = gaussian_ensemble(4, 24, field, 20 + static_cast<std::uint64_t>(k));
    const CMatrix xs = rng.gaussian(4, 1, field);
    RVector y = ens.alpha(xs);
    for (Index i = 0; i < y.size(); ++i) y(i) = std::abs(y(i) + 0.1 * rng.normal());
    const CMatrix x = rng.gaussian(4, 3, field);
    const double lambda = k % 3 == 0 ? 0.0 : 0.05;
    for (Theorem th : {Theorem::Quartic, Theorem::Amplitude, Theorem::Poisson, Theorem::PhaseCut}) {
      const LossFamily fam = th == Theorem::Quartic ? LossFamily::Quartic
                             : th == Theorem::Poisson ? LossFamily::Poisson
                                                      : LossFamily::Amplitude;
      const LossSpec spec = make(fam, 0.0, lambda);
      const double best = theorem_slack(th, spec, ens, y, RVector(), xs, x).rhs;
      const double zero = theorem_slack(th, spec, ens, y, RVector(), xs, x, CMatrix::Zero(3, 1)).rhs;
      const double sel = theorem_slack(th, spec, ens, y, RVector(), xs, x, selector(3, 1)).rhs;
      const double tol = 1e-10 * std::max(1.0, std::abs(best));
      EXPECT_LE(best, zero + tol) << to_string(th) << " " << k;
      EXPECT_LE(best, sel + tol) << to_string(th) << " " << k;
    }
  }
}

TEST(TheoremSlack, GaugeInvariant) {
  Rng rng(11);
  const auto ens = gaussian_ensemble(5, 30, Field::Complex, 12);
  const CMatrix xs = rng.gaussian(5, 1, Field::Complex);
  RVector y = ens.alpha(xs);
  for (Index i = 0; i < y.size(); ++i) y(i) = std::abs(y(i) + 0.1 * rng.normal());
  const CMatrix x = rng.gaussian(5, 3, Field::Complex);
  const CMatrix q = random_unitary(3, Field::Complex, rng);
  for (Theorem th : {Theorem::Quartic, Theorem::Amplitude, Theorem::Poisson, Theorem::PhaseCut}) {
    const LossFamily fam = th == Theorem::Quartic ? LossFamily::Quartic
                           : th == Theorem::Poisson ? LossFamily::Poisson
                                                    : LossFamily::Amplitude;
    const LossSpec spec = make(fam, 1e-9, 0.05);
    const double a = theorem_slack(th, spec, ens, y, RVector(), xs, x).slack;
    const double b = theorem_slack(th, spec, ens, y, RVector(), xs, x * q).slack;
    EXPECT_NEAR(a, b, 1e-8 * std::max(1.0, std::abs(a))) << to_string(th);
  }
}

TEST(TheoremSlack, NonnegativeAtCertifiedPoints) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Field field = seed % 2 ? Field::Complex : Field::Real;
    const auto ens = gaussian_ensemble(6, 48, field, mix_seed(seed, 1));
    Rng rng(mix_seed(seed, 2));
    const CMatrix xs = rng.gaussian(6, 1, field);
    RVector y = ens.alpha(xs);
    for (Index i = 0; i < y.size(); ++i) y(i) = std::max(0.0, y(i) + 0.05 * rng.normal());
    const double lambda = seed % 3 == 0 ? 0.0 : 0.02;
    for (LossFamily fam : {LossFamily::Quartic, LossFamily::Amplitude, LossFamily::Poisson}) {
      const LossSpec spec = make(fam, default_delta(fam, y), lambda);
      SolverConfig cfg;
      cfg.p = 3;
      cfg.seed = seed;
      const auto r = solve_factored(spec, ens, y, cfg);
      if (!r.cert.certified) continue;
      const Theorem th = fam == LossFamily::Quartic ? Theorem::Quartic
                         : fam == LossFamily::Poisson ? Theorem::Poisson
                                                      : Theorem::Amplitude;
      const auto rep = theorem_slack(th, spec, ens, y, RVector(), xs, r.x);
      EXPECT_GE(rep.slack, -1e-6 * rep.scale) << to_string(th) << " seed " << seed;
      ++checked;
    }
    const auto prob = build_phasecut(ens, y, lambda);
    PhaseCutConfig pc;
    pc.p = 3;
    pc.seed = seed;
    const auto r = solve_phasecut(prob, pc);
    if (r.cert.certified) {
      const auto rep = theorem_slack(Theorem::PhaseCut, make(LossFamily::Amplitude, 0.0, lambda), ens, y, RVector(), xs,
                                     r.x);
      EXPECT_GE(rep.slack, -1e-6 * rep.scale) << "phasecut seed " << seed;
      ++checked;
    }
  }
  EXPECT_GE(checked, 40);
}

TEST(AbIneq, EqualityCase) {
  const auto c = check_ab_ineq(single(1.0), cmat(1, 1, {2}), cmat(1, 1, {1}));
  EXPECT_NEAR(c.lhs, 1.0, 1e-15);
  EXPECT_NEAR(c.rhs, 1.0, 1e-15);
  EXPECT_NEAR(c.slack, 0.0, 1e-12);
}

TEST(AbIneq, IdenticalAndDegenerateInputs) {
  const auto ens = gaussian_ensemble(3, 8, Field::Real, 1);
  Rng rng(2);
  const CMatrix x = rng.gaussian(3, 2, Field::Real);
  EXPECT_NEAR(check_ab_ineq(ens, x, x).slack, 0.0, 1e-15);
  const auto d = check_ab_ineq(ens, CMatrix::Zero(3, 1), CMatrix::Zero(3, 1));
  EXPECT_TRUE(d.degenerate);
  EXPECT_TRUE(std::isinf(d.slack));
}

TEST(AbIneq, RandomProperty) {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Field field = k % 2 ? Field::Complex : Field::Real;
    const auto ens = gaussian_ensemble(1 + k % 6, 1 + k % 13, field, 1000 + static_cast<std::uint64_t>(k));
    const CMatrix x1 = rng.gaussian(ens.d(), 1 + k % 3, field);
    const CMatrix x2 = rng.gaussian(ens.d(), 1 + k % 2, field);
    const auto c = check_ab_ineq(ens, x1, x2);
    EXPECT_GE(c.slack, -1e-12 * std::max(1.0, c.lhs));
  }
}

TEST(NucnormLb, Anchors) {
  Rng rng(4);
  const CVector xs = rng.gaussian(3, 1, Field::Complex);
  CVector v0 = rng.gaussian(2, 1, Field::Complex);
  v0 /= v0.norm();
  EXPECT_NEAR(check_nucnorm_lb(xs * v0.adjoint(), xs).slack, 0.0, 1e-12);
  const auto c = check_nucnorm_lb(cmat(2, 1, {1, 0}), CVector(cmat(2, 1, {0, 1})));
  EXPECT_NEAR(c.lhs, 2.0, 1e-12);
  EXPECT_NEAR(c.rhs, 0.5, 1e-12);
  EXPECT_NEAR(c.slack, 1.5, 1e-12);
}

TEST(NucnormLb, RandomProperty) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const Field field = k % 2 ? Field::Complex : Field::Real;
    const Index d = 1 + k % 6;
    const CMatrix x = rng.gaussian(d, 1 + k % 4, field);
    const CVector xs = rng.gaussian(d, 1, field);
    const auto c = check_nucnorm_lb(x, xs);
    const double scale = std::max({1.0, x.squaredNorm(), xs.squaredNorm()});
    EXPECT_GE(c.slack, -1e-10 * scale);
    EXPECT_NEAR(c.v.norm(), 1.0, 1e-12);
    EXPECT_GE((xs.adjoint() * (x * c.v))(0, 0).real(), -1e-12);
  }
}

TEST(AIneq, ScalarCriticalPoint) {
  EXPECT_NEAR(check_a_ineq(make(LossFamily::Amplitude, 0, 0), single(1.0), vec({2}), cmat(1, 1, {2})).slack, 0.0,
              1e-15);
}

TEST(AIneq, RidgeRecoveredPoints) {
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const Field field = k % 2 ? Field::Complex : Field::Real;
    const auto ens = gaussian_ensemble(4, 20, field, 500 + static_cast<std::uint64_t>(k));
    RVector y(20);
    for (Index i = 0; i < 20; ++i) y(i) = std::abs(rng.normal());
    const double lambda = k % 3 == 0 ? 0.0 : 0.3;
    const auto prob = build_phasecut(ens, y, lambda);
    const CMatrix x = ridge_recover(prob, normalize_rows(rng.gaussian(20, 2, field)));
    EXPECT_GE(check_a_ineq(make(LossFamily::Amplitude, 0, lambda), ens, y, x).slack, -1e-10);
  }
}

TEST(SubGRatio, ScalingCaseAndGaussianFloor) {
  const auto ens = gaussian_ensemble(10, 200, Field::Real, 7);
  Rng rng(8);
  const CVector xs = rng.gaussian(10, 1, Field::Real);
  const double expected = ens.alpha(xs).squaredNorm() / 200.0 / xs.squaredNorm();
  // Z = 2 Z_*: lhs and distance both scale linearly from Z_*.
  const CMatrix g = std::sqrt(2.0) * xs;
  const double lhs = (ens.beta(g) - ens.beta(xs)).cwiseAbs().sum() / 200.0;
  EXPECT_NEAR(lhs / xs.squaredNorm(), expected, 1e-12);
  const auto r = sample_subG_ratio(ens, xs, 500, 9);
  EXPECT_GE(r.evaluated, 400);
  EXPECT_GE(r.min_ratio, 0.1);
  EXPECT_LE(r.min_ratio, expected + 1e-12);
}

TEST(RecoveryMetrics, ExactAndSignCases) {
  Rng rng(9);
  const CVector xs = rng.gaussian(4, 1, Field::Complex);
  CVector v = rng.gaussian(3, 1, Field::Complex);
  v /= v.norm();
  const auto m = recovery_metrics(xs * v.adjoint(), xs);
  EXPECT_LE(m.nuclear_error, 1e-12);
  EXPECT_LE(m.vector_error, 1e-12);
  const CVector xr = rng.gaussian(4, 1, Field::Real);
  EXPECT_LE(recovery_metrics(CMatrix(-xr), xr).vector_error, 1e-14);
}

TEST(RecoveryMetrics, WeightedNullSpace) {
  const CVector xs = cmat(2, 1, {1, 0});
  const CMatrix x = cmat(2, 1, {1, 5});
  const auto m = recovery_metrics(x, xs, vec({1, 0}));
  EXPECT_NEAR(m.vector_error, 0.0, 1e-14);
  EXPECT_NEAR(m.nuclear_error, 0.0, 1e-14);
  EXPECT_THROW(recovery_metrics(x, xs, vec({1, -1})), ArgumentError);
}

TEST(RecoveryMetrics, PhaseInvariant) {
  Rng rng(10);
  const CVector xs = rng.gaussian(5, 1, Field::Complex);
  const CMatrix x = rng.gaussian(5, 1, Field::Complex);
  const Complex s0 = std::polar(1.0, 0.7);
  EXPECT_NEAR(recovery_metrics(x, xs).vector_error, recovery_metrics(CMatrix(s0 * x), xs).vector_error, 1e-12);
}
