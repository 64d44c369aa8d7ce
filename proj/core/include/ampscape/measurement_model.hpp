#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ampscape/types.hpp"

namespace ampscape {

enum class Distribution {
  GaussianIID,
  RademacherIID,
  ComplexGaussianIID,
  SpectralGaussian,
  RealPartOfComplex,
};

std::string_view to_string(Distribution d);
Distribution parse_distribution(std::string_view s);

/// Diagonal covariance spectrum sigma_1 >= sigma_2 >= ... >= 0 (truncated at D).
struct SpectralCovariance {
  std::vector<double> sigmas;

  /// sigma_m = m^{-exponent}, m = 1..dim.
  static SpectralCovariance power_law(Index dim, double exponent);

  Index dim() const { return static_cast<Index>(sigmas.size()); }
  /// sum_{m > d} sigma_m (1-based m).
  double tail_sum(Index d) const;
  /// sigma_{d+1}, or 0 past the end.
  double sigma_after(Index d) const;
  /// constant * (sigma_{d+1} + tail_sum(d) / n): the regularisation floor.
  double lambda_floor(Index d, Index n, double constant) const;
  void validate() const;
};

struct EnsembleSpec {
  Index d = 0;
  Index n = 0;
  Field field = Field::Real;
  Distribution dist = Distribution::GaussianIID;
  SpectralCovariance spectrum;  // SpectralGaussian only; d is taken from it when 0
};

/// The measurement matrices A_1..A_n, either as rank-one rows f_i^* of F
/// (A_i = f_i f_i^*) or as explicit Hermitian PSD matrices.
class MeasurementEnsemble {
 public:
  struct RankOne {
    CMatrix rows;  // n x d, row i is f_i^*
  };
  struct Explicit {
    std::vector<CMatrix> mats;  // n matrices, d x d
  };

  /// Validates: nonzero rows, real entries when field is Real.
  static MeasurementEnsemble rank_one(Field field, CMatrix rows, std::string distribution = "custom");
  /// Validates: Hermitian, PSD (min eig >= -1e-10 ||A||), nonzero, real when field is Real.
  static MeasurementEnsemble psd(Field field, std::vector<CMatrix> mats, std::string distribution = "custom");

  Field field() const { return field_; }
  Index d() const { return d_; }
  Index n() const { return n_; }
  bool is_rank_one() const { return std::holds_alternative<RankOne>(form_); }
  const std::string& distribution() const { return distribution_; }

  /// F (n x d). Throws ArgumentError for the explicit form.
  const CMatrix& rows() const;
  const std::vector<CMatrix>& explicit_matrices() const;

  /// A_i as an explicit d x d matrix.
  CMatrix matrix(Index i) const;
  /// The same ensemble with every A_i stored explicitly.
  MeasurementEnsemble to_explicit() const;

  /// beta(X)_i = <A_i, X X^*>, clamped at zero.
  RVector beta(const CMatrix& x) const;
  RVector alpha(const CMatrix& x) const;
  /// c_i = Re tr(X^* A_i Y) for all i.
  RVector cross(const CMatrix& x, const CMatrix& y) const;
  /// sum_i c_i A_i V.
  CMatrix weighted_apply(const RVector& c, const CMatrix& v) const;
  /// sum_i c_i A_i as a d x d matrix.
  CMatrix weighted_sum(const RVector& c) const;
  /// tr A_i for all i.
  RVector traces() const;

 private:
  MeasurementEnsemble(Field field, Index d, Index n, std::variant<RankOne, Explicit> form,
                      std::string distribution);
  void check_rows(const CMatrix& x) const;

  Field field_;
  Index d_;
  Index n_;
  std::variant<RankOne, Explicit> form_;
  std::string distribution_;
};

MeasurementEnsemble gen_ensemble(const EnsembleSpec& spec, std::uint64_t seed);

struct GroundTruth {
  CMatrix xstar;  // d x r

  Index rank() const { return xstar.cols(); }
  CMatrix gram() const { return xstar * xstar.adjoint(); }
};

struct NoiseSpec {
  struct None {};
  struct Gaussian {
    double sigma = 0.0;
  };
  struct Custom {
    RVector eps;
  };
  std::variant<None, Gaussian, Custom> kind = None{};

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double sigma) { return {Gaussian{sigma}}; }
  static NoiseSpec custom(RVector eps) { return {Custom{std::move(eps)}}; }
};

struct Observation {
  RVector y;                        // y_i >= 0
  std::optional<RVector> eps;       // raw (pre-clamp) noise
  std::optional<GroundTruth> truth;

  Index n() const { return y.size(); }
  /// Number of indices where alpha(X_*)_i + eps_i < 0 was clamped to 0.
  Index clamped_count(const MeasurementEnsemble& ens) const;
  /// y - alpha(X_*): the noise for which y = alpha(X_*) + eps holds exactly.
  RVector effective_noise(const MeasurementEnsemble& ens) const;
  /// xi = y^2 - beta(X_*).
  RVector xi(const MeasurementEnsemble& ens) const;
};

/// y_i = max(alpha(X_*)_i + eps_i, 0); raw eps is retained.
Observation observe(const MeasurementEnsemble& ens, const GroundTruth& truth,
                    const NoiseSpec& noise, std::uint64_t seed);

/// || (1/n) sum_i A_i - target ||_op.
double empirical_cov_deviation(const MeasurementEnsemble& ens, const CMatrix& target);

}  // namespace ampscape
