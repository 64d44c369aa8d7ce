#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ampscape {

using Complex = std::complex<double>;
using Index = Eigen::Index;

// All field-valued data is stored as complex; real problems simply keep
// imaginary parts at exactly zero. Every random draw honours the field so a
// real problem never leaves the real subspace.
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

enum class Field { Real, Complex };

/// c_F: 1 over the reals, 2 over the complex numbers.
constexpr int field_constant(Field f) { return f == Field::Real ? 1 : 2; }

std::string_view to_string(Field f);
Field parse_field(std::string_view s);

/// Real inner product Re tr(a^* b) on F^{m x k}.
inline double re_dot(const CMatrix& a, const CMatrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

/// True when every entry has zero imaginary part.
bool is_real(const CMatrix& m);

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a loss derivative is -infinity at an active measurement (delta = 0).
class NonsmoothPoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a theorem's standing assumptions (e.g. rank floors) are not met.
class PreconditionViolated : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ampscape
