#include "ampscape/rng.hpp"
#include "ampscape/types.hpp"

#include <cmath>
#include <string>

namespace ampscape {

std::string_view to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

Field parse_field(std::string_view s) {
  if (s == "real" || s == "R") return Field::Real;
  if (s == "complex" || s == "C") return Field::Complex;
  throw ArgumentError("unknown field '" + std::string(s) + "' (expected real|complex)");
}

bool is_real(const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j).imag() != 0.0) return false;
  return true;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t state = base;
  std::uint64_t a = splitmix64(state);
  state = a ^ (index * 0xD1B54A32D192ED03ULL);
  return splitmix64(state);
}

CMatrix Rng::gaussian(Index rows, Index cols, Field field) {
  CMatrix out(rows, cols);
  if (field == Field::Real) {
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) out(i, j) = Complex(normal(), 0.0);
  } else {
    const double s = std::sqrt(0.5);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) {
        const double re = normal();
        const double im = normal();
        out(i, j) = Complex(s * re, s * im);
      }
  }
  return out;
}

}  // namespace ampscape
