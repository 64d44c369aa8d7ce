#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ampscape/types.hpp"

namespace ampscape {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);
/// Inverse of format_double. Throws IoError on malformed input.
double parse_double(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

struct MatrixData {
  CMatrix values;
  Field field = Field::Real;
};

/// Header `# rows,cols,field`, then one row per line; complex entries are
/// written as adjacent (real, imaginary) columns.
void write_matrix(std::ostream& os, const CMatrix& m, Field field);
MatrixData read_matrix(std::istream& is);
void write_matrix_file(const std::string& path, const CMatrix& m, Field field);
MatrixData read_matrix_file(const std::string& path);

struct ObservationData {
  RVector y;
  std::optional<RVector> eps;
};

/// Columns `i,y,eps`; eps is left empty when absent.
void write_observation(std::ostream& os, const RVector& y, const std::optional<RVector>& eps);
ObservationData read_observation(std::istream& is);
void write_observation_file(const std::string& path, const RVector& y, const std::optional<RVector>& eps);
ObservationData read_observation_file(const std::string& path);

}  // namespace ampscape
