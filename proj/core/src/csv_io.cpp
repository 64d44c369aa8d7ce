#include "ampscape/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ampscape {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("malformed number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace {

bool next_data_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return is;
}

}  // namespace

void write_matrix(std::ostream& os, const CMatrix& m, Field field) {
  os << "# " << m.rows() << ',' << m.cols() << ',' << to_string(field) << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      os << format_double(m(i, j).real());
      if (field == Field::Complex) os << ',' << format_double(m(i, j).imag());
    }
    os << '\n';
  }
}

MatrixData read_matrix(std::istream& is) {
  std::string line;
  if (!next_data_line(is, line) || line.rfind("#", 0) != 0) throw IoError("matrix file: missing '# rows,cols,field' header");
  auto head = split_csv_line(std::string_view(line).substr(1));
  if (head.size() != 3) throw IoError("matrix file: malformed header");
  MatrixData out;
  Index rows = 0, cols = 0;
  try {
    rows = std::stol(head[0]);
    cols = std::stol(head[1]);
    std::string f = head[2];
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    out.field = parse_field(f);
  } catch (const std::exception& e) {
    throw IoError(std::string("matrix file: bad header: ") + e.what());
  }
  if (rows < 0 || cols < 0) throw IoError("matrix file: negative dimensions");
  const Index width = cols * field_constant(out.field);
  out.values = CMatrix::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!next_data_line(is, line)) throw IoError("matrix file: too few rows");
    auto cells = split_csv_line(line);
    if (static_cast<Index>(cells.size()) != width) throw IoError("matrix file: wrong number of columns in row " + std::to_string(i));
    for (Index j = 0; j < cols; ++j) {
      if (out.field == Field::Real) {
        out.values(i, j) = Complex(parse_double(cells[static_cast<std::size_t>(j)]), 0.0);
      } else {
        out.values(i, j) = Complex(parse_double(cells[static_cast<std::size_t>(2 * j)]),
                                   parse_double(cells[static_cast<std::size_t>(2 * j + 1)]));
      }
    }
  }
  return out;
}

void write_matrix_file(const std::string& path, const CMatrix& m, Field field) {
  auto os = open_out(path);
  write_matrix(os, m, field);
  if (!os) throw IoError("write failed for '" + path + "'");
}

MatrixData read_matrix_file(const std::string& path) {
  auto is = open_in(path);
  return read_matrix(is);
}

void write_observation(std::ostream& os, const RVector& y, const std::optional<RVector>& eps) {
  os << "i,y,eps\n";
  for (Index i = 0; i < y.size(); ++i) {
    os << i << ',' << format_double(y(i)) << ',';
    if (eps) os << format_double((*eps)(i));
    os << '\n';
  }
}

ObservationData read_observation(std::istream& is) {
  std::string line;
  if (!next_data_line(is, line)) throw IoError("observation file: empty");
  if (line != "i,y,eps") throw IoError("observation file: expected header 'i,y,eps'");
  std::vector<double> ys, es;
  bool any_eps = false, missing_eps = false;
  while (next_data_line(is, line)) {
    auto cells = split_csv_line(line);
    if (cells.size() != 3) throw IoError("observation file: expected 3 columns");
    ys.push_back(parse_double(cells[1]));
    if (!(ys.back() >= 0.0) || !std::isfinite(ys.back()))
      throw IoError("observation file: y must be finite and nonnegative (row " + std::to_string(ys.size()) + ")");
    if (cells[2].empty()) {
      missing_eps = true;
      es.push_back(0.0);
    } else {
      any_eps = true;
      es.push_back(parse_double(cells[2]));
    }
  }
  if (any_eps && missing_eps) throw IoError("observation file: eps column partially filled");
  ObservationData out;
  out.y = Eigen::Map<RVector>(ys.data(), static_cast<Index>(ys.size()));
  if (any_eps) out.eps = Eigen::Map<RVector>(es.data(), static_cast<Index>(es.size()));
  return out;
}

void write_observation_file(const std::string& path, const RVector& y, const std::optional<RVector>& eps) {
  auto os = open_out(path);
  write_observation(os, y, eps);
  if (!os) throw IoError("write failed for '" + path + "'");
}

ObservationData read_observation_file(const std::string& path) {
  auto is = open_in(path);
  return read_observation(is);
}

}  // namespace ampscape
