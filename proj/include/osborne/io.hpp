#ifndef OSBORNE_IO_HPP
#define OSBORNE_IO_HPP

// MatrixMarket coordinate files and plain-text scaling vectors.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "osborne/core.hpp"

namespace osborne::io {

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MatrixFile {
  SparseNonnegMatrix matrix;
  BuildSummary summary;
  std::vector<std::string> comments; // header comment lines without the leading '%'
};

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Accepts `coordinate` files with field real, integer or pattern and symmetry
// general or symmetric. Indices are 1-based; diagonal entries are dropped.
inline MatrixFile read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty MatrixMarket input");
  std::istringstream head(line);
  std::string banner, object, format, field, symmetry;
  head >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix" || format != "coordinate") throw ParseError("only 'matrix coordinate' files are supported");
  if (field != "real" && field != "integer" && field != "pattern" && field != "double")
    throw ParseError("unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError("unsupported symmetry '" + symmetry + "'");
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";

  MatrixFile out;
  std::size_t rows = 0, cols = 0, count = 0;
  std::size_t lineno = 1;
  for (;;) {
    if (!std::getline(in, line)) throw ParseError("missing size line");
    ++lineno;
    if (!line.empty() && line[0] == '%') {
      out.comments.push_back(line.substr(1));
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> count)) throw ParseError("malformed size line " + std::to_string(lineno));
    break;
  }
  if (rows != cols) throw ParseError("matrix must be square");
  if (rows == 0) throw ParseError("matrix dimension must be positive");

  std::vector<Triplet> t;
  t.reserve(symmetric ? 2 * count : count);
  std::size_t seen = 0;
  while (seen < count && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long long i = 0, j = 0;
    double v = 1.0;
    if (!(ss >> i >> j) || (!pattern && !(ss >> v)))
      throw ParseError("malformed entry on line " + std::to_string(lineno));
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > rows || static_cast<std::size_t>(j) > cols)
      throw ParseError("index out of range on line " + std::to_string(lineno));
    if (v < 0.0) throw ParseError("negative value on line " + std::to_string(lineno));
    const auto r = static_cast<index_t>(i - 1), c = static_cast<index_t>(j - 1);
    t.push_back({r, c, v});
    if (symmetric && r != c) t.push_back({c, r, v});
    ++seen;
  }
  if (seen < count) throw ParseError("expected " + std::to_string(count) + " entries, found " + std::to_string(seen));
  try {
    out.matrix = build_matrix(rows, std::move(t), &out.summary);
  } catch (const InvalidInput& e) {
    throw ParseError(e.what());
  }
  return out;
}

inline MatrixFile read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_matrix_market(in);
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_matrix_market(std::ostream& out, const SparseNonnegMatrix& a,
                                const std::vector<std::string>& comments = {}) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  for (const auto& c : comments) out << '%' << c << '\n';
  out << a.n() << ' ' << a.n() << ' ' << a.nnz() << '\n';
  for (const auto& t : a.entries()) out << t.row + 1 << ' ' << t.col + 1 << ' ' << format_real(t.value) << '\n';
}

// One value per line, 17 significant digits. `divisor` rescales on output
// (ln 2 prints base-2 exponents).
inline void write_scaling(std::ostream& out, const ScalingVector& u, double divisor = 1.0) {
  for (double v : u) out << format_real(v / divisor) << '\n';
}

// Blank lines and lines starting with '#' or '%' are ignored.
inline ScalingVector read_scaling(std::istream& in) {
  ScalingVector u;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#' || line[b] == '%') continue;
    std::istringstream ss(line);
    double v;
    if (!(ss >> v)) throw ParseError("malformed scaling value on line " + std::to_string(lineno));
    u.push_back(v);
  }
  return u;
}

inline ScalingVector read_scaling(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_scaling(in);
}

} // namespace osborne::io

#endif
