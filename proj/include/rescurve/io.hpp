#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rescurve/param_choice.hpp"
#include "rescurve/residual_curve.hpp"
#include "rescurve/solver.hpp"
#include "rescurve/types.hpp"

namespace rescurve {

/// Shortest exact decimal form of a double (17 significant digits).
inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline double parse_double(const std::string& tok, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || (end && *end != '\0'))
    throw std::runtime_error(context + ": cannot parse number '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Reads a Matrix Market file (coordinate or array, real/integer,
/// general/symmetric) into a dense matrix.
inline MatrixX<double> load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_matrix_market: cannot open " + path);

  std::string banner;
  if (!std::getline(in, banner)) throw std::runtime_error("load_matrix_market: empty file " + path);
  std::istringstream bs(detail::lower(banner));
  std::string head, object, format, field, symmetry;
  bs >> head >> object >> format >> field >> symmetry;
  if (head != "%%matrixmarket" || object != "matrix")
    throw std::runtime_error("load_matrix_market: not a Matrix Market matrix file: " + path);
  if (format != "coordinate" && format != "array")
    throw std::runtime_error("load_matrix_market: unsupported format '" + format + "'");
  if (field != "real" && field != "integer")
    throw std::runtime_error("load_matrix_market: unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw std::runtime_error("load_matrix_market: unsupported symmetry '" + symmetry + "'");

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  Index m = 0, n = 0;
  long long nnz = 0;
  if (format == "coordinate") {
    if (!(sizes >> m >> n >> nnz)) throw std::runtime_error("load_matrix_market: bad size line");
  } else {
    if (!(sizes >> m >> n)) throw std::runtime_error("load_matrix_market: bad size line");
  }
  if (m < 1 || n < 1) throw std::runtime_error("load_matrix_market: bad dimensions");

  MatrixX<double> a = MatrixX<double>::Zero(m, n);
  if (format == "coordinate") {
    long long seen = 0;
    while (seen < nnz && std::getline(in, line)) {
      if (line.empty() || line[0] == '%') continue;
      std::istringstream ls(line);
      Index i = 0, j = 0;
      double v = 0;
      if (!(ls >> i >> j >> v)) throw std::runtime_error("load_matrix_market: bad entry line '" + line + "'");
      if (i < 1 || i > m || j < 1 || j > n) throw std::runtime_error("load_matrix_market: index out of range");
      a(i - 1, j - 1) = v;
      if (symmetry == "symmetric") a(j - 1, i - 1) = v;
      ++seen;
    }
    if (seen != nnz) throw std::runtime_error("load_matrix_market: truncated entry list");
  } else {
    // array format stores the dense block in column-major order
    for (Index j = 0; j < n; ++j) {
      const Index imin = symmetry == "symmetric" ? j : 0;
      for (Index i = imin; i < m; ++i) {
        double v = 0;
        if (!(in >> v)) throw std::runtime_error("load_matrix_market: truncated array data");
        a(i, j) = v;
        if (symmetry == "symmetric") a(j, i) = v;
      }
    }
  }
  return a;
}

/// Reads a one-column CSV of numbers. Blank lines and '#' comments are
/// skipped; a single non-numeric header line is tolerated.
inline VectorX<double> load_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_vector_csv: cannot open " + path);
  std::vector<double> vals;
  std::string line;
  bool first_content = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) {
      if (first_content) {
        first_content = false;
        continue;  // header line
      }
      throw std::runtime_error("load_vector_csv: cannot parse line '" + line + "'");
    }
    first_content = false;
    vals.push_back(v);
  }
  if (vals.empty()) throw std::runtime_error("load_vector_csv: no values in " + path);
  VectorX<double> v(static_cast<Index>(vals.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return v;
}

inline void write_sweep_csv(const std::string& path, const Sweep<double>& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sweep_csv: cannot open " + path);
  out << "alpha,residual,xnorm,gradnorm\n";
  for (const auto& pt : s.points) {
    out << format_g17(pt.alpha) << ',' << format_g17(pt.residual_norm) << ','
        << format_g17(pt.solution_norm) << ',' << format_g17(pt.gradient_norm) << '\n';
  }
}

/// Reads a sweep back from CSV. Points carry norms only (no solution
/// vectors); data_norm defaults to the residual at the largest alpha.
inline Sweep<double> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sweep_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_sweep_csv: empty file " + path);
  if (line.find("alpha") == std::string::npos)
    throw std::runtime_error("read_sweep_csv: missing header in " + path);

  Sweep<double> s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split_csv_line(line);
    if (cols.size() != 4) throw std::runtime_error("read_sweep_csv: expected 4 columns, got line '" + line + "'");
    TikhonovPoint<double> pt;
    pt.alpha = detail::parse_double(cols[0], "read_sweep_csv");
    pt.residual_norm = detail::parse_double(cols[1], "read_sweep_csv");
    pt.solution_norm = detail::parse_double(cols[2], "read_sweep_csv");
    pt.gradient_norm = detail::parse_double(cols[3], "read_sweep_csv");
    s.points.push_back(std::move(pt));
  }
  if (s.points.empty()) throw std::runtime_error("read_sweep_csv: no rows in " + path);
  s.data_norm = s.points.front().residual_norm;
  s.grid.alpha0 = s.points.front().alpha;
  s.grid.steps = static_cast<int>(s.points.size());
  if (s.points.size() > 1) s.grid.ratio = s.points[1].alpha / s.points[0].alpha;
  s.meta.kind = "external";
  s.meta.n = 0;
  return s;
}

inline void write_curve_csv(const std::string& path, const ResidualCurve<double>& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_curve_csv: cannot open " + path);
  out << "alpha,residual,dr\n";
  for (std::size_t i = 0; i < c.alpha.size(); ++i) {
    out << format_g17(c.alpha[i]) << ',' << format_g17(c.r[i]) << ',' << format_g17(c.dr[i]) << '\n';
  }
}

inline void write_choice_csv(const std::string& path, const std::vector<ChoiceResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_choice_csv: cannot open " + path);
  out << "rule,alpha,err_ratio,res_ratio\n";
  for (const auto& r : results) {
    out << r.label << ',';
    out << (r.ok ? format_g17(r.alpha) : std::string("nan")) << ',';
    out << (r.error_ratio ? format_g17(*r.error_ratio) : std::string("nan")) << ',';
    out << (r.residual_ratio ? format_g17(*r.residual_ratio) : std::string("nan")) << '\n';
  }
}

}  // namespace rescurve
