#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "informa/core.hpp"

namespace informa {

enum class TrajectoryKind { InputOutput, InputState };

/// A measured record: inputs u(t) and outputs y(t) (or states x(t)) for
/// t = t0 .. t0 + length - 1. t0 may be negative; samples before t = 0 act as
/// pre-samples for lagged regressors and instruments and are stored explicitly
/// rather than implied by zero padding.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::InputOutput;
  Matrix u;              // m x T
  Matrix y_or_x;         // p x T (outputs) or n x T (states)
  int t0 = 0;

  int input_dim() const { return static_cast<int>(u.rows()); }
  int signal_dim() const { return static_cast<int>(y_or_x.rows()); }
  int length() const { return static_cast<int>(u.cols()); }
  int t_end() const { return t0 + length() - 1; }

  bool has_time(int t) const { return t >= t0 && t <= t_end(); }
  int column_of(int t) const { return t - t0; }

  Eigen::VectorXd input_at(int t) const { return u.col(column_of(t)); }
  Eigen::VectorXd signal_at(int t) const { return y_or_x.col(column_of(t)); }

  void validate() const {
    require(u.cols() == y_or_x.cols(), "trajectory: u and y/x must have equal sample counts");
    require(u.rows() >= 1 && y_or_x.rows() >= 1, "trajectory: dimensions must be at least 1");
    require(u.cols() >= 1, "trajectory: at least one sample required");
  }
};

/// Optional expectations checked against a parsed file.
struct TrajectorySchema {
  std::optional<TrajectoryKind> kind;
  std::optional<int> input_dim;
  std::optional<int> signal_dim;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& context) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{}) throw ParseError("malformed numeric field '" + tok + "' in " + context);
  for (const char* q = res.ptr; q != end; ++q)
    if (*q != ' ' && *q != '\t') throw ParseError("malformed numeric field '" + tok + "' in " + context);
  return v;
}

inline long parse_int(const std::string& tok, const std::string& context) {
  long v = 0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) throw ParseError("malformed integer field '" + tok + "' in " + context);
  return v;
}

// Checks that names form prefix1..prefixK in order and returns K.
inline int count_indexed(const std::vector<std::string>& names, size_t from, size_t to,
                         const std::string& prefix) {
  int k = 0;
  for (size_t i = from; i < to; ++i) {
    ++k;
    const std::string expect = prefix + std::to_string(k);
    if (names[i] != expect)
      throw ParseError("trajectory header: expected column '" + expect + "', got '" + names[i] + "'");
  }
  return k;
}

}  // namespace detail

/// Loads a trajectory from CSV with header `t,u1..um,(y1..yp | x1..xn)`.
/// Rows must carry strictly increasing, contiguous t; gaps are an error.
inline Trajectory load_trajectory(const std::string& path, const TrajectorySchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty trajectory file: " + path);
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "t")
    throw ParseError("trajectory header must start with 't' and carry u and y/x columns: " + path);

  size_t i = 1;
  while (i < header.size() && header[i].size() > 1 && header[i][0] == 'u') ++i;
  const int m = detail::count_indexed(header, 1, i, "u");
  if (m == 0) throw ParseError("trajectory header: no input columns u1..um in " + path);
  if (i >= header.size()) throw ParseError("trajectory header: no y/x columns in " + path);

  TrajectoryKind kind;
  std::string sig_prefix;
  if (header[i][0] == 'y') {
    kind = TrajectoryKind::InputOutput;
    sig_prefix = "y";
  } else if (header[i][0] == 'x') {
    kind = TrajectoryKind::InputState;
    sig_prefix = "x";
  } else {
    throw ParseError("trajectory header: expected y or x columns after inputs in " + path);
  }
  const int p = detail::count_indexed(header, i, header.size(), sig_prefix);

  std::vector<double> ubuf, sbuf;
  long t0 = 0, prev_t = 0;
  int rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(lineno);
    if (fields.size() != header.size())
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()) + " in " + ctx);
    const long t = detail::parse_int(fields[0], ctx);
    if (rows == 0) {
      t0 = t;
    } else if (t != prev_t + 1) {
      throw ParseError("non-contiguous time index: t jumps " + std::to_string(prev_t) + " -> " +
                       std::to_string(t) + " in " + ctx);
    }
    prev_t = t;
    for (int j = 0; j < m; ++j) ubuf.push_back(detail::parse_double(fields[1 + j], ctx));
    for (int j = 0; j < p; ++j) sbuf.push_back(detail::parse_double(fields[1 + m + j], ctx));
    ++rows;
  }
  if (rows == 0) throw ParseError("trajectory has no data rows: " + path);

  Trajectory traj;
  traj.kind = kind;
  traj.t0 = static_cast<int>(t0);
  traj.u = Eigen::Map<Matrix>(ubuf.data(), m, rows);
  traj.y_or_x = Eigen::Map<Matrix>(sbuf.data(), p, rows);
  traj.validate();

  if (schema.kind && *schema.kind != kind) throw ParseError("trajectory kind does not match schema: " + path);
  if (schema.input_dim && *schema.input_dim != m)
    throw ParseError("trajectory input dimension " + std::to_string(m) + " does not match schema in " + path);
  if (schema.signal_dim && *schema.signal_dim != p)
    throw ParseError("trajectory signal dimension " + std::to_string(p) + " does not match schema in " + path);
  return traj;
}

namespace detail {
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  return buf;
}
}  // namespace detail

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
  traj.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write trajectory file: " + path);
  out << "t";
  for (int j = 1; j <= traj.input_dim(); ++j) out << ",u" << j;
  const char* sig = traj.kind == TrajectoryKind::InputOutput ? "y" : "x";
  for (int j = 1; j <= traj.signal_dim(); ++j) out << "," << sig << j;
  out << "\n";
  for (int c = 0; c < traj.length(); ++c) {
    out << traj.t0 + c;
    for (int j = 0; j < traj.input_dim(); ++j) out << "," << detail::format_full(traj.u(j, c));
    for (int j = 0; j < traj.signal_dim(); ++j) out << "," << detail::format_full(traj.y_or_x(j, c));
    out << "\n";
  }
}

/// Headerless numeric CSV, used for custom instruments and Hu matrices.
inline Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file: " + path);
  std::vector<double> buf;
  std::string line;
  int cols = -1, rows = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (cols < 0) cols = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != cols)
      throw ParseError("ragged matrix row at " + path + ":" + std::to_string(lineno));
    for (const auto& f : fields) buf.push_back(detail::parse_double(f, path + ":" + std::to_string(lineno)));
    ++rows;
  }
  if (rows == 0) throw ParseError("matrix file has no rows: " + path);
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = buf[static_cast<size_t>(r) * cols + c];
  return out;
}

inline void save_matrix_csv(const Matrix& M, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write matrix file: " + path);
  for (int r = 0; r < M.rows(); ++r) {
    for (int c = 0; c < M.cols(); ++c) {
      if (c) out << ",";
      out << detail::format_full(M(r, c));
    }
    out << "\n";
  }
}

}  // namespace informa
