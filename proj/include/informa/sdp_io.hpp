#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "informa/core.hpp"
#include "informa/sdp_problem.hpp"
#include "informa/trajectory.hpp"

namespace informa {

/// Writes the sparse block standard form:
///   line 1: num_vars num_blocks size_1 ... size_nb
///   line 2: objective vector (num_vars values; zeros when no objective)
///   then one line per nonzero, `matrix_index block row col value`, with
///   matrix_index 0 for the constant term and 1-based block/row/col indices;
///   upper-triangle entries only, 17 significant digits.
inline void export_standard_form(const SdpProblem& p, const std::string& path) {
  p.validate();
  std::ofstream out(path, std::ios::binary);  // binary: keep LF line endings everywhere
  if (!out) throw ParseError("cannot write problem file: " + path);

  out << p.num_vars << " " << p.blocks.size();
  for (const auto& b : p.blocks) out << " " << b.size;
  out << "\n";

  for (int i = 0; i < p.num_vars; ++i) {
    if (i) out << " ";
    out << detail::format_full(p.objective ? (*p.objective)[i] : 0.0);
  }
  out << "\n";

  for (size_t b = 0; b < p.blocks.size(); ++b) {
    std::vector<BlockEntry> entries = p.blocks[b].entries;
    std::sort(entries.begin(), entries.end(), [](const BlockEntry& l, const BlockEntry& r) {
      return std::tie(l.var, l.row, l.col) < std::tie(r.var, r.row, r.col);
    });
    // collapse duplicates so the file is a canonical representation
    std::vector<BlockEntry> merged;
    for (const auto& e : entries) {
      if (!merged.empty() && merged.back().var == e.var && merged.back().row == e.row &&
          merged.back().col == e.col) {
        merged.back().value += e.value;
      } else {
        merged.push_back(e);
      }
    }
    for (const auto& e : merged) {
      if (e.value == 0.0) continue;
      out << e.var << " " << b + 1 << " " << e.row + 1 << " " << e.col + 1 << " "
          << detail::format_full(e.value) << "\n";
    }
  }
}

inline SdpProblem import_standard_form(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open problem file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty problem file: " + path);
  std::istringstream head(line);
  SdpProblem p;
  size_t num_blocks = 0;
  if (!(head >> p.num_vars >> num_blocks)) throw ParseError("malformed problem header: " + path);
  for (size_t b = 0; b < num_blocks; ++b) {
    int sz = 0;
    if (!(head >> sz) || sz < 1) throw ParseError("malformed block sizes in header: " + path);
    SdpBlock blk;
    blk.size = sz;
    p.blocks.push_back(blk);
  }

  if (!std::getline(in, line)) throw ParseError("problem file missing objective line: " + path);
  {
    std::istringstream obj(line);
    Vector c(p.num_vars);
    std::string tok;
    for (int i = 0; i < p.num_vars; ++i) {
      if (!(obj >> tok)) throw ParseError("objective line too short: " + path);
      c[i] = detail::parse_double(tok, path + " objective");
    }
    if (c.cwiseAbs().maxCoeff() > 0.0) p.objective = c;  // all-zero objective means feasibility
  }

  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    long var = 0, blk = 0, r = 0, c = 0;
    std::string val;
    if (!(row >> var >> blk >> r >> c >> val))
      throw ParseError("malformed entry at " + path + ":" + std::to_string(lineno));
    if (blk < 1 || blk > static_cast<long>(p.blocks.size()))
      throw ParseError("entry block index out of range at " + path + ":" + std::to_string(lineno));
    auto& block = p.blocks[blk - 1];
    if (r < 1 || c < r || c > block.size)
      throw ParseError("entry position out of range at " + path + ":" + std::to_string(lineno));
    if (var < 0 || var > p.num_vars)
      throw ParseError("entry variable out of range at " + path + ":" + std::to_string(lineno));
    block.entries.push_back({static_cast<int>(var), static_cast<int>(r - 1), static_cast<int>(c - 1),
                             detail::parse_double(val, path)});
  }
  p.validate();
  return p;
}

}  // namespace informa
