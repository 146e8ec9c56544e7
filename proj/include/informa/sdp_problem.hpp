#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "informa/core.hpp"

namespace informa {

/// Contiguous slice of the flat decision vector.
struct VarSlice {
  int offset = 0;
  int count = 0;
  bool empty() const { return count == 0; }
};

enum class SynthesisObjective { Stabilization, Hinf, H2 };

/// Named layout of the decision vector for synthesis problems. P and Z are
/// symmetric matrices stored as packed upper triangles (column-major), L is
/// stored row-major.
struct VarMap {
  int n = 0;        // state dimension
  int m = 0;        // input dimension
  int pz = 0;       // performance output dimension
  int p_noise = 0;  // noise dimension (Z block size for H2)
  VarSlice P, L, alpha, beta, Z;
  double lambda_scale = 1.0;  // data term was divided by this before entering the problem
  SynthesisObjective objective = SynthesisObjective::Stabilization;
  double gamma = 0.0;  // fixed performance level for Hinf problems

  static int sym_size(int n) { return n * (n + 1) / 2; }

  /// Packs a symmetric matrix into the slice layout.
  static Vector pack_sym(const Matrix& S) {
    const int n = static_cast<int>(S.rows());
    Vector v(sym_size(n));
    int k = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) v[k++] = S(i, j);
    return v;
  }

  static Matrix unpack_sym(const Vector& x, const VarSlice& s, int n) {
    require(s.count == sym_size(n), "unpack_sym: slice size mismatch");
    Matrix S(n, n);
    int k = s.offset;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) {
        S(i, j) = x[k];
        S(j, i) = x[k];
        ++k;
      }
    return S;
  }

  static Matrix unpack_dense(const Vector& x, const VarSlice& s, int rows, int cols) {
    require(s.count == rows * cols, "unpack_dense: slice size mismatch");
    Matrix M(rows, cols);
    int k = s.offset;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) M(i, j) = x[k++];
    return M;
  }
};

/// One nonzero of a block's affine map. var = 0 addresses the constant term,
/// var = i >= 1 the i-th decision variable; only upper-triangle positions
/// (row <= col) are stored and the matrix is implicitly symmetric.
struct BlockEntry {
  int var = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// A single PSD constraint F0 + sum_i x_i F_i >= 0.
struct SdpBlock {
  int size = 0;
  std::vector<BlockEntry> entries;

  Matrix assemble(const Vector& x) const {
    Matrix F = Matrix::Zero(size, size);
    for (const auto& e : entries) {
      const double w = e.var == 0 ? e.value : e.value * x[e.var - 1];
      F(e.row, e.col) += w;
      if (e.row != e.col) F(e.col, e.row) += w;
    }
    return F;
  }

  /// Dense coefficient matrix of one variable (var >= 1) or the constant term.
  Matrix coefficient(int var) const {
    Matrix F = Matrix::Zero(size, size);
    for (const auto& e : entries) {
      if (e.var != var) continue;
      F(e.row, e.col) += e.value;
      if (e.row != e.col) F(e.col, e.row) += e.value;
    }
    return F;
  }
};

/// Block-diagonal affine LMI in a flat decision vector with an optional
/// linear objective (minimized).
struct SdpProblem {
  int num_vars = 0;
  std::vector<SdpBlock> blocks;
  std::optional<Vector> objective;
  VarMap var_map;

  int total_dim() const {
    int t = 0;
    for (const auto& b : blocks) t += b.size;
    return t;
  }

  void validate() const {
    require(num_vars >= 1, "sdp problem: needs at least one variable");
    if (objective) require(objective->size() == num_vars, "sdp problem: objective length mismatch");
    for (const auto& b : blocks) {
      require(b.size >= 1, "sdp problem: empty block");
      for (const auto& e : b.entries) {
        require(e.var >= 0 && e.var <= num_vars, "sdp problem: entry variable out of range");
        require(e.row >= 0 && e.col >= e.row && e.col < b.size, "sdp problem: entry position out of range");
      }
    }
  }

  Vector block_min_eigs(const Vector& x) const {
    Vector v(static_cast<int>(blocks.size()));
    for (size_t b = 0; b < blocks.size(); ++b) v[static_cast<int>(b)] = min_eigenvalue_sym(blocks[b].assemble(x));
    return v;
  }

  double min_eig_all(const Vector& x) const { return block_min_eigs(x).minCoeff(); }
};

/// Accumulates dense symmetric coefficients per variable and flattens them
/// into sorted sparse entries. Off-diagonal placements are mirrored so the
/// assembled matrix is symmetric by construction.
class BlockBuilder {
 public:
  BlockBuilder(int size, int num_vars) : size_(size) { (void)num_vars; }

  /// Adds contribution M at block offset (r0, c0) for variable var (0 = const).
  /// If (r0, c0) is off the diagonal, M' is implicitly added at (c0, r0).
  void add(int var, int r0, int c0, const Matrix& M) {
    Matrix& acc = slot(var);
    acc.block(r0, c0, M.rows(), M.cols()) += M;
    if (r0 != c0) acc.block(c0, r0, M.cols(), M.rows()) += M.transpose();
  }

  /// Adds a symmetric matrix on the diagonal at (r0, r0).
  void add_sym(int var, int r0, const Matrix& M) {
    Matrix& acc = slot(var);
    acc.block(r0, r0, M.rows(), M.cols()) += symmetrized(M);
  }

  SdpBlock finish(double drop_tol = 0.0) const {
    SdpBlock blk;
    blk.size = size_;
    for (const auto& [var, acc] : dense_) {
      const Matrix S = symmetrized(acc);
      for (int j = 0; j < size_; ++j)
        for (int i = 0; i <= j; ++i)
          if (std::abs(S(i, j)) > drop_tol) blk.entries.push_back({var, i, j, S(i, j)});
    }
    return blk;
  }

 private:
  Matrix& slot(int var) {
    auto it = dense_.find(var);
    if (it == dense_.end()) it = dense_.emplace(var, Matrix::Zero(size_, size_)).first;
    return it->second;
  }

  int size_;
  std::map<int, Matrix> dense_;
};

}  // namespace informa
