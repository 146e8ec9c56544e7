#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace informa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files (CSV, JSON, problem exports).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Violated preconditions: bad dimensions, contract violations, invalid options.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numeric failure: singular solves, unstable inputs to oracles, solver breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Recovering a gain from a solved certificate failed (near-singular P).
class ExtractionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

/// Smallest eigenvalue of a symmetric matrix. The input is symmetrized first
/// to kill rounding asymmetry.
inline double min_eigenvalue_sym(const Matrix& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue_sym(const Matrix& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Spectral norm of a symmetric matrix.
inline double spectral_norm_sym(const Matrix& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_psd(const Matrix& S, double tol) { return min_eigenvalue_sym(S) >= -tol; }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace informa
