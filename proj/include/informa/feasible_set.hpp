#pragma once

#include <optional>
#include <vector>

#include "informa/core.hpp"
#include "informa/data_matrices.hpp"
#include "informa/lifting.hpp"

namespace informa {

/// Quadratic form describing all parameter pairs consistent with the data:
/// (A, B) is a member when [I A B] Lambda [I A B]' is positive semidefinite.
/// For input-output data the parameters are the lifted (Lambda_e, B_e) pairs,
/// whose only nonzero rows are the first p.
struct FeasibleSetForm {
  Matrix Lambda;     // (2n+m) x (2n+m), symmetric
  int n = 0;         // parameter state dimension
  int m = 0;         // input dimension
  int p = 0;         // noise rows (rows of the parameter blocks that vary)
  bool rank_flag = false;  // R [Z' U'] (or R [X' U']) has full column rank

  double psd_tolerance() const { return 1e-9 * (1.0 + spectral_norm_sym(Lambda)); }

  Matrix lambda11() const { return Lambda.topLeftCorner(n, n); }
  Matrix lambda12() const { return Lambda.topRightCorner(n, n + m); }
  Matrix lambda22() const { return Lambda.bottomRightCorner(n + m, n + m); }
};

namespace detail {

/// Q_e = [Hz Q11 Hz', Hz Q12; Q12' Hz', Q22] ((n+M) x (n+M)).
inline Matrix embedded_noise_matrix(const NoiseBound& Q, const Matrix& Hz) {
  const int n = static_cast<int>(Hz.rows());
  const int M = Q.M();
  Matrix Qe(n + M, n + M);
  Qe.topLeftCorner(n, n) = Hz * Q.Q11 * Hz.transpose();
  Qe.topRightCorner(n, M) = Hz * Q.Q12;
  Qe.bottomLeftCorner(M, n) = Qe.topRightCorner(n, M).transpose();
  Qe.bottomRightCorner(M, M) = Q.Q22;
  return Qe;
}

inline bool full_column_rank(const Matrix& M, double rel_tol = 1e-10) {
  if (M.rows() < M.cols()) return false;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return false;
  return sv(sv.size() - 1) > rel_tol * std::max(1.0, sv(0));
}

/// Shared data-bordered assembly: Lambda = W Q_e W' with
/// W = [I, Hz*Ynext*R'; 0, -Zpast*R'; 0, -Upast*R'].
inline FeasibleSetForm bordered_form(const Matrix& Ynext, const Matrix& Zpast, const Matrix& Upast,
                                     const Instrument& R, const NoiseBound& Q, const Matrix& Hz) {
  const int n = static_cast<int>(Zpast.rows());
  const int m = static_cast<int>(Upast.rows());
  const int p = static_cast<int>(Hz.cols());
  const int M = R.M();
  require(R.N() == static_cast<int>(Zpast.cols()) && R.N() == static_cast<int>(Upast.cols()) &&
              R.N() == static_cast<int>(Ynext.cols()),
          "feasible form: data matrices and instrument must share N");
  require(Q.M() == M, "feasible form: noise bound and instrument must agree on M");
  require(Q.p() == p && static_cast<int>(Ynext.rows()) == p,
          "feasible form: noise bound rows must match the noise dimension");
  Q.validate();

  Matrix W(2 * n + m, n + M);
  W.setZero();
  W.topLeftCorner(n, n) = Matrix::Identity(n, n);
  W.block(0, n, n, M) = Hz * (Ynext * R.Rm.transpose());
  W.block(n, n, n, M) = -(Zpast * R.Rm.transpose());
  W.block(2 * n, n, m, M) = -(Upast * R.Rm.transpose());

  FeasibleSetForm f;
  f.Lambda = symmetrized(W * embedded_noise_matrix(Q, Hz) * W.transpose());
  f.n = n;
  f.m = m;
  f.p = p;
  Matrix ZU(R.N(), n + m);
  ZU.leftCols(n) = Zpast.transpose();
  ZU.rightCols(m) = Upast.transpose();
  f.rank_flag = full_column_rank(R.Rm * ZU);
  return f;
}

}  // namespace detail

inline FeasibleSetForm build_feasible_form_io(const IoDataMatrices& d, const Instrument& R,
                                              const NoiseBound& Q, const LiftingStructure& s) {
  require(s.n() == d.n() && s.m == d.m() && s.p == d.p(),
          "build_feasible_form_io: lifting structure does not match data dimensions");
  return detail::bordered_form(d.Ym, d.Zm, d.Um, R, Q, s.Hz);
}

inline FeasibleSetForm build_feasible_form_state(const StateDataMatrices& d, const Instrument& R,
                                                 const NoiseBound& Q) {
  return detail::bordered_form(d.Xp, d.Xm, d.Um, R, Q, Matrix::Identity(d.n(), d.n()));
}

/// Least-squares parameter estimate stacked as a Slater candidate
/// Z = [Ahat'; Bhat'] of size (n+m) x n. Uses the pseudo-inverse, so it is
/// defined even for rank-deficient data.
inline Matrix least_squares_candidate(const Matrix& Ynext, const Matrix& Zpast, const Matrix& Upast) {
  const int n = static_cast<int>(Zpast.rows());
  const int m = static_cast<int>(Upast.rows());
  Matrix W(n + m, Zpast.cols());
  W.topRows(n) = Zpast;
  W.bottomRows(m) = Upast;
  // theta' = argmin ||W' theta' - Ynext'||_F, i.e. theta = Ynext W^+
  Eigen::JacobiSVD<Matrix> svd(W.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.solve(Ynext.transpose());
}

inline Matrix least_squares_candidate_state(const StateDataMatrices& d) {
  return least_squares_candidate(d.Xp, d.Xm, d.Um);
}

/// IO candidate: the regression estimate of [Lambda_e' ; B_e'] with the
/// structural zero rows filled in through Hz.
inline Matrix least_squares_candidate_io(const IoDataMatrices& d, const LiftingStructure& s) {
  Matrix theta = least_squares_candidate(d.Ym, d.Zm, d.Um);  // (n+m) x p
  return theta * s.Hz.transpose();                           // (n+m) x n
}

struct SlaterReport {
  bool holds = false;
  std::optional<Matrix> witness;  // (n+m) x n candidate achieving strict positivity
  int positive_inertia = 0;       // eigenvalues of Lambda above tolerance
  double best_min_eig = 0.0;      // best candidate value of min eig [I;Z]' Lambda [I;Z]
};

/// Checks the generalized Slater condition [I; Z]' Lambda [I; Z] > 0 over a
/// candidate list. Also reports the inertia of Lambda: at least n positive
/// eigenvalues are necessary for any witness to exist.
inline SlaterReport slater_diagnostics(const FeasibleSetForm& f, const std::vector<Matrix>& candidates) {
  SlaterReport rep;
  const double tol = f.psd_tolerance();

  Eigen::SelfAdjointEigenSolver<Matrix> es(f.Lambda, Eigen::EigenvaluesOnly);
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > tol) ++rep.positive_inertia;

  bool first = true;
  for (const auto& Z : candidates) {
    require(Z.rows() == f.n + f.m && Z.cols() == f.n, "slater_diagnostics: candidate must be (n+m) x n");
    Matrix S(2 * f.n + f.m, f.n);
    S.topRows(f.n) = Matrix::Identity(f.n, f.n);
    S.bottomRows(f.n + f.m) = Z;
    const double me = min_eigenvalue_sym(S.transpose() * f.Lambda * S);
    if (first || me > rep.best_min_eig) {
      rep.best_min_eig = me;
      first = false;
    }
    if (me > tol) {
      rep.holds = true;
      rep.witness = Z;
      break;
    }
  }
  return rep;
}

}  // namespace informa
