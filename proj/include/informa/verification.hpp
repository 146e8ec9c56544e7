#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "informa/core.hpp"
#include "informa/feasible_set.hpp"
#include "informa/lifting.hpp"
#include "informa/random.hpp"
#include "informa/synthesis.hpp"

namespace informa {

inline double spectral_radius(const Matrix& A) {
  require(A.rows() == A.cols(), "spectral_radius: matrix must be square");
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Solves the Stein equation A' X A - X + Q = 0 for stable A via complex Schur
/// reduction and column-wise back-substitution.
inline Matrix solve_stein(const Matrix& A, const Matrix& Q) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n && Q.rows() == n && Q.cols() == n, "solve_stein: dimension mismatch");
  if (spectral_radius(A) >= 1.0) throw NumericalError("solve_stein: A must have spectral radius < 1");

  Eigen::ComplexSchur<Matrix> schur(A);
  const Eigen::MatrixXcd T = schur.matrixT();
  const Eigen::MatrixXcd U = schur.matrixU();
  const Eigen::MatrixXcd Qt = U.adjoint() * Q.cast<std::complex<double>>() * U;

  // T^H Y T - Y = -Qt, solved one column at a time: for column j,
  // (T_jj T^H - I) y_j = -Qt_j - T^H g with g = sum_{l<j} Y_l T_lj.
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::MatrixXcd Th = T.adjoint();  // lower triangular
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
    for (int l = 0; l < j; ++l) g += Y.col(l) * T(l, j);
    const Eigen::VectorXcd rhs = -Qt.col(j) - Th * g;
    Eigen::MatrixXcd Mj = T(j, j) * Th - Eigen::MatrixXcd::Identity(n, n);
    Y.col(j) = Mj.triangularView<Eigen::Lower>().solve(rhs);
  }
  const Eigen::MatrixXcd X = U * Y * U.adjoint();
  return symmetrized(X.real());
}

/// sqrt(trace Hz' X Hz) with X the observability-type Stein solution for
/// Q = C_K' C_K.
inline double h2_norm(const Matrix& A_K, const Matrix& Hz, const Matrix& C_K) {
  require(Hz.rows() == A_K.rows() && C_K.cols() == A_K.rows(), "h2_norm: dimension mismatch");
  const Matrix X = solve_stein(A_K, C_K.transpose() * C_K);
  const double t = (Hz.transpose() * X * Hz).trace();
  return std::sqrt(std::max(t, 0.0));
}

namespace detail {

/// Largest singular value of C (e^{jw} I - A)^-1 H.
inline double gain_at(const Matrix& A, const Matrix& H, const Matrix& C, double omega) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXcd M = std::exp(std::complex<double>(0, omega)) * Eigen::MatrixXcd::Identity(n, n) -
                       A.cast<std::complex<double>>();
  Eigen::MatrixXcd G = C.cast<std::complex<double>>() * M.partialPivLu().solve(H.cast<std::complex<double>>());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

struct GridPeak {
  double gain = 0.0;
  double omega = 0.0;
};

/// Grid max of the frequency response with nested refinement around the argmax.
inline GridPeak frequency_grid_peak(const Matrix& A, const Matrix& H, const Matrix& C, int points = 2048,
                                    int refinements = 2) {
  GridPeak best;
  const double pi = 3.14159265358979323846;
  double lo = 0.0, hi = pi, step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double w = lo + i * step;
    const double g = gain_at(A, H, C, w);
    if (g > best.gain) {
      best.gain = g;
      best.omega = w;
    }
  }
  for (int r = 0; r < refinements; ++r) {
    const double a = std::max(0.0, best.omega - 2.0 * step);
    const double b = std::min(pi, best.omega + 2.0 * step);
    const int fine = 65;
    step = (b - a) / (fine - 1);
    for (int i = 0; i < fine; ++i) {
      const double w = a + i * step;
      const double g = gain_at(A, H, C, w);
      if (g > best.gain) {
        best.gain = g;
        best.omega = w;
      }
    }
  }
  return best;
}

/// Unit-circle crossings of the gain level gamma: generalized eigenvalues of
///   [A, gamma^-2 H H'; 0, I] - lambda [I, 0; C'C, A'].
/// An eigenvalue on the unit circle means some frequency attains gain gamma.
inline std::vector<double> level_crossing_frequencies(const Matrix& A, const Matrix& H, const Matrix& C,
                                                      double gamma, double circle_tol = 1e-7) {
  const int n = static_cast<int>(A.rows());
  Matrix M(2 * n, 2 * n), N(2 * n, 2 * n);
  M.setZero();
  N.setZero();
  M.topLeftCorner(n, n) = A;
  M.topRightCorner(n, n) = (H * H.transpose()) / (gamma * gamma);
  M.bottomRightCorner(n, n) = Matrix::Identity(n, n);
  N.topLeftCorner(n, n) = Matrix::Identity(n, n);
  N.bottomLeftCorner(n, n) = C.transpose() * C;
  N.bottomRightCorner(n, n) = A.transpose();

  Eigen::GeneralizedEigenSolver<Matrix> ges(M, N, false);
  std::vector<double> omegas;
  for (int i = 0; i < ges.alphas().size(); ++i) {
    const std::complex<double> beta = ges.betas()(i);
    if (std::abs(beta) < 1e-14) continue;  // infinite eigenvalue
    const std::complex<double> lambda = ges.alphas()(i) / beta;
    if (std::abs(std::abs(lambda) - 1.0) < circle_tol) omegas.push_back(std::abs(std::arg(lambda)));
  }
  std::sort(omegas.begin(), omegas.end());
  return omegas;
}

}  // namespace detail

/// H-infinity norm of T(z) = C_K (zI - A_K)^-1 Hz by level-set iteration on
/// the symplectic pencil, cross-checked against a refined frequency grid. The
/// grid peak must lie within [result (1 - 10 tol), result].
inline double hinf_norm(const Matrix& A_K, const Matrix& Hz, const Matrix& C_K, double tol = 1e-6) {
  require(Hz.rows() == A_K.rows() && C_K.cols() == A_K.rows(), "hinf_norm: dimension mismatch");
  require(tol > 0.0 && tol < 0.1, "hinf_norm: tolerance out of range");
  if (spectral_radius(A_K) >= 1.0) throw NumericalError("hinf_norm: A_K must have spectral radius < 1");
  if (Hz.norm() == 0.0 || C_K.norm() == 0.0) return 0.0;

  const auto peak = detail::frequency_grid_peak(A_K, Hz, C_K);
  double lower = peak.gain;
  if (lower <= 0.0) return 0.0;

  // Level-set update: test slightly above the current best lower bound; any
  // unit-circle crossing yields frequencies that push the lower bound up.
  double result = lower;
  for (int it = 0; it < 60; ++it) {
    const double gamma = lower * (1.0 + tol);
    const auto omegas = detail::level_crossing_frequencies(A_K, Hz, C_K, gamma);
    double improved = lower;
    for (size_t i = 0; i + 1 < omegas.size(); ++i) {
      const double mid = 0.5 * (omegas[i] + omegas[i + 1]);
      improved = std::max(improved, detail::gain_at(A_K, Hz, C_K, mid));
    }
    for (double w : omegas) improved = std::max(improved, detail::gain_at(A_K, Hz, C_K, w));
    if (omegas.empty() || improved <= lower * (1.0 + 1e-14)) {
      result = gamma;  // no level crossing above: the norm is below gamma
      break;
    }
    lower = improved;
    result = lower * (1.0 + tol);
  }

  if (!(peak.gain <= result && peak.gain >= result * (1.0 - 10.0 * tol)))
    throw NumericalError("hinf_norm: frequency-grid cross-check failed");
  return result;
}

/// Value of the membership quadratic form [I A' B']' Lambda [I A' B'] (n x n).
inline Matrix membership_form(const Matrix& Ahat, const Matrix& Bhat, const FeasibleSetForm& f) {
  require(Ahat.rows() == f.n && Ahat.cols() == f.n, "membership: A must be n x n");
  require(Bhat.rows() == f.n && Bhat.cols() == f.m, "membership: B must be n x m");
  Matrix S(2 * f.n + f.m, f.n);
  S.topRows(f.n) = Matrix::Identity(f.n, f.n);
  S.middleRows(f.n, f.n) = Ahat.transpose();
  S.bottomRows(f.m) = Bhat.transpose();
  return symmetrized(S.transpose() * f.Lambda * S);
}

inline bool membership(const Matrix& Ahat, const Matrix& Bhat, const FeasibleSetForm& f) {
  return min_eigenvalue_sym(membership_form(Ahat, Bhat, f)) >= -f.psd_tolerance();
}

/// Residual noise pinned down by the data equation: E = Y - [Abar Bbar] Z - B0 U,
/// with the parameter rows read off through Hz.
inline Matrix reconstruct_noise_io(const IoDataMatrices& d, const LiftingStructure& s,
                                   const Matrix& Lambda_e, const Matrix& B_e) {
  const Matrix ab = s.Hz.transpose() * Lambda_e;  // p x n
  const Matrix b0 = s.Hz.transpose() * B_e;       // p x m
  return d.Ym - ab * d.Zm - b0 * d.Um;
}

inline Matrix reconstruct_noise_state(const StateDataMatrices& d, const Matrix& A, const Matrix& B) {
  return d.Xp - A * d.Xm - B * d.Um;
}

/// Draws members of the feasible set by boundary bisection: random directions
/// in the parameter rows, scaled to the membership boundary, then shrunk by
/// the factors {1 - 1e-6, 0.9, 0.5, 0.1}. All returned pairs pass membership.
/// A degenerate (singleton) set yields just the base point.
inline std::vector<std::pair<Matrix, Matrix>> sample_members(const FeasibleSetForm& f,
                                                             const std::pair<Matrix, Matrix>& base,
                                                             int count, std::uint64_t seed = 0) {
  require(count >= 1, "sample_members: count must be positive");
  if (!membership(base.first, base.second, f))
    throw InvalidArgument("sample_members: base point is not a member of the feasible set");

  const double shrink[] = {1.0 - 1e-6, 0.9, 0.5, 0.1};
  const double s_cap = 1e9;
  const double base_scale = 1.0 + std::sqrt(base.first.squaredNorm() + base.second.squaredNorm());

  std::vector<std::pair<Matrix, Matrix>> out;
  out.reserve(count);
  Rng rng(mix_seed(seed, 0x5ab1e5u));

  auto member_at = [&](const Matrix& dA, const Matrix& dB, double sc) {
    return membership(base.first + sc * dA, base.second + sc * dB, f);
  };

  const int max_directions = 16 * count + 16;
  for (int dir = 0; dir < max_directions && static_cast<int>(out.size()) < count; ++dir) {
    Matrix thetaA = rng.normal_matrix(f.p, f.n);
    Matrix thetaB = rng.normal_matrix(f.p, f.m);
    const double nrm = std::sqrt(thetaA.squaredNorm() + thetaB.squaredNorm());
    if (nrm == 0.0) continue;
    Matrix dA = Matrix::Zero(f.n, f.n);
    Matrix dB = Matrix::Zero(f.n, f.m);
    dA.topRows(f.p) = thetaA * (base_scale / nrm);
    dB.topRows(f.p) = thetaB * (base_scale / nrm);

    // Grow until outside, then bisect to the boundary.
    double lo = 0.0, hi = 1e-6;
    bool outside = false;
    while (hi < s_cap) {
      if (!member_at(dA, dB, hi)) {
        outside = true;
        break;
      }
      lo = hi;
      hi *= 2.0;
    }
    double s_star;
    if (!outside) {
      s_star = lo;  // direction unbounded within the cap
    } else {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (member_at(dA, dB, mid) ? lo : hi) = mid;
      }
      s_star = lo;
    }
    if (s_star <= 1e-12) continue;
    // Displacements inside the PSD-tolerance shell are numerical noise, not
    // set geometry: a real interior has strictly positive form values, the
    // shell never does. A set that only admits shell points is a singleton.
    const double interior_probe = min_eigenvalue_sym(
        membership_form(base.first + 0.5 * s_star * dA, base.second + 0.5 * s_star * dB, f));
    if (interior_probe <= 0.0) continue;

    for (double factor : shrink) {
      if (static_cast<int>(out.size()) >= count) break;
      const double sc = s_star * factor;
      if (member_at(dA, dB, sc)) out.emplace_back(base.first + sc * dA, base.second + sc * dB);
    }
  }
  if (out.empty()) out.push_back(base);
  return out;
}

struct AuditViolation {
  int sample_index = 0;
  double rho = 0.0;
  std::optional<double> norm;
  double slack = 0.0;  // amount by which the requirement failed
};

struct AuditReport {
  int samples_tested = 0;
  double max_spectral_radius = 0.0;
  std::optional<double> max_h2;
  std::optional<double> max_hinf;
  std::vector<AuditViolation> violations;
  SynthesisObjective bound_type = SynthesisObjective::Stabilization;
  std::uint64_t seed = 0;

  bool clean() const { return violations.empty(); }
};

/// Replays a synthesized certificate against sampled members of the feasible
/// set: each sample is lifted with the structural parts (+J1, +J2) and the
/// closed loop is checked with the independent eigenvalue/Stein/level-set
/// oracles, never through the LMI path.
inline AuditReport audit(const SynthesisResult& result, const FeasibleSetForm& f,
                         const LiftingStructure& s, const Matrix& Cz, const Matrix& Dz,
                         SynthesisObjective objective, const std::pair<Matrix, Matrix>& base,
                         int samples = 50, std::uint64_t seed = 0) {
  require(result.feasible, "audit: result must be feasible");
  if (objective != SynthesisObjective::Stabilization)
    require(result.gamma.has_value(), "audit: performance audit needs a gamma in the result");

  AuditReport rep;
  rep.bound_type = objective;
  rep.seed = seed;

  const auto members = sample_members(f, base, samples, seed);
  const double gamma = result.gamma.value_or(0.0);
  const double norm_budget = gamma * (1.0 + 1e-6);

  for (size_t i = 0; i < members.size(); ++i) {
    const Matrix Az = members[i].first + s.J1;
    const Matrix Bz = members[i].second + s.J2;
    const Matrix A_K = Az + Bz * result.K;
    const Matrix C_K = Cz.rows() ? Cz + Dz * result.K : Matrix();

    const double rho = spectral_radius(A_K);
    rep.max_spectral_radius = std::max(rep.max_spectral_radius, rho);
    ++rep.samples_tested;

    if (rho >= 1.0) {
      rep.violations.push_back({static_cast<int>(i), rho, std::nullopt, rho - 1.0});
      continue;
    }
    if (objective == SynthesisObjective::H2) {
      const double nrm = h2_norm(A_K, s.Hz, C_K);
      rep.max_h2 = std::max(rep.max_h2.value_or(0.0), nrm);
      if (nrm > norm_budget)
        rep.violations.push_back({static_cast<int>(i), rho, nrm, nrm - norm_budget});
    } else if (objective == SynthesisObjective::Hinf) {
      const double nrm = hinf_norm(A_K, s.Hz, C_K, 1e-7);
      rep.max_hinf = std::max(rep.max_hinf.value_or(0.0), nrm);
      if (nrm > norm_budget)
        rep.violations.push_back({static_cast<int>(i), rho, nrm, nrm - norm_budget});
    }
  }
  return rep;
}

}  // namespace informa
