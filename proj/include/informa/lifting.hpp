#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "informa/core.hpp"
#include "informa/trajectory.hpp"

namespace informa {

/// ARX model A(q^-1) y = B(q^-1) u + e with
///   A(xi) = I + A1 xi + ... + Al xi^l   (p x p coefficients)
///   B(xi) = B0 + B1 xi + ... + Bl xi^l  (p x m coefficients)
struct ArxModel {
  std::vector<Matrix> A_coeffs;  // A1..Al
  std::vector<Matrix> B_coeffs;  // B0..Bl
  int lag = 0;
  int p = 0;
  int m = 0;

  void validate() const {
    require(lag >= 1 && p >= 1 && m >= 1, "arx model: lag, p, m must be positive");
    require(static_cast<int>(A_coeffs.size()) == lag, "arx model: need exactly l A-coefficients");
    require(static_cast<int>(B_coeffs.size()) == lag + 1, "arx model: need exactly l+1 B-coefficients");
    for (const auto& A : A_coeffs)
      require(A.rows() == p && A.cols() == p, "arx model: A-coefficients must be p x p");
    for (const auto& B : B_coeffs)
      require(B.rows() == p && B.cols() == m, "arx model: B-coefficients must be p x m");
  }

  int n() const { return (p + m) * lag; }

  /// row(-A1, ..., -Al), p x (p*l)
  Matrix a_bar() const {
    Matrix out(p, p * lag);
    for (int k = 0; k < lag; ++k) out.middleCols(k * p, p) = -A_coeffs[k];
    return out;
  }

  /// row(B1, ..., Bl), p x (m*l)
  Matrix b_bar() const {
    Matrix out(p, m * lag);
    for (int k = 0; k < lag; ++k) out.middleCols(k * m, m) = B_coeffs[k + 1];
    return out;
  }

  /// Frequency response A(xi)^-1 B(xi) at xi = e^{-j omega}, p x m complex.
  Eigen::MatrixXcd frequency_response(double omega) const {
    const std::complex<double> xi = std::exp(std::complex<double>(0.0, -omega));
    Eigen::MatrixXcd Axi = Eigen::MatrixXcd::Identity(p, p);
    std::complex<double> xk = 1.0;
    for (int k = 1; k <= lag; ++k) {
      xk *= xi;
      Axi += xk * A_coeffs[k - 1];
    }
    Eigen::MatrixXcd Bxi = B_coeffs[0].cast<std::complex<double>>();
    xk = 1.0;
    for (int k = 1; k <= lag; ++k) {
      xk *= xi;
      Bxi += xk * B_coeffs[k];
    }
    return Axi.partialPivLu().solve(Bxi);
  }
};

/// Structural matrices of the non-minimal lifting of order n = (p+m)l.
/// Row layout of the lifted state zeta = col(y(t-1..t-l), u(t-1..t-l)):
///   rows [0, p)         parameter rows (the only rows with unknowns)
///   rows [p, p*l)       y-shift identity
///   rows [p*l, p*l+m)   input injection (J2)
///   rows [p*l+m, n)     u-shift identity
struct LiftingStructure {
  int lag = 0;
  int p = 0;   // noise/output dimension entering through Hz
  int m = 0;
  Matrix J1;   // n x n, binary
  Matrix J2;   // n x m, binary
  Matrix Hz;   // n x p

  int n() const { return static_cast<int>(J1.rows()); }
  int param_rows() const { return p; }

  /// Trivial structure for the input-state case: J1 = 0, J2 = 0, Hz = I.
  static LiftingStructure state(int n, int m) {
    require(n >= 1 && m >= 1, "state structure: dimensions must be positive");
    LiftingStructure s;
    s.lag = 1;
    s.p = n;
    s.m = m;
    s.J1 = Matrix::Zero(n, n);
    s.J2 = Matrix::Zero(n, m);
    s.Hz = Matrix::Identity(n, n);
    return s;
  }
};

struct StateSpaceModel {
  Matrix Az;  // n x n
  Matrix Bz;  // n x m
  Matrix Hz;  // n x p
  Matrix Cz;  // p_z x n
  Matrix Dz;  // p_z x m

  int n() const { return static_cast<int>(Az.rows()); }
  int m() const { return static_cast<int>(Bz.cols()); }
  int p() const { return static_cast<int>(Hz.cols()); }
};

inline LiftingStructure lift_structure(int lag, int p, int m) {
  require(lag >= 1, "lift_structure: lag order must be at least 1");
  require(p >= 1 && m >= 1, "lift_structure: p and m must be positive");
  const int n = (p + m) * lag;
  LiftingStructure s;
  s.lag = lag;
  s.p = p;
  s.m = m;
  s.J1 = Matrix::Zero(n, n);
  s.J2 = Matrix::Zero(n, m);
  s.Hz = Matrix::Zero(n, p);
  for (int i = 0; i < p * (lag - 1); ++i) s.J1(p + i, i) = 1.0;
  for (int i = 0; i < m * (lag - 1); ++i) s.J1(p * lag + m + i, p * lag + i) = 1.0;
  for (int i = 0; i < m; ++i) s.J2(p * lag + i, i) = 1.0;
  for (int i = 0; i < p; ++i) s.Hz(i, i) = 1.0;
  return s;
}

/// Lifts an ARX model to state space: Az = [Abar Bbar; 0] + J1, Bz = [B0; 0] + J2.
/// Cz/Dz default to the performance output z(t) = y(t-1) (first lag block).
inline StateSpaceModel lift_arx(const ArxModel& model) {
  model.validate();
  const LiftingStructure s = lift_structure(model.lag, model.p, model.m);
  const int n = s.n();
  StateSpaceModel ss;
  ss.Az = s.J1;
  ss.Az.block(0, 0, model.p, model.p * model.lag) += model.a_bar();
  ss.Az.block(0, model.p * model.lag, model.p, model.m * model.lag) += model.b_bar();
  ss.Bz = s.J2;
  ss.Bz.block(0, 0, model.p, model.m) += model.B_coeffs[0];
  ss.Hz = s.Hz;
  ss.Cz = Matrix::Zero(model.p, n);
  ss.Cz.block(0, 0, model.p, model.p) = Matrix::Identity(model.p, model.p);
  ss.Dz = Matrix::Zero(model.p, model.m);
  return ss;
}

namespace detail {

/// Coefficients of det(lambda I - A): [1, c1, ..., cn] via Faddeev-LeVerrier.
inline std::vector<double> characteristic_polynomial(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  Matrix M = Matrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    M = A * M;
    c[k] = -M.trace() / k;
    M += c[k] * Matrix::Identity(n, n);
  }
  return c;
}

}  // namespace detail

/// Converts a single-output state-space model (A0, B0, C0) into an ARX model
/// with the same transfer function C0 (qI - A0)^-1 B0. A(xi) is the reversed
/// characteristic polynomial det(I - xi A0); B(xi) follows from matching
/// Markov parameters (the numerator of the resolvent expansion).
inline ArxModel arx_from_state_space(const Matrix& A0, const Matrix& B0, const Matrix& C0) {
  require(A0.rows() == A0.cols(), "arx_from_state_space: A0 must be square");
  require(B0.rows() == A0.rows() && C0.cols() == A0.rows(), "arx_from_state_space: dimension mismatch");
  require(C0.rows() == 1, "arx_from_state_space: only single-output conversion is supported");
  const int n0 = static_cast<int>(A0.rows());
  const int m = static_cast<int>(B0.cols());

  // Observability check; an unobservable pair would hide poles from the output.
  Matrix obs(n0, n0);
  Matrix CA = C0;
  for (int k = 0; k < n0; ++k) {
    obs.row(k) = CA;
    CA = CA * A0;
  }
  Eigen::JacobiSVD<Matrix> svd(obs);
  const double rank_tol = n0 * 1e-12 * svd.singularValues().maxCoeff();
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > rank_tol) ++rank;
  if (rank < n0) throw InvalidArgument("arx_from_state_space: (A0, C0) is not observable");

  const auto c = detail::characteristic_polynomial(A0);

  ArxModel model;
  model.lag = n0;
  model.p = 1;
  model.m = m;
  for (int k = 1; k <= n0; ++k) model.A_coeffs.push_back(c[k] * Matrix::Identity(1, 1));
  // Markov parameters h_k = C0 A0^k B0; B_i = sum_{j=0}^{i-1} c_j h_{i-1-j}.
  std::vector<Matrix> h(n0);
  Matrix Ak = Matrix::Identity(n0, n0);
  for (int k = 0; k < n0; ++k) {
    h[k] = C0 * Ak * B0;
    Ak = A0 * Ak;
  }
  model.B_coeffs.push_back(Matrix::Zero(1, m));  // B0 term: strictly proper
  for (int i = 1; i <= n0; ++i) {
    Matrix Bi = Matrix::Zero(1, m);
    for (int j = 0; j < i; ++j) Bi += c[j] * h[i - 1 - j];
    model.B_coeffs.push_back(Bi);
  }
  model.validate();
  return model;
}

/// Output-feedback controller C(q^-1) u = D(q^-1) y realized from a lifted
/// gain K = [Dbar Cbar]: Dbar spans the y-lag columns, Cbar the u-lag columns,
/// with Ci = -(Cbar block i) and Di = (Dbar block i).
struct ControllerRealization {
  std::vector<Matrix> C_coeffs;  // C1..Cl, m x m
  std::vector<Matrix> D_coeffs;  // D1..Dl, m x p
  Matrix c_bar;                  // row(-C1..-Cl)
  Matrix d_bar;                  // row(D1..Dl)
  int lag = 0;
  int p = 0;
  int m = 0;
};

inline ControllerRealization controller_from_gain(const Matrix& K, int lag, int p, int m) {
  require(lag >= 1 && p >= 1 && m >= 1, "controller_from_gain: lag, p, m must be positive");
  require(K.rows() == m && K.cols() == (p + m) * lag,
          "controller_from_gain: K must be m x (p+m)l");
  ControllerRealization c;
  c.lag = lag;
  c.p = p;
  c.m = m;
  c.d_bar = K.leftCols(p * lag);
  c.c_bar = K.rightCols(m * lag);
  for (int k = 0; k < lag; ++k) {
    c.C_coeffs.push_back(-c.c_bar.middleCols(k * m, m));
    c.D_coeffs.push_back(c.d_bar.middleCols(k * p, p));
  }
  return c;
}

inline Matrix gain_from_controller(const ControllerRealization& c) {
  Matrix K(c.m, (c.p + c.m) * c.lag);
  for (int k = 0; k < c.lag; ++k) {
    K.middleCols(k * c.p, c.p) = c.D_coeffs[k];
    K.middleCols(c.p * c.lag + k * c.m, c.m) = -c.C_coeffs[k];
  }
  return K;
}

/// (A_cl, C_cl) = (Az + Bz K, Cz + Dz K).
inline std::pair<Matrix, Matrix> closed_loop(const StateSpaceModel& ss, const Matrix& K) {
  require(K.rows() == ss.m() && K.cols() == ss.n(), "closed_loop: K must be m x n");
  return {ss.Az + ss.Bz * K, ss.Cz + ss.Dz * K};
}

/// Simulates the ARX difference equation over t = t0 .. t0+T-1 with zero
/// initial lags (samples before t0 are treated as zero).
inline Trajectory simulate_arx(const ArxModel& model, const Matrix& U, const Matrix& E, int t0 = 0) {
  model.validate();
  require(U.rows() == model.m && E.rows() == model.p, "simulate_arx: input/noise dimension mismatch");
  require(U.cols() == E.cols(), "simulate_arx: input and noise must have equal length");
  const int T = static_cast<int>(U.cols());
  Matrix Y = Matrix::Zero(model.p, T);
  for (int t = 0; t < T; ++t) {
    Vector y = model.B_coeffs[0] * U.col(t) + E.col(t);
    for (int k = 1; k <= model.lag; ++k) {
      if (t - k < 0) continue;  // zero initial lags
      y -= model.A_coeffs[k - 1] * Y.col(t - k);
      y += model.B_coeffs[k] * U.col(t - k);
    }
    Y.col(t) = y;
  }
  Trajectory traj;
  traj.kind = TrajectoryKind::InputOutput;
  traj.u = U;
  traj.y_or_x = Y;
  traj.t0 = t0;
  return traj;
}

/// Simulates x(t+1) = A x(t) + B u(t) + e(t) from x(t0) = x0. The returned
/// trajectory has one more sample than U; the final input column is zero
/// padding (no input is applied at the last recorded time).
inline Trajectory simulate_state(const Matrix& A, const Matrix& B, const Matrix& U, const Matrix& E,
                                 const Vector& x0, int t0 = 0) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n && B.rows() == n && E.rows() == n, "simulate_state: dimension mismatch");
  require(U.cols() == E.cols(), "simulate_state: input and noise must have equal length");
  require(x0.size() == n, "simulate_state: initial state dimension mismatch");
  const int T = static_cast<int>(U.cols());
  Matrix X(n, T + 1);
  X.col(0) = x0;
  for (int t = 0; t < T; ++t) X.col(t + 1) = A * X.col(t) + B * U.col(t) + E.col(t);
  Trajectory traj;
  traj.kind = TrajectoryKind::InputState;
  traj.u = Matrix::Zero(B.cols(), T + 1);
  traj.u.leftCols(T) = U;
  traj.y_or_x = X;
  traj.t0 = t0;
  return traj;
}

/// Lifted simulation zeta(t+1) = Az zeta + Bz u + Hz e together with the output
/// identity y(t) = Hz' (Az zeta(t) + Bz u(t)) + e(t).
struct LiftedSimulation {
  Matrix zeta;  // n x (T+1), states at t0..t0+T
  Matrix y;     // p x T
};

inline LiftedSimulation simulate_lifted(const StateSpaceModel& ss, const Matrix& U, const Matrix& E,
                                        const Vector& zeta0) {
  require(U.rows() == ss.m() && E.rows() == ss.p(), "simulate_lifted: dimension mismatch");
  require(U.cols() == E.cols(), "simulate_lifted: input and noise must have equal length");
  require(zeta0.size() == ss.n(), "simulate_lifted: initial state dimension mismatch");
  const int T = static_cast<int>(U.cols());
  LiftedSimulation sim;
  sim.zeta.resize(ss.n(), T + 1);
  sim.y.resize(ss.p(), T);
  sim.zeta.col(0) = zeta0;
  for (int t = 0; t < T; ++t) {
    sim.y.col(t) = ss.Hz.transpose() * (ss.Az * sim.zeta.col(t) + ss.Bz * U.col(t)) + E.col(t);
    sim.zeta.col(t + 1) = ss.Az * sim.zeta.col(t) + ss.Bz * U.col(t) + ss.Hz * E.col(t);
  }
  return sim;
}

}  // namespace informa
