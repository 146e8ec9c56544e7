#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "informa/core.hpp"
#include "informa/trajectory.hpp"

namespace informa {

/// Stacked input-output data matrices. Column t (t = 0..N-1) of Zm is the
/// lagged regressor zeta(t) = col(y(t-1..t-l), u(t-1..t-l)); Ym and Um carry
/// y(t) and u(t) over the same window.
struct IoDataMatrices {
  Matrix Zm;   // n x N
  Matrix Ym;   // p x N
  Matrix Um;   // m x N
  int lag = 0;

  int N() const { return static_cast<int>(Zm.cols()); }
  int n() const { return static_cast<int>(Zm.rows()); }
  int p() const { return static_cast<int>(Ym.rows()); }
  int m() const { return static_cast<int>(Um.rows()); }
};

/// Shifted state data: Xp = Xm advanced one step, Um the applied inputs.
struct StateDataMatrices {
  Matrix Xm;   // n x N
  Matrix Xp;   // n x N
  Matrix Um;   // m x N

  int N() const { return static_cast<int>(Xm.cols()); }
  int n() const { return static_cast<int>(Xm.rows()); }
  int m() const { return static_cast<int>(Um.rows()); }
};

struct InstrumentSpec {
  enum class Kind { Identity, LaggedInput, Custom };
  Kind kind = Kind::Identity;
  std::vector<int> lags;  // LaggedInput only; nonnegative delays
  Matrix custom;          // Custom only; M x N

  static InstrumentSpec identity() { return {}; }
  static InstrumentSpec lagged_input(std::vector<int> lags_) {
    InstrumentSpec s;
    s.kind = Kind::LaggedInput;
    s.lags = std::move(lags_);
    return s;
  }
  static InstrumentSpec custom_matrix(Matrix R) {
    InstrumentSpec s;
    s.kind = Kind::Custom;
    s.custom = std::move(R);
    return s;
  }
};

/// Instrument samples r(t) stacked as columns of Rm (M x N), aligned with the
/// columns of the data matrices.
struct Instrument {
  Matrix Rm;
  InstrumentSpec spec;

  int M() const { return static_cast<int>(Rm.rows()); }
  int N() const { return static_cast<int>(Rm.cols()); }
};

/// Quadratic noise-set description: E is admissible when
///   Q11 + Q12 (R E') + (R E')' Q12' + (R E')' Q22 (R E') >= 0,
/// with Q22 negative definite.
struct NoiseBound {
  Matrix Q11;  // p x p, symmetric
  Matrix Q12;  // p x M
  Matrix Q22;  // M x M, symmetric, negative definite

  int p() const { return static_cast<int>(Q11.rows()); }
  int M() const { return static_cast<int>(Q22.rows()); }

  double psd_tolerance() const { return 1e-9 * (1.0 + spectral_norm_sym(Q11)); }

  void validate() const {
    require(Q11.rows() == Q11.cols() && Q22.rows() == Q22.cols(), "noise bound: Q11, Q22 must be square");
    require(Q12.rows() == Q11.rows() && Q12.cols() == Q22.rows(), "noise bound: Q12 must be p x M");
    const double eps = 1e-12 * (1.0 + spectral_norm_sym(Q22));
    require(max_eigenvalue_sym(Q22) < -eps, "noise bound: Q22 must be negative definite");
  }
};

/// Builds Z-, Y-, U- over the window t = 0..N-1. The trajectory must provide
/// l pre-samples (rows for t = -l..-1); N is the number of samples at t >= 0.
inline IoDataMatrices build_io_matrices(const Trajectory& traj, int lag) {
  traj.validate();
  require(traj.kind == TrajectoryKind::InputOutput, "build_io_matrices: input-output trajectory required");
  require(lag >= 1, "build_io_matrices: lag order must be at least 1 (zeta is undefined for l = 0)");
  require(traj.t0 <= -lag, "build_io_matrices: trajectory must hold " + std::to_string(lag) +
                               " pre-samples (rows for t = -l..-1)");
  const int N = traj.t_end() + 1;
  if (N < 1)
    throw InvalidArgument("build_io_matrices: no samples at t >= 0 (T <= l)");

  const int p = traj.signal_dim();
  const int m = traj.input_dim();
  const int n = (p + m) * lag;

  IoDataMatrices d;
  d.lag = lag;
  d.Zm.resize(n, N);
  d.Ym.resize(p, N);
  d.Um.resize(m, N);
  for (int t = 0; t < N; ++t) {
    for (int k = 1; k <= lag; ++k) {
      d.Zm.block((k - 1) * p, t, p, 1) = traj.signal_at(t - k);
      d.Zm.block(p * lag + (k - 1) * m, t, m, 1) = traj.input_at(t - k);
    }
    d.Ym.col(t) = traj.signal_at(t);
    d.Um.col(t) = traj.input_at(t);
  }
  return d;
}

/// Slices X-, X+, U- from a state trajectory. Samples at t < 0 are ignored by
/// the data matrices (they may still feed lagged instruments).
inline StateDataMatrices build_state_matrices(const Trajectory& traj) {
  traj.validate();
  require(traj.kind == TrajectoryKind::InputState, "build_state_matrices: input-state trajectory required");
  require(traj.t0 <= 0, "build_state_matrices: trajectory must include t = 0");
  const int N = traj.t_end();  // columns t = 0..N-1, states up to t = N
  if (N < 1) throw InvalidArgument("build_state_matrices: need at least two samples at t >= 0");

  StateDataMatrices d;
  d.Xm.resize(traj.signal_dim(), N);
  d.Xp.resize(traj.signal_dim(), N);
  d.Um.resize(traj.input_dim(), N);
  for (int t = 0; t < N; ++t) {
    d.Xm.col(t) = traj.signal_at(t);
    d.Xp.col(t) = traj.signal_at(t + 1);
    d.Um.col(t) = traj.input_at(t);
  }
  return d;
}

/// Materializes an instrument over the data window t = 0..N-1.
inline Instrument build_instrument(const Trajectory& traj, const InstrumentSpec& spec, int N) {
  require(N >= 1, "build_instrument: window must be nonempty");
  Instrument inst;
  inst.spec = spec;
  switch (spec.kind) {
    case InstrumentSpec::Kind::Identity:
      inst.Rm = Matrix::Identity(N, N);
      break;
    case InstrumentSpec::Kind::LaggedInput: {
      require(!spec.lags.empty(), "build_instrument: lag list must be nonempty");
      int max_lag = 0;
      for (int l : spec.lags) {
        require(l >= 0, "build_instrument: lags must be nonnegative");
        max_lag = std::max(max_lag, l);
      }
      require(traj.t0 <= -max_lag, "build_instrument: insufficient pre-samples for lag " +
                                       std::to_string(max_lag));
      require(traj.t_end() >= N - 1, "build_instrument: trajectory shorter than data window");
      const int m = traj.input_dim();
      inst.Rm.resize(m * static_cast<int>(spec.lags.size()), N);
      for (size_t k = 0; k < spec.lags.size(); ++k)
        for (int t = 0; t < N; ++t)
          inst.Rm.block(static_cast<int>(k) * m, t, m, 1) = traj.input_at(t - spec.lags[k]);
      break;
    }
    case InstrumentSpec::Kind::Custom:
      require(spec.custom.cols() == N, "build_instrument: custom instrument must have N columns");
      require(spec.custom.rows() >= 1, "build_instrument: custom instrument must have rows");
      inst.Rm = spec.custom;
      break;
  }
  return inst;
}

/// The cross-covariance bound (1/N) E R' R E' <= Hu in generalized form:
/// Q11 = N Hu, Q12 = 0, Q22 = -I.
inline NoiseBound make_cross_cov_bound(const Matrix& Hu, int N, int M) {
  require(Hu.rows() == Hu.cols(), "make_cross_cov_bound: Hu must be square");
  require(N >= 1 && M >= 1, "make_cross_cov_bound: N and M must be positive");
  const double tol = 1e-12 * (1.0 + spectral_norm_sym(Hu));
  if (min_eigenvalue_sym(Hu) < -tol)
    throw InvalidArgument("make_cross_cov_bound: Hu must be positive semidefinite");
  NoiseBound q;
  q.Q11 = static_cast<double>(N) * symmetrized(Hu);
  q.Q12 = Matrix::Zero(Hu.rows(), M);
  q.Q22 = -Matrix::Identity(M, M);
  return q;
}

/// Value of the noise-set quadratic form at E (p x p, PSD iff E is admissible).
inline Matrix noise_bound_form(const Matrix& Em, const Instrument& R, const NoiseBound& Q) {
  require(Em.rows() == Q.p(), "noise_bound_form: E row count must match Q11");
  require(R.N() == Em.cols(), "noise_bound_form: E and instrument must share N");
  require(R.M() == Q.M(), "noise_bound_form: instrument rows must match Q22");
  const Matrix X = R.Rm * Em.transpose();  // M x p
  return symmetrized(Q.Q11 + Q.Q12 * X + X.transpose() * Q.Q12.transpose() +
                     X.transpose() * Q.Q22 * X);
}

inline bool check_noise_bound(const Matrix& Em, const Instrument& R, const NoiseBound& Q) {
  Q.validate();
  return min_eigenvalue_sym(noise_bound_form(Em, R, Q)) >= -Q.psd_tolerance();
}

}  // namespace informa
