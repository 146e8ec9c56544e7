#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "informa/core.hpp"
#include "informa/data_matrices.hpp"
#include "informa/feasible_set.hpp"
#include "informa/lifting.hpp"
#include "informa/random.hpp"
#include "informa/synthesis.hpp"
#include "informa/trajectory.hpp"

namespace informa {

/// Benchmark plant of the numerical study.
inline void benchmark_system(Matrix& A0, Matrix& B0, Matrix& Cz_state) {
  A0.resize(3, 3);
  A0 << -0.2414, -0.8649, 0.6277,
         0.3192, -0.0301, 1.0933,
         0.3129, -0.1649, 1.1093;
  B0.resize(3, 2);
  B0 << 1, 0,
        0, 2,
        1, 1;
  Cz_state.resize(1, 3);
  Cz_state << 0, 0, 1;
}

struct NoiseModel {
  enum class Dist { BallUniform, IntervalUniform };
  Dist dist = Dist::BallUniform;
  double radius_sq = 0.35;  // BallUniform: ||e||^2 <= radius_sq
  double halfwidth = 0.35;  // IntervalUniform: e in [-halfwidth, halfwidth]^p
};

struct InputModel {
  enum class Dist { Gaussian, Uniform };
  Dist dist = Dist::Gaussian;
  double sigma = 0.5;    // standard deviation (uniform: halfwidth sigma*sqrt(3))
  bool burn_in = true;   // also excite the pre-sample window (t < 0) from a zero
                         // initial state, so instruments and x(0) carry real motion
};

struct BoundModel {
  enum class Kind { Norm, CrossCov };
  Kind kind = Kind::CrossCov;
  Matrix Hu;                 // p x p (scalar allowed as 1 x 1)
  std::vector<int> lags;     // CrossCov instrument lags
  std::string label;

  static BoundModel norm_bound(Matrix Hu) {
    BoundModel b;
    b.kind = Kind::Norm;
    b.Hu = std::move(Hu);
    b.label = "norm";
    return b;
  }
  static BoundModel cross_cov(Matrix Hu, std::vector<int> lags) {
    BoundModel b;
    b.kind = Kind::CrossCov;
    b.Hu = std::move(Hu);
    b.lags = std::move(lags);
    b.label = "crosscov";
    return b;
  }
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<int> N_grid = {2, 5, 10, 15, 20, 30, 50, 100, 250};
  int reps = 20;
  NoiseModel noise;
  InputModel input;
  std::vector<BoundModel> bounds;
  std::vector<Matrix> output_matrices;  // IO study: C0 rows (1 x 3 each)
  SynthesisObjective objective = SynthesisObjective::H2;
  SolverContract solver;
  int threads = 0;  // 0: hardware concurrency

  void validate() const {
    require(!N_grid.empty() && reps >= 1, "experiment config: N grid and reps must be nonempty");
    for (size_t i = 1; i < N_grid.size(); ++i)
      require(N_grid[i] > N_grid[i - 1], "experiment config: N grid must be ascending");
    require(!bounds.empty(), "experiment config: at least one bound model required");
  }

  /// Input-state study defaults: ball noise, norm vs cross-covariance bounds.
  static ExperimentConfig state_defaults() {
    ExperimentConfig c;
    c.noise.dist = NoiseModel::Dist::BallUniform;
    c.noise.radius_sq = 0.35;
    c.input.sigma = 0.5;
    c.bounds.push_back(BoundModel::norm_bound(0.35 * Matrix::Identity(3, 3)));
    c.bounds.push_back(BoundModel::cross_cov(Matrix::Identity(3, 3), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    return c;
  }

  /// Input-output study defaults: interval noise, three output choices.
  static ExperimentConfig io_defaults() {
    ExperimentConfig c;
    c.noise.dist = NoiseModel::Dist::IntervalUniform;
    c.noise.halfwidth = 0.35;
    c.input.sigma = 0.35;
    c.bounds.push_back(BoundModel::cross_cov(0.3 * Matrix::Identity(1, 1), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    Matrix c1(1, 3), c2(1, 3), c3(1, 3);
    c1 << 1, 0, 1;
    c2 << 0, 1, 0;
    c3 << 1, 0, 0;
    c.output_matrices = {c1, c2, c3};
    return c;
  }
};

struct Dataset {
  Trajectory traj;
  Matrix noise;  // p x N, the injected noise over the data window
};

namespace detail {

inline int max_lag_of(const ExperimentConfig& cfg) {
  int ml = 0;
  for (const auto& b : cfg.bounds)
    for (int l : b.lags) ml = std::max(ml, l);
  return ml;
}

inline Matrix draw_noise(const NoiseModel& nm, int p, int N, Rng& rng) {
  Matrix E(p, N);
  if (nm.dist == NoiseModel::Dist::BallUniform) {
    for (int t = 0; t < N; ++t) E.col(t) = rng.ball_uniform(p, nm.radius_sq);
  } else {
    for (int t = 0; t < N; ++t)
      for (int i = 0; i < p; ++i) E(i, t) = rng.uniform(-nm.halfwidth, nm.halfwidth);
  }
  return E;
}

inline Matrix draw_input(const InputModel& im, int m, int T, Rng& rng) {
  if (im.dist == InputModel::Dist::Gaussian) return im.sigma * rng.normal_matrix(m, T);
  const double a = im.sigma * std::sqrt(3.0);
  Matrix U(m, T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < m; ++i) U(i, t) = rng.uniform(-a, a);
  return U;
}

}  // namespace detail

/// Deterministic dataset for one Monte-Carlo cell, seeded by (seed, N, rep).
/// Inputs are zero before t = 0 (the zero initial condition) and Gaussian on
/// the data window; pre-samples are part of the returned trajectory so lagged
/// instruments stay aligned.
inline Dataset generate_state_dataset(const ExperimentConfig& cfg, const Matrix& A0, const Matrix& B0,
                                      int N, int rep) {
  const int n = static_cast<int>(A0.rows());
  const int m = static_cast<int>(B0.cols());
  const int pre = detail::max_lag_of(cfg);
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(rep)));

  Matrix U = Matrix::Zero(m, pre + N);
  if (cfg.input.burn_in) {
    U = detail::draw_input(cfg.input, m, pre + N, rng);
  } else {
    U.rightCols(N) = detail::draw_input(cfg.input, m, N, rng);
  }
  Matrix E = Matrix::Zero(n, pre + N);
  E.rightCols(N) = detail::draw_noise(cfg.noise, n, N, rng);

  Dataset ds;
  ds.traj = simulate_state(A0, B0, U, E, Vector::Zero(n), -pre);
  ds.noise = E.rightCols(N);
  return ds;
}

inline Dataset generate_io_dataset(const ExperimentConfig& cfg, const ArxModel& model, int N, int rep) {
  const int pre = std::max(detail::max_lag_of(cfg), model.lag);
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(rep)));

  Matrix U = Matrix::Zero(model.m, pre + N);
  if (cfg.input.burn_in) {
    U = detail::draw_input(cfg.input, model.m, pre + N, rng);
  } else {
    U.rightCols(N) = detail::draw_input(cfg.input, model.m, N, rng);
  }
  Matrix E = Matrix::Zero(model.p, pre + N);
  E.rightCols(N) = detail::draw_noise(cfg.noise, model.p, N, rng);

  Dataset ds;
  ds.traj = simulate_arx(model, U, E, -pre);
  ds.noise = E.rightCols(N);
  return ds;
}

struct SweepCell {
  int N = 0;
  int rep = 0;
  std::string arm;
  bool informative = false;
  std::optional<double> gamma_sq;
  SolveStatus status = SolveStatus::Inaccurate;
  bool bound_violated = false;
  bool slater_holds = false;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<std::string> arms;
  std::vector<int> N_grid;

  double fraction_informative(int N, const std::string& arm) const {
    int total = 0, inf = 0;
    for (const auto& c : cells)
      if (c.N == N && c.arm == arm) {
        ++total;
        inf += c.informative ? 1 : 0;
      }
    return total ? static_cast<double>(inf) / total : 0.0;
  }

  /// Linear-interpolation quantile of gamma^2 over informative cells.
  std::optional<double> gamma_sq_quantile(int N, const std::string& arm, double q) const {
    std::vector<double> vals;
    for (const auto& c : cells)
      if (c.N == N && c.arm == arm && c.informative && c.gamma_sq) vals.push_back(*c.gamma_sq);
    if (vals.empty()) return std::nullopt;
    std::sort(vals.begin(), vals.end());
    const double pos = q * (vals.size() - 1);
    const size_t k = static_cast<size_t>(pos);
    if (k + 1 >= vals.size()) return vals.back();
    const double w = pos - k;
    return (1.0 - w) * vals[k] + w * vals[k + 1];
  }
};

namespace detail {

struct CellTask {
  int N = 0;
  int rep = 0;
  int arm_index = 0;
};

/// Runs the per-cell pipeline: data -> bound -> feasible form -> H2 problem ->
/// minimize trace Z. Solver failures are recorded in the cell, never thrown.
template <typename CellFn>
inline void run_cells(const ExperimentConfig& cfg, int arm_count, const CellFn& fn,
                      std::vector<SweepCell>& out) {
  std::vector<CellTask> tasks;
  for (int N : cfg.N_grid)
    for (int rep = 0; rep < cfg.reps; ++rep)
      for (int a = 0; a < arm_count; ++a) tasks.push_back({N, rep, a});
  out.resize(tasks.size());

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      out[i] = fn(tasks[i]);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
}

inline SweepCell evaluate_h2_cell(const FeasibleSetForm& f, const LiftingStructure& s, const Matrix& Cz,
                                  const Matrix& Dz, const std::vector<Matrix>& slater_candidates,
                                  const SolverContract& contract) {
  SweepCell cell;
  const auto slater = slater_diagnostics(f, slater_candidates);
  cell.slater_holds = slater.holds;
  try {
    const SdpProblem problem = h2_problem(f, s, Cz, Dz);
    const SolveOutcome sol = solve(problem, contract);
    cell.status = sol.status;
    if (sol.status == SolveStatus::Feasible && sol.objective_value) {
      cell.informative = true;
      cell.gamma_sq = *sol.objective_value;
    }
  } catch (const Error&) {
    cell.status = SolveStatus::Inaccurate;
  }
  return cell;
}

}  // namespace detail

/// Input-state Monte-Carlo sweep over data lengths for each configured bound.
inline SweepResult run_state_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  Matrix A0, B0, Cz;
  benchmark_system(A0, B0, Cz);
  const Matrix Dz = Matrix::Zero(1, 2);
  const int n = 3, m = 2;
  const LiftingStructure s = LiftingStructure::state(n, m);

  SweepResult result;
  result.N_grid = cfg.N_grid;
  for (const auto& b : cfg.bounds) result.arms.push_back(b.label);

  detail::run_cells(cfg, static_cast<int>(cfg.bounds.size()), [&](const detail::CellTask& task) {
    const auto& bound = cfg.bounds[task.arm_index];
    SweepCell cell;
    try {
      const Dataset ds = generate_state_dataset(cfg, A0, B0, task.N, task.rep);
      const StateDataMatrices d = build_state_matrices(ds.traj);
      const InstrumentSpec spec = bound.kind == BoundModel::Kind::Norm
                                      ? InstrumentSpec::identity()
                                      : InstrumentSpec::lagged_input(bound.lags);
      const Instrument R = build_instrument(ds.traj, spec, d.N());
      const NoiseBound Q = make_cross_cov_bound(bound.Hu, d.N(), R.M());
      const bool ok = check_noise_bound(ds.noise, R, Q);
      const FeasibleSetForm f = build_feasible_form_state(d, R, Q);
      std::vector<Matrix> candidates = {least_squares_candidate_state(d),
                                        Matrix::Zero(n + m, n)};
      cell = detail::evaluate_h2_cell(f, s, Cz, Dz, candidates, cfg.solver);
      cell.bound_violated = !ok;
    } catch (const Error&) {
      cell.status = SolveStatus::Inaccurate;
    }
    cell.N = task.N;
    cell.rep = task.rep;
    cell.arm = bound.label;
    return cell;
  }, result.cells);
  return result;
}

/// Input-output sweep over output-matrix choices (one arm per C0).
inline SweepResult run_io_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  require(!cfg.output_matrices.empty(), "run_io_sweep: output matrices required");
  require(cfg.bounds.size() == 1 && cfg.bounds[0].kind == BoundModel::Kind::CrossCov,
          "run_io_sweep: a single cross-covariance bound is expected");
  Matrix A0, B0, CzState;
  benchmark_system(A0, B0, CzState);

  std::vector<ArxModel> models;
  std::vector<LiftingStructure> structures;
  for (const auto& C0 : cfg.output_matrices) {
    models.push_back(arx_from_state_space(A0, B0, C0));
    structures.push_back(lift_structure(models.back().lag, models.back().p, models.back().m));
  }

  SweepResult result;
  result.N_grid = cfg.N_grid;
  for (size_t i = 0; i < cfg.output_matrices.size(); ++i) {
    std::ostringstream label;
    label << "c0_";
    for (int j = 0; j < cfg.output_matrices[i].cols(); ++j)
      label << (j ? "_" : "") << cfg.output_matrices[i](0, j);
    result.arms.push_back(label.str());
  }

  const auto& bound = cfg.bounds[0];
  detail::run_cells(cfg, static_cast<int>(cfg.output_matrices.size()), [&](const detail::CellTask& task) {
    const ArxModel& model = models[task.arm_index];
    const LiftingStructure& s = structures[task.arm_index];
    SweepCell cell;
    try {
      const Dataset ds = generate_io_dataset(cfg, model, task.N, task.rep);
      const IoDataMatrices d = build_io_matrices(ds.traj, model.lag);
      const Instrument R = build_instrument(ds.traj, InstrumentSpec::lagged_input(bound.lags), d.N());
      const NoiseBound Q = make_cross_cov_bound(bound.Hu, d.N(), R.M());
      const bool ok = check_noise_bound(ds.noise, R, Q);
      const FeasibleSetForm f = build_feasible_form_io(d, R, Q, s);
      // Performance output z(t) = y(t-1): first output-lag block of zeta.
      Matrix Cz = Matrix::Zero(model.p, s.n());
      Cz.leftCols(model.p) = Matrix::Identity(model.p, model.p);
      const Matrix Dz = Matrix::Zero(model.p, model.m);
      std::vector<Matrix> candidates = {least_squares_candidate_io(d, s),
                                        Matrix::Zero(s.n() + s.m, s.n())};
      cell = detail::evaluate_h2_cell(f, s, Cz, Dz, candidates, cfg.solver);
      cell.bound_violated = !ok;
    } catch (const Error&) {
      cell.status = SolveStatus::Inaccurate;
    }
    cell.N = task.N;
    cell.rep = task.rep;
    cell.arm = result.arms[task.arm_index];
    return cell;
  }, result.cells);
  return result;
}

/// Writes fractions.csv, gamma.csv (and per-arm gamma files when several arms
/// carry gamma data) plus the raw cells.csv under outdir.
inline void emit_plot_data(const SweepResult& r, const std::string& outdir) {
  namespace fs = std::filesystem;
  fs::create_directories(outdir);

  {
    std::ofstream out(fs::path(outdir) / "fractions.csv");
    out << "N";
    for (const auto& arm : r.arms) out << ",fraction_" << arm;
    out << "\n";
    for (int N : r.N_grid) {
      out << N;
      for (const auto& arm : r.arms) out << "," << r.fraction_informative(N, arm);
      out << "\n";
    }
  }
  for (size_t a = 0; a < r.arms.size(); ++a) {
    const std::string name = r.arms.size() == 1 || r.arms[a] == "crosscov"
                                 ? "gamma.csv"
                                 : "gamma_" + r.arms[a] + ".csv";
    std::ofstream out(fs::path(outdir) / name);
    out << "N,median,p25,p75\n";
    for (int N : r.N_grid) {
      const auto med = r.gamma_sq_quantile(N, r.arms[a], 0.5);
      if (!med) continue;
      out << N << "," << *med << "," << *r.gamma_sq_quantile(N, r.arms[a], 0.25) << ","
          << *r.gamma_sq_quantile(N, r.arms[a], 0.75) << "\n";
    }
  }
  {
    std::ofstream out(fs::path(outdir) / "cells.csv");
    out << "N,rep,arm,informative,gamma_sq,status,bound_violated,slater_holds\n";
    for (const auto& c : r.cells) {
      out << c.N << "," << c.rep << "," << c.arm << "," << (c.informative ? 1 : 0) << ",";
      if (c.gamma_sq) out << *c.gamma_sq;
      out << "," << to_string(c.status) << "," << (c.bound_violated ? 1 : 0) << ","
          << (c.slater_holds ? 1 : 0) << "\n";
    }
  }
}

}  // namespace informa
