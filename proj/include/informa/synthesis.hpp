#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "informa/core.hpp"
#include "informa/feasible_set.hpp"
#include "informa/lifting.hpp"
#include "informa/sdp_problem.hpp"
#include "informa/sdp_solver.hpp"

namespace informa {

/// Margins realizing the strict inequalities as checkable closed constraints.
struct SynthesisOptions {
  double eps_pd = 1e-6;      // P >= eps_pd I and strict auxiliary blocks >= eps_pd I
  double eps_strict = 1e-8;  // beta >= eps_strict
  bool normalize_data_term = true;
};

namespace detail {

struct SynthesisLayout {
  int n = 0, m = 0, pz = 0, pn = 0;
  VarMap map;
  std::vector<std::pair<int, int>> psym;  // packed (i, j) pairs, i <= j

  static SynthesisLayout make(const FeasibleSetForm& f, SynthesisObjective obj, int pz) {
    SynthesisLayout lay;
    lay.n = f.n;
    lay.m = f.m;
    lay.pz = pz;
    lay.pn = f.p;
    int off = 0;
    lay.map.n = f.n;
    lay.map.m = f.m;
    lay.map.pz = pz;
    lay.map.p_noise = f.p;
    lay.map.objective = obj;
    lay.map.P = {off, VarMap::sym_size(f.n)};
    off += lay.map.P.count;
    lay.map.L = {off, f.m * f.n};
    off += lay.map.L.count;
    lay.map.alpha = {off, 1};
    off += 1;
    lay.map.beta = {off, 1};
    off += 1;
    if (obj == SynthesisObjective::H2) {
      lay.map.Z = {off, VarMap::sym_size(f.p)};
      off += lay.map.Z.count;
    }
    for (int j = 0; j < f.n; ++j)
      for (int i = 0; i <= j; ++i) lay.psym.emplace_back(i, j);
    return lay;
  }

  int num_vars() const {
    return map.P.count + map.L.count + 2 + map.Z.count;
  }

  // 1-based variable indices for the entry format
  int var_P(int k) const { return map.P.offset + k + 1; }
  int var_L(int i, int j) const { return map.L.offset + i * n + j + 1; }
  int var_alpha() const { return map.alpha.offset + 1; }
  int var_beta() const { return map.beta.offset + 1; }
  int var_Z(int k) const { return map.Z.offset + k + 1; }

  Matrix sym_basis(int k, int dim) const {
    Matrix E = Matrix::Zero(dim, dim);
    const auto [i, j] = psym[k];
    E(i, j) = 1.0;
    E(j, i) = 1.0;
    return E;
  }
};

/// Scaled data term and the recorded scale. Normalizing keeps the multiplier
/// alpha O(1) even for nearly-singleton feasible sets.
inline std::pair<Matrix, double> scaled_lambda(const FeasibleSetForm& f, bool normalize) {
  double s = 1.0;
  if (normalize) {
    const double nrm = f.Lambda.norm();
    if (nrm > 0.0) s = nrm;
  }
  return {f.Lambda / s, s};
}

}  // namespace detail

/// Stabilization certificate LMI for input-output data: one PSD block of size
/// 3n+m with the data term scaled by the multiplier alpha, plus margin blocks
/// P >= eps I, beta >= eps, alpha >= 0.
inline SdpProblem stab_problem_io(const FeasibleSetForm& f, const LiftingStructure& s,
                                  const SynthesisOptions& opt = {}) {
  require(s.n() == f.n && s.m == f.m, "stab_problem_io: structure does not match form dimensions");
  auto lay = detail::SynthesisLayout::make(f, SynthesisObjective::Stabilization, 0);
  const auto [lam, lam_scale] = detail::scaled_lambda(f, opt.normalize_data_term);
  lay.map.lambda_scale = lam_scale;

  const int n = f.n, m = f.m;
  const int o1 = 0, o2 = n, o3 = 2 * n, o4 = 2 * n + m;
  const int size = 3 * n + m;
  const int K = lay.num_vars();

  BlockBuilder main(size, K);
  for (int k = 0; k < lay.map.P.count; ++k) {
    const Matrix E = lay.sym_basis(k, n);
    const int v = lay.var_P(k);
    main.add_sym(v, o1, E);
    main.add(v, o1, o2, -(s.J1 * E));
    main.add(v, o1, o4, s.J1 * E);
    main.add_sym(v, o2, -E);
    main.add_sym(v, o4, E);
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      Matrix G = Matrix::Zero(m, n);
      G(i, j) = 1.0;
      const int v = lay.var_L(i, j);
      main.add(v, o1, o2, -(s.J2 * G));
      main.add(v, o1, o4, s.J2 * G);
      main.add(v, o2, o3, -G.transpose());
      main.add(v, o3, o4, G);
    }
  main.add_sym(lay.var_beta(), o1, -Matrix::Identity(n, n));
  main.add_sym(lay.var_alpha(), 0, -lam);

  BlockBuilder pmargin(n, K);
  for (int k = 0; k < lay.map.P.count; ++k) pmargin.add_sym(lay.var_P(k), 0, lay.sym_basis(k, n));
  pmargin.add_sym(0, 0, -opt.eps_pd * Matrix::Identity(n, n));

  SdpProblem p;
  p.num_vars = K;
  p.var_map = lay.map;
  p.blocks.push_back(main.finish());
  p.blocks.push_back(pmargin.finish());
  SdpBlock beta_blk;
  beta_blk.size = 1;
  beta_blk.entries.push_back({lay.var_beta(), 0, 0, 1.0});
  beta_blk.entries.push_back({0, 0, 0, -opt.eps_strict});
  p.blocks.push_back(beta_blk);
  SdpBlock alpha_blk;
  alpha_blk.size = 1;
  alpha_blk.entries.push_back({lay.var_alpha(), 0, 0, 1.0});
  p.blocks.push_back(alpha_blk);
  return p;
}

/// Input-state stabilization LMI: the same block pattern with J1 = 0, J2 = 0.
inline SdpProblem stab_problem_state(const FeasibleSetForm& f, const SynthesisOptions& opt = {}) {
  return stab_problem_io(f, LiftingStructure::state(f.n, f.m), opt);
}

namespace detail {

/// Shared assembly of the performance LMIs. The main block is
///   [ P - beta I (+ hinf: - gamma^-1 Hz Hz'), 0, 0, J1 P + J2 L, 0 ]
///   [ ., 0, 0, P, 0 ]
///   [ ., ., alpha-data, L, 0 ]
///   [ ., ., ., P, F' ]
///   [ ., ., ., ., gamma I (hinf) or I (h2) ]
/// minus the alpha-scaled data term on the leading 2n+m rows. The data border
/// reuses the stabilization one (Ynext in place of the performance variant);
/// both performance variants share it.
inline SdpProblem performance_problem(const FeasibleSetForm& f, const LiftingStructure& s, const Matrix& Cz,
                                      const Matrix& Dz, SynthesisObjective obj, double gamma,
                                      const SynthesisOptions& opt) {
  require(s.n() == f.n && s.m == f.m, "performance problem: structure does not match form dimensions");
  require(Cz.cols() == f.n, "performance problem: Cz must have n columns");
  require(Dz.rows() == Cz.rows() && Dz.cols() == f.m, "performance problem: Dz must be pz x m");
  require(static_cast<int>(s.Hz.cols()) == f.p, "performance problem: Hz must match the noise dimension");
  const int pz = static_cast<int>(Cz.rows());
  require(pz >= 1, "performance problem: performance output must be nonempty");
  if (obj == SynthesisObjective::Hinf) require(gamma > 0.0, "hinf_problem: gamma must be positive");

  auto lay = detail::SynthesisLayout::make(f, obj, pz);
  const auto [lam, lam_scale] = detail::scaled_lambda(f, opt.normalize_data_term);
  lay.map.lambda_scale = lam_scale;
  lay.map.gamma = obj == SynthesisObjective::Hinf ? gamma : 0.0;

  const int n = f.n, m = f.m, pn = f.p;
  const int o1 = 0, o2 = n, o3 = 2 * n, o4 = 2 * n + m, o5 = 3 * n + m;
  const int size = 3 * n + m + pz;
  const int K = lay.num_vars();

  BlockBuilder main(size, K);
  for (int k = 0; k < lay.map.P.count; ++k) {
    const Matrix E = lay.sym_basis(k, n);
    const int v = lay.var_P(k);
    main.add_sym(v, o1, E);
    main.add(v, o1, o4, s.J1 * E);
    main.add(v, o2, o4, E);
    main.add_sym(v, o4, E);
    main.add(v, o4, o5, E * Cz.transpose());
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      Matrix G = Matrix::Zero(m, n);
      G(i, j) = 1.0;
      const int v = lay.var_L(i, j);
      main.add(v, o1, o4, s.J2 * G);
      main.add(v, o3, o4, G);
      main.add(v, o4, o5, G.transpose() * Dz.transpose());
    }
  main.add_sym(lay.var_beta(), o1, -Matrix::Identity(n, n));
  main.add_sym(lay.var_alpha(), 0, -lam);
  if (obj == SynthesisObjective::Hinf) {
    main.add_sym(0, o1, -(1.0 / gamma) * (s.Hz * s.Hz.transpose()));
    main.add_sym(0, o5, gamma * Matrix::Identity(pz, pz));
  } else {
    main.add_sym(0, o5, Matrix::Identity(pz, pz));
  }

  // [P F'; F gamma I] >= eps I (hinf) or [P F'; F I] >= eps I (h2)
  BlockBuilder pf(n + pz, K);
  for (int k = 0; k < lay.map.P.count; ++k) {
    const Matrix E = lay.sym_basis(k, n);
    const int v = lay.var_P(k);
    pf.add_sym(v, 0, E);
    pf.add(v, 0, n, E * Cz.transpose());
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      Matrix G = Matrix::Zero(m, n);
      G(i, j) = 1.0;
      pf.add(lay.var_L(i, j), 0, n, G.transpose() * Dz.transpose());
    }
  const double corner = obj == SynthesisObjective::Hinf ? gamma : 1.0;
  pf.add_sym(0, n, corner * Matrix::Identity(pz, pz));
  pf.add_sym(0, 0, -opt.eps_pd * Matrix::Identity(n + pz, n + pz));

  BlockBuilder pmargin(n, K);
  for (int k = 0; k < lay.map.P.count; ++k) pmargin.add_sym(lay.var_P(k), 0, lay.sym_basis(k, n));
  pmargin.add_sym(0, 0, -opt.eps_pd * Matrix::Identity(n, n));

  SdpProblem p;
  p.num_vars = K;
  p.var_map = lay.map;
  p.blocks.push_back(main.finish());
  p.blocks.push_back(pf.finish());

  if (obj == SynthesisObjective::H2) {
    // [Z Hz'; Hz P] >= 0 links trace Z to the noise-to-performance gain.
    BlockBuilder zh(pn + n, K);
    int zk = 0;
    for (int j = 0; j < pn; ++j)
      for (int i = 0; i <= j; ++i, ++zk) {
        Matrix Ez = Matrix::Zero(pn, pn);
        Ez(i, j) = 1.0;
        Ez(j, i) = 1.0;
        zh.add_sym(lay.var_Z(zk), 0, Ez);
      }
    for (int k = 0; k < lay.map.P.count; ++k) zh.add_sym(lay.var_P(k), pn, lay.sym_basis(k, n));
    zh.add(0, 0, pn, s.Hz.transpose());
    p.blocks.push_back(zh.finish());
  }

  p.blocks.push_back(pmargin.finish());
  SdpBlock beta_blk;
  beta_blk.size = 1;
  beta_blk.entries.push_back({lay.var_beta(), 0, 0, 1.0});
  beta_blk.entries.push_back({0, 0, 0, -opt.eps_strict});
  p.blocks.push_back(beta_blk);
  SdpBlock alpha_blk;
  alpha_blk.size = 1;
  alpha_blk.entries.push_back({lay.var_alpha(), 0, 0, 1.0});
  p.blocks.push_back(alpha_blk);

  if (obj == SynthesisObjective::H2) {
    Vector c = Vector::Zero(K);
    int k = 0;
    for (int j = 0; j < pn; ++j)
      for (int i = 0; i <= j; ++i) {
        if (i == j) c[lay.map.Z.offset + k] = 1.0;
        ++k;
      }
    p.objective = c;
  }
  return p;
}

}  // namespace detail

inline SdpProblem hinf_problem(const FeasibleSetForm& f, const LiftingStructure& s, const Matrix& Cz,
                               const Matrix& Dz, double gamma, const SynthesisOptions& opt = {}) {
  return detail::performance_problem(f, s, Cz, Dz, SynthesisObjective::Hinf, gamma, opt);
}

/// H2 certificate problem with objective minimize trace Z; the achieved
/// performance is gamma^2 = trace Z at the optimum.
inline SdpProblem h2_problem(const FeasibleSetForm& f, const LiftingStructure& s, const Matrix& Cz,
                             const Matrix& Dz, const SynthesisOptions& opt = {}) {
  return detail::performance_problem(f, s, Cz, Dz, SynthesisObjective::H2, 0.0, opt);
}

struct SynthesisDiagnostics {
  SlaterReport slater;
  Vector residual_eigs;      // per-block min eigenvalues at the solution
  SolveStatus status = SolveStatus::Inaccurate;
  bool weak_infeasibility = false;
  bool rank_flag = false;
  double lambda_scale = 1.0;
};

struct SynthesisResult {
  bool feasible = false;
  Matrix K;
  Matrix P;
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> gamma;
  SynthesisDiagnostics diagnostics;
};

/// Recovers (K, P, alpha, beta, gamma) from a feasible solver outcome.
/// K = L P^-1 through a linear solve; a near-singular P is an extraction error.
inline SynthesisResult extract_result(const SolveOutcome& sol, const SdpProblem& problem) {
  require(sol.status == SolveStatus::Feasible, "extract_result: solver did not report feasible");
  const VarMap& vm = problem.var_map;
  SynthesisResult res;
  res.feasible = true;
  res.P = VarMap::unpack_sym(sol.x, vm.P, vm.n);
  const Matrix L = VarMap::unpack_dense(sol.x, vm.L, vm.m, vm.n);
  res.alpha = sol.x[vm.alpha.offset] / vm.lambda_scale;
  res.beta = sol.x[vm.beta.offset];

  Eigen::SelfAdjointEigenSolver<Matrix> es(res.P);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw ExtractionError("extract_result: P is numerically singular (condition " +
                          std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) + ")");
  res.K = res.P.llt().solve(L.transpose()).transpose();

  if (vm.objective == SynthesisObjective::Hinf) {
    res.gamma = vm.gamma;
  } else if (vm.objective == SynthesisObjective::H2) {
    const Matrix Z = VarMap::unpack_sym(sol.x, vm.Z, vm.p_noise);
    res.gamma = std::sqrt(std::max(Z.trace(), 0.0));
  }
  res.diagnostics.residual_eigs = certificate_replay(problem, sol.x);
  res.diagnostics.status = sol.status;
  res.diagnostics.lambda_scale = vm.lambda_scale;
  return res;
}

namespace detail {

/// Pure feasibility solutions sit on the cone boundary; re-solving with the
/// multiplier beta maximized (under a cap on P) pushes them into the interior,
/// which makes certificate replay and gain extraction well conditioned.
inline SolveOutcome polish_beta(const SdpProblem& problem, const SolveOutcome& first,
                                const SolverContract& contract) {
  if (first.status != SolveStatus::Feasible) return first;
  const VarMap& vm = problem.var_map;
  const Matrix P1 = VarMap::unpack_sym(first.x, vm.P, vm.n);
  const double kappa = 1e3 * std::max(1.0, spectral_norm_sym(P1));

  SdpProblem polished = problem;
  polished.objective = Vector::Zero(problem.num_vars);
  (*polished.objective)[vm.beta.offset] = -1.0;  // maximize beta
  BlockBuilder cap(vm.n, problem.num_vars);
  for (int k = 0, idx = 0; k < vm.n; ++k)
    for (int i = 0; i <= k; ++i, ++idx) {
      Matrix E = Matrix::Zero(vm.n, vm.n);
      E(i, k) = -1.0;
      E(k, i) = -1.0;
      cap.add_sym(vm.P.offset + idx + 1, 0, E);
    }
  cap.add_sym(0, 0, kappa * Matrix::Identity(vm.n, vm.n));
  polished.blocks.push_back(cap.finish());

  SolveOutcome second = solve(polished, contract);
  if (second.status != SolveStatus::Feasible) return first;
  second.objective_value.reset();
  return second;
}

}  // namespace detail

}  // namespace informa
