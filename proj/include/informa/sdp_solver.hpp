#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "informa/core.hpp"
#include "informa/sdp_problem.hpp"

namespace informa {

struct SolverCapabilities {
  bool feasibility = true;
  bool linear_objective = true;
};

struct SolverTolerances {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  int max_iter = 100000;     // total Newton iteration budget
  double var_bound = 1e8;    // box |x_i| <= var_bound guards recession directions
};

struct SolverContract {
  SolverCapabilities capabilities;
  SolverTolerances tolerances;

  /// Library defaults; INFORMA_SDP_TOL overrides eps_abs when set.
  static SolverContract defaults() {
    SolverContract c;
    if (const char* env = std::getenv("INFORMA_SDP_TOL")) {
      char* end = nullptr;
      const double v = std::strtod(env, &end);
      if (end != env && v > 0.0) c.tolerances.eps_abs = v;
    }
    return c;
  }
};

enum class SolveStatus { Feasible, Infeasible, Inaccurate, IterationLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct SolveOutcome {
  SolveStatus status = SolveStatus::Inaccurate;
  Vector x;                               // populated when status = Feasible
  std::optional<double> objective_value;  // c'x when an objective was given
  bool weak = false;                      // infeasibility claimed without a usable certificate gap
  double feasibility_margin = 0.0;        // best lower bound on all block min-eigenvalues
  int newton_iterations = 0;
};

namespace detail {

/// Dense per-block view of the affine map, cached for Newton iterations.
/// Blocks are preconditioned by a diagonal congruence D F D (same feasible
/// set) so constants of very different magnitude, e.g. a gamma I corner next
/// to unit-scale entries, do not wreck the Cholesky factors.
struct BlockCache {
  int size = 0;
  Matrix constant;
  std::vector<int> vars;          // decision variables with support here (1-based)
  std::vector<Matrix> coeffs;     // matching dense symmetric coefficients
};

inline std::vector<BlockCache> build_cache(const SdpProblem& p) {
  std::vector<BlockCache> cache;
  cache.reserve(p.blocks.size());
  for (const auto& blk : p.blocks) {
    BlockCache c;
    c.size = blk.size;
    c.constant = Matrix::Zero(blk.size, blk.size);
    std::map<int, Matrix> per_var;
    for (const auto& e : blk.entries) {
      Matrix* target = nullptr;
      if (e.var == 0) {
        target = &c.constant;
      } else {
        auto it = per_var.find(e.var);
        if (it == per_var.end()) it = per_var.emplace(e.var, Matrix::Zero(blk.size, blk.size)).first;
        target = &it->second;
      }
      (*target)(e.row, e.col) += e.value;
      if (e.row != e.col) (*target)(e.col, e.row) += e.value;
    }
    Vector d(blk.size);
    for (int j = 0; j < blk.size; ++j) d[j] = 1.0 / std::sqrt(std::max(1.0, std::abs(c.constant(j, j))));
    const auto D = d.asDiagonal();
    c.constant = D * c.constant * D;
    for (auto& [var, M] : per_var) {
      c.vars.push_back(var);
      c.coeffs.push_back(D * M * D);
    }
    cache.push_back(std::move(c));
  }
  return cache;
}

inline Matrix assemble_cached(const BlockCache& c, const Vector& x) {
  Matrix F = c.constant;
  for (size_t k = 0; k < c.vars.size(); ++k) F += x[c.vars[k] - 1] * c.coeffs[k];
  return F;
}

/// -sum log det F_b(x), or nullopt if x is not strictly interior.
inline std::optional<double> barrier_value(const std::vector<BlockCache>& cache, const Vector& x) {
  double val = 0.0;
  for (const auto& c : cache) {
    Eigen::LLT<Matrix> llt(assemble_cached(c, x));
    if (llt.info() != Eigen::Success) return std::nullopt;
    const auto& L = llt.matrixLLT();
    double logdet = 0.0;
    for (int i = 0; i < c.size; ++i) {
      if (L(i, i) <= 0.0) return std::nullopt;
      logdet += std::log(L(i, i));
    }
    val -= 2.0 * logdet;
  }
  return val;
}

struct CenteringResult {
  bool converged = false;
  int iterations = 0;
};

/// Damped Newton minimization of tau c'x - sum log det F_b(x) from a strictly
/// interior starting point. x is updated in place.
inline CenteringResult center(const std::vector<BlockCache>& cache, const Vector& cvec, double tau,
                              Vector& x, int max_newton, int& newton_budget) {
  const int K = static_cast<int>(x.size());
  CenteringResult res;
  auto phi = [&](const Vector& z) -> std::optional<double> {
    const auto b = barrier_value(cache, z);
    if (!b) return std::nullopt;
    return tau * cvec.dot(z) + *b;
  };
  auto phi_x = phi(x);
  if (!phi_x) throw NumericalError("sdp solver: centering started outside the cone");

  for (int it = 0; it < max_newton && newton_budget > 0; ++it, --newton_budget) {
    Vector g = tau * cvec;
    Matrix H = Matrix::Zero(K, K);
    for (const auto& c : cache) {
      Eigen::LLT<Matrix> llt(assemble_cached(c, x));
      if (llt.info() != Eigen::Success) throw NumericalError("sdp solver: lost interiority");
      const int nv = static_cast<int>(c.vars.size());
      std::vector<Matrix> S(nv);
      for (int a = 0; a < nv; ++a) {
        Matrix tmp = llt.matrixL().solve(c.coeffs[a]);
        S[a] = llt.matrixL().solve(tmp.transpose());  // L^-1 Fa L^-T
        g[c.vars[a] - 1] -= S[a].trace();
      }
      for (int a = 0; a < nv; ++a)
        for (int b = a; b < nv; ++b) {
          const double hab = S[a].cwiseProduct(S[b].transpose()).sum();
          H(c.vars[a] - 1, c.vars[b] - 1) += hab;
          if (a != b) H(c.vars[b] - 1, c.vars[a] - 1) += hab;
        }
    }

    Vector d;
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::LDLT<Matrix> ldlt(H + reg * Matrix::Identity(K, K));
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-g);
        if (d.allFinite()) break;
      }
      reg = reg == 0.0 ? 1e-12 * (1.0 + H.trace() / K) : reg * 100.0;
      d.resize(0);
    }
    if (d.size() == 0) throw NumericalError("sdp solver: Newton system is numerically singular");

    const double decrement = -g.dot(d);  // lambda^2
    if (!(decrement > 0.0)) {
      res.converged = true;  // gradient numerically zero or direction invalid
      res.iterations = it;
      return res;
    }
    if (decrement <= 1e-10) {
      res.converged = true;
      res.iterations = it;
      return res;
    }

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector cand = x + step * d;
      const auto phi_c = phi(cand);
      if (phi_c && *phi_c <= *phi_x - 0.25 * step * decrement) {
        x = cand;
        phi_x = phi_c;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // at numerical floor
      res.iterations = it;
      return res;
    }
  }
  res.converged = false;
  res.iterations = max_newton;
  return res;
}

}  // namespace detail

/// Re-evaluates the blocks at x; Feasible outcomes must pass with
/// min-eigenvalue >= -10 eps_abs in every block.
inline Vector certificate_replay(const SdpProblem& p, const Vector& x) { return p.block_min_eigs(x); }

namespace detail {

/// One 2x2 diagonal box block per variable: diag(B + x_i, B - x_i) >= 0.
/// Unbounded recession directions (e.g. a multiplier that can grow without
/// limit when the data term is semidefinite) would otherwise make the
/// barrier subproblems unbounded below.
inline void append_box_blocks(SdpProblem& p, int first_var, int last_var, double bound) {
  for (int v = first_var; v <= last_var; ++v) {
    SdpBlock box;
    box.size = 2;
    box.entries.push_back({0, 0, 0, bound});
    box.entries.push_back({v, 0, 0, 1.0});
    box.entries.push_back({0, 1, 1, bound});
    box.entries.push_back({v, 1, 1, -1.0});
    p.blocks.push_back(box);
  }
}

inline SolveOutcome solve_impl(const SdpProblem& p, const SolverContract& contract) {
  const auto& tol = contract.tolerances;
  const int K = p.num_vars;

  SolveOutcome out;

  // Augmented phase-1 problem: variables [x; t].
  SdpProblem aug;
  aug.num_vars = K + 1;
  aug.blocks = p.blocks;
  for (auto& blk : aug.blocks)
    for (int i = 0; i < blk.size; ++i) blk.entries.push_back({K + 1, i, i, -1.0});
  detail::append_box_blocks(aug, 1, K, tol.var_bound);

  double s0 = 1.0;
  {
    Vector zero = Vector::Zero(K);
    for (const auto& blk : p.blocks) s0 = std::max(s0, spectral_norm_sym(blk.assemble(zero)));
  }
  const double t_cap = 10.0 * s0;  // phase 1 stays bounded even for homogeneous LMIs
  SdpBlock cap;
  cap.size = 1;
  cap.entries.push_back({0, 0, 0, t_cap});
  cap.entries.push_back({K + 1, 0, 0, -1.0});
  aug.blocks.push_back(cap);

  const auto cache = detail::build_cache(aug);
  const int m_total = aug.total_dim();

  Vector x = Vector::Zero(K + 1);
  {
    double min_eig0 = t_cap;
    for (const auto& blk : p.blocks) min_eig0 = std::min(min_eig0, min_eigenvalue_sym(blk.assemble(Vector::Zero(K))));
    x[K] = min_eig0 - 0.05 * (1.0 + std::abs(min_eig0));
  }

  Vector cvec = Vector::Zero(K + 1);
  cvec[K] = -1.0;  // maximize t

  const double t_stop = 1e-4;  // margin in original units; enough for replay at any eps_abs
  const double gap_min = 0.1 * std::min(tol.eps_abs, 1e-8);
  int budget = tol.max_iter;

  double tau = m_total / std::max(1.0, std::abs(x[K]));
  bool phase1_done = false;
  bool feasible = false;
  bool centered = false;
  while (budget > 0) {
    centered = detail::center(cache, cvec, tau, x, 80, budget).converged;
    const double t_now = x[K];
    const double gap = m_total / tau;
    if (t_now >= t_stop) {
      feasible = true;
      phase1_done = true;
      break;
    }
    if (t_now + 2.0 * gap < 0.0) {  // certified: the best achievable margin is negative
      out.status = SolveStatus::Infeasible;
      out.weak = !centered;
      out.feasibility_margin = t_now;
      out.newton_iterations = tol.max_iter - budget;
      return out;
    }
    if (gap <= gap_min) {
      phase1_done = true;
      feasible = t_now > 0.0;
      if (!feasible) {
        out.status = SolveStatus::Infeasible;
        out.weak = true;  // margin pinned at zero within tolerance, no strict separation
        out.feasibility_margin = t_now;
        out.newton_iterations = tol.max_iter - budget;
        return out;
      }
      break;
    }
    tau *= 12.0;
  }
  if (!phase1_done) {
    out.status = SolveStatus::IterationLimit;
    out.newton_iterations = tol.max_iter;
    return out;
  }

  Vector xsol = x.head(K);
  double margin = x[K];

  if (p.objective) {
    // Phase 2: follow the central path of the original problem (plus boxes).
    // Barely-feasible instances have almost no interior to walk through; a
    // tolerance-level slack on every block restores one and perturbs the
    // optimal value by O(eps_abs) only.
    SdpProblem boxed = p;
    const double slack = margin < 2.5 * tol.eps_abs ? 5.0 * tol.eps_abs : 0.0;
    if (slack > 0.0)
      for (auto& blk : boxed.blocks)
        for (int i = 0; i < blk.size; ++i) blk.entries.push_back({0, i, i, slack});
    detail::append_box_blocks(boxed, 1, K, tol.var_bound);
    const auto cache2 = detail::build_cache(boxed);
    const int m2 = boxed.total_dim();
    Vector c2 = *p.objective;
    double tau2 = m2 / std::max(1.0, std::abs(c2.dot(xsol)));
    bool converged = false;
    while (budget > 0) {
      detail::center(cache2, c2, tau2, xsol, 80, budget);
      const double gap = m2 / tau2;
      if (gap <= tol.eps_abs + tol.eps_rel * (1.0 + std::abs(c2.dot(xsol)))) {
        converged = true;
        break;
      }
      tau2 *= 12.0;
    }
    if (!converged) {
      out.status = SolveStatus::IterationLimit;
      out.newton_iterations = tol.max_iter;
      return out;
    }
    out.objective_value = c2.dot(xsol);
    margin = p.block_min_eigs(xsol).minCoeff();
  }

  out.newton_iterations = tol.max_iter - budget;
  out.x = xsol;
  (void)margin;
  out.feasibility_margin = p.min_eig_all(xsol);

  // A Feasible claim must replay; anything else is a numerics failure.
  if (feasible && out.feasibility_margin >= -10.0 * tol.eps_abs) {
    out.status = SolveStatus::Feasible;
  } else {
    out.status = SolveStatus::Inaccurate;
  }
  return out;
}

}  // namespace detail

/// Interior-point solve of a block-diagonal LMI feasibility/minimization
/// problem. Phase 1 maximizes a uniform margin t with F_b(x) - t I >= 0; a
/// positive margin yields a strictly feasible point and a certified negative
/// upper bound on the achievable margin proves infeasibility. Phase 2 runs
/// barrier path-following on the linear objective from the phase-1 point.
/// Numeric breakdown surfaces as Inaccurate, never as a silent Feasible.
inline SolveOutcome solve(const SdpProblem& p, const SolverContract& contract = SolverContract::defaults()) {
  p.validate();
  try {
    return detail::solve_impl(p, contract);
  } catch (const NumericalError&) {
    SolveOutcome out;
    out.status = SolveStatus::Inaccurate;
    return out;
  }
}

struct GammaBisection {
  bool found = false;
  double gamma_star = 0.0;
  SolveOutcome outcome;  // certificate at gamma_star
  int evaluations = 0;
};

/// Bisects the smallest gamma with a feasible problem, assuming feasibility is
/// monotone in gamma. Returns the feasible upper endpoint and its certificate;
/// NotFound (found = false) when hi itself is infeasible.
inline GammaBisection bisect_gamma(const std::function<SdpProblem(double)>& builder, double lo, double hi,
                                   double tol_rel, const SolverContract& contract = SolverContract::defaults(),
                                   int max_evals = 40) {
  require(lo > 0.0, "bisect_gamma: lo must be positive");
  require(lo <= hi, "bisect_gamma: lo must not exceed hi");
  require(tol_rel > 0.0, "bisect_gamma: tolerance must be positive");

  GammaBisection res;
  SolveOutcome at_hi = solve(builder(hi), contract);
  ++res.evaluations;
  if (at_hi.status != SolveStatus::Feasible) return res;

  SolveOutcome at_lo = solve(builder(lo), contract);
  ++res.evaluations;
  if (at_lo.status == SolveStatus::Feasible) {
    res.found = true;
    res.gamma_star = lo;
    res.outcome = at_lo;
    return res;
  }

  double glo = lo, ghi = hi;
  while (ghi / glo > 1.0 + tol_rel && res.evaluations < max_evals) {
    const double mid = std::sqrt(glo * ghi);
    SolveOutcome at_mid = solve(builder(mid), contract);
    ++res.evaluations;
    if (at_mid.status == SolveStatus::Feasible) {
      ghi = mid;
      at_hi = at_mid;
    } else {
      glo = mid;
    }
  }
  res.found = true;
  res.gamma_star = ghi;
  res.outcome = at_hi;
  return res;
}

}  // namespace informa
