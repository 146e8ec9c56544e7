#include <catch2/catch_amalgamated.hpp>

#include "informa/synthesis.hpp"
#include "informa/verification.hpp"

#include "test_support.hpp"

using namespace informa;
using test_support::make_io_setup;
using test_support::make_state_setup;

namespace {

/// The intermediate quadratic-form matrix of the stabilization argument,
/// built exactly as printed: Pi = [P 0 0; 0 0 0; 0 0 0] - [J1+J2K; I; K] P (*)'.
Matrix pi_form(const Matrix& P, const Matrix& K, const LiftingStructure& s) {
  const int n = static_cast<int>(P.rows());
  const int m = static_cast<int>(K.rows());
  Matrix stack(2 * n + m, n);
  stack.topRows(n) = s.J1 + s.J2 * K;
  stack.middleRows(n, n) = Matrix::Identity(n, n);
  stack.bottomRows(m) = K;
  Matrix Pi = Matrix::Zero(2 * n + m, 2 * n + m);
  Pi.topLeftCorner(n, n) = P;
  Pi -= stack * P * stack.transpose();
  return Pi;
}

Matrix pi_value(const Matrix& Pi, const Matrix& lam_e, const Matrix& b_e) {
  const int n = static_cast<int>(lam_e.rows());
  const int m = static_cast<int>(b_e.cols());
  Matrix S(2 * n + m, n);
  S.topRows(n) = Matrix::Identity(n, n);
  S.middleRows(n, n) = lam_e.transpose();
  S.bottomRows(m) = b_e.transpose();
  return informa::symmetrized(S.transpose() * Pi * S);
}

}  // namespace

TEST_CASE("stabilization problem has the documented block sizes") {
  Rng rng(31);
  auto su = make_state_setup(rng, 3, 2, 20);
  const auto p = stab_problem_state(su.f);
  REQUIRE(p.blocks.size() == 4);
  CHECK(p.blocks[0].size == 11);  // 3n + m
  CHECK(p.blocks[1].size == 3);   // P margin
  CHECK(p.blocks[2].size == 1);   // beta
  CHECK(p.blocks[3].size == 1);   // alpha
  CHECK(p.num_vars == 6 + 6 + 1 + 1);
  CHECK_FALSE(p.objective.has_value());
}

TEST_CASE("noiseless input-output data with a tiny budget is stabilizable-informative") {
  Rng rng(32);
  for (int trial = 0; trial < 4; ++trial) {
    auto su = make_io_setup(rng, 1 + trial % 2, 1, 1, 30, /*hu=*/1e-8, {0, 1, 2, 3, 4},
                            /*noise_level=*/0.0);
    const auto problem = stab_problem_io(su.f, su.s);
    const auto out = solve(problem);
    REQUIRE(out.status == SolveStatus::Feasible);
    const auto res = extract_result(out, problem);

    const Matrix Az = su.truth.first + su.s.J1;
    const Matrix Bz = su.truth.second + su.s.J2;
    CHECK(spectral_radius(Az + Bz * res.K) < 1.0);

    // Certificate replay through the printed Pi form at the true parameters.
    const Matrix Pi = pi_form(res.P, res.K, su.s);
    const Matrix G = pi_value(Pi, su.truth.first, su.truth.second);
    CHECK(min_eigenvalue_sym(G) >= -1e-7 * (1.0 + spectral_norm_sym(G)));

    // Pi evaluated at the truth equals the Lyapunov decrease P - Acl P Acl'.
    const Matrix Acl = Az + Bz * res.K;
    const Matrix lyap = res.P - Acl * res.P * Acl.transpose();
    CHECK((G - lyap).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + lyap.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("a plant with no input authority is never informative for stabilization") {
  // y(t) = 2 y(t-1): unstable and B = 0, so no gain stabilizes the true system.
  ArxModel model;
  model.lag = 1;
  model.p = 1;
  model.m = 1;
  model.A_coeffs = {Matrix::Constant(1, 1, -2.0)};
  model.B_coeffs = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  Rng rng(33);
  const int N = 25, pre = 4;
  Matrix U = Matrix::Zero(1, N + pre);
  U.rightCols(N) = rng.normal_matrix(1, N);
  Matrix E = Matrix::Zero(1, N + pre);
  for (int t = pre; t < N + pre; ++t) E(0, t) = rng.uniform(-0.01, 0.01);
  const auto traj = simulate_arx(model, U, E, -pre);
  const auto d = build_io_matrices(traj, 1);
  const auto s = lift_structure(1, 1, 1);
  const auto R = build_instrument(traj, InstrumentSpec::lagged_input({0, 1, 2, 3}), d.N());
  const auto Q = make_cross_cov_bound(0.5 * Matrix::Identity(1, 1), d.N(), R.M());
  const auto f = build_feasible_form_io(d, R, Q, s);
  const auto out = solve(stab_problem_io(f, s));
  CHECK(out.status == SolveStatus::Infeasible);
}

TEST_CASE("feasibility is invariant under joint column permutation of the data") {
  Rng rng(34);
  auto su = make_state_setup(rng, 2, 1, 14, 0.6, false, 0.05, {0, 1, 2});
  const auto out1 = solve(stab_problem_state(su.f));

  // Jointly permute the columns of X+, X-, U- and the instrument.
  const int N = su.d.N();
  std::vector<int> perm(N);
  for (int i = 0; i < N; ++i) perm[i] = (i * 7 + 3) % N;
  StateDataMatrices pd;
  pd.Xm.resize(2, N);
  pd.Xp.resize(2, N);
  pd.Um.resize(1, N);
  Matrix Rp(su.R.M(), N);
  for (int i = 0; i < N; ++i) {
    pd.Xm.col(i) = su.d.Xm.col(perm[i]);
    pd.Xp.col(i) = su.d.Xp.col(perm[i]);
    pd.Um.col(i) = su.d.Um.col(perm[i]);
    Rp.col(i) = su.R.Rm.col(perm[i]);
  }
  Instrument Ri;
  Ri.Rm = Rp;
  Ri.spec = InstrumentSpec::custom_matrix(Rp);
  const auto f2 = build_feasible_form_state(pd, Ri, su.Q);
  const auto out2 = solve(stab_problem_state(f2));
  CHECK((out1.status == SolveStatus::Feasible) == (out2.status == SolveStatus::Feasible));
}

TEST_CASE("state stabilization certificates stabilize sampled members") {
  Rng rng(35);
  auto su = make_state_setup(rng, 3, 2, 40, 1.0, false, 0.1, {0, 1, 2, 3, 4});
  const auto problem = stab_problem_state(su.f);
  const auto out = solve(problem);
  REQUIRE(out.status == SolveStatus::Feasible);
  const auto polished = detail::polish_beta(problem, out, SolverContract::defaults());
  const auto res = extract_result(polished, problem);
  CHECK(res.beta > 0.0);
  CHECK(res.alpha >= 0.0);
  CHECK(min_eigenvalue_sym(res.P) > 0.0);

  const auto members = sample_members(su.f, {su.A, su.B}, 50, 7);
  for (const auto& [A, B] : members) CHECK(spectral_radius(A + B * res.K) < 1.0);
}

TEST_CASE("gain extraction identities and failure modes") {
  SECTION("P = I, L = K0 recovers K0") {
    Rng rng(36);
    auto su = make_state_setup(rng, 2, 1, 12);
    const auto problem = stab_problem_state(su.f);
    SolveOutcome fake;
    fake.status = SolveStatus::Feasible;
    fake.x = Vector::Zero(problem.num_vars);
    const VarMap& vm = problem.var_map;
    fake.x[vm.P.offset + 0] = 1.0;  // P(0,0)
    fake.x[vm.P.offset + 2] = 1.0;  // P(1,1)
    Matrix K0(1, 2);
    K0 << 0.25, -0.75;
    fake.x[vm.L.offset + 0] = K0(0, 0);
    fake.x[vm.L.offset + 1] = K0(0, 1);
    const auto res = extract_result(fake, problem);
    CHECK((res.K - K0).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("near-singular P raises an extraction error") {
    Rng rng(37);
    auto su = make_state_setup(rng, 2, 1, 12);
    const auto problem = stab_problem_state(su.f);
    SolveOutcome fake;
    fake.status = SolveStatus::Feasible;
    fake.x = Vector::Zero(problem.num_vars);
    const VarMap& vm = problem.var_map;
    fake.x[vm.P.offset + 0] = 1.0;
    fake.x[vm.P.offset + 2] = 1e-14;
    CHECK_THROWS_AS(extract_result(fake, problem), ExtractionError);
  }
  SECTION("non-feasible outcomes are rejected") {
    Rng rng(38);
    auto su = make_state_setup(rng, 2, 1, 12);
    const auto problem = stab_problem_state(su.f);
    SolveOutcome fake;
    fake.status = SolveStatus::Infeasible;
    CHECK_THROWS_AS(extract_result(fake, problem), InvalidArgument);
  }
}

TEST_CASE("homogeneity: scaling (P, L, beta) and alpha preserves the certificate") {
  Rng rng(39);
  auto su = make_state_setup(rng, 2, 1, 20, 0.8, false, 0.05, {0, 1, 2});
  const auto problem = stab_problem_state(su.f);
  const auto out = solve(problem);
  REQUIRE(out.status == SolveStatus::Feasible);
  const auto res = extract_result(out, problem);

  const VarMap& vm = problem.var_map;
  const double c = 2.0;
  Vector scaled = out.x;
  for (int k = 0; k < vm.P.count; ++k) scaled[vm.P.offset + k] *= c;
  for (int k = 0; k < vm.L.count; ++k) scaled[vm.L.offset + k] *= c;
  scaled[vm.alpha.offset] *= c;
  scaled[vm.beta.offset] *= c;
  CHECK(certificate_replay(problem, scaled).minCoeff() >= -1e-9);

  SolveOutcome scaled_out = out;
  scaled_out.x = scaled;
  const auto res2 = extract_result(scaled_out, problem);
  CHECK((res.K - res2.K).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + res.K.cwiseAbs().maxCoeff()));
}

TEST_CASE("hinf at a huge level reduces to stabilization feasibility") {
  Rng rng(40);
  for (int trial = 0; trial < 3; ++trial) {
    auto su = make_state_setup(rng, 2, 1, 25, 0.8, false, 0.05, {0, 1, 2});
    const Matrix Cz = Matrix::Zero(1, 2);
    const Matrix Dz = Matrix::Zero(1, 1);
    const auto stab = solve(stab_problem_state(su.f));
    const LiftingStructure s = LiftingStructure::state(2, 1);
    const auto hinf = solve(hinf_problem(su.f, s, Cz, Dz, 1e9));
    CHECK((stab.status == SolveStatus::Feasible) == (hinf.status == SolveStatus::Feasible));
  }
}

TEST_CASE("hinf bisection brackets the scalar model-based optimum on near-noiseless data") {
  // Scalar plant x(t+1) = 0.5 x + u + e with z = x: the best achievable
  // H-infinity norm over state feedback is 1 (deadbeat), since
  // ||T||_inf = 1 / (1 - |0.5 + k|) is minimized at k = -0.5.
  Rng rng(41);
  const int N = 40;
  Matrix U = rng.normal_matrix(1, N);
  Matrix E = Matrix::Zero(1, N);
  Matrix A(1, 1), B(1, 1);
  A << 0.5;
  B << 1.0;
  const auto traj = simulate_state(A, B, U, E, Vector::Zero(1));
  const auto d = build_state_matrices(traj);
  const auto R = build_instrument(traj, InstrumentSpec::identity(), d.N());
  const auto Q = make_cross_cov_bound(1e-9 * Matrix::Identity(1, 1), d.N(), R.M());
  const auto f = build_feasible_form_state(d, R, Q);
  const LiftingStructure s = LiftingStructure::state(1, 1);
  const Matrix Cz = Matrix::Identity(1, 1);
  const Matrix Dz = Matrix::Zero(1, 1);

  auto builder = [&](double g) { return hinf_problem(f, s, Cz, Dz, g); };
  const auto bis = bisect_gamma(builder, 1e-3, 1e3, 1e-4);
  REQUIRE(bis.found);
  CHECK(bis.gamma_star >= 1.0 - 1e-6);
  CHECK(bis.gamma_star <= 1.05);

  const auto res = extract_result(bis.outcome, builder(bis.gamma_star));
  CHECK(hinf_norm(A + B * res.K, Matrix::Identity(1, 1), Cz + Dz * res.K) <=
        bis.gamma_star * (1.0 + 1e-6));
}

TEST_CASE("hinf certificates bound sampled members through the oracle") {
  Rng rng(42);
  auto su = make_state_setup(rng, 2, 1, 30, 0.5, false, 0.05, {0, 1, 2, 3});
  const LiftingStructure s = LiftingStructure::state(2, 1);
  Matrix Cz(1, 2);
  Cz << 1, 0;
  const Matrix Dz = Matrix::Zero(1, 1);
  const double gamma = 8.0;
  const auto problem = hinf_problem(su.f, s, Cz, Dz, gamma);
  const auto out = solve(problem);
  REQUIRE(out.status == SolveStatus::Feasible);
  const auto res = extract_result(out, problem);
  REQUIRE(res.gamma.has_value());
  CHECK(*res.gamma == gamma);

  const auto members = sample_members(su.f, {su.A, su.B}, 40, 11);
  for (const auto& [Am, Bm] : members) {
    const Matrix Acl = Am + Bm * res.K;
    REQUIRE(spectral_radius(Acl) < 1.0);
    CHECK(hinf_norm(Acl, Matrix::Identity(2, 2), Cz + Dz * res.K, 1e-7) <= gamma * (1.0 + 1e-6));
  }
}

TEST_CASE("h2 minimization approaches the scalar model-based optimum") {
  // Same scalar plant; the model-based H2 optimum is also 1 (deadbeat):
  // ||T||_2^2 = 1 / (1 - phi^2) with phi the closed-loop pole.
  Rng rng(43);
  const int N = 40;
  Matrix U = rng.normal_matrix(1, N);
  Matrix E = Matrix::Zero(1, N);
  Matrix A(1, 1), B(1, 1);
  A << 0.5;
  B << 1.0;
  const auto traj = simulate_state(A, B, U, E, Vector::Zero(1));
  const auto d = build_state_matrices(traj);
  const auto R = build_instrument(traj, InstrumentSpec::identity(), d.N());
  const auto Q = make_cross_cov_bound(1e-9 * Matrix::Identity(1, 1), d.N(), R.M());
  const auto f = build_feasible_form_state(d, R, Q);
  const LiftingStructure s = LiftingStructure::state(1, 1);

  const auto problem = h2_problem(f, s, Matrix::Identity(1, 1), Matrix::Zero(1, 1));
  const auto out = solve(problem);
  REQUIRE(out.status == SolveStatus::Feasible);
  REQUIRE(out.objective_value.has_value());
  CHECK(*out.objective_value >= 1.0 - 1e-5);
  CHECK(*out.objective_value <= 1.05);

  const auto res = extract_result(out, problem);
  REQUIRE(res.gamma.has_value());
  CHECK(*res.gamma == Catch::Approx(std::sqrt(*out.objective_value)));
  const double oracle = h2_norm(A + B * res.K, Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  CHECK(oracle <= *res.gamma * (1.0 + 1e-6));
}

TEST_CASE("h2 with a zero noise channel drives trace Z to zero") {
  Rng rng(44);
  auto su = make_state_setup(rng, 2, 1, 20, 0.8, false, 0.05, {0, 1, 2});
  LiftingStructure s = LiftingStructure::state(2, 1);
  s.Hz = Matrix::Zero(2, 2);
  const auto f = detail::bordered_form(su.d.Xp, su.d.Xm, su.d.Um, su.R, su.Q, s.Hz);
  Matrix Cz(1, 2);
  Cz << 1, 0;
  const auto problem = h2_problem(f, s, Cz, Matrix::Zero(1, 1));
  const auto out = solve(problem);
  REQUIRE(out.status == SolveStatus::Feasible);
  CHECK(*out.objective_value < 1e-5);
}

TEST_CASE("h2 direct minimization agrees with gamma bisection") {
  Rng rng(45);
  auto su = make_state_setup(rng, 2, 1, 30, 0.4, false, 0.04, {0, 1, 2, 3});
  const LiftingStructure s = LiftingStructure::state(2, 1);
  Matrix Cz(1, 2);
  Cz << 0, 1;
  const Matrix Dz = Matrix::Zero(1, 1);

  const auto direct = solve(h2_problem(su.f, s, Cz, Dz));
  REQUIRE(direct.status == SolveStatus::Feasible);
  const double gamma_direct = std::sqrt(*direct.objective_value);

  // Bisection over fixed-level feasibility problems (trace Z <= gamma^2).
  auto builder = [&](double g) {
    SdpProblem p = h2_problem(su.f, s, Cz, Dz);
    SdpBlock capb;
    capb.size = 1;
    capb.entries.push_back({0, 0, 0, g * g});
    int zk = 0;
    for (int j = 0; j < p.var_map.p_noise; ++j)
      for (int i = 0; i <= j; ++i, ++zk)
        if (i == j) capb.entries.push_back({p.var_map.Z.offset + zk + 1, 0, 0, -1.0});
    p.blocks.push_back(capb);
    p.objective.reset();
    return p;
  };
  const double tol_rel = 1e-3;
  const auto bis = bisect_gamma(builder, 1e-3, 1e3, tol_rel);
  REQUIRE(bis.found);
  CHECK(bis.gamma_star == Catch::Approx(gamma_direct).epsilon(2 * tol_rel + 1e-3));
}

namespace {

// As printed: [X 0 A'X C'; 0 gI H'X 0; XA XH X 0; C 0 0 gI].
Matrix bounded_real_big(const Matrix& X, double gamma, const Matrix& A_K, const Matrix& Hz,
                        const Matrix& C_K) {
  const int n = static_cast<int>(A_K.rows());
  const int ph = static_cast<int>(Hz.cols());
  const int pz = static_cast<int>(C_K.rows());
  Matrix big = Matrix::Zero(2 * n + ph + pz, 2 * n + ph + pz);
  big.block(0, 0, n, n) = X;
  big.block(0, n + ph, n, n) = A_K.transpose() * X;
  big.block(0, n + ph + n, n, pz) = C_K.transpose();
  big.block(n, n, ph, ph) = gamma * Matrix::Identity(ph, ph);
  big.block(n, n + ph, ph, n) = Hz.transpose() * X;
  big.block(n + ph, n + ph, n, n) = X;
  big.block(n + ph + n, n + ph + n, pz, pz) = gamma * Matrix::Identity(pz, pz);
  return Matrix(big.selfadjointView<Eigen::Upper>());
}

// Searches for a certificate X > 0 of the printed inequality at level gamma.
std::optional<Matrix> bounded_real_certificate(double gamma, const Matrix& A_K, const Matrix& Hz,
                                               const Matrix& C_K) {
  const int n = static_cast<int>(A_K.rows());
  const int ph = static_cast<int>(Hz.cols());
  const int pz = static_cast<int>(C_K.rows());
  const int size = 2 * n + ph + pz;
  SdpProblem p;
  p.num_vars = VarMap::sym_size(n);
  BlockBuilder bb(size, p.num_vars);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i, ++k) {
      Matrix E = Matrix::Zero(n, n);
      E(i, j) = 1.0;
      E(j, i) = 1.0;
      bb.add_sym(k + 1, 0, E);
      bb.add(k + 1, 0, n + ph, A_K.transpose() * E);
      bb.add(k + 1, n, n + ph, Hz.transpose() * E);
      bb.add_sym(k + 1, n + ph, E);
    }
  bb.add(0, 0, n + ph + n, C_K.transpose());
  bb.add_sym(0, n, gamma * Matrix::Identity(ph, ph));
  bb.add_sym(0, n + ph + n, gamma * Matrix::Identity(pz, pz));
  bb.add_sym(0, 0, -1e-4 * Matrix::Identity(size, size));
  p.blocks.push_back(bb.finish());
  const auto out = solve(p);
  if (out.status != SolveStatus::Feasible) return std::nullopt;
  VarSlice slice{0, p.num_vars};
  return VarMap::unpack_sym(out.x, slice, n);
}

}  // namespace

TEST_CASE("schur equivalence of the bounded-real forms") {
  Rng rng(46);
  int agree = 0, true_count = 0, total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 3;
    const Matrix A_K = test_support::random_stable(n, 0.7, rng);
    const Matrix Hz = rng.normal_matrix(n, 1 + trial % 2);
    const Matrix C_K = rng.normal_matrix(1, n);
    const double base = hinf_norm(A_K, Hz, C_K, 1e-6);

    std::vector<std::pair<double, Matrix>> instances;
    {  // certificate-backed X at a level above the norm
      const double gamma = base * 1.35 + 0.05;
      const auto X = bounded_real_certificate(gamma, A_K, Hz, C_K);
      if (X) instances.emplace_back(gamma, *X);
    }
    {  // random X, usually not a certificate
      Matrix Xh = rng.normal_matrix(n, n);
      instances.emplace_back(base * (trial % 2 ? 1.2 : 0.85) + 0.05,
                             Matrix(Xh * Xh.transpose() + 0.2 * Matrix::Identity(n, n)));
    }

    for (const auto& [gamma, X] : instances) {
      const bool big_holds = min_eigenvalue_sym(bounded_real_big(X, gamma, A_K, Hz, C_K)) > 0.0;

      // Reduced pair: P - g^-1 F'F > 0 and P - Vz S Vz' - g^-1 Hz Hz' > 0.
      const Matrix P = X.inverse();
      const Matrix F = C_K * P;
      const Matrix Vz = A_K * P;
      const Matrix pivot = P - F.transpose() * F / gamma;
      bool reduced_holds = min_eigenvalue_sym(pivot) > 0.0;
      if (reduced_holds) {
        const Matrix S = pivot.inverse();
        reduced_holds =
            min_eigenvalue_sym(P - Vz * S * Vz.transpose() - Hz * Hz.transpose() / gamma) > 0.0;
      }
      agree += big_holds == reduced_holds ? 1 : 0;
      true_count += big_holds ? 1 : 0;
      ++total;
    }
  }
  CHECK(agree == total);
  CHECK(total >= 100);
  CHECK(true_count >= 40);  // both outcomes are represented
  CHECK(total - true_count >= 30);
}
