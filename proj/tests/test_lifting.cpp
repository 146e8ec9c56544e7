#include <catch2/catch_amalgamated.hpp>

#include "informa/lifting.hpp"
#include "informa/verification.hpp"

#include "test_support.hpp"

using namespace informa;
using test_support::impulse_series;
using test_support::random_arx;

namespace {

Matrix benchmark_A0() {
  Matrix A0(3, 3);
  A0 << -0.2414, -0.8649, 0.6277, 0.3192, -0.0301, 1.0933, 0.3129, -0.1649, 1.1093;
  return A0;
}

Matrix benchmark_B0() {
  Matrix B0(3, 2);
  B0 << 1, 0, 0, 2, 1, 1;
  return B0;
}

ArxModel scalar_arx() {
  // y(t) = 0.5 y(t-1) + u(t-1)
  ArxModel model;
  model.lag = 1;
  model.p = 1;
  model.m = 1;
  model.A_coeffs = {Matrix::Constant(1, 1, -0.5)};
  model.B_coeffs = {Matrix::Zero(1, 1), Matrix::Constant(1, 1, 1.0)};
  return model;
}

}  // namespace

TEST_CASE("lift_structure for l = 1 kills both shift identities") {
  const auto s = lift_structure(1, 1, 1);
  CHECK(s.n() == 2);
  CHECK(s.J1.isZero());
  CHECK(s.J2(0, 0) == 0.0);
  CHECK(s.J2(1, 0) == 1.0);
  CHECK(s.Hz(0, 0) == 1.0);
  CHECK(s.Hz(1, 0) == 0.0);
  CHECK_THROWS_AS(lift_structure(0, 1, 1), InvalidArgument);
}

TEST_CASE("lift_structure block pattern for l = 2, p = m = 1") {
  const auto s = lift_structure(2, 1, 1);
  REQUIRE(s.n() == 4);
  int ones = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (s.J1(r, c) != 0.0) {
        ++ones;
        CHECK(s.J1(r, c) == 1.0);
        CHECK(((r == 1 && c == 0) || (r == 3 && c == 2)));
      }
  CHECK(ones == 2);
}

TEST_CASE("lift_structure rank and column sums for l = 3, p = 1, m = 2") {
  const auto s = lift_structure(3, 1, 2);
  REQUIRE(s.n() == 9);
  for (int c = 0; c < 9; ++c) {
    const double colsum = s.J1.col(c).sum();
    CHECK((colsum == 0.0 || colsum == 1.0));
  }
  Eigen::FullPivLU<Matrix> lu(s.J1);
  CHECK(lu.rank() == 1 * 2 + 2 * 2);  // p(l-1) + m(l-1)
  // J1 and J2 occupy disjoint rows: the injection rows of J2 are zero in J1.
  CHECK((s.J2.transpose() * s.J1).isZero());
  // J1 J2 is NOT zero for l >= 2: the shift moves the injected input into the
  // first input-lag slot, which is how u(t) propagates into zeta(t+2).
  CHECK((s.J1 * s.J2)(s.p * s.lag + s.m, 0) == 1.0);
  CHECK((s.Hz.transpose() * s.Hz).isApprox(Matrix::Identity(1, 1)));
}

TEST_CASE("lift_arx realizes the scalar first-order example") {
  const auto ss = lift_arx(scalar_arx());
  Matrix Az_expect(2, 2);
  Az_expect << 0.5, 1, 0, 0;
  CHECK(ss.Az.isApprox(Az_expect));
  CHECK(ss.Bz(0, 0) == 0.0);
  CHECK(ss.Bz(1, 0) == 1.0);
  CHECK(ss.Hz(0, 0) == 1.0);

  // Lifted spectrum: the ARX pole plus a zero eigenvalue.
  Eigen::EigenSolver<Matrix> es(ss.Az);
  std::vector<double> mags = {std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(1))};
  std::sort(mags.begin(), mags.end());
  CHECK(mags[0] == Catch::Approx(0.0).margin(1e-14));
  CHECK(mags[1] == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("zero-coefficient ARX lifts to the bare structure") {
  ArxModel model;
  model.lag = 2;
  model.p = 2;
  model.m = 1;
  for (int k = 0; k < 2; ++k) model.A_coeffs.push_back(Matrix::Zero(2, 2));
  for (int k = 0; k <= 2; ++k) model.B_coeffs.push_back(Matrix::Zero(2, 1));
  const auto ss = lift_arx(model);
  const auto s = lift_structure(2, 2, 1);
  CHECK(ss.Az.isApprox(s.J1));
  CHECK(ss.Bz.isApprox(s.J2));
}

TEST_CASE("parameter rows are confined to the top block") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_arx(1 + trial % 3, 1 + trial % 2, 1 + (trial / 2) % 2, rng);
    const auto ss = lift_arx(model);
    const auto s = lift_structure(model.lag, model.p, model.m);
    const Matrix dA = ss.Az - s.J1;
    const Matrix dB = ss.Bz - s.J2;
    if (s.n() > model.p) {
      CHECK(dA.bottomRows(s.n() - model.p).isZero());
      CHECK(dB.bottomRows(s.n() - model.p).isZero());
    }
  }
}

TEST_CASE("arx_from_state_space handles the first-order lag") {
  const auto model = arx_from_state_space(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0),
                                          Matrix::Constant(1, 1, 1.0));
  REQUIRE(model.lag == 1);
  CHECK(model.A_coeffs[0](0, 0) == Catch::Approx(-0.5));
  CHECK(model.B_coeffs[0](0, 0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(model.B_coeffs[1](0, 0) == Catch::Approx(1.0));
}

TEST_CASE("arx_from_state_space matches the benchmark transfer function") {
  Matrix C0(1, 3);
  C0 << 1, 0, 0;
  const auto model = arx_from_state_space(benchmark_A0(), benchmark_B0(), C0);
  REQUIRE(model.lag == 3);
  Rng rng(55);
  for (int k = 0; k < 20; ++k) {
    const double omega = rng.uniform(0.0, 3.14159265358979);
    const Eigen::MatrixXcd lhs = model.frequency_response(omega);
    const std::complex<double> z = std::exp(std::complex<double>(0.0, omega));
    const Eigen::MatrixXcd M =
        z * Eigen::MatrixXcd::Identity(3, 3) - benchmark_A0().cast<std::complex<double>>();
    const Eigen::MatrixXcd rhs = C0.cast<std::complex<double>>() *
                                 M.partialPivLu().solve(benchmark_B0().cast<std::complex<double>>());
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("arx_from_state_space on a nilpotent system is FIR") {
  Matrix A0 = Matrix::Zero(3, 3);
  A0(0, 1) = 1.0;
  A0(1, 2) = 1.0;
  Matrix B0 = Matrix::Zero(3, 1);
  B0(2, 0) = 1.0;
  Matrix C0(1, 3);
  C0 << 1, 0, 0;
  const auto model = arx_from_state_space(A0, B0, C0);
  for (const auto& a : model.A_coeffs) CHECK(a.cwiseAbs().maxCoeff() < 1e-14);
  // Transfer function is the pure delay z^-3.
  CHECK(model.B_coeffs[3](0, 0) == Catch::Approx(1.0));
  CHECK(model.B_coeffs[1].cwiseAbs().maxCoeff() < 1e-14);
  CHECK(model.B_coeffs[2].cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("arx_from_state_space rejects unobservable pairs and p > 1") {
  Matrix A0 = Matrix::Zero(2, 2);
  A0(0, 0) = 0.5;
  A0(1, 1) = 0.25;
  Matrix B0 = Matrix::Ones(2, 1);
  Matrix C0(1, 2);
  C0 << 1, 0;  // second mode invisible
  CHECK_THROWS_AS(arx_from_state_space(A0, B0, C0), InvalidArgument);
  CHECK_THROWS_AS(arx_from_state_space(A0, B0, Matrix::Identity(2, 2)), InvalidArgument);
}

TEST_CASE("controller_from_gain splits and round-trips the gain") {
  SECTION("zero gain is the open-loop controller") {
    const auto c = controller_from_gain(Matrix::Zero(1, 2), 1, 1, 1);
    CHECK(c.C_coeffs[0](0, 0) == 0.0);  // C(xi) = I
    CHECK(c.D_coeffs[0](0, 0) == 0.0);
  }
  SECTION("scalar split") {
    Matrix K(1, 2);
    K << 0.7, -0.3;  // [k1 k2] = [Dbar Cbar]
    const auto c = controller_from_gain(K, 1, 1, 1);
    CHECK(c.D_coeffs[0](0, 0) == Catch::Approx(0.7));
    CHECK(c.C_coeffs[0](0, 0) == Catch::Approx(0.3));  // C1 = -k2
    CHECK(gain_from_controller(c).isApprox(K));
  }
  SECTION("round trip on random gains") {
    Rng rng(500);
    for (int trial = 0; trial < 10; ++trial) {
      const int l = 1 + trial % 3, p = 1 + trial % 2, m = 1 + (trial / 3) % 2;
      const Matrix K = rng.normal_matrix(m, (p + m) * l);
      CHECK(gain_from_controller(controller_from_gain(K, l, p, m)).isApprox(K, 0.0));
    }
  }
  CHECK_THROWS_AS(controller_from_gain(Matrix::Zero(1, 3), 1, 1, 1), InvalidArgument);
}

TEST_CASE("closed_loop is Az + Bz K") {
  const auto ss = lift_arx(scalar_arx());
  const auto [A0cl, C0cl] = closed_loop(ss, Matrix::Zero(1, 2));
  CHECK(A0cl.isApprox(ss.Az));

  // Deadbeat gain derived by the 2x2 eigenvalue oracle: A_cl^2 = 0.
  Matrix K(1, 2);
  K << -0.25, -0.5;
  const auto [Acl, Ccl] = closed_loop(ss, K);
  CHECK(spectral_radius(Acl) < 1e-7);
  CHECK((Acl * Acl).cwiseAbs().maxCoeff() < 1e-14);

  // K = [-0.5 0] is not deadbeat: |eig|^2 = det = 0.5.
  Matrix K2(1, 2);
  K2 << -0.5, 0.0;
  const auto [Acl2, Ccl2] = closed_loop(ss, K2);
  CHECK(spectral_radius(Acl2) == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("simulate_arx: zero input and noise gives the zero trajectory") {
  const auto traj = simulate_arx(scalar_arx(), Matrix::Zero(1, 8), Matrix::Zero(1, 8));
  CHECK(traj.y_or_x.isZero());
}

TEST_CASE("impulse response matches polynomial long division") {
  Rng rng(321);
  for (int trial = 0; trial < 8; ++trial) {
    const auto model = random_arx(2, 1, 1, rng);
    const int T = 24;
    Matrix U = Matrix::Zero(1, T);
    U(0, 0) = 1.0;
    const auto traj = simulate_arx(model, U, Matrix::Zero(1, T));

    std::vector<double> a = {1.0};
    for (const auto& A : model.A_coeffs) a.push_back(A(0, 0));
    std::vector<double> b;
    for (const auto& B : model.B_coeffs) b.push_back(B(0, 0));
    const auto h = impulse_series(a, b, T);
    for (int t = 0; t < T; ++t)
      CHECK(traj.y_or_x(0, t) == Catch::Approx(h[t]).margin(1e-10 * (1.0 + std::abs(h[t]))));
  }
}

TEST_CASE("lifted simulation reproduces the difference equation") {
  Rng rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const auto model = random_arx(1 + trial % 3, 1 + trial % 2, 1, rng);
    const auto ss = lift_arx(model);
    const int T = 40;
    const Matrix U = rng.normal_matrix(model.m, T);
    const Matrix E = 0.1 * rng.normal_matrix(model.p, T);
    const auto direct = simulate_arx(model, U, E);
    const auto lifted = simulate_lifted(ss, U, E, Vector::Zero(ss.n()));
    const double scale = 1.0 + direct.y_or_x.cwiseAbs().maxCoeff();
    CHECK((direct.y_or_x - lifted.y).cwiseAbs().maxCoeff() < 1e-12 * scale);
  }
}

TEST_CASE("closed-loop lifted recursion matches plant/controller co-simulation") {
  Rng rng(2024);
  const auto model = random_arx(2, 1, 1, rng, 0.3);
  const auto ss = lift_arx(model);
  const int l = model.lag, p = model.p, m = model.m, n = ss.n();
  const Matrix K = 0.2 * rng.normal_matrix(m, n);
  const auto ctrl = controller_from_gain(K, l, p, m);
  const auto [Acl, Ccl] = closed_loop(ss, K);

  const int T = 50;
  const Matrix E = 0.2 * rng.normal_matrix(p, T);

  // Plant and controller difference equations, zero initial lags. u(t) uses
  // outputs/inputs up to t-1; y(t) then follows from the plant equation.
  Matrix U = Matrix::Zero(m, T);
  Matrix Y = Matrix::Zero(p, T);
  for (int t = 0; t < T; ++t) {
    Vector u = Vector::Zero(m);
    for (int k = 1; k <= l; ++k) {
      if (t - k < 0) continue;
      u -= ctrl.C_coeffs[k - 1] * U.col(t - k);
      u += ctrl.D_coeffs[k - 1] * Y.col(t - k);
    }
    U.col(t) = u;
    Vector y = model.B_coeffs[0] * u + E.col(t);
    for (int k = 1; k <= l; ++k) {
      if (t - k < 0) continue;
      y -= model.A_coeffs[k - 1] * Y.col(t - k);
      y += model.B_coeffs[k] * U.col(t - k);
    }
    Y.col(t) = y;
  }

  // Lifted closed loop zeta(t+1) = A_cl zeta(t) + Hz e(t).
  Matrix zeta = Matrix::Zero(n, T + 1);
  for (int t = 0; t < T; ++t) zeta.col(t + 1) = Acl * zeta.col(t) + ss.Hz * E.col(t);

  Matrix swap = Matrix::Zero(n, n);
  swap.topRightCorner(m * l, m * l).setIdentity();
  swap.bottomLeftCorner(p * l, p * l).setIdentity();
  for (int t = 1; t <= T; ++t) {
    Vector expect = Vector::Zero(n);
    for (int k = 1; k <= l; ++k) {
      if (t - k >= 0) {
        expect.segment((k - 1) * p, p) = Y.col(t - k);
        expect.segment(p * l + (k - 1) * m, m) = U.col(t - k);
      }
    }
    const double sc = 1.0 + expect.cwiseAbs().maxCoeff();
    CHECK((zeta.col(t) - expect).cwiseAbs().maxCoeff() < 1e-11 * sc);

    // The gain reproduces the co-simulated input from the stacked lags.
    if (t < T) {
      const Vector u_from_gain = K * zeta.col(t);
      CHECK((u_from_gain - U.col(t)).cwiseAbs().maxCoeff() <
            1e-11 * (1.0 + U.col(t).cwiseAbs().maxCoeff()));
    }
    // Permutation identity: the controller state stacks input lags first.
    Vector zeta_c = Vector::Zero(n);
    for (int k = 1; k <= l; ++k) {
      if (t - k >= 0) {
        zeta_c.segment((k - 1) * m, m) = U.col(t - k);
        zeta_c.segment(m * l + (k - 1) * p, p) = Y.col(t - k);
      }
    }
    CHECK((swap * zeta.col(t) - zeta_c).cwiseAbs().maxCoeff() < 1e-11 * sc);
  }
}

TEST_CASE("state simulation satisfies the data equation with the logged noise") {
  Rng rng(606);
  const Matrix A = test_support::random_stable(4, 0.8, rng);
  const Matrix B = rng.normal_matrix(4, 2);
  const Matrix U = rng.normal_matrix(2, 15);
  const Matrix E = 0.1 * rng.normal_matrix(4, 15);
  const auto traj = simulate_state(A, B, U, E, Vector::Zero(4));
  for (int t = 0; t < 15; ++t) {
    const Vector lhs = traj.y_or_x.col(t + 1);
    const Vector rhs = A * traj.y_or_x.col(t) + B * U.col(t) + E.col(t);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}
