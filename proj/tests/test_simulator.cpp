#include "ctrlcost/simulator.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace ctrlcost;

namespace {
ModeBasis make(double L, LeftBoundary kind, int n, double theta = 0.0) {
  return build_basis(BoundaryConfig{L, kind, theta}, n);
}
}  // namespace

TEST_CASE("free first-order decay") {
  const ModeBasis b = make(M_PI, LeftBoundary::dirichlet, 3);
  const Trajectory tr = simulate_first_order(unit_state(b, 0), zero_signal(TimeGrid{0.0, 1.0, 11}));
  CHECK(tr.terminal().norm() == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  const Trajectory z = simulate_first_order(zero_state(b), zero_signal(TimeGrid{0.0, 1.0, 11}));
  CHECK(z.states.norm() == 0.0);
}

TEST_CASE("spectral integration converges to the exact Duhamel integral") {
  // u(t) = e^{i w t} has the closed-form response b (e^{i w T} - e^{lambda T}) / (i w - lambda).
  const ModeBasis b = make(1.5, LeftBoundary::neumann, 4, 0.5);
  const double T = 0.9, w = 3.0;
  double previous = 1.0;
  for (int S : {201, 401, 801}) {
    ControlSignal u = zero_signal(TimeGrid{0.0, T, S});
    for (int i = 0; i < S; ++i) u.values(i) = std::exp(Complex<double>(0, w * u.grid.at(i)));
    const StateCoeffs<double> x = simulate_first_order(zero_state(b), u).terminal();
    double err = 0.0;
    for (int n = 0; n < 4; ++n) {
      const Complex<double> l = rotated_exponent<double>(b, n);
      const Complex<double> exact = boundary_flux<double>(b, n) *
                                    (std::exp(Complex<double>(0, w * T)) - std::exp(l * T)) /
                                    (Complex<double>(0, w) - l);
      err = std::max(err, std::abs(x.coefficients(n) - exact));
    }
    CHECK(err < previous / 3.5);  // second order
    previous = err;
  }
}

TEST_CASE("first-order contraction without input") {
  const ModeBasis b = make(2.0, LeftBoundary::dirichlet, 8, -0.9);
  StateCoeffs<double> x = zero_state(b);
  for (int n = 0; n < 8; ++n) x.coefficients(n) = oracle::gaussian_complex();
  const Trajectory tr = simulate_first_order(x, zero_signal(TimeGrid{0.0, 2.0, 50}));
  for (int i = 1; i < 50; ++i) CHECK(tr.states.col(i).norm() <= tr.states.col(i - 1).norm() + 1e-15);
}

TEST_CASE("wave propagation without input") {
  const ModeBasis b = make(M_PI, LeftBoundary::dirichlet, 5);
  StateCoeffs<double> z0 = zero_state(b);
  for (int n = 0; n < 5; ++n) z0.coefficients(n) = oracle::uniform(-1, 1);
  const CVector<double> z1 = CVector<double>::Zero(5);
  const WaveTrajectoryModal tr = simulate_second_order(z0, z1, zero_signal(TimeGrid{0.0, 2 * M_PI, 777}));
  // energy of each mode is conserved
  for (int n = 0; n < 5; ++n) {
    const double w = wavenumber<double>(b, n);
    const double e0 = std::norm(w * tr.z(n, 0)) + std::norm(tr.dz(n, 0));
    for (int i = 0; i < 777; i += 50)
      CHECK(std::abs(std::norm(w * tr.z(n, i)) + std::norm(tr.dz(n, i)) - e0) <= 1e-10 * std::max(e0, 1.0));
  }
  // period 2 L0 / n divides 2 L0
  CHECK((tr.terminal_z() - z0.coefficients).norm() < 1e-12);
}

TEST_CASE("crank-nicolson agrees with spectral integration and converges") {
  const BoundaryConfig cfg{M_PI, LeftBoundary::dirichlet, 0.0};
  const ModeBasis b = build_basis(cfg, 64);
  StateCoeffs<double> x0 = zero_state(b);
  x0.coefficients(0) = 1.0;
  x0.coefficients(2) = -0.4;
  const double T = 0.5;
  auto control = [&](int S) {
    ControlSignal u = zero_signal(TimeGrid{0.0, T, S});
    for (int i = 0; i < S; ++i) u.values(i) = std::sin(M_PI * u.grid.at(i) / T);
    return u;
  };
  const StateCoeffs<double> ref = simulate_first_order(x0, control(200001)).terminal();
  double previous = 1.0;
  for (int m : {51, 101, 201}) {
    const double h = M_PI / (m - 1);
    const int S = static_cast<int>(std::ceil(T / h)) + 1;
    const NodalProfile fd = simulate_first_order_fd(cfg, sample_profile(x0, m), control(S));
    const double err = relative_l2_difference(fd, sample_profile(ref, m));
    CHECK(err < previous / 3.0);
    previous = err;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("finite-difference accuracy gate") {
  const BoundaryConfig cfg{1.0, LeftBoundary::neumann, 0.0};
  const ModeBasis b = build_basis(cfg, 3);
  CHECK_THROWS_AS(simulate_first_order_fd(cfg, sample_profile(unit_state(b, 0), 11), zero_signal(TimeGrid{0.0, 1.0, 3})),
                  InputError);
}

TEST_CASE("leapfrog free wave returns after one period") {
  const BoundaryConfig cfg{M_PI, LeftBoundary::neumann, 0.0};
  const ModeBasis b = build_basis(cfg, 2);
  const StateCoeffs<double> z0 = unit_state(b, 1);
  // period of k = 3/2 is 4 pi / 3
  const NodalWaveState fd = simulate_second_order_fd(cfg, sample_profile(z0, 401), zero_signal(TimeGrid{0.0, 4 * M_PI / 3, 2}));
  CHECK(relative_l2_difference(fd.z, sample_profile(z0, 401)) < 1e-3);
}
