#include "ctrlcost/spectral_core.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace ctrlcost;

namespace {
ModeBasis basis(double L, LeftBoundary kind, int n, double theta = 0.0) {
  return build_basis(BoundaryConfig{L, kind, theta}, n);
}
}  // namespace

TEST_CASE("dirichlet eigenvalues on (0, pi)") {
  const ModeBasis b = basis(M_PI, LeftBoundary::dirichlet, 3);
  CHECK(unrotated_eigenvalue<double>(b, 0) == doctest::Approx(-1.0));
  CHECK(unrotated_eigenvalue<double>(b, 1) == doctest::Approx(-4.0));
  CHECK(unrotated_eigenvalue<double>(b, 2) == doctest::Approx(-9.0));
}

TEST_CASE("neumann-left spectrum starts at pi/(2L)") {
  const ModeBasis b = basis(M_PI, LeftBoundary::neumann, 2);
  CHECK(wavenumber<double>(b, 0) == doctest::Approx(0.5));
  CHECK(wavenumber<double>(b, 1) == doctest::Approx(1.5));
  CHECK(unrotated_eigenvalue<double>(b, 0) == doctest::Approx(-0.25));
  CHECK(unrotated_eigenvalue<double>(b, 1) == doctest::Approx(-2.25));
  // eigenfunction satisfies e'(0) = 0 and e(L) = 0
  CHECK(std::abs(eigenfunction_derivative<double>(b, 1, 0.0)) < 1e-15);
  CHECK(std::abs(eigenfunction<double>(b, 1, M_PI)) < 1e-14);
}

TEST_CASE("boundary flux sign") {
  const ModeBasis b = basis(M_PI, LeftBoundary::dirichlet, 1);
  const Complex<double> b1 = boundary_flux<double>(b, 0);
  CHECK(b1.real() == doctest::Approx(-std::sqrt(2.0 / M_PI) * std::cos(M_PI)));
  CHECK(b1.real() == doctest::Approx(std::sqrt(2.0 / M_PI)));
  CHECK(std::abs(b1.imag()) < 1e-15);
}

TEST_CASE("steady response to a unit boundary value matches the harmonic profile") {
  // c_n' = lambda_n c_n + b_n has the fixed point -b_n / lambda_n, which must be
  // the coefficient of the harmonic profile s/L (Dirichlet) or 1 (Neumann).
  for (LeftBoundary kind : {LeftBoundary::dirichlet, LeftBoundary::neumann}) {
    const double L = 1.7;
    const ModeBasis b = basis(L, kind, 6, 0.3);
    for (int n = 0; n < 6; ++n) {
      const Complex<double> fixed = -boundary_flux<double>(b, n) / rotated_exponent<double>(b, n);
      auto profile = [&](double s) { return kind == LeftBoundary::dirichlet ? s / L : 1.0; };
      const Complex<double> direct =
          oracle::integrate([&](double s) { return Complex<double>(profile(s) * eigenfunction<double>(b, n, s)); }, 0.0, L);
      CHECK(std::abs(fixed - direct) < 1e-12);
    }
  }
}

TEST_CASE("mode invariants") {
  for (LeftBoundary kind : {LeftBoundary::dirichlet, LeftBoundary::neumann}) {
    const ModeBasis b = basis(2.3, kind, 12, -0.7);
    for (int n = 0; n < 12; ++n) {
      CHECK(unrotated_eigenvalue<double>(b, n) < 0.0);
      if (n > 0) CHECK(unrotated_eigenvalue<double>(b, n) < unrotated_eigenvalue<double>(b, n - 1));
      CHECK(rotated_exponent<double>(b, n).real() ==
            doctest::Approx(std::cos(-0.7) * unrotated_eigenvalue<double>(b, n)));
      CHECK(std::abs(boundary_flux<double>(b, n)) ==
            doctest::Approx(std::sqrt(2.0 / 2.3) * wavenumber<double>(b, n)));
    }
  }
}

TEST_CASE("basis construction rejects bad input") {
  CHECK_THROWS_AS(basis(M_PI, LeftBoundary::dirichlet, 0), InputError);
  CHECK_THROWS_AS(basis(std::nan(""), LeftBoundary::dirichlet, 3), InputError);
  CHECK_THROWS_AS(basis(-1.0, LeftBoundary::dirichlet, 3), InputError);
  CHECK_THROWS_AS(basis(M_PI, LeftBoundary::dirichlet, 3, M_PI / 2), InputError);
}

TEST_CASE("project_state examples") {
  const ModeBasis b = basis(M_PI, LeftBoundary::dirichlet, 3);
  const int m = 257;
  const Eigen::VectorXd s = interval_nodes(M_PI, m);
  CVector<double> f(m), g(m);
  for (int j = 0; j < m; ++j) {
    f(j) = std::sqrt(2.0 / M_PI) * std::sin(s(j));
    g(j) = std::sin(2.0 * s(j));
  }
  const CVector<double> c1 = project_state(f, b).coefficients;
  CHECK(std::abs(c1(0) - 1.0) < 1e-12);
  CHECK(std::abs(c1(1)) < 1e-12);
  CHECK(std::abs(c1(2)) < 1e-12);
  CHECK(project_state(CVector<double>::Zero(m), b).coefficients.norm() == 0.0);
  const CVector<double> c2 = project_state(g, b).coefficients;
  CHECK(std::abs(c2(0)) < 1e-12);
  CHECK(std::abs(c2(1) - std::sqrt(M_PI / 2.0)) < 1e-12);
  CHECK(std::abs(c2(2)) < 1e-12);
  CHECK_THROWS_AS(project_state(CVector<double>::Zero(5), basis(M_PI, LeftBoundary::dirichlet, 10)), InputError);
}

TEST_CASE("eigenfunction orthonormality by quadrature") {
  for (LeftBoundary kind : {LeftBoundary::dirichlet, LeftBoundary::neumann}) {
    for (int N : {1, 7, 64}) {
      const ModeBasis b = basis(1.3, kind, N);
      const double wavelength = 2.0 * M_PI / wavenumber<double>(b, N - 1);
      const int m = static_cast<int>(std::ceil(16.0 * 1.3 / wavelength)) + 1;
      const Eigen::VectorXd s = interval_nodes(1.3, m);
      double worst = 0.0;
      for (int n = 0; n < N; ++n) {
        CVector<double> f(m);
        for (int j = 0; j < m; ++j) f(j) = eigenfunction<double>(b, n, s(j));
        const CVector<double> c = project_state(f, b).coefficients;
        for (int k = 0; k < N; ++k) worst = std::max(worst, std::abs(c(k) - (k == n ? 1.0 : 0.0)));
      }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("projection inverts synthesis on the truncated span") {
  const ModeBasis b = basis(2.0, LeftBoundary::neumann, 9, 0.4);
  StateCoeffs<double> x = zero_state(b);
  for (int n = 0; n < 9; ++n) x.coefficients(n) = oracle::gaussian_complex();
  const CVector<double> samples = synthesize(x, interval_nodes(2.0, 200));
  const StateCoeffs<double> back = project_state(samples, b);
  CHECK((back.coefficients - x.coefficients).norm() < 1e-12 * x.coefficients.norm());
}

TEST_CASE("free evolution") {
  const ModeBasis b = basis(M_PI, LeftBoundary::dirichlet, 4);
  const StateCoeffs<double> e1 = unit_state(b, 0);
  CHECK((free_evolution(e1, 0.0).coefficients - e1.coefficients).norm() == 0.0);
  CHECK(free_evolution(e1, 1.0).coefficients(0).real() == doctest::Approx(std::exp(-1.0)));
  const ModeBasis r = with_theta(b, M_PI / 4);
  CHECK(std::abs(free_evolution(unit_state(r, 0), 1.0).coefficients(0)) ==
        doctest::Approx(std::exp(-std::cos(M_PI / 4))));
  CHECK_THROWS_AS(free_evolution(e1, -0.1), InputError);
  StateCoeffs<double> x = zero_state(r);
  for (int n = 0; n < 4; ++n) x.coefficients(n) = oracle::gaussian_complex();
  for (double t : {0.01, 0.3, 2.0}) CHECK(free_evolution(x, t).norm() <= x.norm());
}

TEST_CASE("control signal quadrature") {
  const TimeGrid g{0.0, 2.0, 2001};
  ControlSignal u = zero_signal(g);
  CHECK(l2_norm_sq(u) == 0.0);
  for (int i = 0; i < g.samples; ++i) u.values(i) = std::sin(M_PI * g.at(i));
  CHECK(l2_norm_sq(u) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(interpolate(u, 0.5).real() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(validate(ControlSignal{g, CVector<double>::Zero(3)}), InputError);
}
