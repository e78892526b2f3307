#include "ctrlcost/transmutation.hpp"

#include <doctest.h>

#include <functional>

#include "oracles.hpp"

using namespace ctrlcost;

namespace {

CVector<double> first_mode(int n) {
  CVector<double> x = CVector<double>::Zero(n);
  x(0) = 1.0;
  return x;
}

// L0 = 1, L = 2, T = 0.3, theta = 0, x0 = e_1, truncation 15.
const TransmutationRun& feasible_run() {
  static const TransmutationRun r = transmute(first_mode(15), 1.0, 2.0, 0.3, 0.0);
  return r;
}

WaveTrajectory profile_only(const Eigen::VectorXd& s, const std::function<double(double)>& v) {
  WaveTrajectory w;
  w.basis = build_basis(BoundaryConfig{1.0, LeftBoundary::dirichlet, 0.0}, 1);
  w.s = s;
  w.z = CMatrix<double>::Zero(1, s.size());
  w.dz = w.z;
  w.v = zero_signal(TimeGrid{s(0), s(s.size() - 1), int(s.size())});
  for (Eigen::Index j = 0; j < s.size(); ++j) w.v.values(j) = v(s(j));
  return w;
}

}  // namespace

TEST_CASE("reflected wave trajectory") {
  const ModeBasis b = build_basis(BoundaryConfig{1.0, LeftBoundary::dirichlet, 0.0}, 6);
  StateCoeffs<double> z0 = zero_state(b);
  for (int n = 0; n < 6; ++n) z0.coefficients(n) = oracle::uniform(-1, 1);
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(401, -2.5, 2.5);
  const WaveTrajectory w = reflected_wave_control(z0, s);
  const Eigen::Index m = 200;
  for (Eigen::Index j = 0; j <= 400; ++j) {
    CHECK(w.v.values(j) == w.v.values(400 - j));
    CHECK(w.z.col(j) == w.z.col(400 - j));
    CHECK(w.dz.col(j) == -w.dz.col(400 - j));
  }
  CHECK(w.z.col(m) == z0.coefficients);
  const double full = l2_norm_sq(w.v);
  const double half = l2_norm_sq(ControlSignal{TimeGrid{0.0, 2.5, 201}, w.v.values.tail(201)});
  CHECK(full == doctest::Approx(2.0 * half).epsilon(1e-14));
  CHECK(wave_energy(w.basis, w.z.col(400), w.dz.col(400)) <= 1e-16 * z0.norm() * z0.norm());
  CHECK(w.kappa2 > 0.0);
}

TEST_CASE("reflection rejects a path that is not flat at the horizon") {
  const ModeBasis b = build_basis(BoundaryConfig{1.0, LeftBoundary::dirichlet, 0.0}, 3);
  WaveControl<double> wc = solve_wave_control<double>(unit_state(b, 0), 2.0);
  wc.moments.coefficients.setZero();  // free oscillation
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(101, 0.0, 2.3);
  wc.horizon = 2.3;
  const ModalWavePath path = wave_modal_path(wc, s);
  CHECK_THROWS_AS(extend_by_reflection(b, path, CVector<double>::Zero(101)), ComputationError);
}

TEST_CASE("transmuted control against dense quadrature") {
  const FundamentalKernel k(1.5, 0.5, 0.0);
  const KernelGrid g = k.sample();
  auto bump = [](double s) { return std::exp(-16.0 * s * s); };
  const WaveTrajectory w = profile_only(g.s, bump);
  const ControlSignal u = transmute_control(g, w);
  CHECK(u.values(0) == 1.0);
  std::vector<double> x, q;
  oracle::composite_gauss(-1.5, 1.5, 96, x, q);
  const Eigen::VectorXd nodes = Eigen::Map<Eigen::VectorXd>(x.data(), Eigen::Index(x.size()));
  double worst = 0.0, scale = 0.0;
  for (Eigen::Index i = 4; i < g.t.size(); i += 37) {
    const CVector<double> row = k.slice(g.t(i), nodes);
    Complex<double> ref = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) ref += q[j] * row(Eigen::Index(j)) * bump(x[j]);
    worst = std::max(worst, std::abs(u.values(i + 1) - ref));
    scale = std::max(scale, std::abs(ref));
  }
  CHECK(worst <= 1e-10 * scale);

  // even data: twice the half-line trapezoid
  const Eigen::Index m = g.s.size() / 2;
  const Eigen::VectorXd wh = trapezoid_weights(int(m) + 1, g.s(1) - g.s(0));
  for (Eigen::Index i = 0; i < g.t.size(); i += 53) {
    Complex<double> half = 0.0;
    for (Eigen::Index j = 0; j <= m; ++j) half += wh(j) * g.values(i, m + j) * bump(g.s(m + j));
    CHECK(std::abs(u.values(i + 1) - 2.0 * half) <= 1e-12 * std::abs(half) + 1e-300);
  }

  const ControlSignal zero = transmute_control(g, profile_only(g.s, [](double) { return 0.0; }));
  CHECK(zero.values.norm() == 0.0);
  CHECK(transmute_state(g, profile_only(g.s, bump)).states.norm() == 0.0);

  const WaveTrajectory other = profile_only(Eigen::VectorXd::LinSpaced(21, -1.5, 1.5), bump);
  CHECK_THROWS_AS(transmute_control(g, other), InputError);
  CHECK_THROWS_AS(transmute_state(g, other), InputError);
}

TEST_CASE("weak residual is second order for simulated trajectories") {
  const ModeBasis b = build_basis(BoundaryConfig{1.0, LeftBoundary::dirichlet, 0.3}, 4);
  StateCoeffs<double> x0 = zero_state(b);
  for (int n = 0; n < 4; ++n) x0.coefficients(n) = oracle::gaussian_complex();
  for (bool forced : {false, true}) {
    double previous = 0.0;
    for (int S : {801, 1601, 3201}) {
      ControlSignal u = zero_signal(TimeGrid{0.0, 0.5, S});
      if (forced)
        for (int i = 0; i < S; ++i) u.values(i) = std::sin(7.0 * u.grid.at(i)) + Complex<double>(0.0, 0.5);
      const double r = verify_weak_solution(simulate_first_order(x0, u), u);
      INFO("forced " << forced << " samples " << S << " residual " << r);
      if (previous > 0.0) CHECK(r == doctest::Approx(previous / 4.0).epsilon(0.1));
      previous = r;
    }
  }
}

TEST_CASE("feasible end-to-end transmutation") {
  const TransmutationRun& run = feasible_run();
  const TransmutationReport& r = run.report;
  CHECK(r.terminal_norm_ratio <= 1e-4);
  CHECK(r.transmuted_terminal_ratio <= 1e-8);
  CHECK(run.x.states.col(0) == first_mode(15));
  CHECK(r.control_cost <= r.cauchy_schwarz_rhs);
  CHECK(r.wave_cost == doctest::Approx(2.0 * r.half_wave_cost).epsilon(1e-14));
  CHECK(r.control_cost >= r.direct_cost);
  CHECK(r.bound_satisfied);
  CHECK(r.imaginary_ratio <= 1e-12);
  CHECK(r.kappa2 == doctest::Approx(0.5).epsilon(1e-12));  // diagonal Gram at L = 2 L0
  // the transmuted pair solves the first-order system up to the time-grid floor
  const double floor = verify_weak_solution(run.replay, run.u);
  CHECK(r.weak_residual <= 10.0 * floor);
}

TEST_CASE("transmuted control is linear in the initial state") {
  const TransmutationRun& a = feasible_run();
  const TransmutationRun b = transmute(2.0 * first_mode(15), 1.0, 2.0, 0.3, 0.0);
  CHECK((b.u.values - 2.0 * a.u.values).cwiseAbs().maxCoeff() <= 1e-14 * a.u.values.cwiseAbs().maxCoeff());
}

TEST_CASE("rotated transmutation needs no extra phase on the control") {
  const double theta = M_PI / 4;
  const TransmutationRun run = transmute(first_mode(6), 0.5, 1.0, 0.2, theta);
  CHECK(run.report.terminal_norm_ratio <= 1e-4);
  CHECK(run.report.imaginary_ratio > 0.1);
  const double floor = verify_weak_solution(run.replay, run.u);
  CHECK(run.report.weak_residual <= 10.0 * floor);
  // u carrying e^{i theta}, or a kernel built with -theta, breaks the weak identity
  const ControlSignal rotated = transmute_control(run.kernel, run.wave, unit_phase(theta));
  CHECK(verify_weak_solution(run.x, rotated) > 50.0 * run.report.weak_residual);
  TransmutationOptions o;
  o.kernel.convention = PhaseConvention::minus_theta;
  const TransmutationRun other = transmute(first_mode(6), 0.5, 1.0, 0.2, theta, o);
  CHECK(other.report.weak_residual > 50.0 * run.report.weak_residual);
  CHECK(other.report.terminal_norm_ratio > 1e-2);
}

TEST_CASE("zero initial state gives a zero report") {
  const TransmutationReport r = end_to_end(CVector<double>::Zero(4), 0.5, 1.0, 0.2, 0.0);
  CHECK(r.terminal_norm_ratio == 0.0);
  CHECK(r.weak_residual == 0.0);
  CHECK(r.control_cost == 0.0);
  CHECK(r.bound_rhs == 0.0);
  CHECK(r.bound_satisfied);
  CHECK(r.direct_cost == 0.0);
}

TEST_CASE("transmutation argument checks") {
  CHECK_THROWS_AS(end_to_end(first_mode(3), 1.0, 1.5, 0.3, 0.0), InputError);
  CHECK_THROWS_AS(end_to_end(first_mode(3), 1.0, 2.0, 0.0, 0.0), InputError);
  CHECK_THROWS_AS(end_to_end(CVector<double>(), 1.0, 2.0, 0.3, 0.0), InputError);
}
