#include "ctrlcost/transmutation.hpp"

namespace ctrlcost {

namespace {

Eigen::VectorXd grid_weights(const Eigen::VectorXd& s) {
  const int n = int(s.size());
  return trapezoid_weights(n, (s(n - 1) - s(0)) / (n - 1));
}

void check_shared_grid(const KernelGrid& k, const WaveTrajectory& w) {
  require(k.s.size() == w.s.size(), "transmutation: kernel and wave trajectory use different s-grids");
  const double tol = 1e-12 * k.L;
  require((k.s - w.s).cwiseAbs().maxCoeff() <= tol,
          "transmutation: kernel and wave trajectory use different s-grids");
}

}  // namespace

WaveTrajectory extend_by_reflection(const ModeBasis& basis, const ModalWavePath& half, const CVector<double>& v,
                                    double kappa2, double flatness) {
  const Eigen::Index m = half.s.size() - 1;
  require(m >= 1, "extend_by_reflection: need at least two nodes");
  require(half.s(0) == 0.0, "extend_by_reflection: path must start at s = 0");
  require(v.size() == half.s.size(), "extend_by_reflection: control and path sizes differ");
  require(half.z.rows() == basis.truncation, "extend_by_reflection: path truncation differs from basis");

  const double L = half.s(m);
  const double start = std::sqrt(half.z.col(0).squaredNorm());
  const double left = std::sqrt(wave_energy(basis, half.z.col(m), half.dz.col(m)));
  if (left > flatness * start)
    throw ComputationError("extend_by_reflection: terminal flatness violated, wave energy " +
                           std::to_string(left / std::max(start, 1e-300)) + " of the initial norm left at s = L");

  WaveTrajectory w;
  w.basis = wave_basis(basis);
  w.kappa2 = kappa2;
  w.s.resize(2 * m + 1);
  w.z.resize(basis.truncation, 2 * m + 1);
  w.dz.resize(basis.truncation, 2 * m + 1);
  w.v = zero_signal(TimeGrid{-L, L, int(2 * m + 1)});
  for (Eigen::Index j = 0; j <= m; ++j) {
    const Eigen::Index r = m + j, l = m - j;
    w.s(r) = half.s(j);
    w.s(l) = -half.s(j);
    w.z.col(r) = half.z.col(j);
    w.z.col(l) = half.z.col(j);
    w.dz.col(r) = half.dz.col(j);
    w.dz.col(l) = -half.dz.col(j);
    w.v.values(r) = v(j);
    w.v.values(l) = v(j);
  }
  return w;
}

WaveTrajectory reflected_wave_control(const StateCoeffs<double>& z0, const Eigen::VectorXd& s) {
  const Eigen::Index n = s.size();
  require(n >= 3 && n % 2 == 1, "reflected_wave_control: need an odd node count symmetric about 0");
  const Eigen::Index m = n / 2;
  const double L = s(n - 1);
  const WaveControl<double> wc = solve_wave_control<double>(z0, L);
  const Eigen::VectorXd right = s.tail(m + 1);
  const ModalWavePath path = wave_modal_path(wc, right);
  CVector<double> v(m + 1);
  for (Eigen::Index j = 0; j <= m; ++j) v(j) = control_value(wc.moments, right(j));
  WaveTrajectory w = extend_by_reflection(wc.basis, path, v, wc.kappa2);
  w.s = s;
  return w;
}

ControlSignal transmute_control(const KernelGrid& k, const WaveTrajectory& w, Complex<double> phase) {
  check_shared_grid(k, w);
  const Eigen::VectorXd q = grid_weights(k.s);
  const CVector<double> weighted = q.cast<Complex<double>>().cwiseProduct(w.v.values);
  ControlSignal u = zero_signal(TimeGrid{0.0, k.T, int(k.t.size()) + 1});
  u.values(0) = w.v.values(k.s.size() / 2);
  u.values.tail(k.t.size()) = k.values * weighted;
  u.values *= phase;
  return u;
}

Trajectory transmute_state(const KernelGrid& k, const WaveTrajectory& w) {
  check_shared_grid(k, w);
  const Eigen::VectorXd q = grid_weights(k.s);
  const int nt = int(k.t.size());
  Trajectory x{with_theta(w.basis, k.theta), TimeGrid{0.0, k.T, nt + 1}, CMatrix<double>(w.basis.truncation, nt + 1)};
  x.states.col(0) = w.z.col(k.s.size() / 2);
  x.states.rightCols(nt) = (w.z * q.asDiagonal()) * k.values.transpose();
  return x;
}

double verify_weak_solution(const Trajectory& x, const ControlSignal& u) {
  require(u.grid.samples == x.grid.samples && std::abs(u.grid.end - x.grid.end) <= 1e-12 * std::abs(x.grid.end),
          "verify_weak_solution: control and trajectory use different t-grids");
  const int S = x.grid.samples;
  const double h = x.grid.spacing();
  double worst = 0.0;
  for (int m = 0; m < x.basis.truncation; ++m) {
    const Complex<double> lambda = rotated_exponent<double>(x.basis, m);
    const Complex<double> b = boundary_flux<double>(x.basis, m);
    double r2 = 0.0, x2 = 0.0;
    for (int i = 1; i + 1 < S; ++i) {
      const Complex<double> dx = (x.states(m, i + 1) - x.states(m, i - 1)) / (2.0 * h);
      r2 += std::norm(dx - lambda * x.states(m, i) - b * u.values(i));
      x2 += std::norm(x.states(m, i));
    }
    if (x2 > 0.0) worst = std::max(worst, std::sqrt(r2 / x2));
  }
  return worst;
}

TransmutationRun transmute(const CVector<double>& x0, double L0, double L, double T, double theta,
                           const TransmutationOptions& options) {
  require(L0 > 0.0 && T > 0.0, "transmute: L0 and T must be positive");
  require(L >= 2.0 * L0 * (1.0 - 1e-12), "transmute: need L >= 2 L0 for the wave control step");
  require(x0.size() >= 1, "transmute: empty initial state");
  const ModeBasis wave = build_basis(BoundaryConfig{L0, LeftBoundary::dirichlet, 0.0}, int(x0.size()));
  const ModeBasis heat = with_theta(wave, theta);

  TransmutationRun run;
  const FundamentalKernel kernel(L, T, theta, options.kernel);
  run.kernel = kernel.sample(options.kernel.time_intervals, options.kernel.space_intervals);
  run.wave = reflected_wave_control(StateCoeffs<double>{wave, x0}, run.kernel.s);
  run.u = transmute_control(run.kernel, run.wave);
  run.x = transmute_state(run.kernel, run.wave);
  run.replay = simulate_first_order(StateCoeffs<double>{heat, x0}, run.u);

  TransmutationReport& r = run.report;
  const double n0 = x0.norm();
  r.kernel = kernel.diagnostics();
  r.kappa2 = run.wave.kappa2;
  r.control_cost = l2_norm_sq(run.u);
  r.kernel_l2_sq = kernel_l2_norm_sq(run.kernel);
  r.wave_cost = l2_norm_sq(run.wave.v);
  const Eigen::Index m = run.kernel.s.size() / 2;
  r.half_wave_cost = l2_norm_sq(ControlSignal{TimeGrid{0.0, L, int(m) + 1}, run.wave.v.values.tail(m + 1)});
  r.cauchy_schwarz_rhs = r.kernel_l2_sq * r.wave_cost;
  const double umax = run.u.values.cwiseAbs().maxCoeff();
  r.imaginary_ratio = umax > 0.0 ? run.u.values.imag().cwiseAbs().maxCoeff() / umax : 0.0;
  if (n0 == 0.0) {
    r.direct_cost = 0.0;
  } else {
    r.terminal_norm_ratio = run.replay.terminal().norm() / n0;
    r.transmuted_terminal_ratio = run.x.terminal().norm() / n0;
    r.weak_residual = verify_weak_solution(run.x, run.u);
    r.direct_cost =
        solve_min_norm(moment_targets<Extended>(StateCoeffs<double>{heat, x0}, T)).cost.convert_to<double>();
  }
  const KernelCostFit fit = options.fit.value_or(KernelCostFit{r.kernel_l2_sq, 0.0});
  r.bound_rhs = 2.0 * r.kappa2 * fit.gamma * std::exp(fit.alpha * L * L / T) * n0 * n0;
  r.bound_satisfied = r.control_cost <= r.bound_rhs;
  return run;
}

}  // namespace ctrlcost
