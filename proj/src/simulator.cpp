#include "ctrlcost/simulator.hpp"

#include <vector>

namespace ctrlcost {

Trajectory simulate_first_order(const StateCoeffs<double>& x0, const ControlSignal& u) {
  validate(u);
  const ModeBasis& basis = x0.basis;
  const int N = basis.truncation;
  const int S = u.grid.samples;
  const double h = u.grid.spacing();
  Trajectory out{basis, u.grid, CMatrix<double>(N, S)};
  out.states.col(0) = x0.coefficients;
  for (int n = 0; n < N; ++n) {
    const Complex<double> lambda = rotated_exponent<double>(basis, n);
    const Complex<double> b = boundary_flux<double>(basis, n);
    const Complex<double> step = std::exp(lambda * h);
    Complex<double> c = x0.coefficients(n);
    for (int i = 0; i + 1 < S; ++i) {
      c = step * c + b * (0.5 * h) * (step * u.values(i) + u.values(i + 1));
      out.states(n, i + 1) = c;
    }
  }
  return out;
}

WaveTrajectoryModal simulate_second_order(const StateCoeffs<double>& z0, const CVector<double>& z1,
                                          const ControlSignal& v) {
  validate(v);
  const ModeBasis& basis = z0.basis;
  const int N = basis.truncation;
  require(z1.size() == N, "simulate_second_order: velocity length must match truncation");
  const int S = v.grid.samples;
  const double h = v.grid.spacing();
  WaveTrajectoryModal out{basis, v.grid, CMatrix<double>(N, S), CMatrix<double>(N, S)};
  out.z.col(0) = z0.coefficients;
  out.dz.col(0) = z1;
  for (int n = 0; n < N; ++n) {
    const double w = wavenumber<double>(basis, n);
    const double beta = -boundary_slope<double>(basis, n);
    const double c = std::cos(w * h), s = std::sin(w * h);
    Complex<double> z = z0.coefficients(n), dz = z1(n);
    for (int i = 0; i + 1 < S; ++i) {
      const Complex<double> zn = c * z + (s / w) * dz + (beta / w) * (0.5 * h) * s * v.values(i);
      const Complex<double> dzn =
          -w * s * z + c * dz + beta * (0.5 * h) * (c * v.values(i) + v.values(i + 1));
      z = zn;
      dz = dzn;
      out.z(n, i + 1) = z;
      out.dz(n, i + 1) = dz;
    }
  }
  return out;
}

double wave_energy(const ModeBasis& basis, const CVector<double>& z, const CVector<double>& dz) {
  double e = 0.0;
  for (int n = 0; n < basis.truncation; ++n) {
    const double w = wavenumber<double>(basis, n);
    e += std::norm(z(n)) + std::norm(dz(n)) / (w * w);
  }
  return e;
}

double l2_norm(const NodalProfile& f) {
  const int m = static_cast<int>(f.nodes.size());
  const Eigen::VectorXd w = trapezoid_weights(m, f.nodes(m - 1) / (m - 1));
  return std::sqrt((w.array() * f.values.array().abs2()).sum());
}

double relative_l2_difference(const NodalProfile& f, const NodalProfile& reference) {
  require(f.nodes.size() == reference.nodes.size(), "profiles must share nodes");
  const NodalProfile diff{f.nodes, f.values - reference.values};
  return l2_norm(diff) / l2_norm(reference);
}

NodalProfile sample_profile(const StateCoeffs<double>& state, int nodes) {
  const Eigen::VectorXd s = interval_nodes(state.basis.length(), nodes);
  return {s, synthesize(state, s)};
}

namespace {

// Thomas algorithm for a complex tridiagonal system.
void solve_tridiagonal(std::vector<Complex<double>> lower, std::vector<Complex<double>> diag,
                       std::vector<Complex<double>> upper, std::vector<Complex<double>>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const Complex<double> m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

NodalProfile simulate_first_order_fd(const BoundaryConfig& config, const NodalProfile& x0,
                                     const ControlSignal& u) {
  validate(config);
  validate(u);
  const int m = static_cast<int>(x0.nodes.size());
  require(m >= 3, "finite differences need at least three nodes");
  const double h = config.length / (m - 1);
  const double dt = u.grid.spacing();
  require(dt <= h, "finite-difference accuracy gate: time step must not exceed mesh width");
  const Complex<double> alpha = unit_phase(config.theta);
  const Complex<double> r = 0.5 * dt * alpha / (h * h);
  const bool neumann = config.left == LeftBoundary::neumann;

  // Unknowns: nodes 0..m-2 (Neumann) or 1..m-2 (Dirichlet); node m-1 carries u.
  const int first = neumann ? 0 : 1;
  const int n = m - 1 - first;
  CVector<double> x = x0.values;
  if (!neumann) x(0) = 0.0;
  x(m - 1) = u.values(0);

  for (int step = 0; step + 1 < u.grid.samples; ++step) {
    std::vector<Complex<double>> lower(n), diag(n), upper(n), rhs(n);
    for (int k = 0; k < n; ++k) {
      const int j = first + k;
      diag[k] = 1.0 + 2.0 * r;
      lower[k] = -r;
      upper[k] = -r;
      Complex<double> left = j > 0 ? x(j - 1) : x(1);
      if (j == 0) upper[k] = -2.0 * r;  // mirrored neighbour
      rhs[k] = (1.0 - 2.0 * r) * x(j) + r * (left + x(j + 1));
    }
    rhs[n - 1] += r * u.values(step + 1);
    upper[n - 1] = 0.0;
    lower[0] = 0.0;
    solve_tridiagonal(lower, diag, upper, rhs);
    for (int k = 0; k < n; ++k) x(first + k) = rhs[k];
    x(m - 1) = u.values(step + 1);
  }
  return {x0.nodes, x};
}

NodalWaveState simulate_second_order_fd(const BoundaryConfig& config, const NodalProfile& z0,
                                        const ControlSignal& v, double cfl) {
  validate(config);
  validate(v);
  require(cfl > 0.0 && cfl <= 1.0, "leapfrog stability gate: cfl must lie in (0, 1]");
  const int m = static_cast<int>(z0.nodes.size());
  require(m >= 3, "finite differences need at least three nodes");
  const double h = config.length / (m - 1);
  const double span = v.grid.end - v.grid.start;
  const int steps = static_cast<int>(std::ceil(span / (cfl * h)));
  const double dt = span / steps;
  const double r2 = (dt / h) * (dt / h);
  const bool neumann = config.left == LeftBoundary::neumann;

  auto laplacian = [&](const CVector<double>& z, int j) -> Complex<double> {
    const Complex<double> left = j > 0 ? z(j - 1) : z(1);
    return left - 2.0 * z(j) + z(j + 1);
  };
  auto impose = [&](CVector<double>& z, double t) {
    if (!neumann) z(0) = 0.0;
    z(m - 1) = interpolate(v, v.grid.start + t);
  };

  CVector<double> prev = z0.values;
  impose(prev, 0.0);
  CVector<double> cur = prev;
  for (int j = neumann ? 0 : 1; j < m - 1; ++j) cur(j) = prev(j) + 0.5 * r2 * laplacian(prev, j);
  impose(cur, dt);
  CVector<double> older = prev;
  for (int step = 1; step < steps; ++step) {
    CVector<double> next = cur;
    for (int j = neumann ? 0 : 1; j < m - 1; ++j) next(j) = 2.0 * cur(j) - prev(j) + r2 * laplacian(cur, j);
    impose(next, (step + 1) * dt);
    older = prev;
    prev = cur;
    cur = next;
  }
  // second-order backward difference for the terminal velocity
  const CVector<double> vel = (3.0 * cur - 4.0 * prev + older) / (2.0 * dt);
  return {{z0.nodes, cur}, {z0.nodes, vel}};
}

}  // namespace ctrlcost
