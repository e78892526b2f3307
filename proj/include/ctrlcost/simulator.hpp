#pragma once

// Forward solvers used as oracles. Spectral solvers propagate each mode
// exactly and integrate the boundary input by the trapezoid rule on the
// signal's own grid; finite-difference solvers work on a uniform node grid.

#include "ctrlcost/spectral_core.hpp"

namespace ctrlcost {

enum class Scheme { spectral, finite_difference };

struct Trajectory {
  ModeBasis basis;
  TimeGrid grid;
  CMatrix<double> states;  // truncation x samples

  StateCoeffs<double> at(int i) const { return {basis, states.col(i)}; }
  StateCoeffs<double> terminal() const { return at(grid.samples - 1); }
};

// c_n' = lambda_n c_n + b_n u(t), u on its own grid.
Trajectory simulate_first_order(const StateCoeffs<double>& x0, const ControlSignal& u);

struct WaveTrajectoryModal {
  ModeBasis basis;  // rotation angle ignored
  TimeGrid grid;
  CMatrix<double> z;   // truncation x samples
  CMatrix<double> dz;  // time derivative

  CVector<double> terminal_z() const { return z.col(grid.samples - 1); }
  CVector<double> terminal_dz() const { return dz.col(grid.samples - 1); }
};

// z_n'' = mu_n z_n + beta_n v(t) with beta_n = -e_n'(L).
WaveTrajectoryModal simulate_second_order(const StateCoeffs<double>& z0, const CVector<double>& z1,
                                          const ControlSignal& v);

// sum |z_n|^2 + |z_n' / k_n|^2: the velocity is measured in the mode-weighted
// (H^-1) norm so both terms are L2-comparable.
double wave_energy(const ModeBasis& basis, const CVector<double>& z, const CVector<double>& dz);

struct NodalProfile {
  Eigen::VectorXd nodes;
  CVector<double> values;
};

double l2_norm(const NodalProfile& f);
double relative_l2_difference(const NodalProfile& f, const NodalProfile& reference);
NodalProfile sample_profile(const StateCoeffs<double>& state, int nodes);

// Crank-Nicolson on uniform nodes over [0, L], steps taken on the control's
// grid. The control value is substituted at the right node and its coupling
// moved to the right-hand side. Accuracy gate: dt <= h.
NodalProfile simulate_first_order_fd(const BoundaryConfig& config, const NodalProfile& x0,
                                     const ControlSignal& u);

struct NodalWaveState {
  NodalProfile z;
  NodalProfile dz;
};

// Leapfrog with dt = cfl * h up to the end of the control grid, which is
// interpolated linearly. Stability gate: cfl <= 1.
NodalWaveState simulate_second_order_fd(const BoundaryConfig& config, const NodalProfile& z0,
                                        const ControlSignal& v, double cfl = 0.5);

}  // namespace ctrlcost
