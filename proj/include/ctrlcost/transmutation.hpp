#pragma once

// Second-order to first-order transmutation on (0, L0):
//   x(t) = int k(t, s) zbar(s) ds,   u(t) = int k(t, s) vbar(s) ds,
// with k the fundamental controlled solution on (-L, L) and zbar, vbar the
// even reflections of a wave null control over the horizon L >= 2 L0.
// Per mode, x_n' = e^{i phi} (mu_n x_n + beta_n u) after two integrations by
// parts; with phi = theta this is lambda_n x_n + b_n u, since b_n already
// carries e^{i theta}. The transmuted control therefore has no extra phase.

#include "ctrlcost/fundamental_kernel.hpp"
#include "ctrlcost/simulator.hpp"
#include "ctrlcost/wave_control.hpp"

#include <optional>

namespace ctrlcost {

struct WaveTrajectory {
  ModeBasis basis;      // wave basis on (0, L0), theta = 0
  Eigen::VectorXd s;    // uniform on [-L, L]
  CMatrix<double> z;    // truncation x s.size(), even in s
  CMatrix<double> dz;   // d/ds, odd in s
  ControlSignal v;      // grid [-L, L], even
  double kappa2 = 0.0;
};

// Even extension of a path on uniform nodes 0 = s_0 < ... < s_m = L, with v
// given at the same nodes. Throws ComputationError when the wave energy left
// at s = L exceeds flatness * ||z(0)||.
WaveTrajectory extend_by_reflection(const ModeBasis& basis, const ModalWavePath& half, const CVector<double>& v,
                                    double kappa2 = 0.0, double flatness = 1e-6);

// Wave null control of z0 over the horizon L, sampled on the right half of
// the given symmetric grid and reflected.
WaveTrajectory reflected_wave_control(const StateCoeffs<double>& z0, const Eigen::VectorXd& s);

// u(t) = phase * int k(t, s) vbar(s) ds on the kernel's t-grid, with u(0) = vbar(0).
ControlSignal transmute_control(const KernelGrid& k, const WaveTrajectory& w, Complex<double> phase = 1.0);

// x(t) on the kernel's t-grid in the first-order basis (wave basis at angle
// k.theta), with x(0) = zbar(0).
Trajectory transmute_state(const KernelGrid& k, const WaveTrajectory& w);

// max over modes of ||D_t x_m - lambda_m x_m - b_m u|| / ||x_m|| in L2 over
// the interior t-nodes, D_t centered.
double verify_weak_solution(const Trajectory& x, const ControlSignal& u);

// gamma e^{alpha L^2 / T} bounds ||k||^2.
struct KernelCostFit {
  double gamma = 0.0;
  double alpha = 0.0;
};

struct TransmutationOptions {
  KernelResolution kernel;
  // When unset, gamma is the measured ||k||^2 and alpha = 0.
  std::optional<KernelCostFit> fit;
};

struct TransmutationReport {
  double terminal_norm_ratio = 0.0;
  double weak_residual = 0.0;
  double control_cost = 0.0;       // int |u|^2
  double bound_rhs = 0.0;          // 2 kappa2 gamma e^{alpha L^2/T} ||x0||^2
  bool bound_satisfied = true;

  double direct_cost = 0.0;        // min-norm cost for the same x0 and T
  double kernel_l2_sq = 0.0;
  double wave_cost = 0.0;          // int_{-L}^{L} |vbar|^2 on the grid
  double half_wave_cost = 0.0;     // int_0^L |v|^2 on the grid
  double cauchy_schwarz_rhs = 0.0; // kernel_l2_sq * wave_cost
  double kappa2 = 0.0;
  double imaginary_ratio = 0.0;    // max |Im u| / max |u|
  double transmuted_terminal_ratio = 0.0;  // ||x(T)|| from the transmuted trajectory
  KernelDiagnostics kernel;
};

struct TransmutationRun {
  TransmutationReport report;
  KernelGrid kernel;
  WaveTrajectory wave;
  ControlSignal u;
  Trajectory x;       // transmuted
  Trajectory replay;  // simulated from x0 under u
};

// x0 lives on (0, L0) with Dirichlet left end; its size is the truncation.
TransmutationRun transmute(const CVector<double>& x0, double L0, double L, double T, double theta,
                           const TransmutationOptions& options = {});

inline TransmutationReport end_to_end(const CVector<double>& x0, double L0, double L, double T, double theta,
                                      const TransmutationOptions& options = {}) {
  return transmute(x0, L0, L, T, theta, options).report;
}

}  // namespace ctrlcost
