#pragma once

// Fundamental controlled solution on the twofold segment (-L, L):
//   k_t = e^{i phi} k_ss,  k(0) = delta_0,  k(t, +-L) = u_+-(t),  k(T) = 0,
// with phi = theta (plus_theta) or -theta (minus_theta).
//
// Phase one, [0, t0], is free smoothing. Phase two, [t0, T], drives the
// smoothed state to zero with one weighted moment control per parity:
//   u_e = (u_+ + u_-)/2 acts on even modes, u_o = (u_+ - u_-)/2 on odd modes.
// The weight (x(1-x))^p makes the controls flat at both phase ends.
//
// Modal trajectories in phase two use the lifting
//   k = sum_{j<P} u^{(j)}(t) chi_j(s) + w,   e^{i phi} chi_j'' = chi_{j-1},  chi_j(+-L) = 0,
// with chi_0 = 1 (even) or s/L (odd); the remainder modes obey
// w_n' = lambda_n w_n - u^{(P)} <chi_{P-1}, psi_n> and decay like |n|^{-2P-1}.
// Pointwise values use boundary potentials instead,
//   k(t, s) = (free evolution of k(t0))(s) + int D(t - tau, s) u_+(tau) + D(t - tau, -s) u_-(tau) dtau,
// with D the image-sum response to a Dirichlet pulse at s = L. The lifted sum
// cancels to about 1e-16 |u''| in the interior; the potentials do not.

#include "ctrlcost/spectral_core.hpp"

#include <functional>
#include <iosfwd>
#include <memory>

namespace ctrlcost {

enum class PhaseConvention { plus_theta, minus_theta };
std::string to_string(PhaseConvention c);
PhaseConvention parse_phase_convention(const std::string& name);

inline double kernel_angle(double theta, PhaseConvention c) {
  return c == PhaseConvention::plus_theta ? theta : -theta;
}

// Dirichlet eigenbasis of (-L, L), zero-based within each parity:
//   even n: cos((n + 1/2) pi s / L) / sqrt(L),   odd n: sin((n + 1) pi s / L) / sqrt(L).
enum class Parity { even, odd };

double twofold_wavenumber(double L, Parity parity, int n);
double twofold_mode(double L, Parity parity, int n, double s);
// d/ds of the mode at s = L; the mode's slope at -L is the same for odd,
// opposite for even.
double twofold_end_slope(double L, Parity parity, int n);

struct TwofoldState {
  double length = 0.0;
  double theta = 0.0;      // effective angle phi
  CVector<double> even;    // coefficients on the even modes
  CVector<double> odd;

  double norm() const { return std::sqrt(even.squaredNorm() + odd.squaredNorm()); }
};

CVector<double> synthesize(const TwofoldState& state, const Eigen::VectorXd& s);

// Even-mode count whose dropped tail carries at most `tail` of the retained
// L2 mass of the datum smoothed for t_half.
int smooth_delta_truncation(double L, double phi, double t_half, double tail = 1e-12);

// Free evolution of delta_0 to t_half: c_n = psi_n(0) e^{lambda_n t_half}.
// truncation 0 selects smooth_delta_truncation; a smaller explicit value is an
// InputError carrying the required count.
TwofoldState smooth_delta(double L, double phi, double t_half, int truncation = 0);

struct KernelResolution {
  int controlled = 0;     // modes per parity in each moment problem; 0 = automatic
  int represented = 0;    // remainder modes per parity; 0 = 3 * controlled
  int weight_order = 16;  // p: flatness of the phase-two controls
  int lift_order = 3;     // P: lifting terms, at most weight_order
  int time_intervals = 0;   // uniform t-grid over [0, T]; 0 = automatic
  int space_intervals = 0;  // uniform s-grid over [-L, L]; 0 = automatic
  double split = 0.5;       // t0 / T
  PhaseConvention convention = PhaseConvention::plus_theta;
};

struct KernelGrid {
  double T = 0.0;
  double L = 0.0;
  double theta = 0.0;
  double split = 0.5;
  PhaseConvention convention = PhaseConvention::plus_theta;
  bool delta_marker = true;    // k(0, .) = delta_0, not sampled
  Eigen::VectorXd t;           // uniform, excludes t = 0
  Eigen::VectorXd s;           // uniform on [-L, L]
  CMatrix<double> values;      // t.size() x s.size(); zero outside (-L, L)
  ControlSignal u_plus;        // on [0, T], including t = 0
  ControlSignal u_minus;
  double phase_one_norm_sq = 0.0;  // exact int_0^{t0} ||k(t)||^2 dt
};

struct KernelDiagnostics {
  int smoothing_modes = 0;
  int controlled = 0;
  int represented = 0;
  int weight_order = 0;
  int lift_order = 0;
  double condition = 0.0;     // larger of the two parity Gram conditions
  double moment_residual = 0.0;
  int rank_deficit = 0;       // modes dropped by the truncated solves
  double half_norm = 0.0;     // ||k(t0)||
  double terminal_norm = 0.0; // ||k(T)|| from the extended-precision run
  double control_cost = 0.0;  // int |u_+|^2 + |u_-|^2
  bool regime_warning = false;  // T above min(pi/2, L)^2
};

// Phase two from an arbitrary twofold state at t0: weighted moment control of
// each parity over [t0, T], trajectory by per-mode Duhamel integration.
class ControlPhase {
 public:
  ControlPhase(const TwofoldState& start, double t0, double T, const KernelResolution& res = {});

  double start_time() const;
  double end_time() const;
  int controlled() const;
  int represented() const;
  double condition() const;
  double moment_residual() const;
  int rank_deficit() const;
  double control_cost() const;  // int |u_+|^2 + |u_-|^2 in closed form

  std::pair<Complex<double>, Complex<double>> traces(double t) const;
  Complex<double> value(double t, double s) const;
  CVector<double> slice(double t, const Eigen::VectorXd& s) const;
  // Rows at t0 + (T - t0) i / steps, i = 1..steps.
  CMatrix<double> rows(int steps, const Eigen::VectorXd& s) const;
  TwofoldState coefficients(double t) const;
  // Terminal coefficients carried in extended precision.
  TwofoldState terminal() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

class FundamentalKernel {
 public:
  FundamentalKernel(double L, double T, double theta, const KernelResolution& res = {});

  double length() const;
  double horizon() const;
  double theta() const;
  double switch_time() const;
  const KernelResolution& resolution() const;
  const KernelDiagnostics& diagnostics() const;
  const ControlPhase& control() const;

  // k(t, s) for 0 < t <= T; zero for |s| > L.
  Complex<double> value(double t, double s) const;
  CVector<double> slice(double t, const Eigen::VectorXd& s) const;
  // (u_+(t), u_-(t)); zero in phase one.
  std::pair<Complex<double>, Complex<double>> traces(double t) const;
  // Modal coefficients of k(t, .) over the represented modes.
  TwofoldState coefficients(double t) const;

  // Default grid sizes for this construction.
  int default_time_intervals() const;
  int default_space_intervals() const;
  KernelGrid sample(int time_intervals = 0, int space_intervals = 0) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

KernelGrid build_kernel(double L, double T, double theta, const KernelResolution& res = {});

// int_{-L}^{L} k(t, s) phi(s) ds by composite 20-point Gauss-Legendre.
Complex<double> kernel_pairing(const FundamentalKernel& k, double t, const std::function<double(double)>& phi,
                               int panels = 256);

// Trapezoid over [t0, T] x [-L, L] on the grid plus the exact phase-one part.
double kernel_l2_norm_sq(const KernelGrid& k);
inline double kernel_l2_norm(const KernelGrid& k) { return std::sqrt(kernel_l2_norm_sq(k)); }

// Trapezoid over the s-grid of one row.
double row_l2_norm(const KernelGrid& k, int row);

// Header row "t\s" then the s-nodes; each line t then values as re+imj.
void write_kernel_csv(const KernelGrid& k, std::ostream& out);

}  // namespace ctrlcost
