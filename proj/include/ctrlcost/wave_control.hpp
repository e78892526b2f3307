#pragma once

// Null control of z'' = z_ss on (0, L0) with z(L0, t) = v(t), z(0) = z0, z'(0) = 0,
// over the horizon L >= 2 L0. Each mode gives two oscillatory moments
//   int_0^L v(t) e^{+-i w_n (L - t)} dt = -+ i (w_n / beta_n) z0_n e^{+-i w_n L},
// with beta_n = -e_n'(L0). Row 2n carries +i w_n, row 2n+1 carries -i w_n.

#include "ctrlcost/moment_control.hpp"

namespace ctrlcost {

// Rotation is meaningless for the second-order system.
inline ModeBasis wave_basis(const ModeBasis& basis) { return with_theta(basis, 0.0); }

inline void check_control_time(const ModeBasis& basis, double horizon) {
  if (!(horizon >= 2.0 * basis.length() * (1.0 - 1e-12)))
    throw InputError("wave horizon below 1D geometric control time 2*L0 (" +
                     std::to_string(2.0 * basis.length()) + ")");
}

template <class R>
CVector<R> wave_exponents(const ModeBasis& basis) {
  CVector<R> e(2 * basis.truncation);
  for (int n = 0; n < basis.truncation; ++n) {
    const R w = wavenumber<R>(basis, n);
    e(2 * n) = Complex<R>(R(0), w);
    e(2 * n + 1) = Complex<R>(R(0), -w);
  }
  return e;
}

// Column n of the 2N x N map z0 -> d.
template <class R>
CMatrix<R> wave_target_map(const ModeBasis& basis, double horizon) {
  const int N = basis.truncation;
  const R L(horizon);
  const Complex<R> I(R(0), R(1));
  CMatrix<R> M = CMatrix<R>::Zero(2 * N, N);
  for (int n = 0; n < N; ++n) {
    const R w = wavenumber<R>(basis, n);
    const R beta = -boundary_slope<R>(basis, n);
    const Complex<R> ph = unit_phase(w * L);
    M(2 * n, n) = -I * (w / beta) * ph;
    M(2 * n + 1, n) = I * (w / beta) * std::conj(ph);
  }
  return M;
}

template <class R>
MomentProblem<R> wave_moment_targets(const StateCoeffs<double>& z0, double horizon) {
  require(horizon > 0.0, "wave_moment_targets: horizon must be positive");
  const ModeBasis basis = wave_basis(z0.basis);
  MomentProblem<R> p;
  p.horizon = R(horizon);
  p.exponents = wave_exponents<R>(basis);
  p.targets = wave_target_map<R>(basis, horizon) * complex_cast<R>(z0.coefficients);
  return p;
}

template <class R>
struct WaveControl {
  ModeBasis basis;
  CVector<double> z0;
  double horizon = 0.0;
  MomentSolution<R> moments;
  R kappa2 = R(0);  // sup over z0 of int_0^L |v|^2 / ||z0||^2
};

// kappa_2 = lambda_max(M^* H^+ M).
template <class R>
R wave_cost_constant(const ModeBasis& basis_in, double horizon, const R& cutoff = default_cutoff<R>()) {
  using std::sqrt;
  const ModeBasis basis = wave_basis(basis_in);
  check_control_time(basis, horizon);
  const CMatrix<R> M = wave_target_map<R>(basis, horizon);
  const CMatrix<R> H = gram_entries(wave_exponents<R>(basis), R(horizon), 0);
  const HermitianSpectrum<R> s = hermitian_spectrum(H, cutoff);
  const Eigen::Index n = H.rows();
  CMatrix<R> Y(s.kept, M.cols());
  for (int k = 0; k < s.kept; ++k) {
    const Eigen::Index col = n - s.kept + k;
    Y.row(k) = (s.vectors.col(col).adjoint() * M) / sqrt(s.values(col));
  }
  Eigen::SelfAdjointEigenSolver<CMatrix<R>> ek(Y.adjoint() * Y);
  return ek.eigenvalues()(M.cols() - 1);
}

template <class R>
WaveControl<R> solve_wave_control(const StateCoeffs<double>& z0, double horizon,
                                  const R& cutoff = default_cutoff<R>()) {
  const ModeBasis basis = wave_basis(z0.basis);
  check_control_time(basis, horizon);
  const MomentProblem<R> p = wave_moment_targets<R>(StateCoeffs<double>{basis, z0.coefficients}, horizon);
  validate(p, false);
  WaveControl<R> w;
  w.basis = basis;
  w.z0 = z0.coefficients;
  w.horizon = horizon;
  w.moments = solve_min_norm(p, gram_matrix(p, cutoff));
  w.kappa2 = wave_cost_constant<R>(basis, horizon, cutoff);
  return w;
}

// Samples of v on a uniform grid over [0, L].
template <class R>
ControlSignal sample_wave_control(const WaveControl<R>& w, int samples) {
  return sample_control<R, double>(w.moments, samples, 0.0);
}

struct ModalWavePath {
  Eigen::VectorXd s;
  CMatrix<double> z;   // truncation x nodes
  CMatrix<double> dz;  // d/ds
};

// Exact modal trajectory z_n(s), z_n'(s) at the given times, from the closed
// form of the Duhamel integrals against the exponential sum for v.
template <class R>
ModalWavePath wave_modal_path(const WaveControl<R>& w, const Eigen::VectorXd& s) {
  const ModeBasis& basis = w.basis;
  const int N = basis.truncation;
  const double L = w.horizon;
  const CVector<double> a = complex_cast<double>(w.moments.coefficients);
  const CVector<double> lam = complex_cast<double>(w.moments.exponents);
  const Complex<double> I(0.0, 1.0);
  ModalWavePath out{s, CMatrix<double>(N, s.size()), CMatrix<double>(N, s.size())};
  for (int n = 0; n < N; ++n) {
    const double om = wavenumber<double>(basis, n);
    const double beta = -boundary_slope<double>(basis, n);
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      const double t = s(j);
      Complex<double> J = 0.0, K = 0.0;
      for (Eigen::Index q = 0; q < a.size(); ++q) {
        if (a(q) == 0.0) continue;
        const Complex<double> bq = std::conj(lam(q));
        const Complex<double> zp = -(I * om + bq), zm = -(-I * om + bq);
        const Complex<double> Pp = std::exp(I * om * t + bq * L) * t * weighted_exponential_moment(zp * t, 0);
        const Complex<double> Pm = std::exp(-I * om * t + bq * L) * t * weighted_exponential_moment(zm * t, 0);
        J += a(q) * (Pp - Pm) / (2.0 * I);
        K += a(q) * (Pp + Pm) / 2.0;
      }
      out.z(n, j) = std::cos(om * t) * w.z0(n) + (beta / om) * J;
      out.dz(n, j) = -om * std::sin(om * t) * w.z0(n) + beta * K;
    }
  }
  return out;
}

}  // namespace ctrlcost
