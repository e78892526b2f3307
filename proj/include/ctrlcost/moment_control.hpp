#pragma once

// Exponential moment problems  int_0^W u(t) g_n(t) dt = d_n,  g_n(t) = e^{lambda_n (W - t)},
// solved for the control of least weighted norm  int |u|^2 / rho  with
// rho(t) = (t (W - t) / W^2)^p.  p = 0 is the plain L2 minimum-norm control.

#include "ctrlcost/spectral_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace ctrlcost {

template <class R>
struct MomentProblem {
  CVector<R> exponents;
  CVector<R> targets;
  R horizon = R(0);
  int weight_order = 0;
};

// Heat-type problems need Re(lambda_n) < 0; oscillatory ones pass decaying = false.
template <class R>
void validate(const MomentProblem<R>& p, bool decaying = true) {
  require(p.exponents.size() == p.targets.size(), "moment problem: exponents and targets differ in length");
  require(p.horizon > R(0), "moment problem: horizon must be positive");
  require(p.weight_order >= 0, "moment problem: weight order must be nonnegative");
  if (decaying)
    for (Eigen::Index n = 0; n < p.exponents.size(); ++n)
      require(p.exponents(n).real() < R(0), "moment problem: exponents must have negative real part");
}

// d_n = -e^{lambda_n T} c_n / b_n for the system c_n' = lambda_n c_n + b_n u.
template <class R>
MomentProblem<R> moment_targets(const StateCoeffs<double>& c, double horizon, int weight_order = 0) {
  using std::abs;
  using std::exp;
  require(horizon > 0.0, "moment_targets: horizon must be positive");
  const ModeBasis& basis = c.basis;
  MomentProblem<R> p;
  p.horizon = R(horizon);
  p.weight_order = weight_order;
  p.exponents = rotated_exponents<R>(basis);
  p.targets.resize(basis.truncation);
  for (int n = 0; n < basis.truncation; ++n) {
    const Complex<R> b = boundary_flux<R>(basis, n);
    if (abs(b) == R(0)) throw ComputationError("moment_targets: degenerate boundary coupling");
    p.targets(n) = -exp(p.exponents(n) * p.horizon) * complex_cast<R>(c.coefficients(n)) / b;
  }
  return p;
}

namespace detail {

// e^z - 1 without cancellation for small |z|.
template <class R>
Complex<R> expm1(const Complex<R>& z) {
  using std::abs;
  using std::exp;
  if (abs(z) >= R(1) / R(2)) return exp(z) - R(1);
  Complex<R> term = z, sum = z;
  for (int k = 2; k < 400; ++k) {
    term *= z / R(k);
    sum += term;
    if (abs(term) <= std::numeric_limits<R>::epsilon() * abs(sum)) break;
  }
  return sum;
}

// I_j(z) = int_0^1 x^j e^{z x} dx for j = 0..jmax by upward recurrence,
// stable while jmax < |z|.
template <class R>
std::vector<Complex<R>> power_moments(const Complex<R>& z, int jmax) {
  using std::exp;
  std::vector<Complex<R>> out(jmax + 1);
  const Complex<R> ez = exp(z);
  out[0] = expm1(z) / z;
  for (int j = 1; j <= jmax; ++j) out[j] = (ez - R(j) * out[j - 1]) / z;
  return out;
}

}  // namespace detail

// F_p(z) = int_0^1 (x (1 - x))^p e^{z x} dx in closed form.
template <class R>
Complex<R> weighted_exponential_moment(const Complex<R>& z, int p) {
  using std::abs;
  if (p == 0) {
    if (abs(z) < R(1e-6)) return Complex<R>(1) + z / R(2) + z * z / R(6) + z * z * z / R(24);
    return detail::expm1(z) / z;
  }
  if (abs(z) < R(2 * p + 2)) {
    // sum_k w^k / k! B(k + p + 1, p + 1), with F_p(z) = e^z F_p(-z) so the
    // series runs on Re w >= 0 and has no cancellation for real z.
    using std::exp;
    const bool reflect = z.real() < R(0);
    const Complex<R> w = reflect ? -z : z;
    R beta(1);
    for (int l = 1; l <= p; ++l) beta = beta * R(l) / R(p + l);
    beta /= R(2 * p + 1);  // B(p + 1, p + 1)
    Complex<R> term(beta), sum(beta);
    for (int k = 1; k < 4000; ++k) {
      term *= w / R(k) * R(p + k) / R(2 * p + k + 1);
      sum += term;
      if (abs(term) <= std::numeric_limits<R>::epsilon() * abs(sum) && R(k) > abs(w)) break;
    }
    return reflect ? exp(z) * sum : sum;
  }
  const std::vector<Complex<R>> I = detail::power_moments(z, 2 * p);
  Complex<R> sum(0);
  R binom(1);
  for (int i = 0; i <= p; ++i) {
    const R sign = (i % 2 == 0) ? R(1) : R(-1);
    sum += sign * binom * I[p + i];
    binom = binom * R(p - i) / R(i + 1);
  }
  return sum;
}

template <class R>
struct GramSystem {
  CMatrix<R> matrix;
  R condition = R(0);
  Precision precision = Precision::standard;
  R cutoff = default_cutoff<R>();
};

// H[n][m] = int_0^W rho g_n conj(g_m) = W F_p((lambda_n + conj lambda_m) W).
template <class R>
CMatrix<R> gram_entries(const CVector<R>& exponents, const R& horizon, int weight_order) {
  const Eigen::Index n = exponents.size();
  CMatrix<R> H(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Complex<R> z = (exponents(i) + std::conj(exponents(j))) * horizon;
      H(i, j) = horizon * weighted_exponential_moment(z, weight_order);
      H(j, i) = std::conj(H(i, j));
    }
    H(i, i) = Complex<R>(H(i, i).real(), R(0));
  }
  return H;
}

template <class R>
struct HermitianSpectrum {
  RVector<R> values;   // ascending
  CMatrix<R> vectors;  // columns
  int kept = 0;        // eigenvalues above cutoff * max
};

template <class R>
HermitianSpectrum<R> hermitian_spectrum(const CMatrix<R>& H, const R& cutoff) {
  Eigen::SelfAdjointEigenSolver<CMatrix<R>> es(H);
  if (es.info() != Eigen::Success) throw ComputationError("Hermitian eigendecomposition failed");
  HermitianSpectrum<R> s{es.eigenvalues(), es.eigenvectors(), 0};
  const R top = s.values.size() ? s.values(s.values.size() - 1) : R(0);
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    if (top > R(0) && s.values(i) > cutoff * top) ++s.kept;
  return s;
}

template <class R>
R condition_number(const HermitianSpectrum<R>& s) {
  if (s.values.size() == 0) return R(1);
  const R lo = s.values(0), hi = s.values(s.values.size() - 1);
  if (lo <= R(0)) return std::numeric_limits<R>::infinity();
  return hi / lo;
}

template <class R>
GramSystem<R> gram_matrix(const MomentProblem<R>& p, const R& cutoff = default_cutoff<R>()) {
  GramSystem<R> g;
  g.matrix = gram_entries(p.exponents, p.horizon, p.weight_order);
  g.precision = std::is_same_v<R, double> ? Precision::standard : Precision::extended;
  g.cutoff = cutoff;
  g.condition = p.exponents.size() ? condition_number(hermitian_spectrum(g.matrix, cutoff)) : R(1);
  return g;
}

template <class R>
struct MomentSolution {
  CVector<R> exponents;
  CVector<R> coefficients;  // u(t) = rho(t) sum_m a_m conj(g_m(t))
  R horizon = R(0);
  int weight_order = 0;
  R cost = R(0);      // Re(a^* d): equals int |u|^2 / rho
  R residual = R(0);  // ||H a - d|| / ||d||
  R condition = R(1);
  int rank = 0;
};

// Pseudo-inverse solve of H a = d on the eigenvalues above the cutoff.
template <class R>
CVector<R> truncated_solve(const HermitianSpectrum<R>& s, const CVector<R>& d) {
  const Eigen::Index n = d.size();
  CVector<R> a = CVector<R>::Zero(n);
  for (Eigen::Index k = n - s.kept; k < n; ++k) {
    const Complex<R> proj = s.vectors.col(k).dot(d);
    a += s.vectors.col(k) * (proj / s.values(k));
  }
  return a;
}

template <class R>
MomentSolution<R> solve_min_norm(const MomentProblem<R>& p, const GramSystem<R>& g) {
  using std::sqrt;
  MomentSolution<R> sol;
  sol.exponents = p.exponents;
  sol.horizon = p.horizon;
  sol.weight_order = p.weight_order;
  const Eigen::Index n = p.targets.size();
  sol.coefficients = CVector<R>::Zero(n);
  const R dnorm = p.targets.norm();
  if (n == 0 || dnorm == R(0)) return sol;
  const HermitianSpectrum<R> s = hermitian_spectrum(g.matrix, g.cutoff);
  if (s.kept == 0) throw ComputationError("horizon too small for precision mode, raise precision or T");
  sol.coefficients = truncated_solve(s, p.targets);
  sol.rank = s.kept;
  sol.condition = condition_number(s);
  sol.cost = sol.coefficients.dot(p.targets).real();
  sol.residual = (g.matrix * sol.coefficients - p.targets).norm() / dnorm;
  return sol;
}

template <class R>
MomentSolution<R> solve_min_norm(const MomentProblem<R>& p) {
  return solve_min_norm(p, gram_matrix(p));
}

// rho at local time t in [0, W].
template <class R>
R control_weight(const MomentSolution<R>& sol, const R& t) {
  using std::pow;
  if (sol.weight_order == 0) return R(1);
  const R x = t / sol.horizon;
  if (x <= R(0) || x >= R(1)) return R(0);
  return pow(x * (R(1) - x), sol.weight_order);
}

template <class R>
Complex<R> control_value(const MomentSolution<R>& sol, const R& t) {
  using std::exp;
  Complex<R> acc(0);
  for (Eigen::Index m = 0; m < sol.coefficients.size(); ++m)
    acc += sol.coefficients(m) * exp(std::conj(sol.exponents(m)) * (sol.horizon - t));
  return control_weight(sol, t) * acc;
}

// Squared L2 norm of the control in closed form: a^* H_{2p} a.
template <class R>
R control_l2_sq(const MomentSolution<R>& sol) {
  if (sol.coefficients.size() == 0) return R(0);
  if (sol.weight_order == 0) return sol.cost;
  const CMatrix<R> H2 = gram_entries(sol.exponents, sol.horizon, 2 * sol.weight_order);
  return sol.coefficients.dot(H2 * sol.coefficients).real();
}

// Uniform samples of u on [start, start + W]; the sum is evaluated in type E.
template <class R, class E = double>
ControlSignal sample_control(const MomentSolution<R>& sol, int samples, double start = 0.0) {
  using std::exp;
  using std::pow;
  require(samples >= 2, "sample_control: need at least two samples");
  const double W = static_cast<double>(sol.horizon);
  ControlSignal out{TimeGrid{start, start + W, samples}, CVector<double>::Zero(samples)};
  const Eigen::Index n = sol.coefficients.size();
  if (n == 0) return out;
  const CVector<E> a = complex_cast<E>(sol.coefficients);
  CVector<E> beta(n);
  for (Eigen::Index m = 0; m < n; ++m) beta(m) = std::conj(complex_cast<E>(sol.exponents(m)));
  const E h = E(W) / E(samples - 1);
  for (int i = 0; i < samples; ++i) {
    const E tau = E(W) - E(i) * h;  // W - t
    Complex<E> acc(0);
    for (Eigen::Index m = 0; m < n; ++m) acc += a(m) * exp(beta(m) * tau);
    E weight(1);
    if (sol.weight_order > 0) {
      const E x = E(i) / E(samples - 1);
      weight = pow(x * (E(1) - x), sol.weight_order);
    }
    out.values(i) = complex_cast<double>(Complex<E>(weight * acc));
  }
  return out;
}

// Samples needed for `per_efold` points per e-folding time of the fastest mode.
int sample_count(const CVector<double>& exponents, double horizon, double per_efold, int minimum = 101);

template <class R>
struct CostReport {
  double T = 0.0;
  R kappa = R(0);
  int truncation = 0;
  R residual = R(0);  // terminal norm left on the worst-case unit state
  R condition = R(1);
  int rank = 0;
  CVector<R> worst_state;
};

// kappa = lambda_max(M^* H^+ M) with M = diag(-e^{lambda_n T} / b_n).
template <class R>
CostReport<R> controllability_cost(const ModeBasis& basis, double T, const R& cutoff = default_cutoff<R>(),
                                   int weight_order = 0) {
  using std::exp;
  using std::sqrt;
  require(T > 0.0, "controllability_cost: horizon must be positive");
  const int N = basis.truncation;
  const CVector<R> lambda = rotated_exponents<R>(basis);
  const CVector<R> b = boundary_fluxes<R>(basis);
  CVector<R> m(N);
  for (int n = 0; n < N; ++n) m(n) = -exp(lambda(n) * R(T)) / b(n);

  const CMatrix<R> H = gram_entries(lambda, R(T), weight_order);
  const HermitianSpectrum<R> s = hermitian_spectrum(H, cutoff);
  if (s.kept == 0) throw ComputationError("horizon too small for precision mode, raise precision or T");
  // K = (S^{-1/2} V^* M)^* (S^{-1/2} V^* M) on the kept eigenvectors.
  CMatrix<R> Y(s.kept, N);
  for (int k = 0; k < s.kept; ++k) {
    const Eigen::Index col = N - s.kept + k;
    const R scale = R(1) / sqrt(s.values(col));
    for (int n = 0; n < N; ++n) Y(k, n) = scale * std::conj(s.vectors(n, col)) * m(n);
  }
  const CMatrix<R> K = Y.adjoint() * Y;
  Eigen::SelfAdjointEigenSolver<CMatrix<R>> ek(K);
  if (ek.info() != Eigen::Success) throw ComputationError("cost eigenproblem failed");

  CostReport<R> r;
  r.T = T;
  r.truncation = N;
  r.kappa = ek.eigenvalues()(N - 1);
  r.worst_state = ek.eigenvectors().col(N - 1);
  r.condition = condition_number(s);
  r.rank = s.kept;
  // Terminal coefficients c_n(T) = b_n ((H a)_n - d_n) for the worst state.
  const CVector<R> d = m.cwiseProduct(r.worst_state);
  const CVector<R> a = truncated_solve(s, d);
  r.residual = b.cwiseProduct(H * a - d).norm();
  return r;
}

}  // namespace ctrlcost
