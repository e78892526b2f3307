#include "ctrlcost/fundamental_kernel.hpp"

#include "ctrlcost/moment_control.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <tuple>

namespace ctrlcost {

using E = Extended;

std::string to_string(PhaseConvention c) { return c == PhaseConvention::plus_theta ? "plus_theta" : "minus_theta"; }

PhaseConvention parse_phase_convention(const std::string& name) {
  if (name == "plus_theta") return PhaseConvention::plus_theta;
  if (name == "minus_theta") return PhaseConvention::minus_theta;
  throw InputError("phase convention must be 'plus_theta' or 'minus_theta', got '" + name + "'");
}

double twofold_wavenumber(double L, Parity parity, int n) {
  return (parity == Parity::even ? n + 0.5 : n + 1.0) * M_PI / L;
}

double twofold_mode(double L, Parity parity, int n, double s) {
  const double k = twofold_wavenumber(L, parity, n);
  return (parity == Parity::even ? std::cos(k * s) : std::sin(k * s)) / std::sqrt(L);
}

double twofold_end_slope(double L, Parity parity, int n) {
  const double k = twofold_wavenumber(L, parity, n);
  // -k sin(kL) for even modes and k cos(kL) for odd ones: both -k (-1)^n
  return -k * (n % 2 == 0 ? 1.0 : -1.0) / std::sqrt(L);
}

CVector<double> synthesize(const TwofoldState& state, const Eigen::VectorXd& s) {
  CVector<double> f = CVector<double>::Zero(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (std::abs(s(j)) >= state.length) continue;
    for (Eigen::Index n = 0; n < state.even.size(); ++n)
      f(j) += state.even(n) * twofold_mode(state.length, Parity::even, int(n), s(j));
    for (Eigen::Index n = 0; n < state.odd.size(); ++n)
      f(j) += state.odd(n) * twofold_mode(state.length, Parity::odd, int(n), s(j));
  }
  return f;
}

namespace {

void check_angle(double phi) {
  require(std::isfinite(phi) && std::abs(phi) < 0.5 * M_PI, "rotation angle must satisfy |theta| < pi/2");
}

// Squared mass e^{-2 cos(phi) k^2 t} / L of each smoothed even mode.
double smoothed_mass(double L, double phi, double t, int n) {
  const double k = twofold_wavenumber(L, Parity::even, n);
  return std::exp(-2.0 * std::cos(phi) * k * k * t) / L;
}

}  // namespace

int smooth_delta_truncation(double L, double phi, double t_half, double tail) {
  require(L > 0.0, "smooth_delta: length must be positive");
  require(t_half > 0.0, "smooth_delta: t_half must be positive");
  check_angle(phi);
  std::vector<double> mass;
  for (int n = 0;; ++n) {
    const double m = smoothed_mass(L, phi, t_half, n);
    mass.push_back(m);
    if (m < 1e-40 * mass.front() || n > 200000) break;
  }
  std::vector<double> suffix(mass.size() + 1, 0.0);
  for (std::size_t n = mass.size(); n-- > 0;) suffix[n] = suffix[n + 1] + mass[n];
  for (std::size_t n = 1; n < mass.size(); ++n)
    if (suffix[n] <= tail * (suffix[0] - suffix[n])) return int(n);
  return int(mass.size());
}

TwofoldState smooth_delta(double L, double phi, double t_half, int truncation) {
  const int need = smooth_delta_truncation(L, phi, t_half);
  if (truncation > 0 && truncation < need)
    throw InputError("smooth_delta: truncation " + std::to_string(truncation) +
                     " leaves more than 1e-12 of the mass in the tail, need " + std::to_string(need));
  const int N = truncation > 0 ? truncation : need;
  TwofoldState st{L, phi, CVector<double>(N), CVector<double>::Zero(N)};
  const Complex<double> rot = unit_phase(phi);
  for (int n = 0; n < N; ++n) {
    const double k = twofold_wavenumber(L, Parity::even, n);
    st.even(n) = std::exp(-rot * (k * k * t_half)) / std::sqrt(L);
  }
  return st;
}

namespace {

// Gauss-Legendre rule on [0, 1].
template <class R, unsigned Q>
void unit_gauss(std::vector<R>& x, std::vector<R>& w) {
  using G = boost::math::quadrature::gauss<R, Q>;
  x.clear();
  w.clear();
  const auto& a = G::abscissa();
  const auto& b = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    x.push_back((R(1) + a[i]) / R(2));
    w.push_back(b[i] / R(2));
    if (a[i] != R(0)) {
      x.push_back((R(1) - a[i]) / R(2));
      w.push_back(b[i] / R(2));
    }
  }
}

// Chebyshev series on [a, b] interpolating the Lobatto samples
// f_k = f(a + (b - a)(1 + cos(pi k / D)) / 2), k = 0..D.
struct Chebyshev {
  double a = 0.0, b = 1.0;
  std::vector<Complex<double>> c;
  Complex<double> left = 0.0, right = 0.0;

  Complex<double> operator()(double t) const {
    if (t <= a) return left;
    if (t >= b) return right;
    const double x = (2.0 * t - a - b) / (b - a);
    Complex<double> b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
      const Complex<double> b0 = c[k] + 2.0 * x * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return c[0] + x * b1 - b2;
  }
};

Chebyshev chebyshev_fit(double a, double b, const std::vector<Complex<double>>& f) {
  const int D = int(f.size()) - 1;
  std::vector<double> cosine(2 * D);
  for (int m = 0; m < 2 * D; ++m) cosine[m] = std::cos(M_PI * m / D);
  Chebyshev out{a, b, std::vector<Complex<double>>(D + 1), f[D], f[0]};
  for (int j = 0; j <= D; ++j) {
    Complex<double> acc = 0.5 * (f[0] + f[D] * cosine[(j * D) % (2 * D)]);
    for (int k = 1; k < D; ++k) acc += f[k] * cosine[(j * k) % (2 * D)];
    out.c[j] = acc * (2.0 / D);
  }
  out.c[0] *= 0.5;
  out.c[D] *= 0.5;
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <class R>
R twofold_wavenumber_r(double L, Parity parity, int n) {
  return (parity == Parity::even ? R(n) + R(1) / R(2) : R(n + 1)) * pi<R>() / R(L);
}

// -2 e^{i phi} psi_n'(L): input coefficient of the parity control.
template <class R>
Complex<R> input_coefficient(double L, double phi, Parity parity, int n) {
  using std::sqrt;
  const R k = twofold_wavenumber_r<R>(L, parity, n);
  const R slope = -k * R(n % 2 == 0 ? 1 : -1) / sqrt(R(L));
  return R(-2) * unit_phase(R(phi)) * slope;
}

// Weighted control u = rho * sum_j a_j e^{beta_j (T - tau)} in extended
// precision, with its first derivatives.
struct ExtendedControl {
  E t0, W, T;
  int p = 0;
  CVector<E> beta;
  std::vector<CVector<E>> scaled;  // a_j (-beta_j)^k
  std::vector<std::vector<E>> rho; // d^i/dtau^i of the weight, as polynomials in x

  ExtendedControl(const MomentSolution<E>& sol, const E& start, int order_max) {
    t0 = start;
    W = sol.horizon;
    T = t0 + W;
    p = sol.weight_order;
    const Eigen::Index n = sol.coefficients.size();
    beta.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) beta(j) = std::conj(sol.exponents(j));
    scaled.assign(order_max + 1, CVector<E>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex<E> f = sol.coefficients(j);
      for (int k = 0; k <= order_max; ++k) {
        scaled[k](j) = f;
        f *= -beta(j);
      }
    }
    // (x (1 - x))^p = sum_i C(p, i) (-1)^i x^{p+i}
    std::vector<E> poly(2 * p + 1, E(0));
    for (int i = 0; i <= p; ++i) poly[p + i] = E(binomial(p, i)) * E(i % 2 ? -1 : 1);
    rho.push_back(poly);
    for (int m = 1; m <= order_max; ++m) {
      std::vector<E> d(poly.size() > 1 ? poly.size() - 1 : 1, E(0));
      for (std::size_t k = 1; k < poly.size(); ++k) d[k - 1] = poly[k] * E(int(k)) / W;
      rho.push_back(d);
      poly = d;
    }
  }

  E weight_derivative(int i, const E& x) const {
    E acc(0);
    for (std::size_t k = rho[i].size(); k-- > 0;) acc = acc * x + rho[i][k];
    return acc;
  }

  // u^{(m)}(tau) for m = 0..order, given expo_j = e^{beta_j (T - tau)}.
  void derivatives(const E& tau, const CVector<E>& expo, int order, std::vector<Complex<E>>& out) const {
    const E x = (tau - t0) / W;
    std::vector<Complex<E>> G(order + 1);
    for (int k = 0; k <= order; ++k) {
      Complex<E> acc(0);
      for (Eigen::Index j = 0; j < expo.size(); ++j) acc += scaled[k](j) * expo(j);
      G[k] = acc;
    }
    std::vector<E> r(order + 1);
    for (int i = 0; i <= order; ++i) r[i] = weight_derivative(i, x);
    out.assign(order + 1, Complex<E>(0));
    for (int m = 0; m <= order; ++m)
      for (int i = 0; i <= m; ++i) out[m] += E(binomial(m, i)) * r[i] * G[m - i];
  }

  void exponentials(const E& tau, CVector<E>& expo) const {
    using std::exp;
    expo.resize(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j) expo(j) = exp(beta(j) * (T - tau));
  }
};

}  // namespace

struct ControlPhase::Impl {
  struct Part {
    Parity parity = Parity::even;
    bool active = false;
    int N = 0, M = 0;
    CVector<double> lambda, start, forcing;
    CMatrix<double> proj;                           // M x P: <chi_j, psi_n>
    std::vector<Chebyshev> deriv;                   // u^{(j)}, j = 0..P
    int K = 1;                                      // anchor steps over [t0, T]
    double step = 0.0;
    CMatrix<double> anchors;                        // M x (K + 1)
    int extended_modes = 0;
    double cost = 0.0, condition = 1.0, residual = 0.0, interpolation_error = 0.0;
    int deficit = 0;
  };

  double L = 0.0, t0 = 0.0, T = 0.0, W = 0.0, phi = 0.0;
  int P = 0, p = 0;
  Part even, odd;
  double near = 0.0;      // graded quadrature within this distance of the ends, trapezoid beyond
  double step_max = 0.0;  // trapezoid step
  double fastest = 1.0;   // largest controlled |lambda|

  const Part& part(Parity q) const { return q == Parity::even ? even : odd; }

  void build(Part& part, const CVector<double>& start, int N, int M);
  // w over [ta, t] for modes n >= first.
  void propagate(const Part& part, double ta, double t, CVector<double>& w, int first) const;
  CVector<double> remainder(const Part& part, double t) const;
  std::vector<Complex<double>> derivatives(const Part& part, double t) const;

  // Response at s to a unit Dirichlet pulse at s = L, sigma after the pulse,
  // by images; per-sigma factors are precomputed.
  struct Pulse {
    double sigma = 0.0, reach = 0.0;
    Complex<double> scale = 0.0, rate = 0.0;
    int images = 0;
  };
  Pulse pulse(double sigma) const;
  Complex<double> boundary_kernel(const Pulse& q, double s) const;
  // Smooth partition of the kernel near sigma = 0 for points close to the
  // ends: the inner share goes to the graded quadrature, the outer share to
  // the trapezoid with step h.
  struct Split {
    double mid, width, top;
    explicit Split(double h) : mid(54.0 * h), width(4.0 * h), top(78.0 * h) {}
    double inner(double sigma) const { return 0.5 * std::erfc((sigma - mid) / width); }
    double outer(double sigma) const { return 0.5 * std::erfc((mid - sigma) / width); }
  };
  // Zero-end evolution of the start state.
  Complex<double> free_part(double t, double s) const;
  std::pair<Complex<double>, Complex<double>> control_traces(double t) const;
  // Adds the inner share at s(idx).
  void graded(double t, const Eigen::VectorXd& s, const std::vector<Eigen::Index>& idx, const Split& split,
              CVector<double>& out) const;
  void classify(const Eigen::VectorXd& s, std::vector<Eigen::Index>& close, std::vector<Eigen::Index>& inner) const;
};

namespace {

constexpr int kGaussExtended = 16;
constexpr int kGaussDouble = 12;

const std::vector<E>& gauss_nodes_extended(std::vector<E>* weights = nullptr) {
  static std::vector<E> x, w;
  static const bool init = [] {
    unit_gauss<E, kGaussExtended>(x, w);
    return true;
  }();
  (void)init;
  if (weights) *weights = w;
  return x;
}

struct DoubleRule {
  std::vector<double> x, w;
  DoubleRule() { unit_gauss<double, kGaussDouble>(x, w); }
};
const DoubleRule& double_rule() {
  static const DoubleRule r;
  return r;
}

}  // namespace

void ControlPhase::Impl::build(Part& part, const CVector<double>& start, int N,
                               int M) {
  using std::abs;
  using std::exp;
  part.N = N;
  part.M = M;
  part.start = CVector<double>::Zero(M);
  part.start.head(std::min<Eigen::Index>(M, start.size())) = start.head(std::min<Eigen::Index>(M, start.size()));
  part.lambda.resize(M);
  part.forcing.resize(M);
  part.proj.resize(M, P);
  const Complex<double> rot = unit_phase(phi);
  for (int n = 0; n < M; ++n) {
    const double k = twofold_wavenumber(L, part.parity, n);
    part.lambda(n) = -rot * (k * k);
    const Complex<double> B = input_coefficient<double>(L, phi, part.parity, n);
    Complex<double> f = -B / part.lambda(n);
    for (int j = 0; j < P; ++j) {
      part.proj(n, j) = f;
      f /= part.lambda(n);
    }
    part.forcing(n) = part.proj(n, P - 1);
  }
  part.active = start.size() > 0 && start.norm() > 0.0;
  part.deriv.assign(P + 1, Chebyshev{t0, T, std::vector<Complex<double>>(1, 0.0), 0.0, 0.0});
  part.K = 1;
  part.step = W;
  part.anchors = CMatrix<double>::Zero(M, 2);
  if (!part.active) return;

  // Moment problem in extended precision.
  MomentProblem<E> pr;
  pr.horizon = E(W);
  pr.weight_order = p;
  pr.exponents.resize(N);
  pr.targets.resize(N);
  CVector<E> lamE(M);
  const Complex<E> rotE = unit_phase(E(phi));
  for (int n = 0; n < M; ++n) {
    const E k = twofold_wavenumber_r<E>(L, part.parity, n);
    lamE(n) = -rotE * (k * k);
  }
  for (int n = 0; n < N; ++n) {
    pr.exponents(n) = lamE(n);
    const Complex<E> B = input_coefficient<E>(L, phi, part.parity, n);
    pr.targets(n) = -exp(lamE(n) * E(W)) * complex_cast<E>(part.start(n)) / B;
  }
  const GramSystem<E> g = gram_matrix(pr);
  const MomentSolution<E> sol = solve_min_norm(pr, g);
  part.condition = static_cast<double>(g.condition);
  part.residual = static_cast<double>(sol.residual);
  part.deficit = N - sol.rank;
  part.cost = static_cast<double>(control_l2_sq(sol));

  const ExtendedControl ctl(sol, E(t0), P);

  // Chebyshev series of u^{(j)} from extended samples at Lobatto nodes.
  double fastest = 0.0;
  for (int n = 0; n < N; ++n) fastest = std::max(fastest, std::abs(part.lambda(n)));
  const int D = std::clamp(int(std::ceil(0.75 * fastest * W + 4.0 * std::sqrt(fastest * W) + 2 * p + 48)), 64, 4096);
  std::vector<std::vector<Complex<double>>> samples(P + 1, std::vector<Complex<double>>(D + 1));
  CVector<E> expo;
  std::vector<Complex<E>> du;
  for (int k = 0; k <= D; ++k) {
    const E tau = E(t0) + E(W) * (E(1) + cos(pi<E>() * E(k) / E(D))) / E(2);
    ctl.exponentials(tau, expo);
    ctl.derivatives(tau, expo, P, du);
    for (int j = 0; j <= P; ++j) samples[j][k] = complex_cast<double>(du[j]);
  }
  // exact flatness at both ends
  for (int j = 0; j <= P; ++j) samples[j][0] = samples[j][D] = 0.0;
  for (int j = 0; j <= P; ++j) part.deriv[j] = chebyshev_fit(t0, T, samples[j]);
  double top = 0.0;
  for (const auto& v : samples[P]) top = std::max(top, std::abs(v));

  // Modes whose Duhamel integral cancels beyond double precision run in
  // extended precision between anchors.
  const double scale = std::max(part.start.norm(), 1e-300);
  part.extended_modes = 0;
  for (int n = 0; n < M; ++n)
    if (std::abs(part.forcing(n)) * top * std::min(W, 1.0 / std::abs(part.lambda(n).real())) * 1e-16 > 1e-14 * scale)
      part.extended_modes = n + 1;
  part.extended_modes = std::max(part.extended_modes, N);
  const int Me = part.extended_modes;
  part.K = std::max(32, int(std::ceil(W * std::abs(part.lambda(Me - 1)) / 3.0)));
  part.step = W / part.K;
  const int K = part.K;
  part.anchors = CMatrix<double>::Zero(M, K + 1);

  std::vector<E> wq;
  const std::vector<E>& xq = gauss_nodes_extended(&wq);
  const int Q = int(xq.size());
  const E h = E(W) / E(K);
  std::vector<CVector<E>> shift(Q, CVector<E>(ctl.beta.size()));
  CVector<E> advance(ctl.beta.size());
  for (Eigen::Index j = 0; j < ctl.beta.size(); ++j) {
    for (int q = 0; q < Q; ++q) shift[q](j) = exp(-ctl.beta(j) * xq[q] * h);
    advance(j) = exp(-ctl.beta(j) * h);
  }
  CMatrix<E> kernelq(Me, Q);
  CVector<E> decay(Me), w(Me);
  for (int n = 0; n < Me; ++n) {
    Complex<E> lp(1);
    for (int j = 0; j < P; ++j) lp *= lamE(n);
    const Complex<E> fE = -input_coefficient<E>(L, phi, part.parity, n) / lp;
    for (int q = 0; q < Q; ++q) kernelq(n, q) = fE * wq[q] * h * exp(lamE(n) * ((E(1) - xq[q]) * h));
    decay(n) = exp(lamE(n) * h);
    w(n) = complex_cast<E>(part.start(n));
  }
  ctl.exponentials(E(t0), expo);  // e^{beta (T - t0)}
  std::vector<Complex<E>> S(Q);
  double interp = 0.0;
  for (int a = 0; a < K; ++a) {
    for (int q = 0; q < Q; ++q) {
      CVector<E> e = expo.cwiseProduct(shift[q]);
      const E tau = E(t0) + (E(a) + xq[q]) * h;
      ctl.derivatives(tau, e, P, du);
      S[q] = du[P];
      const Complex<double> cheb = part.deriv[P](static_cast<double>(tau));
      interp = std::max(interp, std::abs(cheb - complex_cast<double>(du[P])));
    }
    for (int n = 0; n < Me; ++n) {
      Complex<E> acc(0);
      for (int q = 0; q < Q; ++q) acc += kernelq(n, q) * S[q];
      w(n) = decay(n) * w(n) - acc;
      part.anchors(n, a + 1) = complex_cast<double>(w(n));
    }
    expo = expo.cwiseProduct(advance);
  }
  part.interpolation_error = top > 0.0 ? interp / top : 0.0;
  for (int n = 0; n < Me; ++n) part.anchors(n, 0) = part.start(n);

  // Remaining modes in double precision.
  if (Me < M) {
    CVector<double> v = part.start;
    for (int n = Me; n < M; ++n) part.anchors(n, 0) = v(n);
    for (int a = 0; a < K; ++a) {
      propagate(part, t0 + a * part.step, t0 + (a + 1) * part.step, v, Me);
      for (int n = Me; n < M; ++n) part.anchors(n, a + 1) = v(n);
    }
  }
}

void ControlPhase::Impl::propagate(const Part& part, double ta, double t, CVector<double>& w, int first) const {
  const double len = t - ta;
  if (len <= 0.0 || first >= part.M) return;
  double fast = 0.0;
  for (int n = first; n < part.M; ++n) fast = std::max(fast, std::abs(part.lambda(n)));
  const int sub = std::max(1, int(std::ceil(fast * len / 2.0)));
  const double hs = len / sub;
  const DoubleRule& r = double_rule();
  const int Q = int(r.x.size());
  std::vector<Complex<double>> f(std::size_t(sub) * Q);
  for (int i = 0; i < sub; ++i)
    for (int q = 0; q < Q; ++q) f[i * Q + q] = r.w[q] * hs * part.deriv[P](ta + (i + r.x[q]) * hs);
  std::vector<Complex<double>> inner(Q);
  for (int n = first; n < part.M; ++n) {
    const Complex<double> lam = part.lambda(n);
    for (int q = 0; q < Q; ++q) inner[q] = std::exp(lam * ((1.0 - r.x[q]) * hs));
    const Complex<double> hop = std::exp(lam * hs);
    Complex<double> acc = 0.0, outer = 1.0;
    for (int i = sub - 1; i >= 0; --i) {
      Complex<double> panel = 0.0;
      for (int q = 0; q < Q; ++q) panel += inner[q] * f[i * Q + q];
      acc += outer * panel;
      outer *= hop;
      if (std::abs(outer) < 1e-30) break;
    }
    w(n) = std::exp(lam * len) * w(n) - part.forcing(n) * acc;
  }
}

CVector<double> ControlPhase::Impl::remainder(const Part& part, double t) const {
  if (!part.active) return CVector<double>::Zero(part.M);
  if (t >= T) return part.anchors.col(part.K);
  const int a = std::clamp(int(std::floor((t - t0) / part.step)), 0, part.K - 1);
  CVector<double> w = part.anchors.col(a);
  propagate(part, t0 + a * part.step, t, w, 0);
  return w;
}

std::vector<Complex<double>> ControlPhase::Impl::derivatives(const Part& part, double t) const {
  std::vector<Complex<double>> d(P + 1, 0.0);
  if (!part.active) return d;
  for (int j = 0; j <= P; ++j) d[j] = part.deriv[j](t);
  return d;
}

namespace {

// Controlled modes per parity for data carried by `modes` even modes.
int default_controlled(int modes) { return 6 * modes; }

constexpr double kNearBoundary = 0.15;

int significant_modes(const CVector<double>& c) {
  const double scale = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
  int last = 0;
  for (Eigen::Index n = 0; n < c.size(); ++n)
    if (std::abs(c(n)) > 1e-13 * scale) last = int(n) + 1;
  return last;
}

}  // namespace

ControlPhase::ControlPhase(const TwofoldState& start, double t0, double T, const KernelResolution& res) {
  require(start.length > 0.0, "control_phase: length must be positive");
  check_angle(start.theta);
  require(t0 >= 0.0 && T > t0, "control_phase: need 0 <= t0 < T");
  require(res.weight_order >= 1, "control_phase: weight order must be at least 1");
  require(res.lift_order >= 1 && res.lift_order <= res.weight_order,
          "control_phase: lift order must lie in [1, weight order]");
  auto impl = std::make_shared<Impl>();
  impl->L = start.length;
  impl->t0 = t0;
  impl->T = T;
  impl->W = T - t0;
  impl->phi = start.theta;
  impl->P = res.lift_order;
  impl->p = res.weight_order;
  const int data = std::max({1, significant_modes(start.even), significant_modes(start.odd)});
  const int N = res.controlled > 0 ? res.controlled : default_controlled(data);
  const int M = res.represented > 0 ? res.represented : 3 * N;
  require(M >= N, "control_phase: represented modes must cover the controlled ones");
  require(M >= data, "control_phase: represented modes must cover the data");
  impl->even.parity = Parity::even;
  impl->odd.parity = Parity::odd;
  impl->build(impl->even, start.even, N, M);
  impl->build(impl->odd, start.odd, N, M);
  impl->fastest = std::abs(impl->even.lambda(N - 1));
  impl->near = std::min(0.25 * impl->L, kNearBoundary);
  impl->step_max = std::min(impl->near * impl->near * std::cos(impl->phi) / 160.0, 0.5 / impl->fastest);
  impl_ = impl;
}

double ControlPhase::start_time() const { return impl_->t0; }
double ControlPhase::end_time() const { return impl_->T; }
int ControlPhase::controlled() const { return impl_->even.N; }
int ControlPhase::represented() const { return impl_->even.M; }
double ControlPhase::condition() const { return std::max(impl_->even.condition, impl_->odd.condition); }
double ControlPhase::moment_residual() const { return std::max(impl_->even.residual, impl_->odd.residual); }
int ControlPhase::rank_deficit() const {
  return (impl_->even.active ? impl_->even.deficit : 0) + (impl_->odd.active ? impl_->odd.deficit : 0);
}
double ControlPhase::control_cost() const { return 2.0 * (impl_->even.cost + impl_->odd.cost); }

std::pair<Complex<double>, Complex<double>> ControlPhase::traces(double t) const {
  return impl_->control_traces(t);
}

ControlPhase::Impl::Pulse ControlPhase::Impl::pulse(double sigma) const {
  const Complex<double> a = unit_phase(phi);
  Pulse q;
  q.sigma = sigma;
  q.scale = 1.0 / (sigma * std::sqrt(4.0 * M_PI * a * sigma));
  q.rate = 1.0 / (4.0 * a * sigma);
  q.reach = 184.0 * sigma / std::cos(phi);
  q.images = int(std::ceil(std::sqrt(q.reach) / (4.0 * L))) + 1;
  return q;
}

Complex<double> ControlPhase::Impl::boundary_kernel(const Pulse& q, double s) const {
  Complex<double> acc = 0.0;
  for (int j = -q.images; j <= q.images; ++j) {
    const double x = s - L + 4.0 * j * L;
    if (x * x > q.reach) continue;
    acc -= x * std::exp(-x * x * q.rate);
  }
  return acc * q.scale;
}

void ControlPhase::Impl::graded(double t, const Eigen::VectorXd& s, const std::vector<Eigen::Index>& idx,
                                const Split& split, CVector<double>& out) const {
  const double len = std::min(t - t0, split.top);
  if (idx.empty() || len <= 0.0) return;
  double dmin = L;
  for (Eigen::Index j : idx) dmin = std::min(dmin, L - std::abs(s(j)));
  // panels doubling from where exp(-d^2 cos(phi) / (4 sigma)) < e^{-50}, capped at the control scale
  const double cap = 3.0 / fastest;
  std::vector<Pulse> pulses;
  std::vector<double> weights;
  const DoubleRule& r = double_rule();
  for (double a = std::min(len, dmin * dmin * std::cos(phi) / 200.0); a < len;) {
    const double b = std::min(len, a + std::min(a, cap));
    for (std::size_t q = 0; q < r.x.size(); ++q) {
      const double sigma = a + (b - a) * r.x[q];
      pulses.push_back(pulse(sigma));
      weights.push_back((b - a) * r.w[q] * split.inner(sigma));
    }
    a = b;
  }
  std::vector<Complex<double>> up(pulses.size()), um(pulses.size());
  for (std::size_t q = 0; q < pulses.size(); ++q) std::tie(up[q], um[q]) = control_traces(t - pulses[q].sigma);
  for (Eigen::Index j : idx) {
    Complex<double> acc = 0.0;
    for (std::size_t q = 0; q < pulses.size(); ++q)
      acc += weights[q] * (boundary_kernel(pulses[q], s(j)) * up[q] + boundary_kernel(pulses[q], -s(j)) * um[q]);
    out(j) += acc;
  }
}

std::pair<Complex<double>, Complex<double>> ControlPhase::Impl::control_traces(double t) const {
  const Complex<double> ue = even.active ? even.deriv[0](t) : 0.0;
  const Complex<double> uo = odd.active ? odd.deriv[0](t) : 0.0;
  return {ue + uo, ue - uo};
}

Complex<double> ControlPhase::Impl::free_part(double t, double s) const {
  const Complex<double> a = unit_phase(phi);
  const double tau = t - t0;
  Complex<double> acc = 0.0;
  for (const Part* part : {&even, &odd}) {
    for (Eigen::Index n = 0; n < part->start.size(); ++n) {
      if (part->start(n) == 0.0) continue;
      const double k = twofold_wavenumber(L, part->parity, int(n));
      acc += part->start(n) * std::exp(-a * (k * k * tau)) * twofold_mode(L, part->parity, int(n), s);
    }
  }
  return acc;
}

void ControlPhase::Impl::classify(const Eigen::VectorXd& s, std::vector<Eigen::Index>& close,
                                  std::vector<Eigen::Index>& inner) const {
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double d = L - std::abs(s(j));
    if (d > 0.0) (d < near ? close : inner).push_back(j);
  }
}

CVector<double> ControlPhase::slice(double t, const Eigen::VectorXd& s) const {
  const Impl& m = *impl_;
  require(t >= m.t0 && t <= m.T, "control_phase: time outside [t0, T]");
  if (t == m.T) return synthesize(terminal(), s);
  CVector<double> out = CVector<double>::Zero(s.size());
  std::vector<Eigen::Index> close, inner;
  m.classify(s, close, inner);
  for (const auto* group : {&close, &inner})
    for (Eigen::Index j : *group) out(j) = m.free_part(t, s(j));
  const double len = t - m.t0;
  if (len > 0.0) {
    const int steps = std::max(1, int(std::ceil(len / m.step_max)));
    const double h = len / steps;
    const Impl::Split split(h);
    std::vector<Complex<double>> up(steps), um(steps);
    std::vector<Impl::Pulse> pulses(steps);
    for (int i = 1; i < steps; ++i) {
      std::tie(up[i], um[i]) = traces(t - i * h);
      pulses[i] = m.pulse(i * h);
    }
    for (const auto* group : {&close, &inner}) {
      for (Eigen::Index j : *group) {
        Complex<double> acc = 0.0;
        for (int i = 1; i < steps; ++i) {
          const double w = group == &close ? split.outer(i * h) : 1.0;
          acc += w * (m.boundary_kernel(pulses[i], s(j)) * up[i] + m.boundary_kernel(pulses[i], -s(j)) * um[i]);
        }
        out(j) += h * acc;
      }
    }
    m.graded(t, s, close, split, out);
  }
  const auto [up, um] = traces(t);
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s(j) == m.L) out(j) = up;
    if (s(j) == -m.L) out(j) = um;
  }
  return out;
}

namespace {
int smooth_size(int n) {
  for (;; ++n) {
    int r = n;
    for (int f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return n;
  }
}
}  // namespace

CMatrix<double> ControlPhase::rows(int steps, const Eigen::VectorXd& s) const {
  const Impl& m = *impl_;
  require(steps >= 1, "control_phase: need at least one step");
  CMatrix<double> out = CMatrix<double>::Zero(steps, s.size());
  std::vector<Eigen::Index> close, inner;
  m.classify(s, close, inner);

  // V(t_i) = h sum_k D(t_i - tau_k) u(tau_k) on a refined grid, by FFT.
  const int r = std::max(1, int(std::ceil(m.W / steps / m.step_max)));
  const int nf = steps * r;
  const double h = m.W / nf;
  const Impl::Split split(h);
  const int size = smooth_size(2 * (nf + 1));
  const bool symmetric = !m.odd.active;  // u_+ = u_-
  std::vector<Complex<double>> up(size, 0.0), um(size, 0.0);
  for (int i = 1; i < nf; ++i) std::tie(up[i], um[i]) = traces(m.t0 + i * h);
  std::vector<Impl::Pulse> pulses(nf + 1);
  for (int i = 1; i <= nf; ++i) pulses[i] = m.pulse(i * h);
  Eigen::FFT<double> fft;
  std::vector<Complex<double>> Up, Um, dp(size), dm(size), Dp, Dm, acc(size), v;
  fft.fwd(Up, up);
  if (!symmetric) fft.fwd(Um, um);
  for (const auto* group : {&close, &inner}) {
    for (Eigen::Index j : *group) {
      std::fill(dp.begin(), dp.end(), 0.0);
      std::fill(dm.begin(), dm.end(), 0.0);
      for (int i = 1; i <= nf; ++i) {
        const double w = h * (group == &close ? split.outer(i * h) : 1.0);
        dp[i] = w * m.boundary_kernel(pulses[i], s(j));
        dm[i] = w * m.boundary_kernel(pulses[i], -s(j));
      }
      if (symmetric) {
        for (int i = 1; i <= nf; ++i) dp[i] += dm[i];
        fft.fwd(Dp, dp);
        for (int k = 0; k < size; ++k) acc[k] = Dp[k] * Up[k];
      } else {
        fft.fwd(Dp, dp);
        fft.fwd(Dm, dm);
        for (int k = 0; k < size; ++k) acc[k] = Dp[k] * Up[k] + Dm[k] * Um[k];
      }
      fft.inv(v, acc);
      for (int i = 1; i < steps; ++i) out(i - 1, j) = m.free_part(m.t0 + m.W * i / steps, s(j)) + v[i * r];
    }
  }
  for (int i = 1; i < steps; ++i) {
    const double t = m.t0 + m.W * i / steps;
    CVector<double> row = out.row(i - 1).transpose();
    m.graded(t, s, close, split, row);
    const auto [a, b] = traces(t);
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      if (s(j) == m.L) row(j) = a;
      if (s(j) == -m.L) row(j) = b;
    }
    out.row(i - 1) = row.transpose();
  }
  out.row(steps - 1) = synthesize(terminal(), s).transpose();
  return out;
}

Complex<double> ControlPhase::value(double t, double s) const {
  Eigen::VectorXd x(1);
  x(0) = s;
  return slice(t, x)(0);
}

TwofoldState ControlPhase::coefficients(double t) const {
  const Impl& m = *impl_;
  require(t >= m.t0 && t <= m.T, "control_phase: time outside [t0, T]");
  TwofoldState st{m.L, m.phi, CVector<double>::Zero(m.even.M), CVector<double>::Zero(m.odd.M)};
  for (const Impl::Part* part : {&m.even, &m.odd}) {
    if (!part->active) continue;
    const std::vector<Complex<double>> d = m.derivatives(*part, t);
    CVector<double> c = m.remainder(*part, t);
    for (int j = 0; j < m.P; ++j) c += d[j] * part->proj.col(j);
    (part->parity == Parity::even ? st.even : st.odd) = c;
  }
  return st;
}

TwofoldState ControlPhase::terminal() const {
  const Impl& m = *impl_;
  TwofoldState st{m.L, m.phi, m.even.anchors.col(m.even.K), m.odd.anchors.col(m.odd.K)};
  return st;
}

namespace {

// Free evolution of delta_0 on (-L, L) with zero ends.
Complex<double> free_value(double L, double phi, double t, double s) {
  if (std::abs(s) >= L) return 0.0;
  const Complex<double> rot = unit_phase(phi);
  const double c = std::cos(phi);
  if (L * L * c / t > 2.0) {
    const int J = int(std::ceil(0.5 * (std::sqrt(184.0 * t / c) / L + 1.0))) + 1;
    Complex<double> acc = 0.0;
    for (int j = -J; j <= J; ++j) {
      const double x = s - 2.0 * j * L;
      acc += (j % 2 == 0 ? 1.0 : -1.0) * std::exp(-x * x / (4.0 * rot * t));
    }
    return acc / std::sqrt(4.0 * M_PI * rot * t);
  }
  const int top = int(std::sqrt(46.0 / (c * t)) * L / M_PI) + 2;
  Complex<double> acc = 0.0;
  for (int n = 0; n < top; ++n) {
    const double k = twofold_wavenumber(L, Parity::even, n);
    acc += std::exp(-rot * (k * k * t)) * std::cos(k * s);
  }
  return acc / L;
}

double phase_one_mass(double L, double phi, double t0) {
  const double c = std::cos(phi);
  const int top = 200000;
  double acc = 0.0;
  for (int n = 0; n < top; ++n) {
    const double k = twofold_wavenumber(L, Parity::even, n);
    acc += -std::expm1(-2.0 * c * k * k * t0) / (2.0 * c * k * k);
  }
  acc += (L / M_PI) * (L / M_PI) / (2.0 * c * (top + 0.5));
  return acc / L;
}

double half_state_norm(double L, double phi, double t0) {
  double acc = 0.0;
  for (int n = 0;; ++n) {
    const double m = smoothed_mass(L, phi, t0, n);
    acc += m;
    if (m < 1e-40 * acc) break;
  }
  return std::sqrt(acc);
}

}  // namespace

struct FundamentalKernel::Impl {
  double L = 0.0, T = 0.0, theta = 0.0, phi = 0.0, t0 = 0.0;
  KernelResolution res;
  std::unique_ptr<ControlPhase> phase;
  KernelDiagnostics diag;
};

FundamentalKernel::FundamentalKernel(double L, double T, double theta, const KernelResolution& res) {
  require(std::isfinite(L) && L > 0.0, "kernel: length must be positive");
  require(std::isfinite(T) && T > 0.0, "kernel: horizon must be positive");
  require(res.split > 0.0 && res.split < 1.0, "kernel: split must lie in (0, 1)");
  check_angle(theta);
  auto impl = std::make_shared<Impl>();
  impl->L = L;
  impl->T = T;
  impl->theta = theta;
  impl->phi = kernel_angle(theta, res.convention);
  impl->t0 = res.split * T;
  impl->res = res;
  const TwofoldState half = smooth_delta(L, impl->phi, impl->t0);
  const int Ns = int(half.even.size());
  if (impl->res.controlled <= 0) impl->res.controlled = default_controlled(Ns);
  if (impl->res.represented <= 0) impl->res.represented = 3 * impl->res.controlled;
  impl->phase = std::make_unique<ControlPhase>(half, impl->t0, T, impl->res);

  KernelDiagnostics& d = impl->diag;
  d.smoothing_modes = Ns;
  d.controlled = impl->res.controlled;
  d.represented = impl->res.represented;
  d.weight_order = res.weight_order;
  d.lift_order = res.lift_order;
  d.condition = impl->phase->condition();
  d.moment_residual = impl->phase->moment_residual();
  d.rank_deficit = impl->phase->rank_deficit();
  d.half_norm = half_state_norm(L, impl->phi, impl->t0);
  d.terminal_norm = impl->phase->terminal().norm();
  d.control_cost = impl->phase->control_cost();
  const double gate = std::min(0.5 * M_PI, L);
  d.regime_warning = T > gate * gate;
  impl_ = impl;
}

double FundamentalKernel::length() const { return impl_->L; }
double FundamentalKernel::horizon() const { return impl_->T; }
double FundamentalKernel::theta() const { return impl_->theta; }
double FundamentalKernel::switch_time() const { return impl_->t0; }
const KernelResolution& FundamentalKernel::resolution() const { return impl_->res; }
const KernelDiagnostics& FundamentalKernel::diagnostics() const { return impl_->diag; }
const ControlPhase& FundamentalKernel::control() const { return *impl_->phase; }

// The datum is even, so values are taken at |s|.
Complex<double> FundamentalKernel::value(double t, double s) const {
  require(t > 0.0 && t <= impl_->T, "kernel: time outside (0, T]");
  if (t <= impl_->t0) return free_value(impl_->L, impl_->phi, t, std::abs(s));
  return impl_->phase->value(t, std::abs(s));
}

CVector<double> FundamentalKernel::slice(double t, const Eigen::VectorXd& s) const {
  require(t > 0.0 && t <= impl_->T, "kernel: time outside (0, T]");
  const Eigen::VectorXd a = s.cwiseAbs();
  if (t > impl_->t0) return impl_->phase->slice(t, a);
  CVector<double> out(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) out(j) = free_value(impl_->L, impl_->phi, t, a(j));
  return out;
}

std::pair<Complex<double>, Complex<double>> FundamentalKernel::traces(double t) const {
  if (t <= impl_->t0 || t >= impl_->T) return {0.0, 0.0};
  return impl_->phase->traces(t);
}

TwofoldState FundamentalKernel::coefficients(double t) const {
  require(t >= 0.0 && t <= impl_->T, "kernel: time outside [0, T]");
  if (t > impl_->t0) return impl_->phase->coefficients(t);
  const int M = impl_->res.represented;
  TwofoldState st{impl_->L, impl_->phi, CVector<double>(M), CVector<double>::Zero(M)};
  const Complex<double> rot = unit_phase(impl_->phi);
  for (int n = 0; n < M; ++n) {
    const double k = twofold_wavenumber(impl_->L, Parity::even, n);
    st.even(n) = std::exp(-rot * (k * k * t)) / std::sqrt(impl_->L);
  }
  return st;
}

int FundamentalKernel::default_time_intervals() const {
  const Impl& m = *impl_;
  const double k = twofold_wavenumber(m.L, Parity::even, m.diag.smoothing_modes - 1);
  int nt = std::max(400, int(std::ceil(20.0 * m.T * std::cos(m.phi) * k * k)));
  for (int extra = 0; extra < 100000; ++extra) {
    const double x = m.res.split * (nt + extra);
    if (std::abs(x - std::round(x)) < 1e-9 * (nt + extra)) return nt + extra;
  }
  return nt;
}

int FundamentalKernel::default_space_intervals() const { return 10 * impl_->res.represented; }

KernelGrid FundamentalKernel::sample(int time_intervals, int space_intervals) const {
  const Impl& m = *impl_;
  const int nt = time_intervals > 0 ? time_intervals : default_time_intervals();
  const int ns = space_intervals > 0 ? space_intervals : default_space_intervals();
  require(ns >= 2, "kernel grid: need at least two space intervals");
  const double x = m.res.split * nt;
  if (std::abs(x - std::round(x)) > 1e-9 * nt)
    throw InputError("kernel grid: time intervals must place the switch time t0 on a node");
  KernelGrid k;
  k.T = m.T;
  k.L = m.L;
  k.theta = m.theta;
  k.split = m.res.split;
  k.convention = m.res.convention;
  k.t.resize(nt);
  for (int i = 0; i < nt; ++i) k.t(i) = m.T * (i + 1) / nt;
  k.s.resize(ns + 1);
  for (int j = 0; j <= ns; ++j) k.s(j) = m.L * (2 * j - ns) / ns;
  // right half, mirrored
  const int mid = ns / 2;
  const Eigen::VectorXd right = k.s.tail(ns + 1 - mid);
  CMatrix<double> half(nt, right.size());
  const int first = int(std::lround(x));
  for (int i = 0; i < first; ++i) half.row(i) = slice(k.t(i), right).transpose();
  half.bottomRows(nt - first) = m.phase->rows(nt - first, right);
  k.values.resize(nt, ns + 1);
  for (int j = 0; j <= ns; ++j) k.values.col(j) = half.col(j >= mid ? j - mid : ns - j - mid);
  const TimeGrid g{0.0, m.T, nt + 1};
  k.u_plus = zero_signal(g);
  k.u_minus = zero_signal(g);
  k.u_plus.values.tail(nt) = k.values.col(ns);
  k.u_minus.values.tail(nt) = k.values.col(0);
  k.phase_one_norm_sq = phase_one_mass(m.L, m.phi, m.t0);
  return k;
}

KernelGrid build_kernel(double L, double T, double theta, const KernelResolution& res) {
  return FundamentalKernel(L, T, theta, res).sample(res.time_intervals, res.space_intervals);
}

Complex<double> kernel_pairing(const FundamentalKernel& k, double t, const std::function<double(double)>& phi,
                               int panels) {
  using G = boost::math::quadrature::gauss<double, 20>;
  require(panels >= 1, "kernel_pairing: need at least one panel");
  const double L = k.length(), h = 2.0 * L / panels;
  std::vector<double> x, w;
  for (int p = 0; p < panels; ++p) {
    const double mid = -L + (p + 0.5) * h;
    for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
      const double xi = G::abscissa()[i], wi = 0.5 * h * G::weights()[i];
      x.push_back(mid + 0.5 * h * xi);
      w.push_back(wi);
      if (xi != 0.0) {
        x.push_back(mid - 0.5 * h * xi);
        w.push_back(wi);
      }
    }
  }
  const CVector<double> v = k.slice(t, Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size())));
  Complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * phi(x[i]) * v(Eigen::Index(i));
  return acc;
}

double row_l2_norm(const KernelGrid& k, int row) {
  const int ns = int(k.s.size());
  const Eigen::VectorXd w = trapezoid_weights(ns, 2.0 * k.L / (ns - 1));
  return std::sqrt((w.array() * k.values.row(row).transpose().array().abs2()).sum());
}

double kernel_l2_norm_sq(const KernelGrid& k) {
  const int nt = int(k.t.size());
  if (nt == 0) return 0.0;
  std::vector<double> f(nt);
  for (int i = 0; i < nt; ++i) f[i] = std::pow(row_l2_norm(k, i), 2);
  const double dt = k.t(0);
  // trapezoid over t_1..t_n; [0, t_1] treated as the t^{-1/2} heat singularity
  double acc = 2.0 * dt * f[0];
  for (int i = 0; i + 1 < nt; ++i) acc += 0.5 * dt * (f[i] + f[i + 1]);
  return acc;
}

void write_kernel_csv(const KernelGrid& k, std::ostream& out) {
  char buf[64];
  out << "t\\s";
  for (Eigen::Index j = 0; j < k.s.size(); ++j) {
    std::snprintf(buf, sizeof buf, ",%.12e", k.s(j));
    out << buf;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < k.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12e", k.t(i));
    out << buf;
    for (Eigen::Index j = 0; j < k.s.size(); ++j) {
      const Complex<double> v = k.values(i, j);
      std::snprintf(buf, sizeof buf, ",%.12e%+.12ej", v.real(), v.imag());
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace ctrlcost
