#include "ctrlcost/fundamental_kernel.hpp"

#include <doctest.h>

#include <sstream>

#include "oracles.hpp"

using namespace ctrlcost;

namespace {

// Shared kernel for L = pi, T = 0.8, theta = 0.
const FundamentalKernel& reference_kernel() {
  static const FundamentalKernel k(M_PI, 0.8, 0.0);
  return k;
}

const KernelGrid& reference_grid() {
  static const KernelGrid g = reference_kernel().sample();
  return g;
}

// int_{-L}^{L} f(s) g(s) ds by composite Gauss on the kernel's slice.
template <class G>
Complex<double> pair_with(const FundamentalKernel& k, double t, G g, int panels = 256) {
  std::vector<double> x, w;
  oracle::composite_gauss(-k.length(), k.length(), panels, x, w);
  Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(x.data(), Eigen::Index(x.size()));
  const CVector<double> v = k.slice(t, s);
  Complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * v(Eigen::Index(i)) * g(x[i]);
  return acc;
}

double max_residual(const KernelGrid& g, double ta, double tb) {
  const double dt = g.t(1) - g.t(0), h = g.s(1) - g.s(0);
  const Complex<double> a = unit_phase(kernel_angle(g.theta, g.convention));
  double worst = 0.0;
  for (Eigen::Index i = 1; i + 1 < g.t.size(); ++i) {
    if (g.t(i) < ta || g.t(i) > tb) continue;
    for (Eigen::Index j = 1; j + 1 < g.s.size(); ++j) {
      const Complex<double> kt = (g.values(i + 1, j) - g.values(i - 1, j)) / (2.0 * dt);
      const Complex<double> kss = (g.values(i, j + 1) - 2.0 * g.values(i, j) + g.values(i, j - 1)) / (h * h);
      worst = std::max(worst, std::abs(kt - a * kss));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("twofold modes are orthonormal with the stated end slopes") {
  const double L = 1.7;
  std::vector<double> x, w;
  oracle::composite_gauss(-L, L, 64, x, w);
  for (Parity p : {Parity::even, Parity::odd}) {
    for (Parity q : {Parity::even, Parity::odd}) {
      for (int n = 0; n < 6; ++n) {
        for (int m = 0; m < 6; ++m) {
          double acc = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i)
            acc += w[i] * twofold_mode(L, p, n, x[i]) * twofold_mode(L, q, m, x[i]);
          CHECK(acc == doctest::Approx(p == q && n == m ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
        }
      }
    }
    for (int n = 0; n < 6; ++n) {
      const double h = 1e-6;
      const double fd = (twofold_mode(L, p, n, L + h) - twofold_mode(L, p, n, L - h)) / (2 * h);
      CHECK(twofold_end_slope(L, p, n) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("smooth delta") {
  const TwofoldState st = smooth_delta(M_PI, 0.0, 0.4);
  CHECK(st.odd.norm() == 0.0);
  CHECK(st.even.size() == smooth_delta_truncation(M_PI, 0.0, 0.4));

  // free-line Gaussian oracle at short times
  for (double t : {0.01, 0.05, std::pow(M_PI / 8, 2)}) {
    const TwofoldState a = smooth_delta(M_PI, 0.0, t);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    const double k0 = synthesize(a, zero)(0).real();
    CHECK(k0 == doctest::Approx(1.0 / std::sqrt(4 * M_PI * t)).epsilon(1e-2));
  }

  // Parseval
  std::vector<double> x, w;
  oracle::composite_gauss(-M_PI, M_PI, 64, x, w);
  const TwofoldState b = smooth_delta(M_PI, 0.3, 0.1);
  const CVector<double> f = synthesize(b, Eigen::Map<Eigen::VectorXd>(x.data(), Eigen::Index(x.size())));
  double mass = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mass += w[i] * std::norm(f(Eigen::Index(i)));
  CHECK(mass == doctest::Approx(b.norm() * b.norm()).epsilon(1e-12));

  // explicit truncation
  const int need = smooth_delta_truncation(M_PI, 0.0, 0.4);
  CHECK(smooth_delta(M_PI, 0.0, 0.4, need + 5).even.size() == need + 5);
  try {
    smooth_delta(M_PI, 0.0, 0.4, need - 1);
    FAIL("expected an InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("need " + std::to_string(need)) != std::string::npos);
  }
  CHECK_THROWS_AS(smooth_delta(M_PI, 0.0, 0.0), InputError);
  CHECK_THROWS_AS(smooth_delta(M_PI, 1.6, 0.1), InputError);
}

TEST_CASE("control phase on simple states") {
  const double L = M_PI, t0 = 0.4, T = 0.8;
  SUBCASE("zero state gives zero controls") {
    const TwofoldState z{L, 0.0, CVector<double>::Zero(4), CVector<double>::Zero(4)};
    const ControlPhase cp(z, t0, T);
    for (double t : {0.45, 0.6, 0.79}) {
      CHECK(cp.traces(t).first == 0.0);
      CHECK(cp.traces(t).second == 0.0);
    }
    CHECK(cp.control_cost() == 0.0);
    CHECK(cp.slice(0.6, Eigen::VectorXd::LinSpaced(11, -L, L)).norm() == 0.0);
  }
  SUBCASE("even data gives equal end controls") {
    const ControlPhase cp(smooth_delta(L, 0.0, t0), t0, T, KernelResolution{.controlled = 15});
    for (int i = 1; i < 40; ++i) {
      const double t = t0 + (T - t0) * i / 40;
      const auto [up, um] = cp.traces(t);
      CHECK(up == um);
    }
  }
}

TEST_CASE("control phase with 15 modes nulls them under independent replay") {
  const double L = M_PI, t0 = 0.4, T = 0.8, W = T - t0;
  const TwofoldState start = smooth_delta(L, 0.0, t0);
  const int N = 15;
  const ControlPhase cp(start, t0, T, KernelResolution{.controlled = N});
  std::vector<double> x, w;
  oracle::composite_gauss(t0, T, 400, x, w);
  std::vector<Complex<double>> ue(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [up, um] = cp.traces(x[i]);
    ue[i] = 0.5 * (up + um);
  }
  double residual = 0.0;
  for (int n = 0; n < N; ++n) {
    const double k = twofold_wavenumber(L, Parity::even, n);
    const double lambda = -k * k;
    const double B = -2.0 * twofold_end_slope(L, Parity::even, n);
    Complex<double> c = n < start.even.size() ? start.even(n) * std::exp(lambda * W) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) c += B * w[i] * std::exp(lambda * (T - x[i])) * ue[i];
    residual += std::norm(c);
  }
  CHECK(std::sqrt(residual) <= 1e-6 * start.norm());
  CHECK(cp.rank_deficit() == 0);
}

TEST_CASE("control phase splits an asymmetric state by parity") {
  TwofoldState st{1.5, 0.2, CVector<double>::Zero(3), CVector<double>::Zero(3)};
  st.even(0) = 1.0;
  st.odd(0) = Complex<double>(0.5, 0.3);
  st.odd(2) = -0.2;
  const ControlPhase cp(st, 0.1, 0.6);
  CHECK(cp.terminal().norm() <= 1e-10 * st.norm());
  const auto [up, um] = cp.traces(0.35);
  CHECK(std::abs(up - um) > 1e-3 * std::abs(up + um));
  // pointwise values match the modal series where it converges quickly
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(61, -1.5, 1.5);
  const double t = 0.1001;
  const CVector<double> a = cp.slice(t, s), b = synthesize(cp.coefficients(t), s);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * a.cwiseAbs().maxCoeff());
  // the start state at t0
  CHECK((cp.slice(0.1, s) - synthesize(st, s)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("kernel reproduces the delta at short times") {
  const FundamentalKernel& k = reference_kernel();
  const double L = k.length(), eps = k.horizon() / 100;
  const Complex<double> m = pair_with(k, eps, [&](double s) { return std::cos(M_PI * s / (2 * L)); });
  CHECK(std::abs(m - 1.0) <= 1e-2);
  // exact: the test function is the first even mode
  const double kk = M_PI / (2 * L);
  CHECK(std::abs(m - std::exp(-kk * kk * eps)) <= 1e-10);
}

TEST_CASE("kernel vanishes at the horizon") {
  const FundamentalKernel& k = reference_kernel();
  const KernelDiagnostics& d = k.diagnostics();
  CHECK(d.terminal_norm <= 1e-8 * d.half_norm);
  CHECK(d.rank_deficit == 0);
  CHECK_FALSE(d.regime_warning);
  const KernelGrid& g = reference_grid();
  const int last = int(g.t.size()) - 1, half = int(g.t.size()) / 2 - 1;
  CHECK(g.t(half) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(row_l2_norm(g, half) == doctest::Approx(d.half_norm).epsilon(1e-6));
  CHECK(row_l2_norm(g, last) <= 1e-8 * row_l2_norm(g, half));
}

TEST_CASE("kernel grid is even with recorded traces") {
  const KernelGrid& g = reference_grid();
  const Eigen::Index ns = g.s.size() - 1;
  CHECK(g.delta_marker);
  CHECK(g.s(0) == -g.L);
  CHECK(g.s(ns) == g.L);
  double worst = 0.0;
  for (Eigen::Index j = 0; j <= ns; ++j) {
    CHECK(g.s(j) == -g.s(ns - j));
    worst = std::max(worst, (g.values.col(j) - g.values.col(ns - j)).cwiseAbs().maxCoeff());
  }
  CHECK(worst == 0.0);
  for (Eigen::Index i = 0; i < g.t.size(); ++i) {
    CHECK(g.values(i, ns) == g.u_plus.values(i + 1));
    CHECK(g.values(i, 0) == g.u_minus.values(i + 1));
  }
  const FundamentalKernel& k = reference_kernel();
  for (Eigen::Index i = 0; i < g.t.size(); i += 7) {
    const auto [up, um] = k.traces(g.t(i));
    CHECK(std::abs(g.u_plus.values(i + 1) - up) <= 1e-10 * (1.0 + std::abs(up)));
    CHECK(std::abs(g.u_minus.values(i + 1) - um) <= 1e-10 * (1.0 + std::abs(um)));
  }
  CHECK(g.u_plus.values(0) == 0.0);
  // phase one has zero traces; phase two does not
  CHECK(g.u_plus.values.head(g.t.size() / 2 + 1).norm() == 0.0);
  CHECK(g.u_plus.values.norm() > 0.0);
}

TEST_CASE("kernel grid rows agree with direct slices") {
  const FundamentalKernel& k = reference_kernel();
  const KernelGrid& g = reference_grid();
  for (Eigen::Index i : {Eigen::Index(10), g.t.size() / 2 + 5, 3 * g.t.size() / 4, g.t.size() - 3}) {
    const CVector<double> v = k.slice(g.t(i), g.s);
    const double scale = std::max(1.0, g.values.row(i).cwiseAbs().maxCoeff());
    CHECK((v.transpose() - g.values.row(i)).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }
}

TEST_CASE("kernel norm") {
  const KernelGrid& g = reference_grid();
  const double n2 = kernel_l2_norm_sq(g);
  CHECK(n2 > 0.0);
  CHECK(kernel_l2_norm(g) == doctest::Approx(std::sqrt(n2)));
  KernelGrid z = g;
  z.values.setZero();
  CHECK(kernel_l2_norm_sq(z) == 0.0);
  KernelGrid d = g;
  d.values *= 2.0;
  CHECK(kernel_l2_norm_sq(d) == doctest::Approx(4.0 * n2).epsilon(1e-14));
  const FundamentalKernel& k = reference_kernel();
  const KernelGrid fine = k.sample(2 * int(g.t.size()), 2 * int(g.s.size() - 1));
  CHECK(kernel_l2_norm_sq(fine) == doctest::Approx(n2).epsilon(1e-3));
  CHECK(g.phase_one_norm_sq > 0.0);
  CHECK(g.phase_one_norm_sq < n2);
}

TEST_CASE("kernel satisfies the equation to second order") {
  const FundamentalKernel k(1.5, 0.5, 0.0);
  double previous = 0.0;
  for (int level = 0; level < 3; ++level) {
    const KernelGrid g = k.sample(200 << level, 150 << level);
    const double r = std::max(max_residual(g, 0.05, 0.22), max_residual(g, 0.28, 0.48));
    INFO("level " << level << " residual " << r);
    if (level > 0) CHECK(r <= previous / 3.0);
    previous = r;
  }
}

TEST_CASE("kernel norm grows as the horizon shrinks") {
  std::vector<double> inv, logs;
  for (double T : {0.8, 0.4, 0.2}) {
    const KernelGrid g = build_kernel(M_PI, T, 0.0);
    inv.push_back(1.0 / T);
    logs.push_back(std::log(kernel_l2_norm_sq(g)));
  }
  CHECK(logs[1] > logs[0]);
  CHECK(logs[2] > logs[1]);
  // least-squares slope of ln ||k||^2 against 1/T
  const double mi = (inv[0] + inv[1] + inv[2]) / 3, ml = (logs[0] + logs[1] + logs[2]) / 3;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (inv[i] - mi) * (logs[i] - ml);
    sxx += (inv[i] - mi) * (inv[i] - mi);
  }
  const double slope = sxy / sxx;
  CHECK(slope > 0.0);
  CHECK(slope <= 4.0 * M_PI * M_PI);
}

TEST_CASE("phase conventions are complex conjugates of each other") {
  KernelResolution plus, minus;
  minus.convention = PhaseConvention::minus_theta;
  const FundamentalKernel a(1.5, 0.5, 0.3, plus), b(1.5, 0.5, 0.3, minus);
  for (double t : {0.1, 0.3, 0.45})
    for (double s : {0.0, 0.7, 1.4})
      CHECK(std::abs(a.value(t, s) - std::conj(b.value(t, s))) <= 1e-9 * (1.0 + std::abs(a.value(t, s))));
  CHECK(to_string(parse_phase_convention("minus_theta")) == "minus_theta");
  CHECK_THROWS_AS(parse_phase_convention("theta"), InputError);
}

TEST_CASE("kernel argument checks") {
  CHECK_THROWS_AS(FundamentalKernel(-1.0, 0.5, 0.0), InputError);
  CHECK_THROWS_AS(FundamentalKernel(1.0, 0.0, 0.0), InputError);
  CHECK_THROWS_AS(FundamentalKernel(1.0, 0.5, 2.0), InputError);
  CHECK_THROWS_AS(FundamentalKernel(1.0, 0.5, 0.0, KernelResolution{.lift_order = 0}), InputError);
  KernelResolution r;
  r.split = 1.0;
  CHECK_THROWS_AS(FundamentalKernel(1.0, 0.5, 0.0, r), InputError);
  const FundamentalKernel& k = reference_kernel();
  CHECK_THROWS_AS(k.sample(101, 20), InputError);  // t0 off the grid
  CHECK_THROWS_AS(k.value(0.0, 0.0), InputError);
  CHECK(k.value(0.5, 4.0) == 0.0);
}

TEST_CASE("regime gate is a warning") {
  const FundamentalKernel k(0.5, 0.5, 0.0);
  CHECK(k.diagnostics().regime_warning);
}

TEST_CASE("kernel csv layout") {
  const KernelGrid g = FundamentalKernel(1.0, 0.4, 0.0).sample(4, 4);
  std::ostringstream out;
  write_kernel_csv(g, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("t\\s,", 0) == 0);
  CHECK(std::count(line.begin(), line.end(), ',') == 5);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
    CHECK(line.back() == 'j');
  }
  CHECK(rows == 4);
}
