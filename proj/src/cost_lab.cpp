#include "ctrlcost/cost_lab.hpp"

#include "ctrlcost/wave_control.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <ostream>

namespace ctrlcost {

namespace {

struct DirectCost {
  double kappa = 0.0;
  double condition = 0.0;
  int rank = 0;
};

DirectCost direct_cost(const SweepConfig& c, double T, int truncation) {
  const ModeBasis b = build_basis(BoundaryConfig{c.length, c.left, c.theta}, truncation);
  if (c.precision == Precision::extended) {
    const CostReport<Extended> r = controllability_cost<Extended>(b, T);
    return {r.kappa.convert_to<double>(), r.condition.convert_to<double>(), r.rank};
  }
  const CostReport<double> r = controllability_cost<double>(b, T);
  return {r.kappa, r.condition, r.rank};
}

SweepRow compute_row(const SweepConfig& c, double T) {
  SweepRow row;
  row.T = T;
  const int refined = (3 * c.truncation + 1) / 2;
  const DirectCost base = direct_cost(c, T, c.truncation);
  const DirectCost more = direct_cost(c, T, refined);
  row.kappa_direct = base.kappa;
  row.kappa_refined = more.kappa;
  row.condition = base.condition;
  row.rank = base.rank;
  row.converged = base.rank == c.truncation && more.rank == refined &&
                  std::abs(more.kappa - base.kappa) < c.tolerance * base.kappa;
  if (c.transmuted) {
    const double L = 2.0 * c.length;
    const ModeBasis wave = build_basis(BoundaryConfig{c.length, LeftBoundary::dirichlet, 0.0}, c.truncation);
    const double kappa2 = wave_cost_constant<double>(wave, L);
    row.kernel_l2_sq = kernel_l2_norm_sq(build_kernel(L, T, c.theta, c.kernel));
    row.kappa_transmuted = 2.0 * kappa2 * row.kernel_l2_sq;
  }
  return row;
}

}  // namespace

AffineFit affine_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "affine_fit: need matching samples, at least two");
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "affine_fit: abscissae coincide");
  AffineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - f.slope * x[i] - f.intercept, 2);
  f.residual = std::sqrt(ss / n);
  f.points = int(x.size());
  return f;
}

SweepResult sweep(const SweepConfig& config, std::vector<double> horizons) {
  require(config.length > 0.0, "sweep: length must be positive");
  require(config.truncation >= 1, "sweep: truncation must be positive");
  require(horizons.size() >= 3, "sweep: need at least three horizons");
  for (double T : horizons) require(T > 0.0, "sweep: horizons must be positive");
  std::sort(horizons.begin(), horizons.end());

  std::vector<std::future<SweepRow>> jobs;
  for (double T : horizons) jobs.push_back(std::async(std::launch::async, compute_row, config, T));
  SweepResult r;
  r.config = config;
  for (auto& j : jobs) r.rows.push_back(j.get());

  std::vector<double> xa, ya, xc, yc;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const SweepRow& row = r.rows[i];
    xa.push_back(1.0 / row.T);
    ya.push_back(std::log(row.kappa_direct));
    if (row.converged) {
      xc.push_back(xa.back());
      yc.push_back(ya.back());
    }
    if (i > 0 && row.kappa_direct > r.rows[i - 1].kappa_direct * (1.0 + 1e-12)) r.monotone = false;
  }
  r.converged_rows = int(xc.size());
  r.advisory_fit = affine_fit(xa, ya);
  const double L2 = config.length * config.length;
  if (xc.size() < 3) {
    r.normalized_rate = r.advisory_fit.slope / L2;
    throw SweepError("sweep: " + std::to_string(xc.size()) +
                         " converged rows, need 3; raise truncation or precision",
                     std::move(r));
  }
  r.fit = affine_fit(xc, yc);
  r.normalized_rate = r.fit->slope / L2;
  r.in_band = r.normalized_rate >= kRateBandLow && r.normalized_rate <= kRateBandHigh;
  return r;
}

std::vector<double> rescaling_ratios(const SweepConfig& config, const std::vector<double>& horizons, double sigma) {
  require(sigma > 0.0, "rescaling_ratios: sigma must be positive");
  SweepConfig scaled = config;
  scaled.length *= sigma;
  std::vector<double> out;
  for (double T : horizons) {
    const double a = direct_cost(config, T, config.truncation).kappa;
    const double b = direct_cost(scaled, sigma * sigma * T, config.truncation).kappa;
    out.push_back(b / (sigma * a));
  }
  return out;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "T,kappa_direct,kappa_transmuted,kernel_l2_sq,cond_estimate,converged\n";
  char buf[256];
  for (const SweepRow& r : result.rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%.12e,%.12e,%.12e,%.6e,%d\n", r.T, r.kappa_direct, r.kappa_transmuted,
                  r.kernel_l2_sq, r.condition, r.converged ? 1 : 0);
    out << buf;
  }
}

}  // namespace ctrlcost
