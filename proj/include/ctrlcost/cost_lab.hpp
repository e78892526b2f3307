#pragma once

// Horizon sweeps of the controllability cost and fits of ln kappa against 1/T.
// The transmuted column is the bound 2 kappa_2 ||k||^2 for the heat system on
// (0, L) with the kernel on (-2L, 2L); it is optional because the kernel is
// the expensive part.

#include "ctrlcost/fundamental_kernel.hpp"
#include "ctrlcost/moment_control.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace ctrlcost {

struct SweepConfig {
  double length = M_PI;
  LeftBoundary left = LeftBoundary::dirichlet;
  double theta = 0.0;
  int truncation = 15;
  Precision precision = Precision::extended;
  bool transmuted = false;
  KernelResolution kernel;
  double tolerance = 0.01;  // relative kappa change allowed when truncation grows by half
};

struct SweepRow {
  double T = 0.0;
  double kappa_direct = 0.0;
  double kappa_refined = 0.0;  // at ceil(1.5 * truncation)
  double kappa_transmuted = std::numeric_limits<double>::quiet_NaN();
  double kernel_l2_sq = std::numeric_limits<double>::quiet_NaN();
  double condition = 0.0;
  int rank = 0;
  bool converged = false;
};

struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square in ln kappa
  int points = 0;
};

// Least squares y = slope x + intercept; needs two distinct x.
AffineFit affine_fit(const std::vector<double>& x, const std::vector<double>& y);

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;  // ascending T
  std::optional<AffineFit> fit;  // ln kappa_direct vs 1/T over converged rows
  AffineFit advisory_fit;        // same over every row
  double normalized_rate = 0.0;  // fit slope / L^2
  bool in_band = false;          // normalized_rate in [0.4, 4.0]
  bool monotone = true;          // kappa_direct nonincreasing in T
  int converged_rows = 0;
};

inline constexpr double kRateBandLow = 0.4;
inline constexpr double kRateBandHigh = 4.0;

// Rows are computed concurrently. With fewer than three converged rows the
// partial result is thrown inside a SweepError.
SweepResult sweep(const SweepConfig& config, std::vector<double> horizons);

struct SweepError : ComputationError {
  SweepError(const std::string& message, SweepResult partial)
      : ComputationError(message), result(std::move(partial)) {}
  SweepResult result;
};

// kappa(sigma L, sigma^2 T) / (sigma kappa(L, T)) per horizon: the cost picks up
// one factor sigma from the L2 norms in t and s.
std::vector<double> rescaling_ratios(const SweepConfig& config, const std::vector<double>& horizons,
                                     double sigma = 2.0);

// Columns T, kappa_direct, kappa_transmuted, kernel_l2_sq, cond_estimate, converged.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace ctrlcost
