#include "ctrlcost/spectral_core.hpp"

#include <algorithm>

namespace ctrlcost {

std::string to_string(Precision p) { return p == Precision::standard ? "standard" : "extended"; }

Precision parse_precision(const std::string& name) {
  if (name == "standard") return Precision::standard;
  if (name == "extended") return Precision::extended;
  throw InputError("precision must be 'standard' or 'extended', got '" + name + "'");
}

std::string to_string(LeftBoundary kind) {
  return kind == LeftBoundary::dirichlet ? "dirichlet" : "neumann";
}

LeftBoundary parse_left_boundary(const std::string& name) {
  if (name == "dirichlet") return LeftBoundary::dirichlet;
  if (name == "neumann") return LeftBoundary::neumann;
  throw InputError("left boundary must be 'dirichlet' or 'neumann', got '" + name + "'");
}

void validate(const BoundaryConfig& config) {
  require(std::isfinite(config.length) && config.length > 0.0,
          "interval length must be finite and positive");
  require(std::isfinite(config.theta) && std::abs(config.theta) < 0.5 * M_PI,
          "rotation angle must satisfy |theta| < pi/2");
}

ModeBasis build_basis(const BoundaryConfig& config, int truncation) {
  validate(config);
  require(truncation >= 1, "truncation must be at least 1");
  return ModeBasis{config, truncation};
}

ModeBasis with_theta(const ModeBasis& basis, double theta) {
  BoundaryConfig c = basis.config;
  c.theta = theta;
  return build_basis(c, basis.truncation);
}

ModeBasis with_truncation(const ModeBasis& basis, int truncation) {
  return build_basis(basis.config, truncation);
}

Eigen::VectorXd TimeGrid::nodes() const {
  Eigen::VectorXd t(samples);
  for (int i = 0; i < samples; ++i) t(i) = at(i);
  return t;
}

void validate(const TimeGrid& grid) {
  require(grid.samples >= 2, "time grid needs at least two samples");
  require(std::isfinite(grid.start) && std::isfinite(grid.end) && grid.end > grid.start,
          "time grid end must exceed start");
}

Eigen::VectorXd trapezoid_weights(int n, double h) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  w(0) *= 0.5;
  w(n - 1) *= 0.5;
  return w;
}

void validate(const ControlSignal& signal) {
  validate(signal.grid);
  require(signal.values.size() == signal.grid.samples,
          "control signal length must match its time grid");
}

ControlSignal zero_signal(const TimeGrid& grid) {
  validate(grid);
  return {grid, CVector<double>::Zero(grid.samples)};
}

double l2_norm_sq(const ControlSignal& signal) {
  validate(signal);
  const Eigen::VectorXd w = trapezoid_weights(signal.grid.samples, signal.grid.spacing());
  return (w.array() * signal.values.array().abs2()).sum();
}

Complex<double> interpolate(const ControlSignal& signal, double t) {
  const TimeGrid& g = signal.grid;
  if (t < g.start || t > g.end) return 0.0;
  const double x = (t - g.start) / g.spacing();
  const int i = std::min(static_cast<int>(x), g.samples - 2);
  const double f = x - i;
  return (1.0 - f) * signal.values(i) + f * signal.values(i + 1);
}

StateCoeffs<double> zero_state(const ModeBasis& basis) {
  return {basis, CVector<double>::Zero(basis.truncation)};
}

StateCoeffs<double> unit_state(const ModeBasis& basis, int n) {
  require(n >= 0 && n < basis.truncation, "unit_state: mode index out of range");
  StateCoeffs<double> s = zero_state(basis);
  s.coefficients(n) = 1.0;
  return s;
}

Eigen::VectorXd interval_nodes(double length, int count) {
  Eigen::VectorXd s(count);
  for (int j = 0; j < count; ++j) s(j) = length * j / (count - 1);
  return s;
}

StateCoeffs<double> project_state(const CVector<double>& samples, const ModeBasis& basis) {
  const int m = static_cast<int>(samples.size());
  require(m >= 2, "project_state: need at least two samples");
  const double h = basis.length() / (m - 1);
  const double shortest = 2.0 * M_PI / wavenumber<double>(basis, basis.truncation - 1);
  if (h > shortest / 8.0)
    throw InputError("project_state: grid too coarse, need at least " +
                     std::to_string(static_cast<int>(std::ceil(8.0 * basis.length() / shortest)) + 1) +
                     " nodes");
  const Eigen::VectorXd s = interval_nodes(basis.length(), m);
  const Eigen::VectorXd w = trapezoid_weights(m, h);
  StateCoeffs<double> out = zero_state(basis);
  for (int n = 0; n < basis.truncation; ++n) {
    Complex<double> acc = 0.0;
    for (int j = 0; j < m; ++j) acc += w(j) * eigenfunction<double>(basis, n, s(j)) * samples(j);
    out.coefficients(n) = acc;
  }
  return out;
}

CVector<double> synthesize(const StateCoeffs<double>& state, const Eigen::VectorXd& s) {
  CVector<double> f = CVector<double>::Zero(s.size());
  for (int n = 0; n < state.basis.truncation; ++n)
    for (Eigen::Index j = 0; j < s.size(); ++j)
      f(j) += state.coefficients(n) * eigenfunction<double>(state.basis, n, s(j));
  return f;
}

}  // namespace ctrlcost
