#pragma once

// Eigenstructure of d^2/ds^2 on (0, L): left end Dirichlet or Neumann, right end
// carries the Dirichlet boundary control. Modes are zero-based in code; mode n
// here is the (n+1)-th eigenpair.

#include "ctrlcost/errors.hpp"
#include "ctrlcost/precision.hpp"

#include <cmath>

namespace ctrlcost {

enum class LeftBoundary { dirichlet = 0, neumann = 1 };

std::string to_string(LeftBoundary kind);
LeftBoundary parse_left_boundary(const std::string& name);

struct BoundaryConfig {
  double length = 0.0;
  LeftBoundary left = LeftBoundary::dirichlet;
  double theta = 0.0;
};

void validate(const BoundaryConfig& config);

struct ModeBasis {
  BoundaryConfig config;
  int truncation = 0;

  double length() const { return config.length; }
  double theta() const { return config.theta; }
  LeftBoundary left() const { return config.left; }
};

ModeBasis build_basis(const BoundaryConfig& config, int truncation);

// Same interval and boundary kinds, different rotation angle or size.
ModeBasis with_theta(const ModeBasis& basis, double theta);
ModeBasis with_truncation(const ModeBasis& basis, int truncation);

template <class R>
R wavenumber(const ModeBasis& basis, int n) {
  const R shift = basis.left() == LeftBoundary::dirichlet ? R(n + 1) : R(n) + R(1) / R(2);
  return shift * pi<R>() / R(basis.length());
}

// mu_n = -k_n^2
template <class R>
R unrotated_eigenvalue(const ModeBasis& basis, int n) {
  const R k = wavenumber<R>(basis, n);
  return -k * k;
}

// lambda_n = e^{i theta} mu_n
template <class R>
Complex<R> rotated_exponent(const ModeBasis& basis, int n) {
  return unit_phase(R(basis.theta())) * unrotated_eigenvalue<R>(basis, n);
}

// e_n'(L). Both boundary kinds give sqrt(2/L) k_n (-1)^(n+1) with zero-based n,
// because k_n L is an exact multiple of pi/2.
template <class R>
R boundary_slope(const ModeBasis& basis, int n) {
  using std::sqrt;
  const R sign = (n % 2 == 0) ? R(-1) : R(1);
  return sign * sqrt(R(2) / R(basis.length())) * wavenumber<R>(basis, n);
}

// b_n = -e^{i theta} e_n'(L): the coupling in c_n' = lambda_n c_n + b_n u.
template <class R>
Complex<R> boundary_flux(const ModeBasis& basis, int n) {
  return -unit_phase(R(basis.theta())) * boundary_slope<R>(basis, n);
}

template <class R>
R eigenfunction(const ModeBasis& basis, int n, const R& s) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const R k = wavenumber<R>(basis, n);
  const R scale = sqrt(R(2) / R(basis.length()));
  return basis.left() == LeftBoundary::dirichlet ? scale * sin(k * s) : scale * cos(k * s);
}

template <class R>
R eigenfunction_derivative(const ModeBasis& basis, int n, const R& s) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const R k = wavenumber<R>(basis, n);
  const R scale = sqrt(R(2) / R(basis.length())) * k;
  return basis.left() == LeftBoundary::dirichlet ? scale * cos(k * s) : -scale * sin(k * s);
}

template <class R>
RVector<R> wavenumbers(const ModeBasis& basis) {
  RVector<R> k(basis.truncation);
  for (int n = 0; n < basis.truncation; ++n) k(n) = wavenumber<R>(basis, n);
  return k;
}

template <class R>
CVector<R> rotated_exponents(const ModeBasis& basis) {
  CVector<R> out(basis.truncation);
  for (int n = 0; n < basis.truncation; ++n) out(n) = rotated_exponent<R>(basis, n);
  return out;
}

template <class R>
CVector<R> boundary_fluxes(const ModeBasis& basis) {
  CVector<R> out(basis.truncation);
  for (int n = 0; n < basis.truncation; ++n) out(n) = boundary_flux<R>(basis, n);
  return out;
}

struct TimeGrid {
  double start = 0.0;
  double end = 1.0;
  int samples = 2;

  double spacing() const { return (end - start) / (samples - 1); }
  double at(int i) const { return i + 1 == samples ? end : start + i * spacing(); }
  Eigen::VectorXd nodes() const;
};

void validate(const TimeGrid& grid);

// Trapezoid weights for a uniform grid of n nodes with spacing h.
Eigen::VectorXd trapezoid_weights(int n, double h);

struct ControlSignal {
  TimeGrid grid;
  CVector<double> values;
};

void validate(const ControlSignal& signal);
ControlSignal zero_signal(const TimeGrid& grid);

// Squared L2 norm by the trapezoid rule.
double l2_norm_sq(const ControlSignal& signal);

// Piecewise-linear interpolation; zero outside the grid.
Complex<double> interpolate(const ControlSignal& signal, double t);

template <class R = double>
struct StateCoeffs {
  ModeBasis basis;
  CVector<R> coefficients;

  R norm() const {
    using std::sqrt;
    R total(0);
    for (Eigen::Index i = 0; i < coefficients.size(); ++i) total += std::norm(coefficients(i));
    return sqrt(total);
  }
};

StateCoeffs<double> zero_state(const ModeBasis& basis);
StateCoeffs<double> unit_state(const ModeBasis& basis, int n);

// Uniform nodes on [0, L] with the given count.
Eigen::VectorXd interval_nodes(double length, int count);

// c_n by the trapezoid rule on uniform nodes spanning [0, L]. Requires at least
// eight nodes per wavelength of the highest retained mode.
StateCoeffs<double> project_state(const CVector<double>& samples, const ModeBasis& basis);

CVector<double> synthesize(const StateCoeffs<double>& state, const Eigen::VectorXd& s);

template <class R>
StateCoeffs<R> free_evolution(const StateCoeffs<R>& state, const R& t) {
  using std::exp;
  require(t >= R(0), "free_evolution: time must be nonnegative");
  StateCoeffs<R> out = state;
  for (int n = 0; n < state.basis.truncation; ++n)
    out.coefficients(n) *= exp(rotated_exponent<R>(state.basis, n) * t);
  return out;
}

}  // namespace ctrlcost
