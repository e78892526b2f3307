#pragma once

// Scalar types shared by every module. Dense containers are templated on the
// real type R; values are always std::complex<R>.

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Core>

#include <complex>
#include <limits>
#include <string>

namespace ctrlcost {

// 100 significant decimal digits (about 332 bits of significand).
using Extended = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>,
                                               boost::multiprecision::et_off>;

enum class Precision { standard, extended };

std::string to_string(Precision p);
Precision parse_precision(const std::string& name);

template <class R>
using Complex = std::complex<R>;
template <class R>
using CVector = Eigen::Matrix<Complex<R>, Eigen::Dynamic, 1>;
template <class R>
using CMatrix = Eigen::Matrix<Complex<R>, Eigen::Dynamic, Eigen::Dynamic>;
template <class R>
using RVector = Eigen::Matrix<R, Eigen::Dynamic, 1>;

template <class R>
inline R pi() {
  return boost::math::constants::pi<R>();
}

template <class R>
inline Complex<R> unit_phase(R angle) {
  using std::cos;
  using std::sin;
  return {cos(angle), sin(angle)};
}

// Relative eigenvalue cutoff for Hermitian solves.
template <class R>
inline R default_cutoff() {
  if constexpr (std::is_same_v<R, double>) {
    return 1e-13;
  } else {
    return std::numeric_limits<R>::epsilon() * R(1e6);
  }
}

template <class To, class From>
inline Complex<To> complex_cast(const Complex<From>& z) {
  return {static_cast<To>(z.real()), static_cast<To>(z.imag())};
}

template <class To, class From>
CVector<To> complex_cast(const CVector<From>& v) {
  CVector<To> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = complex_cast<To>(v(i));
  return out;
}

template <class To, class From>
CMatrix<To> complex_cast(const CMatrix<From>& m) {
  CMatrix<To> out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = complex_cast<To>(m(i, j));
  return out;
}

}  // namespace ctrlcost

namespace Eigen {

template <>
struct NumTraits<ctrlcost::Extended> : GenericNumTraits<ctrlcost::Extended> {
  using Self = ctrlcost::Extended;
  using Real = Self;
  using NonInteger = Self;
  using Literal = Self;
  using Nested = Self;
  enum {
    IsInteger = 0,
    IsSigned = 1,
    IsComplex = 0,
    RequireInitialization = 1,
    ReadCost = 8,
    AddCost = 16,
    MulCost = 32
  };
  static inline Real epsilon() { return std::numeric_limits<Self>::epsilon(); }
  static inline Real dummy_precision() { return epsilon() * Real(1000); }
  static inline Real highest() { return (std::numeric_limits<Self>::max)(); }
  static inline Real lowest() { return std::numeric_limits<Self>::lowest(); }
  static inline Real infinity() { return std::numeric_limits<Self>::infinity(); }
  static inline Real quiet_NaN() { return std::numeric_limits<Self>::quiet_NaN(); }
  static inline int digits10() { return std::numeric_limits<Self>::digits10; }
};

}  // namespace Eigen

#include <Eigen/Dense>
