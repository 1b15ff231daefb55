#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace vau::detail {

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of the shortest decimal string that round-trips to x,
/// e.g. 5.583 -> 5583/1000 rather than the nearest binary fraction.
Rational decimal_rational(double x);

/// Exact binary value of x.
inline Rational binary_rational(double x) { return Rational(x); }

}  // namespace vau::detail
