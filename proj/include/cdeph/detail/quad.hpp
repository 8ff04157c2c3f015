#pragma once

// Eigen scalar traits for binary128.  Boost ships its own adaptor, but older
// releases miss members that Eigen 3.4 needs (infinity, quiet_NaN).

#include <limits>

#include <Eigen/Core>
#include <boost/multiprecision/float128.hpp>

namespace cdeph {
namespace detail {
using quad = boost::multiprecision::float128;
}
/// Wide real used to report objectives below double resolution.
using wide_real = detail::quad;
}  // namespace cdeph

namespace Eigen {

template <>
struct NumTraits<cdeph::detail::quad> : GenericNumTraits<cdeph::detail::quad> {
  using Q = cdeph::detail::quad;
  using Real = Q;
  using NonInteger = Q;
  using Literal = Q;
  using Nested = Q;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 8,
    MulCost = 16,
  };
  static Q epsilon() { return std::numeric_limits<Q>::epsilon(); }
  static Q dummy_precision() { return Q(1e-28); }
  static Q highest() { return (std::numeric_limits<Q>::max)(); }
  static Q lowest() { return std::numeric_limits<Q>::lowest(); }
  static int digits10() { return std::numeric_limits<Q>::digits10; }
  static int digits() { return std::numeric_limits<Q>::digits; }
  static Q infinity() { return std::numeric_limits<Q>::infinity(); }
  static Q quiet_NaN() { return std::numeric_limits<Q>::quiet_NaN(); }
};

}  // namespace Eigen
