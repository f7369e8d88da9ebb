#pragma once

// Numeric lanes: everything downstream is templated on the real scalar R,
// either double or quad (__float128 via boost.multiprecision).

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>

#include <boost/multiprecision/float128.hpp>
#include <boost/multiprecision/complex128.hpp>

#include <boost/numeric/odeint/algebra/detail/extract_value_type.hpp>

namespace boost { namespace numeric { namespace odeint { namespace detail {

// multiprecision scalars carry a value_type typedef naming themselves, which
// sends the generic trait into infinite descent; stop it here
template <class B, boost::multiprecision::expression_template_option ET>
struct extract_value_type<boost::multiprecision::number<B, ET>,
    typename boost::enable_if<has_value_type<boost::multiprecision::number<B, ET>>>::type> {
    using N = boost::multiprecision::number<B, ET>;
    using type = typename std::conditional<
        boost::multiprecision::number_category<N>::value == boost::multiprecision::number_kind_complex,
        typename boost::multiprecision::component_type<N>::type, N>::type;
};

}}}}  // namespace boost::numeric::odeint::detail

#include <boost/numeric/odeint.hpp>

namespace ewm {

using qreal = boost::multiprecision::float128;
using qcomplex = boost::multiprecision::complex128;

template <class R> struct complex_of { using type = std::complex<R>; };
template <> struct complex_of<qreal> { using type = qcomplex; };
template <class R> using complex_t = typename complex_of<R>::type;

template <class R> inline R pi() { return R(3.14159265358979323846L); }
template <> inline qreal pi<qreal>() {
    static const qreal v("3.14159265358979323846264338327950288419716939937510582097494459");
    return v;
}

template <class R> inline R eps() { return std::numeric_limits<R>::epsilon(); }

// digits that round-trip the lane losslessly
template <class R> constexpr int out_digits() { return 17; }
template <> constexpr int out_digits<qreal>() { return 36; }

template <class R> std::string format_real(const R& x, int digits = out_digits<R>()) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

template <class R> R parse_real(const std::string& s) {
    if constexpr (std::is_same_v<R, qreal>) return qreal(s);
    else return std::stod(s);
}

template <class R> inline double to_double(const R& x) {
    if constexpr (std::is_same_v<R, qreal>) return x.template convert_to<double>();
    else return static_cast<double>(x);
}

}  // namespace ewm
