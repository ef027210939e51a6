#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace rotorgw {

using Rational = boost::multiprecision::cpp_rational;

// Parses "3", "1/3", "0.25" or "2.5e-1" exactly. Throws ValidationError.
Rational parse_rational(std::string_view text);

double to_double(const Rational& r);
std::string to_string(const Rational& r);

}  // namespace rotorgw
