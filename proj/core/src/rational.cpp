#include "rotorgw/rational.hpp"

#include "rotorgw/error.hpp"

#include <cctype>
#include <string>

namespace rotorgw {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

boost::multiprecision::cpp_int parse_integer(const std::string& digits, std::string_view whole) {
  if (digits.empty()) throw ValidationError("malformed number '" + std::string(whole) + "'");
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ValidationError("malformed number '" + std::string(whole) + "'");
    }
  }
  return boost::multiprecision::cpp_int(digits);
}

Rational parse_decimal(const std::string& s) {
  std::string body = s;
  bool negative = false;
  if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
    negative = body[0] == '-';
    body.erase(0, 1);
  }
  long exponent = 0;
  if (auto e = body.find_first_of("eE"); e != std::string::npos) {
    std::string exp_text = body.substr(e + 1);
    body.erase(e);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text[0] == '+' || exp_text[0] == '-')) {
      exp_negative = exp_text[0] == '-';
      exp_text.erase(0, 1);
    }
    if (exp_text.empty() || exp_text.size() > 6) throw ValidationError("malformed number '" + s + "'");
    exponent = std::stol(parse_integer(exp_text, s).str());
    if (exp_negative) exponent = -exponent;
  }
  std::string digits = body;
  if (auto dot = digits.find('.'); dot != std::string::npos) {
    exponent -= static_cast<long>(digits.size() - dot - 1);
    digits.erase(dot, 1);
  }
  Rational value(parse_integer(digits, s));
  boost::multiprecision::cpp_int scale = boost::multiprecision::pow(
      boost::multiprecision::cpp_int(10), static_cast<unsigned>(exponent < 0 ? -exponent : exponent));
  if (exponent < 0) {
    value /= Rational(scale);
  } else {
    value *= Rational(scale);
  }
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw ValidationError("empty number");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Rational num = parse_decimal(trim(s.substr(0, slash)));
    Rational den = parse_decimal(trim(s.substr(slash + 1)));
    if (den == 0) throw ValidationError("zero denominator in '" + s + "'");
    return num / den;
  }
  return parse_decimal(s);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Rational& r) { return r.str(); }

}  // namespace rotorgw
