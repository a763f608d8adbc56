// Shared numeric helpers and aliases.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace msk3 {

using cd = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double half_pi = pi / 2.0;
inline constexpr double two_pi = 2.0 * pi;

// Wrap angle to [-pi, pi).
inline double wrap_to_pi(double x) {
  double y = std::fmod(x + pi, two_pi);
  if (y < 0) y += two_pi;
  return y - pi;
}

// Wrap angle to [0, 2*pi).
inline double wrap_to_2pi(double x) {
  double y = std::fmod(x, two_pi);
  if (y < 0) y += two_pi;
  return y;
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// Squared magnitude without the sqrt of std::abs.
inline double sqnorm(cd x) { return x.real() * x.real() + x.imag() * x.imag(); }

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

}  // namespace msk3
