#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qkt {

// Exact rational arithmetic for distances and propagation bounds.  Distances
// on the supported spaces are small integers (or halves after thickening), so
// int64 components with wide intermediates are more than enough; overflow
// throws rather than wrapping.
struct Rat {
  std::int64_t num = 0;
  std::int64_t den = 1;  // invariant: den > 0, gcd(|num|, den) == 1

  Rat() = default;
  Rat(std::int64_t n) : num(n), den(1) {}
  Rat(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::domain_error("Rat: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
    if (num == 0) den = 1;
  }

  static Rat from_cross(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("Rat: zero denominator");
    if (d < 0) { n = -n; d = -d; }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { n /= a; d /= a; }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("Rat: overflow");
    Rat r;
    r.num = static_cast<std::int64_t>(n);
    r.den = n == 0 ? 1 : static_cast<std::int64_t>(d);
    return r;
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_integer() const { return den == 1; }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }

  static Rat parse(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rat(std::stoll(s));
    return Rat(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  }
};

inline Rat operator+(const Rat& a, const Rat& b) {
  return Rat::from_cross((__int128)a.num * b.den + (__int128)b.num * a.den,
                         (__int128)a.den * b.den);
}
inline Rat operator-(const Rat& a, const Rat& b) {
  return Rat::from_cross((__int128)a.num * b.den - (__int128)b.num * a.den,
                         (__int128)a.den * b.den);
}
inline Rat operator*(const Rat& a, const Rat& b) {
  return Rat::from_cross((__int128)a.num * b.num, (__int128)a.den * b.den);
}
inline Rat operator/(const Rat& a, const Rat& b) {
  if (b.num == 0) throw std::domain_error("Rat: division by zero");
  return Rat::from_cross((__int128)a.num * b.den, (__int128)a.den * b.num);
}
inline Rat operator-(const Rat& a) { Rat r = a; r.num = -r.num; return r; }

inline bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
inline bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
inline bool operator<(const Rat& a, const Rat& b) {
  return (__int128)a.num * b.den < (__int128)b.num * a.den;
}
inline bool operator<=(const Rat& a, const Rat& b) { return a == b || a < b; }
inline bool operator>(const Rat& a, const Rat& b) { return b < a; }
inline bool operator>=(const Rat& a, const Rat& b) { return b <= a; }

inline Rat rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }
inline Rat rat_max(const Rat& a, const Rat& b) { return a < b ? b : a; }

}  // namespace qkt
