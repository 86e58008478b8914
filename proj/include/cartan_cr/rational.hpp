#pragma once

#include <cstdint>
#include <compare>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cartan_cr {

struct OverflowError : std::overflow_error {
  using std::overflow_error::overflow_error;
};

// Exact rational on 64-bit integers; every operation is overflow-checked.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return (num_ > 0) - (num_ < 0); }
  double to_double() const { return double(num_) / double(den_); }

  Rational operator-() const {
    Rational r;
    r.num_ = checked(-static_cast<__int128>(num_));
    r.den_ = den_;
    return r;
  }
  friend Rational operator+(const Rational& a, const Rational& b) {
    __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
    __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return make(n, d);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 l = static_cast<__int128>(a.num_) * b.den_;
    __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  // Integer power, exponent may be negative.
  Rational pow(std::int64_t e) const {
    Rational base = e < 0 ? Rational(1) / *this : *this;
    std::uint64_t k = e < 0 ? std::uint64_t(-e) : std::uint64_t(e);
    Rational out(1);
    while (k) {
      if (k & 1) out *= base;
      k >>= 1;
      if (k) base *= base;
    }
    return out;
  }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  std::size_t hash() const {
    return std::hash<std::int64_t>()(num_) * 1000003u ^ std::hash<std::int64_t>()(den_);
  }

 private:
  static std::int64_t checked(__int128 v) {
    if (v > INT64_MAX || v < -INT64_MAX) throw OverflowError("rational overflow");
    return static_cast<std::int64_t>(v);
  }
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    if (n == 0) d = 1;
    Rational r;
    r.num_ = checked(n);
    r.den_ = checked(d);
    return r;
  }
  void assign(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// a + b i with a, b rational.
struct CRational {
  Rational re;
  Rational im;

  CRational() = default;
  CRational(Rational r) : re(r) {}
  CRational(std::int64_t r) : re(r) {}
  CRational(Rational r, Rational i) : re(r), im(i) {}

  static CRational I() { return {Rational(0), Rational(1)}; }

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  bool is_real() const { return im.is_zero(); }
  bool is_one() const { return re == Rational(1) && im.is_zero(); }

  CRational conj() const { return {re, -im}; }
  Rational norm2() const { return re * re + im * im; }

  friend CRational operator+(const CRational& a, const CRational& b) { return {a.re + b.re, a.im + b.im}; }
  friend CRational operator-(const CRational& a, const CRational& b) { return {a.re - b.re, a.im - b.im}; }
  CRational operator-() const { return {-re, -im}; }
  friend CRational operator*(const CRational& a, const CRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend CRational operator/(const CRational& a, const CRational& b) {
    Rational n = b.norm2();
    if (n.is_zero()) throw std::domain_error("complex rational division by zero");
    CRational p = a * b.conj();
    return {p.re / n, p.im / n};
  }
  CRational& operator+=(const CRational& o) { return *this = *this + o; }
  CRational& operator-=(const CRational& o) { return *this = *this - o; }
  CRational& operator*=(const CRational& o) { return *this = *this * o; }
  CRational& operator/=(const CRational& o) { return *this = *this / o; }
  friend bool operator==(const CRational& a, const CRational& b) = default;

  std::strong_ordering compare(const CRational& o) const {
    if (auto c = re <=> o.re; c != 0) return c;
    return im <=> o.im;
  }

  CRational pow(std::int64_t e) const {
    CRational base = e < 0 ? CRational(1) / *this : *this;
    std::uint64_t k = e < 0 ? std::uint64_t(-e) : std::uint64_t(e);
    CRational out(1);
    while (k) {
      if (k & 1) out *= base;
      k >>= 1;
      if (k) base *= base;
    }
    return out;
  }

  std::complex<double> to_complex() const { return {re.to_double(), im.to_double()}; }
  std::size_t hash() const { return re.hash() * 31u + im.hash(); }
};

}  // namespace cartan_cr
