#pragma once
// Random G1 elements and conformal-unitary cubic triples for property tests.
#include <cmath>
#include <complex>
#include <random>

#include "cartan_cr/cr.hpp"

namespace cartan_cr::testing {

using C = std::complex<double>;

inline C random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng)};
}

// A with conj(A)^T diag(1, eps) A = t diag(1, eps); t < 0 only occurs for eps = -1.
inline GroupElement<C> random_g1(int eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI), mag(0.5, 2.0), rap(-1.5, 1.5);
  double t = mag(rng);
  bool flip = eps == -1 && (rng() & 1);
  if (flip) t = -t;
  C ph = std::polar(1.0, u(rng)), ea = std::polar(1.0, u(rng)), eb = std::polar(1.0, u(rng));
  double c, s;
  if (eps == 1) {
    double th = u(rng);
    c = std::cos(th);
    s = std::sin(th);
  } else {
    double r = rap(rng);
    c = std::cosh(r);
    s = std::sinh(r);
  }
  CMatrix H(2, 2);
  H(0, 0) = ph * c * ea;
  H(0, 1) = ph * s * eb;
  H(1, 0) = ph * (eps == 1 ? -s : s) * std::conj(eb);
  H(1, 1) = ph * c * std::conj(ea);
  double k = std::sqrt(std::abs(t));
  CMatrix A(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) A(i, j) = k * (flip ? H(i, 1 - j) : H(i, j));
  GroupElement<C> g;
  g.tag = GroupTag::G1;
  g.epsilon = eps;
  g.t = t;
  g.a = A;
  g.c1 = random_complex(rng);
  g.c2 = random_complex(rng);
  g.c3 = random_complex(rng);
  g.b1 = random_complex(rng);
  g.b2 = random_complex(rng);
  C b3 = random_complex(rng);
  while (std::abs(b3) < 0.2) b3 = random_complex(rng);
  g.b3 = b3;
  return g;
}

// Direct draw: U1 free, U2 = -conj(U1) U / conj(U); for eps = -1 with
// switching = true the draw has |U| > |U1|, otherwise |U| < |U1|.
inline CubicData random_cubic(int eps, bool switching, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI), mag(0.2, 3.0), ratio(0.05, 0.9);
  double big = mag(rng), small = big * ratio(rng);
  CubicData cd;
  cd.epsilon = eps;
  double m1 = switching ? small : big, m = switching ? big : small;
  if (eps == 1) {
    m1 = mag(rng);
    m = mag(rng);
  }
  cd.U1 = std::polar(m1, ang(rng));
  cd.U = std::polar(m, ang(rng));
  cd.U2 = -std::conj(cd.U1) * cd.U / std::conj(cd.U);
  cd.lambda = std::norm(cd.U1) + eps * std::norm(cd.U);
  return cd;
}

// small exact random parameters
struct RationalDraw {
  std::mt19937_64 rng;
  explicit RationalDraw(std::uint64_t seed) : rng(seed) {}
  Rational rat() {
    std::uniform_int_distribution<int> n(-4, 4), d(1, 3);
    return Rational(n(rng), d(rng));
  }
  Rational nonzero() {
    Rational r;
    do r = rat();
    while (r.is_zero());
    return r;
  }
  CRational complex() { return CRational(rat(), rat()); }
  // unit Gaussian rationals from Pythagorean triples
  CRational unit() {
    using Q = CRational;
    static const Q units[] = {Q(1), Q(-1), Q::I(), -Q::I(), Q(Rational(3, 5), Rational(4, 5)),
                              Q(Rational(-5, 13), Rational(12, 13)), Q(Rational(4, 5), Rational(-3, 5))};
    std::uniform_int_distribution<int> k(0, 6);
    return units[k(rng)];
  }
};

}  // namespace cartan_cr::testing
