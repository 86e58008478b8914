#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan_cr/rational.hpp"

namespace cartan_cr {

enum class Kind { Constant, Coordinate, Power, Product, Sum, Ln, Exp, Quotient, Sqrt };

struct Node;

// Immutable expression handle. Values built through the public constructors
// are canonical: flattened sums/products, folded constants, merged powers,
// products distributed over sums, terms in a fixed total order.
// Quotient and Sqrt nodes only exist in raw parse trees.
class ScalarExpr {
 public:
  ScalarExpr();  // zero
  ScalarExpr(std::int64_t v);
  ScalarExpr(const Rational& v);
  ScalarExpr(const CRational& v);

  static ScalarExpr coordinate(const std::string& name);
  static ScalarExpr imaginary_unit();

  Kind kind() const;
  const std::vector<ScalarExpr>& args() const;
  const std::string& name() const;      // Coordinate
  const CRational& value() const;       // Constant
  const Rational& exponent() const;     // Power
  std::size_t hash() const;
  std::uint64_t coord_mask() const;     // bloom mask of coordinates below this node

  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_zero_literal() const;
  bool is_one_literal() const;
  bool depends_on(const std::string& coord) const;

  friend bool operator==(const ScalarExpr& a, const ScalarExpr& b);
  friend bool operator!=(const ScalarExpr& a, const ScalarExpr& b) { return !(a == b); }

  const Node* raw() const { return node_.get(); }

  explicit ScalarExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Kind kind;
  std::string name;
  CRational value;
  Rational exponent;
  std::vector<ScalarExpr> args;
  std::size_t hash = 0;
  std::uint64_t mask = 0;
};

// Structural total order on canonical expressions.
int compare(const ScalarExpr& a, const ScalarExpr& b);
struct ExprLess {
  bool operator()(const ScalarExpr& a, const ScalarExpr& b) const { return compare(a, b) < 0; }
};

// Canonical constructors.
ScalarExpr add(std::vector<ScalarExpr> terms);
ScalarExpr mul(std::vector<ScalarExpr> factors);
ScalarExpr pow(const ScalarExpr& base, const Rational& q);
ScalarExpr ln(const ScalarExpr& a);
ScalarExpr exp(const ScalarExpr& a);
ScalarExpr sqrt(const ScalarExpr& a);

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a);
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
inline ScalarExpr& operator+=(ScalarExpr& a, const ScalarExpr& b) { return a = a + b; }
inline ScalarExpr& operator-=(ScalarExpr& a, const ScalarExpr& b) { return a = a - b; }
inline ScalarExpr& operator*=(ScalarExpr& a, const ScalarExpr& b) { return a = a * b; }

// Raw (non-canonical) node construction, used by the parser.
ScalarExpr raw_node(Kind k, std::vector<ScalarExpr> args, Rational exponent = Rational(1));
ScalarExpr canonicalize(const ScalarExpr& e);

// Conjugation. Coordinates are real unless listed in `partners`, which maps a
// complex auxiliary function name to the name of its conjugate.
using ConjugateMap = std::map<std::string, std::string>;
ScalarExpr conj(const ScalarExpr& e, const ConjugateMap& partners = {});

ScalarExpr diff(const ScalarExpr& e, const std::string& coord);
ScalarExpr substitute(const ScalarExpr& e, const std::map<std::string, ScalarExpr>& values);
std::set<std::string> coordinates(const ScalarExpr& e);
std::size_t node_count(const ScalarExpr& e);

// Real and imaginary parts, for expressions whose coordinates are real.
ScalarExpr real_part(const ScalarExpr& e);
ScalarExpr imag_part(const ScalarExpr& e);

// True for sums of monomials in coordinates with integer exponents.
bool is_laurent_polynomial(const ScalarExpr& e);

std::string to_string(const ScalarExpr& e);

// ---- complex coordinates -------------------------------------------------
// A complex coordinate z is declared through two real coordinates with
// x = z + conj(z) and y = (z - conj(z))/i, the convention in which a tube
// function f(x) has d/dz f = df/dx.
struct ComplexCoordinate {
  std::string z;
  std::string x;
  std::string y;
};

struct ComplexChart {
  std::vector<ComplexCoordinate> coords;
  std::vector<std::string> real_names() const;
  const ComplexCoordinate& find(const std::string& z) const;
};

ScalarExpr wirtinger(const ScalarExpr& e, const ComplexChart& chart, const std::string& z);
ScalarExpr wirtinger_bar(const ScalarExpr& e, const ComplexChart& chart, const std::string& z);

// ---- parsing ---------------------------------------------------------------
struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " at byte " + std::to_string(off)), offset(off) {}
};

// Returns the canonical expression.
ScalarExpr parse(const std::string& text, const std::vector<std::string>& chart);
// Returns the literal parse tree (Quotient, Sqrt nodes kept).
ScalarExpr parse_raw(const std::string& text, const std::vector<std::string>& chart);

// ---- evaluation ------------------------------------------------------------
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

using Point = std::map<std::string, double>;
using ComplexValue = std::complex<double>;

ComplexValue eval(const ScalarExpr& e, const Point& p);

struct Interval {
  double lo;
  double hi;
};

struct Domain {
  Interval box{0.1, 10.0};
  std::map<std::string, Interval> boxes;
  std::function<bool(const Point&)> predicate;

  Interval interval_for(const std::string& coord) const;
};

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroTestOptions {
  int samples = 100;
  double tol = 1e-9;
  std::uint64_t seed = 0;
};

// Draws `count` points over `coords` that satisfy the domain and make `probe`
// (if given) evaluable.
std::vector<Point> sample_points(const std::vector<std::string>& coords, const Domain& domain, int count,
                                 std::uint64_t seed, const std::vector<ScalarExpr>& probe = {});

bool is_zero(const ScalarExpr& e, const Domain& domain = {}, const ZeroTestOptions& opt = {});
// Largest |e(p)| over the sample; exact zeros report 0.
double max_abs(const ScalarExpr& e, const Domain& domain = {}, const ZeroTestOptions& opt = {});

}  // namespace cartan_cr
