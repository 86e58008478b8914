#include "cartan_cr/expr.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cartan_cr {

namespace {

std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)); }

std::uint64_t name_bit(const std::string& name) { return std::uint64_t(1) << (std::hash<std::string>()(name) % 64); }

ScalarExpr make(Kind k, std::string name, CRational value, Rational exponent, std::vector<ScalarExpr> args) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->name = std::move(name);
  n->value = value;
  n->exponent = exponent;
  n->args = std::move(args);
  std::size_t h = mix(std::size_t(k) + 17, std::hash<std::string>()(n->name));
  h = mix(h, n->value.hash());
  h = mix(h, n->exponent.hash());
  std::uint64_t mask = k == Kind::Coordinate ? name_bit(n->name) : 0;
  for (const auto& a : n->args) {
    h = mix(h, a.hash());
    mask |= a.coord_mask();
  }
  n->hash = h;
  n->mask = mask;
  return ScalarExpr(std::shared_ptr<const Node>(std::move(n)));
}

ScalarExpr constant(const CRational& c) { return make(Kind::Constant, "", c, Rational(1), {}); }

const ScalarExpr& zero_expr() {
  static const ScalarExpr z = constant(CRational(0));
  return z;
}
const ScalarExpr& one_expr() {
  static const ScalarExpr o = constant(CRational(1));
  return o;
}

ScalarExpr power_node(const ScalarExpr& base, const Rational& q) { return make(Kind::Power, "", CRational(0), q, {base}); }

// term = coefficient * monomial
std::pair<CRational, ScalarExpr> split_coeff(const ScalarExpr& t) {
  if (t.kind() == Kind::Constant) return {t.value(), one_expr()};
  if (t.kind() == Kind::Product && t.args().front().kind() == Kind::Constant) {
    std::vector<ScalarExpr> rest(t.args().begin() + 1, t.args().end());
    if (rest.size() == 1) return {t.args().front().value(), rest.front()};
    return {t.args().front().value(), make(Kind::Product, "", CRational(0), Rational(1), std::move(rest))};
  }
  return {CRational(1), t};
}

std::pair<ScalarExpr, Rational> base_exp(const ScalarExpr& f) {
  if (f.kind() == Kind::Power) return {f.args()[0], f.exponent()};
  return {f, Rational(1)};
}

int factor_compare(const ScalarExpr& a, const ScalarExpr& b) {
  auto [ba, qa] = base_exp(a);
  auto [bb, qb] = base_exp(b);
  int c = compare(ba, bb);
  if (c) return c;
  return qa < qb ? -1 : (qb < qa ? 1 : 0);
}

ScalarExpr scale(const CRational& c, const ScalarExpr& m) {
  if (c.is_zero()) return zero_expr();
  if (m.kind() == Kind::Constant) return constant(c * m.value());
  if (c.is_one()) return m;
  std::vector<ScalarExpr> f{constant(c)};
  if (m.kind() == Kind::Product) {
    f.insert(f.end(), m.args().begin(), m.args().end());
  } else {
    f.push_back(m);
  }
  return make(Kind::Product, "", CRational(0), Rational(1), std::move(f));
}

bool integer_root(std::int64_t v, std::int64_t n, std::int64_t& out) {
  if (v < 0) return false;
  double r = std::pow(double(v), 1.0 / double(n));
  for (std::int64_t cand = std::max<std::int64_t>(0, std::int64_t(std::llround(r)) - 1); cand <= std::int64_t(std::llround(r)) + 1; ++cand) {
    __int128 p = 1;
    for (std::int64_t k = 0; k < n && p <= v; ++k) p *= cand;
    if (p == v) {
      out = cand;
      return true;
    }
  }
  return false;
}

ScalarExpr constant_pow(const CRational& c, const Rational& q) {
  if (q.is_integer()) {
    if (c.is_zero() && q.sign() < 0) throw DomainError("division by zero");
    return constant(c.pow(q.num()));
  }
  if (c.is_zero()) {
    if (q.sign() < 0) throw DomainError("division by zero");
    return zero_expr();
  }
  if (c.is_real() && c.re.sign() > 0) {
    std::int64_t rn, rd;
    if (integer_root(c.re.num(), q.den(), rn) && integer_root(c.re.den(), q.den(), rd))
      return constant(CRational(Rational(rn, rd)).pow(q.num()));
    // split off the integral part of the exponent so that equal bases merge
    std::int64_t k = q.num() / q.den();
    if (q.num() < 0 && q.num() % q.den() != 0) --k;
    Rational frac = q - Rational(k);
    ScalarExpr p = power_node(constant(c), frac);
    if (k == 0) return p;
    return make(Kind::Product, "", CRational(0), Rational(1), {constant(c.pow(k)), p});
  }
  return power_node(constant(c), q);
}

ScalarExpr canonical_from_raw(const ScalarExpr& e);

// (sum or term) times (sum or term), expanded
ScalarExpr distribute(const ScalarExpr& a, const ScalarExpr& b) {
  const std::vector<ScalarExpr> one_a{a}, one_b{b};
  const auto& ta = a.kind() == Kind::Sum ? a.args() : one_a;
  const auto& tb = b.kind() == Kind::Sum ? b.args() : one_b;
  std::vector<ScalarExpr> out;
  out.reserve(ta.size() * tb.size());
  for (const auto& x : ta)
    for (const auto& y : tb) out.push_back(mul({x, y}));
  return add(std::move(out));
}

}  // namespace

// ---- handle --------------------------------------------------------------

ScalarExpr::ScalarExpr() : node_(zero_expr().node_) {}
ScalarExpr::ScalarExpr(std::int64_t v) : node_(constant(CRational(v)).node_) {}
ScalarExpr::ScalarExpr(const Rational& v) : node_(constant(CRational(v)).node_) {}
ScalarExpr::ScalarExpr(const CRational& v) : node_(constant(v).node_) {}

ScalarExpr ScalarExpr::coordinate(const std::string& name) { return make(Kind::Coordinate, name, CRational(0), Rational(1), {}); }
ScalarExpr ScalarExpr::imaginary_unit() { return constant(CRational::I()); }

Kind ScalarExpr::kind() const { return node_->kind; }
const std::vector<ScalarExpr>& ScalarExpr::args() const { return node_->args; }
const std::string& ScalarExpr::name() const { return node_->name; }
const CRational& ScalarExpr::value() const { return node_->value; }
const Rational& ScalarExpr::exponent() const { return node_->exponent; }
std::size_t ScalarExpr::hash() const { return node_->hash; }
std::uint64_t ScalarExpr::coord_mask() const { return node_->mask; }
bool ScalarExpr::is_zero_literal() const { return kind() == Kind::Constant && value().is_zero(); }
bool ScalarExpr::is_one_literal() const { return kind() == Kind::Constant && value().is_one(); }
bool ScalarExpr::depends_on(const std::string& coord) const {
  if (!(coord_mask() & name_bit(coord))) return false;
  if (kind() == Kind::Coordinate) return name() == coord;
  for (const auto& a : args())
    if (a.depends_on(coord)) return true;
  return false;
}

bool operator==(const ScalarExpr& a, const ScalarExpr& b) { return compare(a, b) == 0; }

int compare(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.raw() == b.raw()) return 0;
  if (a.kind() != b.kind()) return int(a.kind()) < int(b.kind()) ? -1 : 1;
  switch (a.kind()) {
    case Kind::Constant: {
      auto c = a.value().compare(b.value());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case Kind::Coordinate:
      return a.name() < b.name() ? -1 : (a.name() > b.name() ? 1 : 0);
    case Kind::Power: {
      int c = compare(a.args()[0], b.args()[0]);
      if (c) return c;
      return a.exponent() < b.exponent() ? -1 : (b.exponent() < a.exponent() ? 1 : 0);
    }
    default: {
      if (a.hash() == b.hash() && a.args().size() == b.args().size()) {
        bool same = true;
        for (std::size_t k = 0; k < a.args().size() && same; ++k) same = a.args()[k].raw() == b.args()[k].raw();
        if (same) return 0;
      }
      std::size_t n = std::min(a.args().size(), b.args().size());
      for (std::size_t k = 0; k < n; ++k) {
        int c = compare(a.args()[k], b.args()[k]);
        if (c) return c;
      }
      if (a.args().size() != b.args().size()) return a.args().size() < b.args().size() ? -1 : 1;
      return 0;
    }
  }
}

// ---- canonical constructors ----------------------------------------------

ScalarExpr add(std::vector<ScalarExpr> terms) {
  std::vector<ScalarExpr> flat;
  flat.reserve(terms.size());
  for (auto& t : terms) {
    if (t.kind() == Kind::Sum) {
      flat.insert(flat.end(), t.args().begin(), t.args().end());
    } else if (!t.is_zero_literal()) {
      flat.push_back(std::move(t));
    }
  }
  if (flat.empty()) return zero_expr();
  if (flat.size() == 1) return flat.front();
  std::map<ScalarExpr, CRational, ExprLess> acc;
  for (const auto& t : flat) {
    auto [c, m] = split_coeff(t);
    auto it = acc.find(m);
    if (it == acc.end()) {
      acc.emplace(m, c);
    } else {
      it->second += c;
    }
  }
  std::vector<ScalarExpr> out;
  for (const auto& [m, c] : acc) {
    if (c.is_zero()) continue;
    out.push_back(scale(c, m));
  }
  if (out.empty()) return zero_expr();
  if (out.size() == 1) return out.front();
  return make(Kind::Sum, "", CRational(0), Rational(1), std::move(out));
}

ScalarExpr mul(std::vector<ScalarExpr> factors) {
  CRational coef(1);
  std::map<ScalarExpr, Rational, ExprLess> powers;
  std::vector<ScalarExpr> pending = std::move(factors);
  while (!pending.empty()) {
    ScalarExpr f = std::move(pending.back());
    pending.pop_back();
    if (f.kind() == Kind::Constant) {
      coef *= f.value();
      if (coef.is_zero()) return zero_expr();
      continue;
    }
    if (f.kind() == Kind::Product) {
      pending.insert(pending.end(), f.args().begin(), f.args().end());
      continue;
    }
    auto [b, q] = base_exp(f);
    auto it = powers.find(b);
    if (it == powers.end()) {
      powers.emplace(b, q);
    } else {
      it->second += q;
    }
  }
  std::vector<ScalarExpr> plain;
  std::vector<ScalarExpr> sums;
  std::vector<ScalarExpr> todo;
  for (const auto& [b, q] : powers) {
    if (q.is_zero()) continue;
    todo.push_back(q == Rational(1) ? b : pow(b, q));
  }
  while (!todo.empty()) {
    ScalarExpr f = std::move(todo.back());
    todo.pop_back();
    switch (f.kind()) {
      case Kind::Constant:
        coef *= f.value();
        break;
      case Kind::Product:
        for (const auto& g : f.args()) {
          if (g.kind() == Kind::Constant) {
            coef *= g.value();
          } else {
            plain.push_back(g);
          }
        }
        break;
      case Kind::Sum:
        sums.push_back(f);
        break;
      default:
        plain.push_back(f);
    }
  }
  if (coef.is_zero()) return zero_expr();
  if (!sums.empty()) {
    // distribute over every sum factor
    std::vector<ScalarExpr> partial;
    std::vector<ScalarExpr> base = plain;
    base.push_back(constant(coef));
    partial.push_back(mul(std::move(base)));
    for (const auto& s : sums) {
      std::vector<ScalarExpr> next;
      next.reserve(partial.size() * s.args().size());
      for (const auto& p : partial)
        for (const auto& t : s.args()) next.push_back(mul({p, t}));
      // collapse like terms before the next factor
      partial.clear();
      ScalarExpr summed = add(std::move(next));
      if (summed.kind() == Kind::Sum) {
        partial.assign(summed.args().begin(), summed.args().end());
      } else {
        partial.push_back(summed);
      }
    }
    return add(std::move(partial));
  }
  if (plain.empty()) return constant(coef);
  std::sort(plain.begin(), plain.end(), [](const ScalarExpr& a, const ScalarExpr& b) { return factor_compare(a, b) < 0; });
  if (coef.is_one() && plain.size() == 1) return plain.front();
  std::vector<ScalarExpr> out;
  if (!coef.is_one()) out.push_back(constant(coef));
  out.insert(out.end(), plain.begin(), plain.end());
  return make(Kind::Product, "", CRational(0), Rational(1), std::move(out));
}

ScalarExpr pow(const ScalarExpr& base, const Rational& q) {
  if (q.is_zero()) return one_expr();
  if (q == Rational(1)) return base;
  switch (base.kind()) {
    case Kind::Constant:
      return constant_pow(base.value(), q);
    case Kind::Power:
      return pow(base.args()[0], base.exponent() * q);
    case Kind::Product: {
      std::vector<ScalarExpr> f;
      for (const auto& a : base.args()) f.push_back(pow(a, q));
      return mul(std::move(f));
    }
    case Kind::Sum:
      if (q.is_integer() && q.num() > 0 && q.num() <= 6) {
        ScalarExpr out = base;
        for (std::int64_t k = 1; k < q.num(); ++k) out = distribute(out, base);
        return out;
      }
      return power_node(base, q);
    case Kind::Exp:
      return exp(mul({constant(CRational(q)), base.args()[0]}));
    case Kind::Quotient:
    case Kind::Sqrt:
      return pow(canonicalize(base), q);
    default:
      return power_node(base, q);
  }
}

ScalarExpr ln(const ScalarExpr& a) {
  if (a.is_one_literal()) return zero_expr();
  if (a.is_zero_literal()) throw DomainError("ln(0)");
  return make(Kind::Ln, "", CRational(0), Rational(1), {a});
}

ScalarExpr exp(const ScalarExpr& a) {
  if (a.is_zero_literal()) return one_expr();
  return make(Kind::Exp, "", CRational(0), Rational(1), {a});
}

ScalarExpr sqrt(const ScalarExpr& a) { return pow(a, Rational(1, 2)); }

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) { return add({a, b}); }
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) { return add({a, mul({constant(CRational(-1)), b})}); }
ScalarExpr operator-(const ScalarExpr& a) { return mul({constant(CRational(-1)), a}); }
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) { return mul({a, b}); }
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) { return mul({a, pow(b, Rational(-1))}); }

ScalarExpr raw_node(Kind k, std::vector<ScalarExpr> args, Rational exponent) {
  return make(k, "", CRational(0), exponent, std::move(args));
}

namespace {

ScalarExpr canonical_from_raw(const ScalarExpr& e) {
  auto rec = [](const ScalarExpr& x) { return canonical_from_raw(x); };
  switch (e.kind()) {
    case Kind::Constant:
    case Kind::Coordinate:
      return e;
    case Kind::Sum: {
      std::vector<ScalarExpr> t;
      for (const auto& a : e.args()) t.push_back(rec(a));
      return add(std::move(t));
    }
    case Kind::Product: {
      std::vector<ScalarExpr> t;
      for (const auto& a : e.args()) t.push_back(rec(a));
      return mul(std::move(t));
    }
    case Kind::Quotient:
      return rec(e.args()[0]) / rec(e.args()[1]);
    case Kind::Power:
      return pow(rec(e.args()[0]), e.exponent());
    case Kind::Sqrt:
      return sqrt(rec(e.args()[0]));
    case Kind::Ln:
      return ln(rec(e.args()[0]));
    case Kind::Exp:
      return exp(rec(e.args()[0]));
  }
  return e;
}

}  // namespace

ScalarExpr canonicalize(const ScalarExpr& e) { return canonical_from_raw(e); }

// ---- transformations -----------------------------------------------------

namespace {

template <class Leaf>
ScalarExpr rebuild(const ScalarExpr& e, const Leaf& leaf) {
  auto rec = [&](const ScalarExpr& x) { return rebuild(x, leaf); };
  switch (e.kind()) {
    case Kind::Constant:
    case Kind::Coordinate:
      return leaf(e);
    case Kind::Sum: {
      std::vector<ScalarExpr> t;
      for (const auto& a : e.args()) t.push_back(rec(a));
      return add(std::move(t));
    }
    case Kind::Product: {
      std::vector<ScalarExpr> t;
      for (const auto& a : e.args()) t.push_back(rec(a));
      return mul(std::move(t));
    }
    case Kind::Quotient:
      return rec(e.args()[0]) / rec(e.args()[1]);
    case Kind::Power:
      return pow(rec(e.args()[0]), e.exponent());
    case Kind::Sqrt:
      return sqrt(rec(e.args()[0]));
    case Kind::Ln:
      return ln(rec(e.args()[0]));
    case Kind::Exp:
      return exp(rec(e.args()[0]));
  }
  return e;
}

}  // namespace

ScalarExpr conj(const ScalarExpr& e, const ConjugateMap& partners) {
  return rebuild(e, [&](const ScalarExpr& leaf) {
    if (leaf.kind() == Kind::Constant) return constant(leaf.value().conj());
    auto it = partners.find(leaf.name());
    return it == partners.end() ? leaf : ScalarExpr::coordinate(it->second);
  });
}

ScalarExpr substitute(const ScalarExpr& e, const std::map<std::string, ScalarExpr>& values) {
  return rebuild(e, [&](const ScalarExpr& leaf) {
    if (leaf.kind() == Kind::Coordinate) {
      auto it = values.find(leaf.name());
      if (it != values.end()) return it->second;
    }
    return leaf;
  });
}

ScalarExpr diff(const ScalarExpr& e, const std::string& coord) {
  if (!e.depends_on(coord)) return zero_expr();
  switch (e.kind()) {
    case Kind::Constant:
      return zero_expr();
    case Kind::Coordinate:
      return e.name() == coord ? one_expr() : zero_expr();
    case Kind::Sum: {
      std::vector<ScalarExpr> t;
      for (const auto& a : e.args()) t.push_back(diff(a, coord));
      return add(std::move(t));
    }
    case Kind::Product: {
      std::vector<ScalarExpr> t;
      const auto& a = e.args();
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (!a[k].depends_on(coord)) continue;
        std::vector<ScalarExpr> f;
        for (std::size_t j = 0; j < a.size(); ++j)
          if (j != k) f.push_back(a[j]);
        f.push_back(diff(a[k], coord));
        t.push_back(mul(std::move(f)));
      }
      return add(std::move(t));
    }
    case Kind::Power: {
      const auto& b = e.args()[0];
      Rational q = e.exponent();
      return mul({constant(CRational(q)), pow(b, q - Rational(1)), diff(b, coord)});
    }
    case Kind::Ln:
      return diff(e.args()[0], coord) / e.args()[0];
    case Kind::Exp:
      return e * diff(e.args()[0], coord);
    case Kind::Quotient:
    case Kind::Sqrt:
      return diff(canonicalize(e), coord);
  }
  return zero_expr();
}

std::set<std::string> coordinates(const ScalarExpr& e) {
  std::set<std::string> out;
  std::vector<ScalarExpr> stack{e};
  while (!stack.empty()) {
    ScalarExpr x = stack.back();
    stack.pop_back();
    if (x.kind() == Kind::Coordinate) out.insert(x.name());
    for (const auto& a : x.args()) stack.push_back(a);
  }
  return out;
}

std::size_t node_count(const ScalarExpr& e) {
  std::size_t n = 1;
  for (const auto& a : e.args()) n += node_count(a);
  return n;
}

ScalarExpr real_part(const ScalarExpr& e) { return mul({constant(CRational(Rational(1, 2))), add({e, conj(e)})}); }
ScalarExpr imag_part(const ScalarExpr& e) {
  return mul({constant(CRational(Rational(0), Rational(-1, 2))), add({e, -conj(e)})});
}

bool is_laurent_polynomial(const ScalarExpr& e) {
  auto monomial_ok = [](const ScalarExpr& f) {
    if (f.kind() == Kind::Constant || f.kind() == Kind::Coordinate) return true;
    return f.kind() == Kind::Power && f.exponent().is_integer() && f.args()[0].kind() == Kind::Coordinate;
  };
  auto term_ok = [&](const ScalarExpr& t) {
    if (t.kind() == Kind::Product) {
      for (const auto& f : t.args())
        if (!monomial_ok(f)) return false;
      return true;
    }
    return monomial_ok(t);
  };
  if (e.kind() == Kind::Sum) {
    for (const auto& t : e.args())
      if (!term_ok(t)) return false;
    return true;
  }
  return term_ok(e);
}

// ---- printing ------------------------------------------------------------

namespace {

enum Ctx { kTop = 0, kFactor = 1, kBase = 2 };

bool looks_negative(const CRational& c) { return c.im.is_zero() ? c.re.sign() < 0 : (c.re.is_zero() && c.im.sign() < 0); }

std::string print_constant(const CRational& c) {
  if (c.im.is_zero()) return c.re.str();
  auto imag = [](const Rational& b) {
    if (b == Rational(1)) return std::string("i");
    return b.str() + "*i";
  };
  if (c.re.is_zero()) {
    if (c.im == Rational(-1)) return "-i";
    if (c.im.sign() < 0) return "-" + imag(-c.im);
    return imag(c.im);
  }
  return c.re.str() + (c.im.sign() < 0 ? "-" : "+") + imag(c.im.sign() < 0 ? -c.im : c.im);
}

std::string print(const ScalarExpr& e, Ctx ctx);

std::string print_positive_power(const ScalarExpr& base, const Rational& q) {
  if (q == Rational(1)) return print(base, kFactor);
  if (q == Rational(1, 2)) return "sqrt(" + print(base, kTop) + ")";
  return print(base, kBase) + "^" + q.str();
}

std::string print_product(const CRational& c, const std::vector<ScalarExpr>& factors) {
  std::vector<std::string> num;
  std::vector<std::string> den;
  for (const auto& f : factors) {
    if (f.kind() == Kind::Power && f.exponent().sign() < 0) {
      den.push_back(print_positive_power(f.args()[0], -f.exponent()));
    } else if (f.kind() == Kind::Power) {
      num.push_back(print_positive_power(f.args()[0], f.exponent()));
    } else {
      num.push_back(print(f, kFactor));
    }
  }
  std::string out;
  if (!c.is_one()) {
    std::string cs = print_constant(c);
    if (!c.im.is_zero() && !c.re.is_zero()) cs = "(" + cs + ")";
    out = cs;
  }
  for (const auto& n : num) out += (out.empty() ? "" : "*") + n;
  if (out.empty()) out = "1";
  for (const auto& d : den) out += "/" + d;
  return out;
}

std::string print_term_abs(const CRational& c, const ScalarExpr& m) {
  if (m.kind() == Kind::Constant) return print_constant(c);
  std::vector<ScalarExpr> f;
  if (m.kind() == Kind::Product) {
    f = m.args();
  } else {
    f.push_back(m);
  }
  return print_product(c, f);
}

std::string print(const ScalarExpr& e, Ctx ctx) {
  switch (e.kind()) {
    case Kind::Constant: {
      const CRational& c = e.value();
      std::string s = print_constant(c);
      bool simple = c.im.is_zero() ? (c.re.sign() >= 0 && (ctx != kBase || c.re.is_integer()))
                                   : (c.re.is_zero() && c.im.sign() > 0 && ctx != kBase && c.im == Rational(1));
      if (ctx == kTop || simple) return s;
      if (ctx == kFactor && c.re.is_zero() && c.im.sign() > 0) return s;
      return "(" + s + ")";
    }
    case Kind::Coordinate:
      return e.name();
    case Kind::Ln:
      return "ln(" + print(e.args()[0], kTop) + ")";
    case Kind::Exp:
      return "exp(" + print(e.args()[0], kTop) + ")";
    case Kind::Power: {
      std::string s = e.exponent().sign() < 0 ? print_product(CRational(1), {e}) : print_positive_power(e.args()[0], e.exponent());
      if (ctx == kBase || (ctx == kFactor && e.exponent().sign() < 0)) return "(" + s + ")";
      return s;
    }
    case Kind::Product: {
      auto [c, m] = split_coeff(e);
      bool neg = looks_negative(c);
      std::string s = (neg ? "-" : "") + print_term_abs(neg ? -c : c, m);
      return ctx == kTop ? s : "(" + s + ")";
    }
    case Kind::Sum: {
      std::string s;
      bool first = true;
      for (const auto& t : e.args()) {
        auto [c, m] = split_coeff(t);
        bool neg = looks_negative(c);
        std::string body = print_term_abs(neg ? -c : c, m);
        if (m.kind() == Kind::Constant && !c.im.is_zero() && !c.re.is_zero()) body = "(" + body + ")";
        if (first) {
          s = (neg ? "-" : "") + body;
        } else {
          s += (neg ? "-" : "+") + body;
        }
        first = false;
      }
      return ctx == kTop ? s : "(" + s + ")";
    }
    case Kind::Quotient:
      return print(e.args()[0], kFactor) + "/" + print(e.args()[1], kBase);
    case Kind::Sqrt:
      return "sqrt(" + print(e.args()[0], kTop) + ")";
  }
  return "?";
}

}  // namespace

std::string to_string(const ScalarExpr& e) { return print(e, kTop); }

// ---- complex coordinates -------------------------------------------------

std::vector<std::string> ComplexChart::real_names() const {
  std::vector<std::string> out;
  for (const auto& c : coords) {
    out.push_back(c.x);
    out.push_back(c.y);
  }
  return out;
}

const ComplexCoordinate& ComplexChart::find(const std::string& z) const {
  for (const auto& c : coords)
    if (c.z == z) return c;
  throw std::invalid_argument("unknown complex coordinate " + z);
}

ScalarExpr wirtinger(const ScalarExpr& e, const ComplexChart& chart, const std::string& z) {
  const auto& c = chart.find(z);
  return diff(e, c.x) - ScalarExpr::imaginary_unit() * diff(e, c.y);
}

ScalarExpr wirtinger_bar(const ScalarExpr& e, const ComplexChart& chart, const std::string& z) {
  const auto& c = chart.find(z);
  return diff(e, c.x) + ScalarExpr::imaginary_unit() * diff(e, c.y);
}

// ---- evaluation ------------------------------------------------------------

namespace {

double positive_real(const ComplexValue& v, const char* what) {
  if (!std::isfinite(v.real()) || std::abs(v.imag()) > 1e-12 * std::max(1.0, std::abs(v.real())) || v.real() <= 0.0)
    throw DomainError(std::string(what) + " of a non-positive argument");
  return v.real();
}

ComplexValue ipow(ComplexValue b, std::int64_t k) {
  if (k < 0) {
    if (b == ComplexValue(0.0, 0.0)) throw DomainError("division by zero");
    b = 1.0 / b;
    k = -k;
  }
  ComplexValue out(1.0, 0.0);
  while (k) {
    if (k & 1) out *= b;
    k >>= 1;
    if (k) b *= b;
  }
  return out;
}

}  // namespace

ComplexValue eval(const ScalarExpr& e, const Point& p) {
  switch (e.kind()) {
    case Kind::Constant:
      return e.value().to_complex();
    case Kind::Coordinate: {
      auto it = p.find(e.name());
      if (it == p.end()) throw std::invalid_argument("unassigned coordinate " + e.name());
      return {it->second, 0.0};
    }
    case Kind::Sum: {
      ComplexValue s(0.0, 0.0);
      for (const auto& a : e.args()) s += eval(a, p);
      return s;
    }
    case Kind::Product: {
      ComplexValue s(1.0, 0.0);
      for (const auto& a : e.args()) s *= eval(a, p);
      return s;
    }
    case Kind::Quotient: {
      ComplexValue d = eval(e.args()[1], p);
      if (d == ComplexValue(0.0, 0.0)) throw DomainError("division by zero");
      return eval(e.args()[0], p) / d;
    }
    case Kind::Power: {
      ComplexValue b = eval(e.args()[0], p);
      const Rational& q = e.exponent();
      if (q.is_integer()) return ipow(b, q.num());
      return {std::pow(positive_real(b, "fractional power"), q.to_double()), 0.0};
    }
    case Kind::Sqrt:
      return {std::sqrt(positive_real(eval(e.args()[0], p), "sqrt")), 0.0};
    case Kind::Ln:
      return {std::log(positive_real(eval(e.args()[0], p), "ln")), 0.0};
    case Kind::Exp:
      return std::exp(eval(e.args()[0], p));
  }
  return {};
}

Interval Domain::interval_for(const std::string& coord) const {
  auto it = boxes.find(coord);
  return it == boxes.end() ? box : it->second;
}

std::vector<Point> sample_points(const std::vector<std::string>& coords, const Domain& domain, int count,
                                 std::uint64_t seed, const std::vector<ScalarExpr>& probe) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(std::size_t(std::max(count, 0)));
  const int max_attempts = 1000;
  for (int k = 0; k < count; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
      Point p;
      for (const auto& c : coords) {
        Interval iv = domain.interval_for(c);
        std::uniform_real_distribution<double> dist(iv.lo, iv.hi);
        p[c] = dist(rng);
      }
      if (domain.predicate && !domain.predicate(p)) continue;
      try {
        for (const auto& e : probe) {
          ComplexValue v = eval(e, p);
          if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("non-finite value");
        }
      } catch (const DomainError&) {
        continue;
      }
      out.push_back(std::move(p));
      ok = true;
    }
    if (!ok) throw SamplerError("could not sample a valid point after " + std::to_string(max_attempts) + " attempts");
  }
  return out;
}

double max_abs(const ScalarExpr& e, const Domain& domain, const ZeroTestOptions& opt) {
  if (e.is_zero_literal()) return 0.0;
  auto cs = coordinates(e);
  std::vector<std::string> coords(cs.begin(), cs.end());
  double worst = 0.0;
  for (const auto& p : sample_points(coords, domain, opt.samples, opt.seed, {e})) worst = std::max(worst, std::abs(eval(e, p)));
  return worst;
}

bool is_zero(const ScalarExpr& e, const Domain& domain, const ZeroTestOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("is_zero needs at least one sample");
  if (!(opt.tol > 0)) throw std::invalid_argument("is_zero needs a positive tolerance");
  if (e.is_zero_literal()) return true;
  if (is_laurent_polynomial(e)) return false;
  auto cs = coordinates(e);
  std::vector<std::string> coords(cs.begin(), cs.end());
  for (const auto& p : sample_points(coords, domain, opt.samples, opt.seed, {e}))
    if (!(std::abs(eval(e, p)) < opt.tol)) return false;
  return true;
}

}  // namespace cartan_cr
