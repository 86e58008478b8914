#include <algorithm>
#include <cctype>

#include "cartan_cr/expr.hpp"

namespace cartan_cr {

namespace {

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& chart) : s_(text), chart_(chart) {}

  ScalarExpr run() {
    ScalarExpr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  ScalarExpr expr() {
    std::vector<ScalarExpr> terms;
    bool neg = false;
    if (peek('-')) {
      neg = true;
      ++pos_;
    }
    terms.push_back(negate_if(term(), neg));
    while (peek('+') || peek('-')) {
      bool minus = s_[pos_] == '-';
      ++pos_;
      terms.push_back(negate_if(term(), minus));
    }
    return terms.size() == 1 ? terms.front() : raw_node(Kind::Sum, std::move(terms));
  }

  static ScalarExpr negate_if(ScalarExpr t, bool neg) {
    if (!neg) return t;
    return raw_node(Kind::Product, {ScalarExpr(CRational(-1)), std::move(t)});
  }

  ScalarExpr term() {
    ScalarExpr acc = factor();
    std::vector<ScalarExpr> prod{acc};
    while (peek('*') || peek('/')) {
      bool div = s_[pos_] == '/';
      ++pos_;
      ScalarExpr f = factor();
      if (div) {
        ScalarExpr left = prod.size() == 1 ? prod.front() : raw_node(Kind::Product, prod);
        prod = {raw_node(Kind::Quotient, {left, f})};
      } else {
        prod.push_back(f);
      }
    }
    return prod.size() == 1 ? prod.front() : raw_node(Kind::Product, std::move(prod));
  }

  ScalarExpr factor() {
    ScalarExpr a = atom();
    if (peek('^')) {
      ++pos_;
      skip();
      // also accepts a parenthesised exponent such as ^(3/2) or ^(-1)
      bool paren = peek('(');
      if (paren) {
        ++pos_;
        skip();
      }
      bool neg = false;
      if (pos_ < s_.size() && s_[pos_] == '-') {
        neg = true;
        ++pos_;
        skip();
      }
      std::size_t at = pos_;
      if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) throw ParseError("expected rational exponent", at);
      Rational q = rational();
      if (neg) q = -q;
      if (paren) expect(')');
      return raw_node(Kind::Power, {a}, q);
    }
    return a;
  }

  std::int64_t integer() {
    std::size_t start = pos_;
    std::int64_t v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      if (v > (INT64_MAX - 9) / 10) throw ParseError("integer literal too large", start);
      v = v * 10 + (s_[pos_] - '0');
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected integer", start);
    return v;
  }

  // integer ('/' positive-integer)?, the slash taken only when a digit follows
  Rational rational() {
    std::int64_t n = integer();
    if (pos_ + 1 < s_.size() && s_[pos_] == '/' && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
      std::size_t at = pos_ + 1;
      ++pos_;
      std::int64_t d = integer();
      if (d == 0) throw ParseError("zero denominator", at);
      return Rational(n, d);
    }
    return Rational(n);
  }

  ScalarExpr atom() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return ScalarExpr(rational());
    if (c == '(') {
      ++pos_;
      ScalarExpr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (id == "ln" || id == "sqrt" || id == "exp") {
        if (!peek('(')) throw ParseError("expected '(' after " + id, pos_);
        ++pos_;
        ScalarExpr arg = expr();
        expect(')');
        Kind k = id == "ln" ? Kind::Ln : (id == "sqrt" ? Kind::Sqrt : Kind::Exp);
        return raw_node(k, {arg});
      }
      if (id == "i") return ScalarExpr::imaginary_unit();
      if (std::find(chart_.begin(), chart_.end(), id) == chart_.end())
        throw ParseError("unknown coordinate '" + id + "'", start);
      return ScalarExpr::coordinate(id);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  const std::string& s_;
  const std::vector<std::string>& chart_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarExpr parse_raw(const std::string& text, const std::vector<std::string>& chart) { return Parser(text, chart).run(); }

ScalarExpr parse(const std::string& text, const std::vector<std::string>& chart) {
  ScalarExpr raw = parse_raw(text, chart);
  try {
    return canonicalize(raw);
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid constant expression: ") + e.what(), 0);
  }
}

}  // namespace cartan_cr
