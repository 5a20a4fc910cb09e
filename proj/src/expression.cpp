#include "optsample/expression.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace optsample {

namespace {

class Parser {
 public:
  Parser(const std::string& text, int dimension) : s_(text), d_(dimension) {}

  Expression parse_all() {
    Expression e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

  // Parses an expression and stops at a comparison operator.
  Expression parse_until_comparison() { return expr(); }

  std::string comparison() {
    skip();
    for (const char* op : {"<=", ">=", "<", ">"}) {
      const std::string o(op);
      if (s_.compare(pos_, o.size(), o) == 0) {
        pos_ += o.size();
        return o;
      }
    }
    fail("expected <=, >=, < or >");
  }

  void expect_end() {
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument(what + " at column " + std::to_string(pos_ + 1) + " in '" + s_ + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression expr() {
    Expression lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = [a = lhs, b = term()](std::span<const double> x) { return a(x) + b(x); };
      } else if (accept('-')) {
        lhs = [a = lhs, b = term()](std::span<const double> x) { return a(x) - b(x); };
      } else {
        return lhs;
      }
    }
  }

  Expression term() {
    Expression lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = [a = lhs, b = unary()](std::span<const double> x) { return a(x) * b(x); };
      } else if (accept('/')) {
        lhs = [a = lhs, b = unary()](std::span<const double> x) { return a(x) / b(x); };
      } else {
        return lhs;
      }
    }
  }

  Expression unary() {
    if (accept('-')) return [a = unary()](std::span<const double> x) { return -a(x); };
    if (accept('+')) return unary();
    return power();
  }

  Expression power() {
    Expression base = primary();
    if (accept('^')) {
      // Right associative; the exponent may carry a sign.
      return [a = base, b = unary()](std::span<const double> x) { return std::pow(a(x), b(x)); };
    }
    return base;
  }

  Expression primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    if (accept('(')) {
      Expression e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      return [v](std::span<const double>) { return v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) ++end;
      const std::string name = s_.substr(pos_, end - pos_);
      if (name.size() > 1 && name[0] == 'x' && name.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int k = std::stoi(name.substr(1));
        if (k < 1 || k > d_) fail("variable " + name + " out of range");
        pos_ = end;
        const auto i = static_cast<std::size_t>(k - 1);
        return [i](std::span<const double> x) { return x[i]; };
      }
      if (name == "sqrt" || name == "abs") {
        pos_ = end;
        if (!accept('(')) fail("expected '(' after " + name);
        Expression arg = expr();
        if (!accept(')')) fail("expected ')'");
        if (name == "sqrt") return [a = arg](std::span<const double> x) { return std::sqrt(a(x)); };
        return [a = arg](std::span<const double> x) { return std::abs(a(x)); };
      }
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected character");
  }

  std::string s_;
  int d_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(const std::string& text, int dimension) {
  if (dimension < 1) throw std::invalid_argument("dimension must be positive");
  return Parser(text, dimension).parse_all();
}

Indicator parse_constraint(const std::string& text, int dimension) {
  if (dimension < 1) throw std::invalid_argument("dimension must be positive");
  Parser p(text, dimension);
  Expression lhs = p.parse_until_comparison();
  const std::string op = p.comparison();
  Expression rhs = p.parse_until_comparison();
  p.expect_end();
  if (op == "<=") return [lhs, rhs](std::span<const double> x) { return lhs(x) <= rhs(x); };
  if (op == ">=") return [lhs, rhs](std::span<const double> x) { return lhs(x) >= rhs(x); };
  if (op == "<") return [lhs, rhs](std::span<const double> x) { return lhs(x) < rhs(x); };
  return [lhs, rhs](std::span<const double> x) { return lhs(x) > rhs(x); };
}

Indicator parse_constraints(const std::vector<std::string>& constraints, int dimension) {
  if (constraints.empty()) throw std::invalid_argument("custom domain needs at least one constraint");
  std::vector<Indicator> parts;
  for (const auto& c : constraints) parts.push_back(parse_constraint(c, dimension));
  return [parts = std::move(parts)](std::span<const double> x) {
    for (const auto& p : parts) {
      if (!p(x)) return false;
    }
    return true;
  };
}

}  // namespace optsample
