// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace nlab {

struct Expression::Node {
  enum class Op { number, var_x, var_a, var_y, var_z, norm_z, add, sub, mul, div, pow, neg, abs };
  Op op = Op::number;
  double value = 0.0;
  int index = 0;  // coordinate for x / z, exponent for pow
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_, 1) + "'");
    return n;
  }

  bool uses_z = false, uses_y = false, uses_a = false;

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParameterError("expression '" + s_ + "': " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) {
        n = make(Node::Op::add, n, term());
      } else if (eat('-')) {
        n = make(Node::Op::sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) {
        n = make(Node::Op::mul, n, unary());
      } else if (eat('/')) {
        n = make(Node::Op::div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Node::Op::neg, unary());
    if (eat('+')) return unary();
    NodePtr base = primary();
    if (eat('^')) {
      skip();
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const long e = std::strtol(begin, &end, 10);
      if (end == begin || e < 0 || e > 16) fail("exponent must be an integer in [0, 16]");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->op = Node::Op::pow;
      n->lhs = base;
      n->index = static_cast<int>(e);
      return n;
    }
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->op = Node::Op::number;
      n->value = v;
      return n;
    }
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t e = pos_;
      while (e < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_')) ++e;
      const std::string id = s_.substr(pos_, e - pos_);
      pos_ = e;
      if (id == "abs") {
        if (!eat('(')) fail("abs needs '('");
        NodePtr n = make(Node::Op::abs, expr());
        if (!eat(')')) fail("missing ')'");
        return n;
      }
      auto n = std::make_shared<Node>();
      if (id == "a") {
        n->op = Node::Op::var_a;
        uses_a = true;
      } else if (id == "y") {
        n->op = Node::Op::var_y;
        uses_y = true;
      } else if (id == "norm_z") {
        n->op = Node::Op::norm_z;
        uses_z = true;
      } else if (id == "x" || id == "z" || ((id[0] == 'x' || id[0] == 'z') && id.size() == 2 && id[1] >= '1' && id[1] <= '3')) {
        n->op = id[0] == 'x' ? Node::Op::var_x : Node::Op::var_z;
        n->index = id.size() == 2 ? id[1] - '1' : 0;
        if (id[0] == 'z') uses_z = true;
      } else {
        fail("unknown identifier '" + id + "'");
      }
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, const Variables& v) {
  switch (n.op) {
    case Node::Op::number: return n.value;
    case Node::Op::var_x:
      if (static_cast<std::size_t>(n.index) >= v.x.size()) throw ParameterError("expression: x index exceeds dimension");
      return v.x[static_cast<std::size_t>(n.index)];
    case Node::Op::var_z:
      if (static_cast<std::size_t>(n.index) >= v.z.size()) throw ParameterError("expression: z index exceeds dimension");
      return v.z[static_cast<std::size_t>(n.index)];
    case Node::Op::norm_z: return norm(v.z);
    case Node::Op::var_a: return v.a;
    case Node::Op::var_y: return v.y;
    case Node::Op::add: return eval(*n.lhs, v) + eval(*n.rhs, v);
    case Node::Op::sub: return eval(*n.lhs, v) - eval(*n.rhs, v);
    case Node::Op::mul: return eval(*n.lhs, v) * eval(*n.rhs, v);
    case Node::Op::div: return eval(*n.lhs, v) / eval(*n.rhs, v);
    case Node::Op::neg: return -eval(*n.lhs, v);
    case Node::Op::abs: return std::abs(eval(*n.lhs, v));
    case Node::Op::pow: {
      const double b = eval(*n.lhs, v);
      double r = 1.0;
      for (int i = 0; i < n.index; ++i) r *= b;
      return r;
    }
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  Expression e;
  e.root_ = p.parse();
  e.text_ = text;
  e.uses_z_ = p.uses_z;
  e.uses_y_ = p.uses_y;
  e.uses_a_ = p.uses_a;
  return e;
}

double Expression::operator()(const Variables& v) const { return eval(*root_, v); }

ScalarField scalar_field(const std::string& text) {
  const Expression e = Expression::parse(text);
  if (e.uses_z() || e.uses_y() || e.uses_a()) {
    throw ParameterError("expression '" + text + "': only x may appear here");
  }
  return [e](std::span<const double> x) { return e(x); };
}

Driver make_driver(const std::string& spec, double lipschitz_z) {
  if (spec == "zero") return Driver::zero();
  // abs_z names the same -|z| Hamiltonian; write norm_z for +|z|.
  if (spec == "neg_abs_z" || spec == "abs_z") return Driver::neg_abs_z();
  if (spec.rfind("constant:", 0) == 0) {
    const std::string num = spec.substr(9);
    char* end = nullptr;
    const double c = std::strtod(num.c_str(), &end);
    if (num.empty() || *end != '\0') throw ParameterError("driver '" + spec + "': bad constant");
    return Driver::constant(c);
  }
  const Expression e = Expression::parse(spec);
  if (e.uses_a()) throw ParameterError("driver '" + spec + "': 'a' is not available in a driver");
  Driver d;
  d.eval = [e](std::span<const double> x, double y, std::span<const double> z) { return e(Variables{x, 0.0, y, z}); };
  d.depends_on_z = e.uses_z();
  d.depends_on_y = e.uses_y();
  d.lipschitz_z = e.uses_z() ? lipschitz_z : 0.0;
  d.name = spec;
  return d;
}

}  // namespace nlab
