// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>

#include "nlab/bsde.hpp"

namespace nlab {

/// Values an expression may reference: x (= x1), x1..x3, a, y, z (= z1), z1..z3.
struct Variables {
  std::span<const double> x;
  double a = 0.0;
  double y = 0.0;
  std::span<const double> z;
};

/// Small arithmetic grammar: numbers, the variables above, + - * /, integer
/// powers (^), parentheses and abs(.), norm_z (Euclidean |z|).
class Expression {
 public:
  /// Throws ParameterError naming the offending token.
  static Expression parse(const std::string& text);

  double operator()(const Variables& v) const;
  double operator()(std::span<const double> x) const { return (*this)(Variables{x, 0.0, 0.0, {}}); }
  bool uses_z() const { return uses_z_; }
  bool uses_y() const { return uses_y_; }
  bool uses_a() const { return uses_a_; }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  bool uses_z_ = false;
  bool uses_y_ = false;
  bool uses_a_ = false;
};

ScalarField scalar_field(const std::string& text);

/// Built-in names (zero, constant:c, neg_abs_z with alias abs_z) or an expression in
/// x, y, z. `lipschitz_z` is the declared constant for z-dependent expressions.
Driver make_driver(const std::string& spec, double lipschitz_z = 1.0);

}  // namespace nlab
