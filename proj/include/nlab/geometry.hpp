// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlab/common.hpp"

namespace nlab {

class PathStream;

/// Bounded convex domain G = {phi > 0} centred at the origin.
///
/// Three shapes are supported: an interval [-a, a], a ball of radius rho and
/// an axis-aligned ellipsoid. The defining function phi is C^2 with Lipschitz
/// second derivatives and |grad phi| = 1 on the boundary, where grad phi is the
/// inward unit normal.
///
///   interval / ball : phi(x) = (rho^2 - |x|^2) / (2 rho)
///   ellipsoid       : phi(x) = (1 - q(x)) / (2 m(x)),  q(x) = sum x_i^2 / a_i^2,
///                     m(x) = sqrt(sum x_i^2 / a_i^4 + eps (1 - q(x))^2)
///
/// Instances are immutable and safe to share between threads.
class ConvexDomain {
 public:
  enum class Kind { interval, ball, ellipsoid };

  static ConvexDomain interval(double half_width = 1.0);
  static ConvexDomain ball(std::size_t dim, double radius = 1.0);
  static ConvexDomain ellipsoid(std::vector<double> semi_axes);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return semi_axes_.size(); }
  const std::vector<double>& semi_axes() const { return semi_axes_; }
  /// Radius of the interval / ball; largest semi-axis for an ellipsoid.
  double radius() const;
  double diameter() const { return 2.0 * radius(); }
  bool contains_origin() const { return true; }
  std::string describe() const;

  double phi(std::span<const double> x) const;
  void grad_phi(std::span<const double> x, std::span<double> out) const;
  /// True when x lies in closure(G) up to `tol` in phi.
  bool contains(std::span<const double> x, double tol = 1e-12) const;

  /// Replaces x by its Euclidean projection onto closure(G) and returns the
  /// distance moved.
  double project_in_place(std::span<double> x) const;
  Vector project(const Vector& x) const;
  double distance(std::span<const double> x) const;

  /// -2n (x - Pi(x)).
  Vector penalization_force(const Vector& x, int n) const;

  /// Scales x != 0 along the ray from the origin onto the boundary.
  void radial_to_boundary(std::span<double> x) const;

  /// The same shape with every semi-axis reduced by `margin`.
  ConvexDomain shrunk(double margin) const;

  /// Uniform draw over closure(G) from the given stream (rejection sampling
  /// from the bounding box for balls and ellipsoids).
  void sample_uniform(PathStream& stream, std::span<double> out) const;

 private:
  ConvexDomain(Kind kind, std::vector<double> semi_axes);
  double project_ellipsoid(std::span<double> x) const;

  Kind kind_;
  std::vector<double> semi_axes_;
  double eps_ = 0.0;  // ellipsoid regulariser for m(x)
};

void check_finite(std::span<const double> x, const char* what);

/// Weak-dissipative extension b~(x) = -x + b(Pi(x)) + Pi(x) of a drift given
/// on closure(G). It equals b on closure(G) and b~(x) + x is bounded.
class DriftExtension {
 public:
  DriftExtension(VectorField base, ConvexDomain domain, double base_sup_norm);

  void base(std::span<const double> x, std::span<double> out) const { base_(x, out); }
  void extended(std::span<const double> x, std::span<double> out) const;
  Vector extended(const Vector& x) const;
  /// Strict-dissipativity constant of the -x part.
  double dissipativity_constant() const { return 1.0; }
  /// Bound on |b~(x) + x| over R^d: sup |b| + diameter.
  double remainder_bound() const { return base_sup_ + domain_.diameter(); }
  const ConvexDomain& domain() const { return domain_; }
  /// As a plain vector field (captures a copy of this object).
  VectorField as_field() const;

 private:
  VectorField base_;
  ConvexDomain domain_;
  double base_sup_;
};

DriftExtension extend_drift(VectorField b, const ConvexDomain& domain, double base_sup_norm);

}  // namespace nlab
