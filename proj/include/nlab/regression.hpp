// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "nlab/common.hpp"

namespace nlab {

enum class BasisFamily { polynomial, piecewise_linear };

/// Polynomial: tensor Legendre basis with per-coordinate degree `degree`.
/// Piecewise linear: tensor hat functions on `degree` equal cells per
/// coordinate.
struct BasisSpec {
  BasisFamily family = BasisFamily::polynomial;
  int degree = 4;
};

std::string to_string(BasisFamily family);
BasisFamily basis_family_from_string(const std::string& name);

/// Regression basis on the bounding box of a point cloud, affinely rescaled
/// to [-1, 1]^d. Coordinates with no spread get degree 0.
class RegressionBasis {
 public:
  RegressionBasis() = default;
  RegressionBasis(BasisSpec spec, std::vector<double> lo, std::vector<double> hi);

  static RegressionBasis for_cloud(BasisSpec spec, std::size_t dim, std::span<const double> cloud);

  std::size_t size() const { return n_functions_; }
  std::size_t dim() const { return lo_.size(); }
  const BasisSpec& spec() const { return spec_; }
  /// Per-coordinate degree actually used.
  const std::vector<int>& degrees() const { return degrees_; }
  void evaluate(std::span<const double> x, std::span<double> out) const;
  /// Same box, degree reduced by one (on every coordinate with degree > 0).
  RegressionBasis reduced() const;

 private:
  BasisSpec spec_;
  std::vector<double> lo_, hi_;
  std::vector<int> degrees_;
  std::size_t n_functions_ = 0;
};

/// Least-squares coefficients for one or more targets sharing a design.
struct RegressionFit {
  RegressionBasis basis;
  Matrix coef;           // size() x n_targets
  Matrix normal_inverse; // (A^T A)^{-1}
  Vector residual_var;   // per target
  bool degraded = false;

  /// Fitted value of target `col` at x.
  double evaluate(std::span<const double> x, std::size_t col = 0) const;
  /// Standard error of the fitted value of target `col` at x.
  double standard_error(std::span<const double> x, std::size_t col = 0) const;
  /// Standard error of fitted(x) - fitted(y).
  double difference_standard_error(std::span<const double> x, std::span<const double> y,
                                   std::size_t col = 0) const;
};

struct RegressionResult {
  RegressionFit fit;
  Matrix fitted;  // n_points x n_targets
};

/// Design matrix of a cloud, factorised once and reused for several targets.
class RegressionDesign {
 public:
  /// A rank-deficient design (reciprocal condition number below `rcond_min`)
  /// drops one degree and retries, recording a warning.
  RegressionDesign(BasisSpec spec, std::size_t dim, std::span<const double> cloud,
                   std::vector<std::string>* warnings = nullptr, double rcond_min = 1e-12);

  RegressionResult fit(const Matrix& targets) const;
  const RegressionBasis& basis() const { return basis_; }
  std::size_t n_points() const { return static_cast<std::size_t>(design_.rows()); }

 private:
  RegressionBasis basis_;
  Matrix design_;
  Eigen::LDLT<Matrix> ldlt_;
  Matrix normal_inverse_;
  bool degraded_ = false;
};

/// Fits every column of `targets` (n_points x q) on the cloud (n_points * dim
/// values).
RegressionResult least_squares(BasisSpec spec, std::size_t dim, std::span<const double> cloud,
                               const Matrix& targets, std::vector<std::string>* warnings = nullptr,
                               double rcond_min = 1e-12);

}  // namespace nlab
