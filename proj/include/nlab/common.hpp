// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Scalar field evaluated at a point of R^d.
using ScalarField = std::function<double(std::span<const double>)>;
/// Vector field R^d -> R^d, written into `out`.
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise invalid point.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid numeric parameter (step sizes, counts, exponents).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation is violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The numerics failed (blow-up, non-convergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Monte-Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline std::span<double> as_span(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// Mean and standard error of a sample, sequential accumulation.
inline Estimate sample_estimate(std::span<const double> xs) {
  const auto n = xs.size();
  if (n == 0) return {};
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

}  // namespace nlab
