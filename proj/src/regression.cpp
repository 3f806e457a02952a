// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlab {
namespace {

void legendre(double u, int degree, double* out) {
  out[0] = 1.0;
  if (degree >= 1) out[1] = u;
  for (int n = 1; n < degree; ++n) {
    out[n + 1] = ((2.0 * n + 1.0) * u * out[n] - n * out[n - 1]) / (n + 1.0);
  }
}

void hats(double u, int cells, double* out) {
  if (cells == 0) {
    out[0] = 1.0;
    return;
  }
  const double width = 2.0 / cells;
  for (int j = 0; j <= cells; ++j) {
    const double node = -1.0 + j * width;
    out[j] = std::max(0.0, 1.0 - std::abs(u - node) / width);
  }
}

}  // namespace

std::string to_string(BasisFamily family) {
  return family == BasisFamily::polynomial ? "polynomial" : "piecewise_linear";
}

BasisFamily basis_family_from_string(const std::string& name) {
  if (name == "polynomial" || name == "legendre") return BasisFamily::polynomial;
  if (name == "piecewise_linear" || name == "local") return BasisFamily::piecewise_linear;
  throw ParameterError("unknown basis family '" + name + "'");
}

RegressionBasis::RegressionBasis(BasisSpec spec, std::vector<double> lo, std::vector<double> hi)
    : spec_(spec), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (spec_.degree < 0) throw ParameterError("basis degree must be non-negative");
  degrees_.resize(lo_.size());
  n_functions_ = 1;
  for (std::size_t j = 0; j < lo_.size(); ++j) {
    const double spread = hi_[j] - lo_[j];
    const bool flat = !(spread > 1e-12 * (1.0 + std::abs(lo_[j])));
    degrees_[j] = flat ? 0 : spec_.degree;
    n_functions_ *= static_cast<std::size_t>(degrees_[j] + 1);
  }
}

RegressionBasis RegressionBasis::for_cloud(BasisSpec spec, std::size_t dim, std::span<const double> cloud) {
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  const std::size_t n = cloud.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], cloud[i * dim + j]);
      hi[j] = std::max(hi[j], cloud[i * dim + j]);
    }
  }
  return RegressionBasis(spec, std::move(lo), std::move(hi));
}

RegressionBasis RegressionBasis::reduced() const {
  RegressionBasis r = *this;
  r.n_functions_ = 1;
  for (auto& deg : r.degrees_) {
    deg = std::max(0, deg - 1);
    r.n_functions_ *= static_cast<std::size_t>(deg + 1);
  }
  r.spec_.degree = std::max(0, spec_.degree - 1);
  return r;
}

void RegressionBasis::evaluate(std::span<const double> x, std::span<double> out) const {
  const std::size_t d = lo_.size();
  // 1D factors per coordinate, then the tensor product in lexicographic order
  double factors[3][33];
  std::vector<std::vector<double>> heap;
  const int max_deg = *std::max_element(degrees_.begin(), degrees_.end());
  const bool use_stack = d <= 3 && max_deg <= 32;
  if (!use_stack) heap.assign(d, std::vector<double>(static_cast<std::size_t>(max_deg) + 1));
  auto factor_row = [&](std::size_t j) -> double* { return use_stack ? factors[j] : heap[j].data(); };
  for (std::size_t j = 0; j < d; ++j) {
    double u = 0.0;
    if (degrees_[j] > 0) {
      u = 2.0 * (x[j] - lo_[j]) / (hi_[j] - lo_[j]) - 1.0;
    }
    if (spec_.family == BasisFamily::polynomial) {
      legendre(u, degrees_[j], factor_row(j));
    } else {
      hats(std::clamp(u, -1.0, 1.0), degrees_[j], factor_row(j));
    }
  }
  if (d == 1) {
    std::copy(factor_row(0), factor_row(0) + degrees_[0] + 1, out.begin());
    return;
  }
  std::vector<int> idx(d, 0);
  for (std::size_t f = 0; f < n_functions_; ++f) {
    double v = 1.0;
    for (std::size_t j = 0; j < d; ++j) v *= factor_row(j)[idx[j]];
    out[f] = v;
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] <= degrees_[j]) break;
      idx[j] = 0;
    }
  }
}

double RegressionFit::evaluate(std::span<const double> x, std::size_t col) const {
  std::vector<double> phi(basis.size());
  basis.evaluate(x, phi);
  double s = 0.0;
  for (std::size_t f = 0; f < phi.size(); ++f) s += phi[f] * coef(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(col));
  return s;
}

double RegressionFit::standard_error(std::span<const double> x, std::size_t col) const {
  Vector phi(static_cast<Eigen::Index>(basis.size()));
  basis.evaluate(x, as_span(phi));
  const double q = phi.dot(normal_inverse * phi);
  return std::sqrt(std::max(0.0, q * residual_var(static_cast<Eigen::Index>(col))));
}

double RegressionFit::difference_standard_error(std::span<const double> x, std::span<const double> y,
                                                std::size_t col) const {
  Vector px(static_cast<Eigen::Index>(basis.size())), py(static_cast<Eigen::Index>(basis.size()));
  basis.evaluate(x, as_span(px));
  basis.evaluate(y, as_span(py));
  const Vector d = px - py;
  const double q = d.dot(normal_inverse * d);
  return std::sqrt(std::max(0.0, q * residual_var(static_cast<Eigen::Index>(col))));
}

RegressionDesign::RegressionDesign(BasisSpec spec, std::size_t dim, std::span<const double> cloud,
                                   std::vector<std::string>* warnings, double rcond_min) {
  const std::size_t n = cloud.size() / dim;
  if (n == 0) throw ParameterError("regression: empty cloud");
  basis_ = RegressionBasis::for_cloud(spec, dim, cloud);
  for (;;) {
    const auto p = static_cast<Eigen::Index>(basis_.size());
    design_.resize(static_cast<Eigen::Index>(n), p);
    std::vector<double> row(basis_.size());
    for (std::size_t i = 0; i < n; ++i) {
      basis_.evaluate(cloud.subspan(i * dim, dim), row);
      for (Eigen::Index f = 0; f < p; ++f) design_(static_cast<Eigen::Index>(i), f) = row[static_cast<std::size_t>(f)];
    }
    const Matrix normal = design_.transpose() * design_;
    Eigen::SelfAdjointEigenSolver<Matrix> es(normal, Eigen::EigenvaluesOnly);
    const double emax = es.eigenvalues().maxCoeff();
    const double emin = es.eigenvalues().minCoeff();
    const bool singular = !(emax > 0.0) || emin / emax < rcond_min;
    if (singular && basis_.size() > 1) {
      if (warnings) {
        warnings->push_back("regression design rank-deficient at degree " +
                            std::to_string(basis_.spec().degree) + "; degrading basis");
      }
      basis_ = basis_.reduced();
      degraded_ = true;
      continue;
    }
    if (!(emax > 0.0)) throw NumericalError("regression: degenerate design");
    ldlt_.compute(normal);
    normal_inverse_ = ldlt_.solve(Matrix::Identity(p, p));
    return;
  }
}

RegressionResult RegressionDesign::fit(const Matrix& targets) const {
  if (targets.rows() != design_.rows()) throw ParameterError("regression: target size mismatch");
  RegressionResult out;
  out.fit.basis = basis_;
  out.fit.degraded = degraded_;
  out.fit.coef = ldlt_.solve(design_.transpose() * targets);
  out.fit.normal_inverse = normal_inverse_;
  out.fitted = design_ * out.fit.coef;
  const double dof = std::max<double>(1.0, static_cast<double>(design_.rows() - design_.cols()));
  out.fit.residual_var = (targets - out.fitted).colwise().squaredNorm().transpose() / dof;
  return out;
}

RegressionResult least_squares(BasisSpec spec, std::size_t dim, std::span<const double> cloud,
                               const Matrix& targets, std::vector<std::string>* warnings,
                               double rcond_min) {
  return RegressionDesign(spec, dim, cloud, warnings, rcond_min).fit(targets);
}

}  // namespace nlab
