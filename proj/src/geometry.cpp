// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlab/rng.hpp"

namespace nlab {

void check_finite(std::span<const double> x, const char* what) {
  if (!all_finite(x)) throw DomainError(std::string(what) + ": non-finite coordinate");
}

ConvexDomain::ConvexDomain(Kind kind, std::vector<double> semi_axes)
    : kind_(kind), semi_axes_(std::move(semi_axes)) {
  if (semi_axes_.empty()) throw ParameterError("domain: dimension must be positive");
  for (double a : semi_axes_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("domain: semi-axes must be positive");
  }
  if (kind_ == Kind::ellipsoid) {
    const double a_max = *std::max_element(semi_axes_.begin(), semi_axes_.end());
    eps_ = 1.0 / (a_max * a_max);
  }
}

ConvexDomain ConvexDomain::interval(double half_width) {
  return ConvexDomain(Kind::interval, {half_width});
}

ConvexDomain ConvexDomain::ball(std::size_t dim, double radius) {
  if (dim == 0) throw ParameterError("ball: dimension must be positive");
  return ConvexDomain(Kind::ball, std::vector<double>(dim, radius));
}

ConvexDomain ConvexDomain::ellipsoid(std::vector<double> semi_axes) {
  return ConvexDomain(Kind::ellipsoid, std::move(semi_axes));
}

double ConvexDomain::radius() const {
  return *std::max_element(semi_axes_.begin(), semi_axes_.end());
}

std::string ConvexDomain::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::interval: os << "interval[-" << semi_axes_[0] << "," << semi_axes_[0] << "]"; break;
    case Kind::ball: os << "ball(d=" << dim() << ",r=" << semi_axes_[0] << ")"; break;
    case Kind::ellipsoid:
      os << "ellipsoid(";
      for (std::size_t i = 0; i < semi_axes_.size(); ++i) os << (i ? "," : "") << semi_axes_[i];
      os << ")";
      break;
  }
  return os.str();
}

double ConvexDomain::phi(std::span<const double> x) const {
  check_finite(x, "phi");
  if (kind_ != Kind::ellipsoid) {
    const double r = semi_axes_[0];
    double s = 0.0;
    for (double v : x) s += v * v;
    return (r * r - s) / (2.0 * r);
  }
  double q = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a2 = semi_axes_[i] * semi_axes_[i];
    q += x[i] * x[i] / a2;
    s += x[i] * x[i] / (a2 * a2);
  }
  const double n = 1.0 - q;
  return n / (2.0 * std::sqrt(s + eps_ * n * n));
}

void ConvexDomain::grad_phi(std::span<const double> x, std::span<double> out) const {
  check_finite(x, "grad_phi");
  if (kind_ != Kind::ellipsoid) {
    const double r = semi_axes_[0];
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i] / r;
    return;
  }
  double q = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a2 = semi_axes_[i] * semi_axes_[i];
    q += x[i] * x[i] / a2;
    s += x[i] * x[i] / (a2 * a2);
  }
  const double n = 1.0 - q;
  const double m = std::sqrt(s + eps_ * n * n);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a2 = semi_axes_[i] * semi_axes_[i];
    const double dn = -2.0 * x[i] / a2;
    const double ds = 2.0 * x[i] / (a2 * a2);
    const double dm = (ds + 2.0 * eps_ * n * dn) / (2.0 * m);
    out[i] = (dn * m - n * dm) / (2.0 * m * m);
  }
}

bool ConvexDomain::contains(std::span<const double> x, double tol) const {
  return phi(x) >= -tol;
}

double ConvexDomain::project_ellipsoid(std::span<double> x) const {
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) q += x[i] * x[i] / (semi_axes_[i] * semi_axes_[i]);
  if (q <= 1.0) return 0.0;
  // Lagrange multiplier t >= 0 solves F(t) = sum a^2 x^2 / (a^2 + t)^2 - 1 = 0.
  // F is convex and decreasing on t >= 0 with F(0) > 0, so Newton from 0 is monotone.
  double t = 0.0;
  for (int it = 0; it < 200; ++it) {
    double f = -1.0, df = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a2 = semi_axes_[i] * semi_axes_[i];
      const double den = a2 + t;
      const double w = a2 * x[i] * x[i];
      f += w / (den * den);
      df -= 2.0 * w / (den * den * den);
    }
    if (df == 0.0) break;
    const double step = f / df;
    t -= step;
    if (std::abs(step) <= 1e-12 * (1.0 + t)) break;
  }
  double moved2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a2 = semi_axes_[i] * semi_axes_[i];
    const double y = a2 * x[i] / (a2 + t);
    moved2 += (x[i] - y) * (x[i] - y);
    x[i] = y;
  }
  return std::sqrt(moved2);
}

double ConvexDomain::project_in_place(std::span<double> x) const {
  check_finite(x, "project");
  if (kind_ == Kind::interval) {
    const double r = semi_axes_[0];
    const double y = std::clamp(x[0], -r, r);
    const double moved = std::abs(x[0] - y);
    x[0] = y;
    return moved;
  }
  if (kind_ == Kind::ball) {
    const double r = semi_axes_[0];
    const double len = norm(x);
    if (len <= r) return 0.0;
    const double scale = r / len;
    for (double& v : x) v *= scale;
    return len - r;
  }
  return project_ellipsoid(x);
}

Vector ConvexDomain::project(const Vector& x) const {
  Vector y = x;
  project_in_place(as_span(y));
  return y;
}

double ConvexDomain::distance(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  return project_in_place(y);
}

Vector ConvexDomain::penalization_force(const Vector& x, int n) const {
  if (n < 1) throw ParameterError("penalization_force: n must be >= 1");
  const Vector p = project(x);
  return -2.0 * n * (x - p);
}

void ConvexDomain::radial_to_boundary(std::span<double> x) const {
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) q += x[i] * x[i] / (semi_axes_[i] * semi_axes_[i]);
  if (!(q > 0.0)) return;
  const double scale = 1.0 / std::sqrt(q);
  for (double& v : x) v *= scale;
}

ConvexDomain ConvexDomain::shrunk(double margin) const {
  std::vector<double> axes = semi_axes_;
  for (double& a : axes) {
    a -= margin;
    if (!(a > 0.0)) throw ParameterError("domain: shrink margin exceeds a semi-axis");
  }
  return ConvexDomain(kind_, std::move(axes));
}

void ConvexDomain::sample_uniform(PathStream& stream, std::span<double> out) const {
  if (kind_ == Kind::interval) {
    out[0] = semi_axes_[0] * (2.0 * stream.uniform() - 1.0);
    return;
  }
  for (;;) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = semi_axes_[i] * (2.0 * stream.uniform() - 1.0);
    }
    double q = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      q += out[i] * out[i] / (semi_axes_[i] * semi_axes_[i]);
    }
    if (q <= 1.0) return;
  }
}

DriftExtension::DriftExtension(VectorField base, ConvexDomain domain, double base_sup_norm)
    : base_(std::move(base)), domain_(std::move(domain)), base_sup_(base_sup_norm) {
  if (!base_) throw ParameterError("extend_drift: empty drift");
}

void DriftExtension::extended(std::span<const double> x, std::span<double> out) const {
  const std::size_t d = x.size();
  double buf_p[8];
  std::vector<double> heap;
  std::span<double> p;
  if (d <= 8) {
    p = std::span<double>(buf_p, d);
  } else {
    heap.resize(d);
    p = heap;
  }
  std::copy(x.begin(), x.end(), p.begin());
  domain_.project_in_place(p);
  base_(p, out);
  for (std::size_t i = 0; i < d; ++i) out[i] += -x[i] + p[i];
}

Vector DriftExtension::extended(const Vector& x) const {
  Vector out(x.size());
  extended(as_span(x), as_span(out));
  return out;
}

VectorField DriftExtension::as_field() const {
  return [ext = *this](std::span<const double> x, std::span<double> out) { ext.extended(x, out); };
}

DriftExtension extend_drift(VectorField b, const ConvexDomain& domain, double base_sup_norm) {
  return DriftExtension(std::move(b), domain, base_sup_norm);
}

}  // namespace nlab
