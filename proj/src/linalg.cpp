#include "onlab/linalg.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <cmath>
#include <limits>
#include <numeric>

#include "onlab/error.hpp"

namespace onlab {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_dims(data_.size(), rows * cols, "Mat data");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_dims(r.size(), cols_, "Mat row");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(const Vec& d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vec Mat::col(std::size_t j) const {
  Vec c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vec matvec(const Mat& m, const Vec& v) {
  require_dims(v.size(), m.cols(), "matvec");
  Vec out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += r[j] * v[j];
    out[i] = s;
  }
  return out;
}

Vec matvec_t(const Mat& m, const Vec& u) {
  require_dims(u.size(), m.rows(), "matvec_t");
  Vec out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    const double ui = u[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += r[j] * ui;
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  require_dims(b.rows(), a.cols(), "matmul");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

double frobenius_norm(const Mat& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

double dot(const Vec& a, const Vec& b) {
  require_dims(b.size(), a.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec add(const Vec& a, const Vec& b) {
  require_dims(b.size(), a.size(), "add");
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Vec sub(const Vec& a, const Vec& b) {
  require_dims(b.size(), a.size(), "sub");
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Vec scaled(const Vec& v, double s) {
  Vec c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i] * s;
  return c;
}

void axpy(double a, const Vec& x, Vec& y) {
  require_dims(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double cosine(const Vec& a, const Vec& b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) fail(ErrorKind::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

NormOrder NormOrder::infinity() {
  return NormOrder(Kind::Infinity, std::numeric_limits<double>::infinity());
}

NormOrder NormOrder::finite(double p) {
  if (p == 1.0) return one();
  if (p == 2.0) return two();
  if (!(p > 1.0) || !std::isfinite(p))
    fail(ErrorKind::UnsupportedNorm, "norm order must be finite and > 1, got " + std::to_string(p));
  return NormOrder(Kind::Finite, p);
}

NormOrder NormOrder::parse(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "Inf") return infinity();
  std::size_t pos = 0;
  double p = 0.0;
  try {
    p = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(ErrorKind::UnsupportedNorm, "cannot parse norm order '" + s + "'");
  }
  if (pos != s.size()) fail(ErrorKind::UnsupportedNorm, "cannot parse norm order '" + s + "'");
  return finite(p);
}

std::string NormOrder::to_string() const {
  switch (kind_) {
    case Kind::One: return "1";
    case Kind::Two: return "2";
    case Kind::Infinity: return "inf";
    case Kind::Finite: break;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p_);
  return buf;
}

namespace {

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double p_norm(const Vec& v, NormOrder p) {
  switch (p.kind()) {
    case NormOrder::Kind::One: {
      double s = 0.0;
      for (double x : v) s += std::fabs(x);
      return s;
    }
    case NormOrder::Kind::Two: return norm2(v);
    case NormOrder::Kind::Infinity: return max_abs(v);
    case NormOrder::Kind::Finite: break;
  }
  const double m = max_abs(v);
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::pow(std::fabs(x) / m, p.value());
  return m * std::pow(s, 1.0 / p.value());
}

Vec p_norm_gradient(const Vec& v, NormOrder p) {
  const double m = max_abs(v);
  if (m == 0.0) fail(ErrorKind::ZeroVector, "p-norm gradient at the zero vector");
  Vec g(v.size(), 0.0);
  switch (p.kind()) {
    case NormOrder::Kind::One:
      for (std::size_t i = 0; i < v.size(); ++i) g[i] = sgn(v[i]);
      return g;
    case NormOrder::Kind::Two: {
      const double n = norm2(v);
      for (std::size_t i = 0; i < v.size(); ++i) g[i] = v[i] / n;
      return g;
    }
    case NormOrder::Kind::Infinity: {
      const double cut = m * (1.0 - kTieTolerance);
      std::size_t ties = 0;
      for (double x : v) ties += std::fabs(x) >= cut;
      const double w = 1.0 / static_cast<double>(ties);
      for (std::size_t i = 0; i < v.size(); ++i)
        if (std::fabs(v[i]) >= cut) g[i] = sgn(v[i]) * w;
      return g;
    }
    case NormOrder::Kind::Finite: break;
  }
  // Scale by the max magnitude first; the map is homogeneous of degree zero.
  const double pv = p.value();
  double s = 0.0;
  for (double x : v) s += std::pow(std::fabs(x) / m, pv);
  const double denom = std::pow(s, (pv - 1.0) / pv);
  for (std::size_t i = 0; i < v.size(); ++i)
    g[i] = sgn(v[i]) * std::pow(std::fabs(v[i]) / m, pv - 1.0) / denom;
  return g;
}

NormOrder holder_conjugate(NormOrder p) {
  switch (p.kind()) {
    case NormOrder::Kind::One: return NormOrder::infinity();
    case NormOrder::Kind::Two: return NormOrder::two();
    case NormOrder::Kind::Infinity: return NormOrder::one();
    case NormOrder::Kind::Finite: break;
  }
  return NormOrder::finite(p.value() / (p.value() - 1.0));
}

Vec optimal_perturbation(const Vec& z, NormOrder p) {
  return p_norm_gradient(z, holder_conjugate(p));
}

Vec project_simplex_capped(const Vec& a, double radius) {
  double total = 0.0;
  for (double x : a) total += x;
  if (total <= radius) return a;
  Vec mu = a;
  std::sort(mu.begin(), mu.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    cum += mu[j];
    const double t = (cum - radius) / static_cast<double>(j + 1);
    if (mu[j] - t > 0.0) theta = t;
  }
  Vec w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) w[i] = std::max(a[i] - theta, 0.0);
  return w;
}

Vec project_ball(const Vec& x, const Vec& center, double eps, NormOrder p) {
  require_dims(x.size(), center.size(), "project_ball");
  if (!(eps >= 0.0)) fail(ErrorKind::DimensionMismatch, "project_ball radius must be nonnegative");
  Vec d = sub(x, center);
  switch (p.kind()) {
    case NormOrder::Kind::Two: {
      const double n = norm2(d);
      if (n <= eps) return x;
      return add(center, scaled(d, eps / n));
    }
    case NormOrder::Kind::Infinity: {
      Vec out(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = center[i] + std::clamp(d[i], -eps, eps);
      return out;
    }
    case NormOrder::Kind::One: {
      if (p_norm(d, p) <= eps) return x;
      Vec a(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) a[i] = std::fabs(d[i]);
      const Vec w = project_simplex_capped(a, eps);
      Vec out(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = center[i] + sgn(d[i]) * w[i];
      return out;
    }
    case NormOrder::Kind::Finite: break;
  }
  fail(ErrorKind::UnsupportedNorm, "ball projection for p=" + p.to_string());
}

Vec project_sphere(const Vec& v, NormOrder p) {
  if (!p.is_two()) fail(ErrorKind::UnsupportedNorm, "finite-step sphere projection needs p=2");
  const double n = norm2(v);
  if (n == 0.0) fail(ErrorKind::ZeroVector, "sphere projection of the zero vector");
  return scaled(v, 1.0 / n);
}

Vec project_sphere_limit(const Vec& v_prev, const Vec& step, NormOrder p) {
  require_dims(step.size(), v_prev.size(), "project_sphere_limit");
  if (p.is_finite_general())
    fail(ErrorKind::UnsupportedNorm, "sphere projection limit for p=" + p.to_string());
  return optimal_perturbation(step, p);
}

Vec clip_max_min(const Vec& x, double eps) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(-eps, std::min(eps, x[i]));
  return out;
}

Vec clip_min_max(const Vec& x, double eps) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(eps, std::max(-eps, x[i]));
  return out;
}

}  // namespace onlab
