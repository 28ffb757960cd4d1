#include "onlab/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "onlab/error.hpp"

namespace onlab {

namespace {

// Columns stored contiguously: cols[j] is column j of the working matrix.
using Columns = std::vector<Vec>;

double col_dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void rotate(Vec& a, Vec& b, double c, double s) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    a[i] = c * x - s * y;
    b[i] = s * x + c * y;
  }
}

// Extend an orthonormal set to cover zero singular values.
Vec orthonormal_complement(const Columns& basis, std::size_t dim) {
  Vec best;
  double best_norm = -1.0;
  for (std::size_t k = 0; k < dim; ++k) {
    Vec e(dim, 0.0);
    e[k] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : basis) {
        const double c = col_dot(b, e);
        for (std::size_t i = 0; i < dim; ++i) e[i] -= c * b[i];
      }
    const double n = std::sqrt(col_dot(e, e));
    if (n > best_norm) {
      best_norm = n;
      best = std::move(e);
    }
    if (best_norm > 0.5) break;
  }
  for (double& x : best) x /= best_norm;
  return best;
}

// Requires rows >= cols.
SvdResult svd_tall(const Mat& m) {
  const std::size_t rows = m.rows(), n = m.cols();
  Columns a(n, Vec(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) a[j][i] = m(i, j);
  Columns v(n, Vec(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  const double fro2 = std::max(col_dot(m.data(), m.data()), std::numeric_limits<double>::min());
  const double null_floor = fro2 * 1e-32;

  bool converged = n < 2;
  for (int sweep = 0; sweep < kSvdMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double alpha = col_dot(a[i], a[i]);
        const double beta = col_dot(a[j], a[j]);
        const double gamma = col_dot(a[i], a[j]);
        const double scale = std::sqrt(alpha * beta);
        if (scale <= null_floor || std::fabs(gamma) <= kSvdTolerance * scale) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(a[i], a[j], c, s);
        rotate(v[i], v[j], c, s);
      }
    }
    converged = !rotated;
  }
  if (!converged)
    fail(ErrorKind::ConvergenceFailure, "Jacobi SVD did not converge within " +
                                            std::to_string(kSvdMaxSweeps) + " sweeps");

  Vec sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(a[j], a[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double smax = n ? sigma[order[0]] : 0.0;
  const double zero_cut = smax * static_cast<double>(std::max(rows, n)) *
                          std::numeric_limits<double>::epsilon();

  SvdResult r{Mat(rows, n), Vec(n), Mat(n, n)};
  Columns ucols;
  std::vector<std::size_t> missing;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    r.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) r.v_mat(i, k) = v[j][i];
    if (sigma[j] > zero_cut && sigma[j] > 0.0) {
      Vec u = a[j];
      for (double& x : u) x /= sigma[j];
      ucols.push_back(u);
      for (std::size_t i = 0; i < rows; ++i) r.u_mat(i, k) = u[i];
    } else {
      missing.push_back(k);
    }
  }
  for (std::size_t k : missing) {
    Vec u = orthonormal_complement(ucols, rows);
    for (std::size_t i = 0; i < rows; ++i) r.u_mat(i, k) = u[i];
    ucols.push_back(std::move(u));
  }
  return r;
}

}  // namespace

SvdResult svd(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0)
    fail(ErrorKind::DimensionMismatch, "svd of an empty matrix");
  if (m.rows() > kSvdMaxDim || m.cols() > kSvdMaxDim)
    fail(ErrorKind::DimensionMismatch, "svd limited to 4096 rows and columns");
  for (double x : m.data())
    if (!std::isfinite(x)) fail(ErrorKind::ConvergenceFailure, "svd of a non-finite matrix");
  if (m.rows() >= m.cols()) return svd_tall(m);
  SvdResult t = svd_tall(m.transpose());
  return SvdResult{std::move(t.v_mat), std::move(t.singular_values), std::move(t.u_mat)};
}

double top_singular_value(const Mat& m) { return svd(m).singular_values.front(); }

Mat reconstruct(const SvdResult& s) {
  const std::size_t r = s.singular_values.size();
  Mat out(s.u_mat.rows(), s.v_mat.rows());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < r; ++k)
        acc += s.u_mat(i, k) * s.singular_values[k] * s.v_mat(j, k);
      out(i, j) = acc;
    }
  return out;
}

}  // namespace onlab
