#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace onlab {

using Vec = std::vector<double>;

// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(const Vec& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Vec col(std::size_t j) const;
  Mat transpose() const;

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Vec matvec(const Mat& m, const Vec& v);
Vec matvec_t(const Mat& m, const Vec& u);
Mat matmul(const Mat& a, const Mat& b);
double frobenius_norm(const Mat& m);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& v, double s);
void axpy(double a, const Vec& x, Vec& y);
double cosine(const Vec& a, const Vec& b);
bool all_finite(const Vec& v);

class NormOrder {
 public:
  enum class Kind { One, Two, Infinity, Finite };

  static NormOrder one() { return NormOrder(Kind::One, 1.0); }
  static NormOrder two() { return NormOrder(Kind::Two, 2.0); }
  static NormOrder infinity();
  // finite(1) and finite(2) canonicalize to one() and two().
  static NormOrder finite(double p);
  // Accepts "1", "2", "inf", or a real > 1.
  static NormOrder parse(const std::string& s);

  Kind kind() const noexcept { return kind_; }
  double value() const noexcept { return p_; }
  bool is_one() const noexcept { return kind_ == Kind::One; }
  bool is_two() const noexcept { return kind_ == Kind::Two; }
  bool is_inf() const noexcept { return kind_ == Kind::Infinity; }
  bool is_finite_general() const noexcept { return kind_ == Kind::Finite; }

  std::string to_string() const;

  bool operator==(const NormOrder& o) const { return kind_ == o.kind_ && p_ == o.p_; }

 private:
  NormOrder(Kind k, double p) : kind_(k), p_(p) {}
  Kind kind_;
  double p_;
};

inline constexpr double kTieTolerance = 1e-12;

double p_norm(const Vec& v, NormOrder p);

// sign(v)|v|^{p-1} / ||v||_p^{p-1}; the p=inf limit spreads mass uniformly
// over the entries tied for the maximum magnitude.
Vec p_norm_gradient(const Vec& v, NormOrder p);

NormOrder holder_conjugate(NormOrder p);

// argmax over ||v||_p <= 1 of v.z
Vec optimal_perturbation(const Vec& z, NormOrder p);

// Euclidean projection onto the eps-ball of order p (1, 2 or inf) around center.
Vec project_ball(const Vec& x, const Vec& center, double eps, NormOrder p);

// Projection onto the unit sphere, finite step. Only p=2 has a closed form here.
Vec project_sphere(const Vec& v, NormOrder p);

// lim_{alpha -> inf} of the unit-sphere projection of v_prev + alpha*step.
Vec project_sphere_limit(const Vec& v_prev, const Vec& step, NormOrder p);

// Euclidean projection of a nonnegative vector onto {w >= 0, sum w <= radius}.
Vec project_simplex_capped(const Vec& a, double radius);

// The two orders of elementwise clipping to [-eps, eps].
Vec clip_max_min(const Vec& x, double eps);
Vec clip_min_max(const Vec& x, double eps);

}  // namespace onlab
