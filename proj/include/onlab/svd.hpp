#pragma once

#include "onlab/linalg.hpp"

namespace onlab {

struct SvdResult {
  Mat u_mat;               // rows x r, orthonormal columns
  Vec singular_values;     // length r = min(rows, cols), descending
  Mat v_mat;               // cols x r, orthonormal columns
};

inline constexpr std::size_t kSvdMaxDim = 4096;
inline constexpr int kSvdMaxSweeps = 60;
inline constexpr double kSvdTolerance = 1e-12;

// One-sided (Hestenes) Jacobi.
SvdResult svd(const Mat& m);

double top_singular_value(const Mat& m);

Mat reconstruct(const SvdResult& s);

}  // namespace onlab
