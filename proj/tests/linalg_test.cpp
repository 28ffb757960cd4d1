#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "onlab/error.hpp"
#include "onlab/linalg.hpp"
#include "support.hpp"

using namespace onlab;
using onlab::testing::gaussian_vec;

namespace {

const NormOrder kOne = NormOrder::one(), kTwo = NormOrder::two(), kInf = NormOrder::infinity();

void expect_vec_near(const Vec& got, const Vec& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(PNorm, HandValues) {
  EXPECT_DOUBLE_EQ(p_norm({3, 4}, kTwo), 5.0);
  EXPECT_DOUBLE_EQ(p_norm({1, -2, 3}, kOne), 6.0);
  EXPECT_DOUBLE_EQ(p_norm({1, -7, 3}, kInf), 7.0);
  EXPECT_EQ(p_norm({0, 0, 0}, NormOrder::finite(3)), 0.0);
  EXPECT_NEAR(p_norm({1, 1}, NormOrder::finite(3)), std::cbrt(2.0), 1e-15);
}

TEST(PNorm, LargeEntriesDoNotOverflow) {
  EXPECT_NEAR(p_norm({1e200, 1e200}, NormOrder::finite(3)) / 1e200, std::cbrt(2.0), 1e-14);
}

TEST(NormOrder, ParseAndCanonicalize) {
  EXPECT_TRUE(NormOrder::parse("1").is_one());
  EXPECT_TRUE(NormOrder::parse("2").is_two());
  EXPECT_TRUE(NormOrder::parse("inf").is_inf());
  EXPECT_TRUE(NormOrder::finite(2.0).is_two());
  EXPECT_DOUBLE_EQ(NormOrder::parse("3.5").value(), 3.5);
  EXPECT_THROW(NormOrder::finite(0.5), Error);
  EXPECT_THROW(NormOrder::parse("abc"), Error);
}

TEST(PNormGradient, HandValues) {
  expect_vec_near(p_norm_gradient({3, 4}, kTwo), {0.6, 0.8}, 1e-15);
  expect_vec_near(p_norm_gradient({2, -5, 5}, kInf), {0, -0.5, 0.5}, 1e-15);
  expect_vec_near(p_norm_gradient({1, -2}, kOne), {1, -1}, 0.0);
}

TEST(PNormGradient, ZeroVectorThrows) {
  try {
    p_norm_gradient({0, 0}, kTwo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVector);
  }
}

TEST(PNormGradient, TieToleranceIsRelative) {
  const Vec g = p_norm_gradient({1e6, -1e6 * (1 - 1e-13), 3}, kInf);
  expect_vec_near(g, {0.5, -0.5, 0.0}, 0.0);
}

TEST(PNormGradient, MatchesCentralDifferences) {
  Rng rng(11);
  for (double p : {1.5, 2.0, 3.0}) {
    const NormOrder order = NormOrder::finite(p);
    for (int trial = 0; trial < 200; ++trial) {
      const Vec v = gaussian_vec(7, rng);
      const Vec g = p_norm_gradient(v, order);
      const double h = 1e-6;
      double err = 0.0, ref = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        Vec a = v, b = v;
        a[i] += h;
        b[i] -= h;
        const double fd = (p_norm(a, order) - p_norm(b, order)) / (2 * h);
        err += (fd - g[i]) * (fd - g[i]);
        ref += fd * fd;
      }
      EXPECT_LE(std::sqrt(err / ref), 1e-5) << "p=" << p;
    }
  }
}

TEST(HolderConjugate, Pairs) {
  EXPECT_TRUE(holder_conjugate(kTwo).is_two());
  EXPECT_TRUE(holder_conjugate(kOne).is_inf());
  EXPECT_TRUE(holder_conjugate(kInf).is_one());
  EXPECT_DOUBLE_EQ(holder_conjugate(NormOrder::finite(3)).value(), 1.5);
}

TEST(OptimalPerturbation, HandValues) {
  expect_vec_near(optimal_perturbation({3, 4}, kTwo), {0.6, 0.8}, 1e-15);
  expect_vec_near(optimal_perturbation({2, -5}, kInf), {1, -1}, 0.0);
  expect_vec_near(optimal_perturbation({1, -4, 4}, kOne), {0, -0.5, 0.5}, 0.0);
}

// Rejection-free search on the l3 sphere: normalize random directions.
TEST(OptimalPerturbation, MatchesSphereSearchForFiniteP) {
  const Vec z{0.3, -1.1, 0.7};
  const NormOrder p = NormOrder::finite(3);
  const double best = dot(optimal_perturbation(z, p), z);
  Rng rng(5);
  double search = -1.0;
  for (int i = 0; i < 1000000; ++i) {
    Vec v = gaussian_vec(3, rng);
    const double n = p_norm(v, p);
    search = std::max(search, dot(v, z) / n);
  }
  EXPECT_LE(search, best + 1e-12);
  EXPECT_NEAR(search, best, 1e-3);
}

TEST(OptimalPerturbation, UnitNormHolderEqualityAndFixedPoint) {
  Rng rng(3);
  std::uniform_int_distribution<int> dim(1, 12);
  for (const NormOrder& p : {kOne, kTwo, kInf, NormOrder::finite(1.5), NormOrder::finite(4)}) {
    for (int trial = 0; trial < 1000; ++trial) {
      const Vec z = gaussian_vec(static_cast<std::size_t>(dim(rng)), rng, 3.0);
      const Vec v = optimal_perturbation(z, p);
      EXPECT_NEAR(p_norm(v, p), 1.0, 1e-10);
      EXPECT_NEAR(dot(v, z), p_norm(z, holder_conjugate(p)), 1e-10 * std::max(1.0, p_norm(z, holder_conjugate(p))));
      if (!p.is_finite_general()) expect_vec_near(optimal_perturbation(v, p), v, 1e-10);
    }
  }
}

TEST(ProjectBall, HandValues) {
  expect_vec_near(project_ball({5, 0}, {0, 0}, 2, kTwo), {2, 0}, 1e-15);
  expect_vec_near(project_ball({3, -0.5}, {0, 0}, 1, kInf), {1, -0.5}, 0.0);
}

TEST(ProjectBall, L1MatchesGridSearch) {
  const Vec x{2, 1};
  const Vec p = project_ball(x, {0, 0}, 1, kOne);
  double best = std::numeric_limits<double>::infinity();
  Vec arg;
  const int n = 2000;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const Vec v{static_cast<double>(i) / n, static_cast<double>(j) / n};
      if (std::fabs(v[0]) + std::fabs(v[1]) > 1.0) continue;
      const double d = norm2(sub(v, x));
      if (d < best) {
        best = d;
        arg = v;
      }
    }
  expect_vec_near(p, arg, 1e-3);
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(ProjectBall, L1ProjectionIsOptimalAgainstRandomFeasiblePoints) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec c = gaussian_vec(6, rng), x = gaussian_vec(6, rng, 3.0);
    const Vec p = project_ball(x, c, 1.0, kOne);
    EXPECT_LE(p_norm(sub(p, c), kOne), 1.0 + 1e-12);
    const double d = norm2(sub(p, x));
    for (int k = 0; k < 50; ++k) {
      Vec y = gaussian_vec(6, rng);
      y = scaled(y, 1.0 / p_norm(y, kOne) * std::uniform_real_distribution<double>(0, 1)(rng));
      EXPECT_LE(d, norm2(sub(add(c, y), x)) + 1e-12);
    }
  }
}

TEST(ProjectBall, InsidePointsUnchanged) {
  Rng rng(2);
  for (const NormOrder& p : {kOne, kTwo, kInf}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vec c = gaussian_vec(5, rng);
      Vec x = gaussian_vec(5, rng);
      x = add(c, scaled(x, 0.9 / p_norm(x, p)));
      EXPECT_EQ(project_ball(x, c, 1.0, p), x);
    }
  }
}

TEST(ProjectBall, FiniteOrderUnsupported) {
  try {
    project_ball({1, 2}, {0, 0}, 1.0, NormOrder::finite(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedNorm);
  }
}

TEST(ProjectSphereLimit, HandValues) {
  expect_vec_near(project_sphere_limit({0.2, -0.3}, {3, 4}, kTwo), {0.6, 0.8}, 1e-15);
  expect_vec_near(project_sphere_limit({5, 5}, {2, -5}, kInf), {1, -1}, 0.0);
  EXPECT_THROW(project_sphere_limit({1, 0}, {0, 0}, kTwo), Error);
}

TEST(ProjectSphereLimit, AgreesWithLargeAlphaProjection) {
  expect_vec_near(project_sphere(add({1, 0}, scaled({0.3, 0.4}, 1e12)), kTwo),
                  project_sphere_limit({1, 0}, {0.3, 0.4}, kTwo), 1e-9);
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec prev = project_sphere(gaussian_vec(8, rng), kTwo), step = gaussian_vec(8, rng);
    expect_vec_near(project_sphere(add(prev, scaled(step, 1e12)), kTwo), project_sphere_limit(prev, step, kTwo),
                    1e-9);
  }
}

TEST(Clip, MinMaxCommutes) {
  Rng rng(31);
  std::uniform_real_distribution<double> e(0.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec x = gaussian_vec(10, rng, 2.0);
    const double eps = e(rng);
    EXPECT_EQ(clip_max_min(x, eps), clip_min_max(x, eps));
  }
}

TEST(SimplexCapped, InactiveCapKeepsInput) {
  expect_vec_near(project_simplex_capped({0.1, 0.2}, 1.0), {0.1, 0.2}, 0.0);
  expect_vec_near(project_simplex_capped({1.0, 1.0}, 1.0), {0.5, 0.5}, 1e-15);
}

TEST(Mat, ShapesAndProducts) {
  const Mat a{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.transpose()(2, 1), 6.0);
  expect_vec_near(matvec(a, {1, 0, -1}), {-2, -2}, 0.0);
  expect_vec_near(matvec_t(a, {1, 1}), {5, 7, 9}, 0.0);
  EXPECT_EQ(matmul(a, Mat::identity(3)), a);
  EXPECT_THROW(matvec(a, {1, 2}), Error);
  EXPECT_NEAR(frobenius_norm(a), std::sqrt(91.0), 1e-14);
}

TEST(Cosine, ZeroVectorThrows) {
  EXPECT_THROW(cosine({0, 0}, {1, 0}), Error);
  EXPECT_NEAR(cosine({1, 0}, {-2, 0}), -1.0, 0.0);
}
