#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "onlab/analysis.hpp"
#include "onlab/data.hpp"
#include "onlab/error.hpp"
#include "onlab/train.hpp"
#include "support.hpp"

using namespace onlab;

namespace {

Dataset blobs(std::size_t per_class, std::uint64_t seed) {
  SyntheticParams s;
  s.n_per_class = per_class;
  s.noise = 0.1;
  s.seed = seed;
  return gen_synthetic(s);
}

TrainConfig quick(Objective obj, int epochs, std::uint64_t seed = 1) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = seed;
  c.objective = std::move(obj);
  return c;
}

}  // namespace

TEST(Train, ZeroLearningRateLeavesNetworkUntouched) {
  const Dataset d = blobs(20, 1);
  const Network net = onlab::testing::random_net({2, 8, 3}, 2);
  TrainConfig c = quick(StandardObjective{}, 3);
  c.learning_rate = 0.0;
  EXPECT_EQ(train(net, d.subset(Split::Train), d.subset(Split::Val), {}, c).net, net);
}

TEST(Train, StandardSeparatesBlobs) {
  const Dataset d = blobs(100, 3);
  const LabeledSet tr = d.subset(Split::Train);
  const TrainResult r = train(Network::random({2, 16, 16, 3}, 4), tr, tr, {}, quick(StandardObjective{}, 50));
  EXPECT_GE(r.metrics.back().clean_acc, 0.99);
  EXPECT_EQ(r.metrics.size(), 51u);
  EXPECT_EQ(r.metrics.front().epoch, 0);
  EXPECT_LT(r.metrics.back().objective, r.metrics.front().objective);
}

TEST(Train, InterpolatedEndpointReproducesDataDepSnrTrajectory) {
  const Dataset d = blobs(30, 5);
  const LabeledSet tr = d.subset(Split::Train);
  const DataDepSnrObjective snr{1.0};
  InterpolatedObjective io;
  io.t = 1.0;
  io.snr = snr;
  const Network init = Network::random({2, 8, 8, 3}, 6);
  const TrainResult a = train(init, tr, tr, {}, quick(snr, 5));
  const TrainResult b = train(init, tr, tr, {}, quick(io, 5));
  EXPECT_EQ(a.net, b.net);
  for (std::size_t e = 0; e < a.metrics.size(); ++e) EXPECT_EQ(a.metrics[e].objective, b.metrics[e].objective);
}

TEST(Train, BitReproducibleAcrossPolicies) {
  const Dataset d = blobs(30, 7);
  const LabeledSet tr = d.subset(Split::Train);
  AdversarialObjective adv;
  adv.attack.eps = 0.3;
  for (const Objective& obj : std::vector<Objective>{adv, DataDepSnrObjective{1.0}}) {
    TrainConfig c = quick(obj, 3);
    c.policy = ExecPolicy::Serial;
    const TrainResult a = train(Network::random({2, 8, 3}, 8), tr, tr, tr.inputs, c);
    c.policy = ExecPolicy::Parallel;
    const TrainResult b = train(Network::random({2, 8, 3}, 8), tr, tr, tr.inputs, c);
    EXPECT_EQ(a.net, b.net);
    EXPECT_EQ(a.metrics.back().probe_sigma_mean, b.metrics.back().probe_sigma_mean);
  }
}

TEST(Train, NonFiniteLossAborts) {
  const Dataset d = blobs(10, 9);
  TrainConfig c = quick(StandardObjective{}, 5);
  c.learning_rate = 1e300;
  try {
    train(Network::random({2, 4, 3}, 1), d.subset(Split::Train), d.subset(Split::Train), {}, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
  }
}

TEST(Train, RejectsBadConfig) {
  const Dataset d = blobs(10, 9);
  const LabeledSet tr = d.subset(Split::Train);
  TrainConfig c = quick(StandardObjective{}, 1);
  c.momentum = 1.0;
  EXPECT_THROW(train(Network::random({2, 4, 3}, 1), tr, tr, {}, c), Error);
  EXPECT_THROW(train(Network::random({3, 4, 3}, 1), tr, tr, {}, quick(StandardObjective{}, 1)), Error);
  EXPECT_THROW(train(Network::random({2, 4, 3}, 1), LabeledSet{}, tr, {}, quick(StandardObjective{}, 1)), Error);
}

TEST(Train, DataDepSnrLowersProbeSigma) {
  const Dataset d = blobs(60, 11);
  const LabeledSet tr = d.subset(Split::Train), te = d.subset(Split::Test);
  const TrainResult r =
      train(Network::random({2, 16, 16, 3}, 12), tr, te, te.inputs, quick(DataDepSnrObjective{3.0}, 40));
  EXPECT_LT(r.metrics.back().probe_sigma_mean, r.metrics.front().probe_sigma_mean);
}

// One versus ten power iterations per step give overlapping +-1 standard error bands.
TEST(Train, GlobalSnrPowerIterationCountDoesNotMatter) {
  const Dataset d = blobs(100, 13);
  const LabeledSet tr = d.subset(Split::Train), te = d.subset(Split::Test);
  const Network init = Network::random({2, 16, 16, 3}, 14);
  const TrainResult one = train(init, tr, te, {}, quick(GlobalSnrObjective{0.05, 1}, 30));
  const TrainResult ten = train(init, tr, te, {}, quick(GlobalSnrObjective{0.05, 10}, 30));
  AttackConfig a;
  a.iterations = 10;
  const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4};
  const auto c1 = robust_accuracy_curve(one.net, te, grid, a, 15, ExecPolicy::Parallel);
  const auto c10 = robust_accuracy_curve(ten.net, te, grid, a, 15, ExecPolicy::Parallel);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double gap = std::fabs(c1[i].accuracy - c10[i].accuracy);
    EXPECT_LE(gap, c1[i].stderr_ + c10[i].stderr_) << "eps=" << grid[i];
  }
}

TEST(LogGrid, EndpointsAndRatio) {
  const auto g = log_grid(0.01, 100.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_NEAR(g.back(), 100.0, 1e-12);
  EXPECT_NEAR(g[2], 1.0, 1e-14);
  EXPECT_THROW(log_grid(0.0, 1.0, 3), Error);
}

TEST(SelectMatchedLambda, LargestWithinTolerance) {
  const std::vector<SweepPoint> pts{{0.1, 0.95}, {0.3, 0.945}, {1.0, 0.93}, {3.0, 0.90}};
  EXPECT_EQ(select_matched_lambda(pts, 0.95, 0.01), 1u);
  EXPECT_EQ(select_matched_lambda(pts, 0.93, 0.01), 2u);
  EXPECT_EQ(select_matched_lambda(pts, 0.5, 0.01), pts.size());
}
