// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "uwmmse/error.hpp"
#include "uwmmse/train.hpp"

using namespace uwmmse;

namespace {

std::vector<Channel> batch_of(const SystemConfig& c, std::size_t n, std::uint64_t seed = 3) {
  std::vector<Channel> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(sample_channel(c, sample_stream(seed, StreamDomain::kProbe, i)));
  return out;
}

TrainConfig small_config(std::size_t layers, std::size_t steps, bool tied = false) {
  TrainConfig tc;
  tc.unfold = UnfoldConfig{layers, steps, tied};
  tc.batch_size = 16;
  tc.num_batches = 40;
  tc.learning_rate = 1e-2;
  tc.seed = 11;
  return tc;
}

double central_difference(const std::vector<Channel>& batch, StepSizes steps, std::size_t l,
                          std::size_t k, const SystemConfig& c, const UnfoldConfig& u,
                          double h) {
  const double x = steps(l, k);
  steps(l, k) = x + h;
  const double up = loss(batch, steps, c, u);
  steps(l, k) = x - h;
  return (up - loss(batch, steps, c, u)) / (2 * h);
}

}  // namespace

TEST(Loss, ZeroStepsGiveMatchedFilterPerLayer) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const auto batch = batch_of(c, 25);
  double mf = 0.0;
  for (const Channel& h : batch) mf += wsr(h, matched_filter_init(h, c), c);
  mf /= static_cast<double>(batch.size());
  EXPECT_NEAR(loss(batch, StepSizes(3, 2), c, UnfoldConfig{3, 2, false}), -3.0 * mf, 1e-12);
}

TEST(Loss, SingleChannelIsNegatedWsrSum) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const auto batch = batch_of(c, 1);
  const StepSizes steps(2, 3, 0.4);
  const UnfoldConfig u{2, 3, false};
  double expected = 0.0;
  for (const Beamformer& v : forward(batch[0], steps, c, u)) expected -= wsr(batch[0], v, c);
  EXPECT_NEAR(loss(batch, steps, c, u), expected, 1e-12);
}

TEST(Loss, EmptyBatchRejected) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  EXPECT_THROW(loss({}, StepSizes(1, 1), c, UnfoldConfig{1, 1, false}), Error);
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (const double snr : {10.0, 20.0}) {
    for (const double centre : {0.05, 1.0}) {
      const SystemConfig c = SystemConfig::from_snr_db(snr);
      const UnfoldConfig u{2, 3, false};
      const auto batch = batch_of(c, 8, static_cast<std::uint64_t>(snr));
      std::uniform_real_distribution<double> jitter(0.5 * centre, 1.5 * centre);
      StepSizes steps(2, 3);
      for (double& g : steps.values()) g = jitter(rng);
      const GradRecord grad = grad_wrt_steps(batch, steps, c, u);
      EXPECT_NEAR(grad.loss, loss(batch, steps, c, u), 1e-12);
      for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 3; ++k) {
          const double fd = central_difference(batch, steps, l, k, c, u, 1e-6 * centre);
          EXPECT_NEAR(grad.partials(l, k), fd, 1e-5 * std::max(1.0, std::abs(fd)))
              << "snr " << snr << " centre " << centre << " at (" << l << "," << k << ")";
        }
    }
  }
}

TEST(Gradient, AtZeroIsAOneSidedDerivative) {
  // At Γ = 0 every layer input is the matched filter, which sits on the power
  // sphere, so the loss has a kink there. Per channel, reverse mode must
  // return the derivative from one side or the other, and it is nonzero.
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  for (std::size_t steps : {1u, 3u}) {
    const UnfoldConfig u{1, steps, false};
    const StepSizes zero(1, steps);
    for (std::uint64_t i = 0; i < 20; ++i) {
      const std::vector<Channel> one{
          sample_channel(c, sample_stream(3, StreamDomain::kProbe, i))};
      const GradRecord grad = grad_wrt_steps(one, zero, c, u);
      const double base = loss(one, zero, c, u);
      for (std::size_t k = 0; k < steps; ++k) {
        const double h = 1e-8;
        StepSizes s = zero;
        s(0, k) = h;
        const double right = (loss(one, s, c, u) - base) / h;
        s(0, k) = -h;
        const double left = (base - loss(one, s, c, u)) / h;
        const double g = grad.partials(0, k);
        const double tol = 1e-5 * std::max(1.0, std::abs(g));
        EXPECT_TRUE(std::abs(g - right) <= tol || std::abs(g - left) <= tol)
            << "channel " << i << " step " << k << ": " << g << " vs " << left << " / "
            << right;
        EXPECT_NE(g, 0.0);
      }
    }
  }
}

TEST(Gradient, TiedIsRowSumOfUntied) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const auto batch = batch_of(c, 10);
  StepSizes steps(3, 4);
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t k = 0; k < 4; ++k) steps(l, k) = 0.3 + 0.2 * l;
  const GradRecord untied = grad_wrt_steps(batch, steps, c, UnfoldConfig{3, 4, false});
  const GradRecord tied = grad_wrt_steps(batch, steps, c, UnfoldConfig{3, 4, true});
  EXPECT_NEAR(tied.loss, untied.loss, 1e-12);
  for (std::size_t l = 0; l < 3; ++l) {
    double sum = 0.0;
    for (double g : untied.partials.row(l)) sum += g;
    for (double g : tied.partials.row(l)) EXPECT_NEAR(g, sum, 1e-10);
  }
}

TEST(Gradient, HugeStepsReportNonFinite) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const auto batch = batch_of(c, 2);
  try {
    grad_wrt_steps(batch, StepSizes(1, 2, 1e300), c, UnfoldConfig{1, 2, false});
    FAIL() << "expected kNonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Adam, ZeroGradientLeavesStepsUnchanged) {
  StepSizes steps(2, 2, 0.7);
  const StepSizes before = steps;
  AdamState st = AdamState::zeros_like(steps);
  adam_step(steps, GradRecord{StepGrid(2, 2), 0.0}, st, TrainConfig{});
  EXPECT_EQ(steps, before);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
  TrainConfig tc;
  tc.learning_rate = 0.01;
  StepSizes steps(1, 3, 1.0);
  AdamState st = AdamState::zeros_like(steps);
  GradRecord g{StepGrid(1, 3), 0.0};
  g.partials(0, 0) = 5.0;
  g.partials(0, 1) = -0.2;
  g.partials(0, 2) = 1e-3;
  adam_step(steps, g, st, tc);
  EXPECT_NEAR(steps(0, 0), 0.99, 1e-8);
  EXPECT_NEAR(steps(0, 1), 1.01, 1e-8);
  EXPECT_NEAR(steps(0, 2), 0.99, 1e-7);
}

TEST(Adam, ShapeMismatchRejected) {
  StepSizes steps(1, 3);
  AdamState st = AdamState::zeros_like(steps);
  EXPECT_THROW(adam_step(steps, GradRecord{StepGrid(1, 2), 0.0}, st, TrainConfig{}), Error);
}

TEST(Train, NoBatchesReturnsInitialGrid) {
  TrainConfig tc = small_config(2, 3);
  tc.num_batches = 0;
  tc.step_init = 0.25;
  const TrainResult r = train(tc);
  EXPECT_EQ(r.steps, StepSizes(2, 3, 0.25));
  EXPECT_TRUE(r.loss_history.empty());
}

TEST(Train, DeterministicForASeed) {
  const TrainConfig tc = small_config(2, 2);
  const TrainResult a = train(tc);
  const TrainResult b = train(tc);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.loss_history, b.loss_history);
  TrainConfig other = tc;
  other.seed = 12;
  EXPECT_NE(train(other).steps, a.steps);
}

TEST(Train, LossTrendsDownFromPoorStart) {
  TrainConfig tc = small_config(1, 2);
  tc.step_init = 0.02;
  tc.num_batches = 300;
  tc.learning_rate = 0.02;
  const TrainResult r = train(tc);
  ASSERT_EQ(r.loss_history.size(), 300u);
  double head = 0.0, tail = 0.0;
  for (std::size_t b = 0; b < 50; ++b) {
    head += r.loss_history[b];
    tail += r.loss_history[250 + b];
  }
  EXPECT_LT(tail, head);
}

TEST(Train, TiedRowsStayEqual) {
  const TrainResult r = train(small_config(2, 3, true));
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t k = 1; k < 3; ++k) EXPECT_EQ(r.steps(l, k), r.steps(l, 0));
}

TEST(Train, InvalidConfigRejected) {
  TrainConfig tc = small_config(1, 1);
  tc.learning_rate = 0.0;
  EXPECT_THROW(train(tc), Error);
  tc = small_config(1, 1);
  tc.batch_size = 0;
  EXPECT_THROW(train(tc), Error);
  tc = small_config(0, 1);
  EXPECT_THROW(train(tc), Error);
}

TEST(Extend, TargetMustExceedCurrentSteps) {
  const TrainConfig tc = small_config(1, 3);
  EXPECT_THROW(extend_pgd_progressive(StepSizes(1, 3, 1.0), 3, tc), Error);
  EXPECT_THROW(extend_pgd_progressive(StepSizes(1, 3, 1.0), 2, tc), Error);
}

TEST(Extend, ZeroNewStepWithoutTrainingPreservesLoss) {
  TrainConfig tc = small_config(2, 2);
  tc.num_batches = 0;
  tc.step_init = 0.0;
  StepSizes base(2, 2);
  base(0, 0) = 0.3;
  base(0, 1) = 0.8;
  base(1, 0) = 1.1;
  base(1, 1) = 0.2;
  const TrainResult r = extend_pgd_progressive(base, 4, tc);
  ASSERT_EQ(r.steps.steps(), 4u);
  EXPECT_EQ(r.steps(0, 2), 0.0);
  EXPECT_EQ(r.steps(1, 3), 0.0);
  const SystemConfig c = tc.system();
  const auto batch = batch_of(c, 12);
  EXPECT_NEAR(loss(batch, r.steps, c, UnfoldConfig{2, 4, false}),
              loss(batch, base, c, UnfoldConfig{2, 2, false}), 1e-12);
}

TEST(Extend, TiedNewColumnsTakeSharedValue) {
  TrainConfig tc = small_config(1, 2, true);
  tc.num_batches = 0;
  const TrainResult r = extend_pgd_progressive(StepSizes(1, 2, 0.6), 3, tc);
  EXPECT_EQ(r.steps(0, 2), 0.6);
}

TEST(Extend, TrainsEveryStage) {
  TrainConfig tc = small_config(1, 2);
  tc.num_batches = 10;
  const TrainResult r = extend_pgd_progressive(StepSizes(1, 2, 1.0), 4, tc);
  EXPECT_EQ(r.loss_history.size(), 20u);
  EXPECT_EQ(r.steps.steps(), 4u);
}

TEST(AppendSteps, CopiesAndFills) {
  StepSizes base(2, 1);
  base(0, 0) = 1.5;
  base(1, 0) = 2.5;
  const StepSizes out = append_steps(base, 2, 9.0);
  EXPECT_EQ(out.steps(), 3u);
  EXPECT_EQ(out(1, 0), 2.5);
  EXPECT_EQ(out(1, 2), 9.0);
}

TEST(LossCsv, HeaderAndRows) {
  const auto path = std::filesystem::temp_directory_path() / "uwmmse_loss_test.csv";
  write_loss_csv(path.string(), std::vector<double>{-1.5, -2.25});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "batch_index,loss");
  std::getline(in, line);
  EXPECT_EQ(line, "0,-1.5");
  std::getline(in, line);
  EXPECT_EQ(line, "1,-2.25");
  std::filesystem::remove(path);
}

TEST(LossCsv, UnwritablePathIsIoError) {
  try {
    write_loss_csv("/nonexistent-dir/x.csv", std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}
