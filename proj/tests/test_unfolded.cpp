// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uwmmse/error.hpp"
#include "uwmmse/unfolded.hpp"
#include "uwmmse/wmmse.hpp"

using namespace uwmmse;

namespace {

struct Instance {
  Channel h;
  Beamformer v;
  std::vector<double> w;
  std::vector<cplx> u;
};

Instance make_instance(const SystemConfig& c, std::uint64_t i) {
  Instance in;
  in.h = sample_channel(c, sample_stream(31, StreamDomain::kProbe, 3 * i));
  in.v = Beamformer{sample_channel(c, sample_stream(31, StreamDomain::kProbe, 3 * i + 1)).h};
  in.v.v *= cplx(std::sqrt(0.7 * c.max_power / trace_gram(in.v.v)), 0.0);
  const Beamformer other{sample_channel(c, sample_stream(31, StreamDomain::kProbe, 3 * i + 2)).h};
  in.w = update_w(in.h, other, c);
  in.u = update_u(in.h, other, c);
  return in;
}

// Reference projection written in the two-case form.
Beamformer project_two_case(const Beamformer& v, double p) {
  const double n = frob_norm(v.v);
  if (n * n <= p) return v;
  Beamformer out = v;
  out.v *= cplx(std::sqrt(p) / n, 0.0);
  return out;
}

}  // namespace

TEST(PgdGradient, ZeroAtZeroGainAndBeamformer) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Instance in = make_instance(c, 0);
  const CMatrix g =
      pgd_gradient(in.h, in.w, std::vector<cplx>(4), Beamformer{CMatrix(4, 4)}, c);
  EXPECT_EQ(g, CMatrix(4, 4));
}

TEST(PgdGradient, MatchesFiniteDifferencesOfInnerCost) {
  const double step = 1e-6;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const SystemConfig c = SystemConfig::from_snr_db(t % 2 ? 20.0 : 5.0);
    const Instance in = make_instance(c, t);
    const CMatrix g = pgd_gradient(in.h, in.w, in.u, in.v, c);
    double err = 0.0, scale = 0.0;
    for (std::size_t e = 0; e < g.size(); ++e) {
      for (const cplx dir : {cplx(1, 0), cplx(0, 1)}) {
        Beamformer plus = in.v, minus = in.v;
        plus.v.entries()[e] += step * dir;
        minus.v.entries()[e] -= step * dir;
        const double fd =
            (inner_cost(in.h, in.w, in.u, plus, c) - inner_cost(in.h, in.w, in.u, minus, c)) /
            (2 * step);
        const double an = dir.real() != 0.0 ? g.entries()[e].real() : g.entries()[e].imag();
        err = std::max(err, std::abs(fd - an));
        scale = std::max(scale, std::abs(an));
      }
    }
    worst = std::max(worst, err / scale);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(PgdGradient, KktStationarityAtExactSolution) {
  int active = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const SystemConfig c = SystemConfig::from_snr_db(10.0);
    const Instance in = make_instance(c, t);
    const ExactVUpdate x = solve_v_exact(in.h, in.w, in.u, c, 1e-11);
    if (x.mu <= 0.0) continue;
    ++active;
    const CMatrix g = pgd_gradient(in.h, in.w, in.u, x.v, c);
    CMatrix expected = x.v.v;
    expected *= cplx(-2.0 * x.mu, 0.0);
    EXPECT_LE(max_abs_diff(g, expected), 1e-6 * std::max(1.0, frob_norm(g)));
  }
  EXPECT_GT(active, 10);
}

TEST(PgdGradient, ExplicitAMatchesRebuiltA) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Instance in = make_instance(c, 5);
  const CMatrix a = build_A(in.h, in.w, in.u, c);
  EXPECT_EQ(pgd_gradient(in.h, a, in.w, in.u, in.v, c), pgd_gradient(in.h, in.w, in.u, in.v, c));
}

TEST(ProjectPower, InsideBallUnchanged) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  Beamformer v = make_instance(c, 1).v;
  v.v *= cplx(std::sqrt(0.5 * c.max_power / trace_gram(v.v)), 0.0);
  EXPECT_EQ(project_power(v, c.max_power).v, v.v);
}

TEST(ProjectPower, OutsideBallLandsOnSphere) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  Beamformer v = make_instance(c, 2).v;
  v.v *= cplx(2.0 * std::sqrt(c.max_power) / frob_norm(v.v), 0.0);
  EXPECT_NEAR(trace_gram(project_power(v, c.max_power).v), c.max_power, 1e-12 * c.max_power);
}

TEST(ProjectPower, IdempotentAndAgreesWithTwoCaseForm) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> power(0.0, 4.0);
  for (std::uint64_t t = 0; t < 500; ++t) {
    Beamformer v = make_instance(c, t).v;
    v.v *= cplx(std::sqrt(power(rng) * c.max_power / trace_gram(v.v)), 0.0);
    const Beamformer once = project_power(v, c.max_power);
    const Beamformer twice = project_power(once, c.max_power);
    EXPECT_LE(max_abs_diff(twice.v, once.v), 1e-15 * frob_norm(once.v));
    // The two expressions for the scale may round differently by an ulp.
    EXPECT_LE(max_abs_diff(once.v, project_two_case(v, c.max_power).v),
              4e-16 * frob_norm(once.v));
    EXPECT_LE(trace_gram(once.v), c.max_power * (1 + 1e-12));
  }
}

TEST(ProjectionScale, ReluForm) {
  EXPECT_EQ(projection_scale(1.0, 4.0), 1.0);
  EXPECT_EQ(projection_scale(2.0, 4.0), 1.0);
  EXPECT_DOUBLE_EQ(projection_scale(6.0, 4.0), 2.0 / 6.0);
}

TEST(PgdInner, ZeroStepsReturnFeasibleInput) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Instance in = make_instance(c, 3);
  const Beamformer out = pgd_inner(in.h, in.w, in.u, in.v, std::vector<double>(4, 0.0), c);
  EXPECT_EQ(out.v, in.v.v);
}

TEST(PgdInner, SingleStepFromZero) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Instance in = make_instance(c, 4);
  const double gamma = 0.3;
  const Beamformer out =
      pgd_inner(in.h, in.w, in.u, Beamformer{CMatrix(4, 4)}, std::vector<double>{gamma}, c);
  Beamformer expected{CMatrix(4, 4)};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t m = 0; m < 4; ++m)
      expected.v(i, m) = 2.0 * gamma * c.priorities[i] * in.w[i] * in.u[i] * in.h.h(i, m);
  EXPECT_LE(max_abs_diff(out.v, project_power(expected, c.max_power).v), 1e-13);
}

TEST(PgdInner, SmallStepsDescendAndConvergeToExactSolve) {
  double worst_rise = 0.0, worst_gap = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const SystemConfig c = SystemConfig::from_snr_db(t % 2 ? 20.0 : 10.0);
    // (w, u) taken at the starting point, as one WMMSE iteration would.
    Instance in = make_instance(c, t);
    in.w = update_w(in.h, in.v, c);
    in.u = update_u(in.h, in.v, c);
    const CMatrix a = build_A(in.h, in.w, in.u, c);
    const double gamma = 0.9 / (2.0 * herm_eig(a).eigvals.back());
    Beamformer v = in.v;
    double f = inner_cost(in.h, in.w, in.u, v, c);
    for (int k = 0; k < 3000; ++k) {
      v = pgd_inner(in.h, in.w, in.u, v, std::vector<double>{gamma}, c);
      const double next = inner_cost(in.h, in.w, in.u, v, c);
      worst_rise = std::max(worst_rise, next - f);
      f = next;
    }
    const Beamformer batch =
        pgd_inner(in.h, in.w, in.u, in.v, std::vector<double>(3000, gamma), c);
    EXPECT_EQ(batch.v, v.v);
    const Beamformer exact = solve_v_exact(in.h, in.w, in.u, c, 1e-11).v;
    worst_gap = std::max(worst_gap, std::abs(f - inner_cost(in.h, in.w, in.u, exact, c)));
  }
  EXPECT_LE(worst_rise, 1e-10);
  EXPECT_LE(worst_gap, 1e-6);
}

TEST(Forward, ZeroStepsRepeatMatchedFilter) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Channel h = make_instance(c, 6).h;
  const auto out = forward(h, StepSizes(3, 4), c, UnfoldConfig{3, 4, false});
  ASSERT_EQ(out.size(), 3u);
  const Beamformer mf = matched_filter_init(h, c);
  for (const Beamformer& v : out) EXPECT_EQ(v.v, mf.v);
}

TEST(Forward, OutputsFeasibleForLargeSteps) {
  const SystemConfig c = SystemConfig::from_snr_db(20.0);
  StepSizes steps(4, 3, 25.0);
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto out = forward(make_instance(c, t).h, steps, c, UnfoldConfig{4, 3, false});
    for (const Beamformer& v : out) EXPECT_LE(trace_gram(v.v), c.max_power + 1e-12);
  }
}

TEST(Forward, TiedEqualsUntiedWithConstantRows) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  StepSizes constant_rows(3, 4);
  StepSizes first_only(3, 4, -7.0);  // tied mode reads column 0 only
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t k = 0; k < 4; ++k) constant_rows(l, k) = 0.2 + 0.3 * l;
    first_only(l, 0) = 0.2 + 0.3 * l;
  }
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Channel h = make_instance(c, t).h;
    const auto untied = forward(h, constant_rows, c, UnfoldConfig{3, 4, false});
    const auto tied = forward(h, first_only, c, UnfoldConfig{3, 4, true});
    for (std::size_t l = 0; l < 3; ++l) EXPECT_LE(max_abs_diff(untied[l].v, tied[l].v), 1e-15);
  }
}

TEST(Forward, ShapeMismatchIsRejected) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  try {
    forward(make_instance(c, 0).h, StepSizes(2, 4), c, UnfoldConfig{3, 4, false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(UnfoldConfig, RejectsZeroLayersOrSteps) {
  EXPECT_THROW((UnfoldConfig{0, 4, false}.validate()), Error);
  EXPECT_THROW((UnfoldConfig{2, 0, false}.validate()), Error);
}
