// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uwmmse/error.hpp"
#include "uwmmse/wmmse.hpp"

using namespace uwmmse;

namespace {

constexpr double kTight = 1e-11;

SystemConfig config(std::size_t m, std::size_t n, double p) {
  SystemConfig c;
  c.antennas = m;
  c.users = n;
  c.max_power = p;
  c.priorities.assign(n, 1.0);
  return c;
}

Channel probe_channel(const SystemConfig& c, std::uint64_t i) {
  return sample_channel(c, sample_stream(77, StreamDomain::kProbe, i));
}

Beamformer probe_beamformer(const SystemConfig& c, std::uint64_t i, double power) {
  Beamformer v{sample_channel(c, sample_stream(78, StreamDomain::kProbe, i)).h};
  v.v *= cplx(std::sqrt(power / trace_gram(v.v)), 0.0);
  return v;
}

// Monte Carlo estimate of E|conj(u) y_i − x_i|² with unit-power symbols and
// CN(0, σ²) noise.
double simulated_mse(const Channel& h, const Beamformer& v, cplx u, std::size_t i,
                     const SystemConfig& c, std::size_t draws, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const CMatrix s = channel_gains(h, v);
  const double noise_scale = std::sqrt(c.noise_power);
  std::vector<cplx> x(c.users);
  double acc = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    for (cplx& xj : x) xj = {g(rng), g(rng)};
    cplx y{g(rng) * noise_scale, g(rng) * noise_scale};
    for (std::size_t j = 0; j < c.users; ++j) y += s(i, j) * x[j];
    acc += std::norm(std::conj(u) * y - x[i]);
  }
  return acc / static_cast<double>(draws);
}

}  // namespace

TEST(UpdateW, ZeroBeamformerGivesUnitWeights) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  for (double w : update_w(probe_channel(c, 0), Beamformer{CMatrix(4, 4)}, c)) EXPECT_EQ(w, 1.0);
}

TEST(UpdateW, SingleUserClosedForm) {
  const SystemConfig c = config(1, 1, 10.0);
  const auto w = update_w(Channel{CMatrix(1, 1, {{1, 0}})},
                          Beamformer{CMatrix(1, 1, {{std::sqrt(3.0), 0}})}, c);
  EXPECT_NEAR(w[0], 4.0, 1e-15);
}

TEST(UpdateW, EqualsOnePlusSinr) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v = probe_beamformer(c, t, 0.3 * c.max_power);
    const auto w = update_w(h, v, c);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_GE(w[i], 1.0);
      EXPECT_NEAR(w[i], 1.0 + sinr(h, v, c, i), 1e-10 * w[i]);
    }
  }
}

TEST(UpdateU, ZeroAndSingleUserValues) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  for (cplx u : update_u(probe_channel(c, 1), Beamformer{CMatrix(4, 4)}, c))
    EXPECT_EQ(u, cplx(0.0, 0.0));
  const SystemConfig one = config(1, 1, 1.0);
  const auto u = update_u(Channel{CMatrix(1, 1, {{1, 0}})}, Beamformer{CMatrix(1, 1, {{1, 0}})},
                          one);
  EXPECT_NEAR(std::abs(u[0] - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(UpdateU, MinimizesMseByFiniteDifferences) {
  const SystemConfig c = SystemConfig::from_snr_db(15.0);
  const double step = 1e-5;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v = probe_beamformer(c, t, c.max_power);
    const auto u = update_u(h, v, c);
    for (std::size_t i = 0; i < 4; ++i) {
      for (const cplx dir : {cplx(1, 0), cplx(0, 1)}) {
        const double d = (mse(h, v, u[i] + step * dir, i, c) - mse(h, v, u[i] - step * dir, i, c)) /
                         (2 * step);
        EXPECT_LE(std::abs(d), 1e-6);
      }
      // A perturbed gain is never better.
      EXPECT_LE(mse(h, v, u[i], i, c), mse(h, v, u[i] * cplx(1.01, 0.02), i, c));
    }
  }
}

TEST(Mse, MatchesMonteCarloExpectation) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  std::mt19937_64 rng(2024);
  for (std::uint64_t t = 0; t < 5; ++t) {
    const Channel h = probe_channel(c, 100 + t);
    const Beamformer v = probe_beamformer(c, 100 + t, c.max_power);
    const auto u = update_u(h, probe_beamformer(c, 200 + t, c.max_power), c);
    for (std::size_t i = 0; i < 4; ++i) {
      const double closed = mse(h, v, u[i], i, c);
      const double mc = simulated_mse(h, v, u[i], i, c, 200000, rng);
      // |x̂ − x|² has relative spread O(1); 2e5 draws give well under 1%.
      EXPECT_NEAR(mc, closed, 0.02 * closed + 1e-3) << "user " << i;
    }
  }
}

TEST(InnerCost, TrivialPoint) {
  SystemConfig c = config(4, 3, 10.0);
  c.priorities = {1.0, 2.0, 0.5};
  const Channel h = sample_channel(c, sample_stream(1, StreamDomain::kProbe, 0));
  const std::vector<double> w(3, 1.0);
  const std::vector<cplx> u(3, cplx(0, 0));
  EXPECT_NEAR(inner_cost(h, w, u, Beamformer{CMatrix(3, 4)}, c), 3.5, 1e-15);
}

TEST(InnerCost, ConvexInV) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v0 = probe_beamformer(c, t, c.max_power);
    const auto w = update_w(h, v0, c);
    const auto u = update_u(h, v0, c);
    const Beamformer a = probe_beamformer(c, 1000 + t, 5.0);
    const Beamformer b = probe_beamformer(c, 2000 + t, 20.0);
    Beamformer mid{(a.v + b.v) * cplx(0.5, 0)};
    EXPECT_LE(inner_cost(h, w, u, mid, c),
              0.5 * inner_cost(h, w, u, a, c) + 0.5 * inner_cost(h, w, u, b, c) + 1e-10);
  }
}

TEST(BuildA, ZeroGainsAndRankOne) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Channel h = probe_channel(c, 3);
  EXPECT_EQ(build_A(h, std::vector<double>(4, 2.0), std::vector<cplx>(4), c), CMatrix(4, 4));

  const SystemConfig one = config(3, 1, 1.0);
  const Channel h1{CMatrix(1, 3, {{1, 2}, {0, 1}, {-1, 0}})};
  const CMatrix a = build_A(h1, std::vector<double>{1.0}, std::vector<cplx>{cplx(0.6, 0.8)}, one);
  // |u|² = 1, so A = h hᴴ with h the first row read as a column.
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t n = 0; n < 3; ++n)
      EXPECT_LE(std::abs(a(m, n) - h1.h(0, m) * std::conj(h1.h(0, n))), 1e-15);
}

TEST(BuildA, HermitianPsd) {
  const SystemConfig c = SystemConfig::from_snr_db(20.0);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v = probe_beamformer(c, t, c.max_power);
    const CMatrix a = build_A(h, update_w(h, v, c), update_u(h, v, c), c);
    EXPECT_LE(hermitian_defect(a), 1e-12 * std::max(1.0, frob_norm(a)));
    EXPECT_GE(herm_eig(a).eigvals.front(), -1e-10 * std::max(1.0, frob_norm(a)));
  }
}

TEST(SolveMu, ZeroNumeratorGivesZero) {
  EXPECT_EQ(solve_mu(CMatrix::identity(4), CMatrix(4, 4), 4.0), 0.0);
}

TEST(SolveMu, NullAClosedForm) {
  // Φ = I, Λ = 0: 4/μ² = 4 at μ = 1.
  EXPECT_NEAR(solve_mu(CMatrix(4, 4), CMatrix::identity(4), 4.0), 1.0, 1e-4);
}

TEST(SolveMu, ResidualWithinToleranceAndMonotonePower) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  int active = 0;
  for (std::uint64_t t = 0; t < 300; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v = probe_beamformer(c, t, c.max_power * (0.1 + (t % 10) * 0.1));
    const auto w = update_w(h, v, c);
    const auto u = update_u(h, v, c);
    const CMatrix a = build_A(h, w, u, c);
    const CMatrix b = build_B(h, w, u, c);
    const EigResult eig = herm_eig(a);
    const std::vector<double> phi = rotated_diagonal(eig, b);
    const double mu = solve_mu(eig, b, c.max_power);
    if (mu > 0.0) {
      ++active;
      EXPECT_LE(std::abs(power_at_multiplier(eig.eigvals, phi, mu) - c.max_power), 1e-4);
    }
    double prev = power_at_multiplier(eig.eigvals, phi, 1e-3);
    for (double m = 2e-3; m < 10.0; m *= 1.5) {
      const double now = power_at_multiplier(eig.eigvals, phi, m);
      EXPECT_LT(now, prev);
      prev = now;
    }
  }
  EXPECT_GT(active, 0);
}

TEST(SolveMu, RejectsIndefiniteInput) {
  CMatrix a = CMatrix::identity(2);
  a(1, 1) = -1.0;
  try {
    solve_mu(a, CMatrix::identity(2), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(UpdateVExact, ZeroGainsGiveZeroBeamformer) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Beamformer v = update_v_exact(probe_channel(c, 4), std::vector<double>(4, 1.0),
                                      std::vector<cplx>(4), c);
  EXPECT_EQ(trace_gram(v.v), 0.0);
}

TEST(UpdateVExact, SingleUserIsMaximumRatio) {
  const SystemConfig c = config(4, 1, 10.0);
  for (std::uint64_t t = 0; t < 50; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v0 = probe_beamformer(c, t, 3.0);
    const Beamformer v = update_v_exact(h, update_w(h, v0, c), update_u(h, v0, c), c);
    const double inner = std::abs(dot_conj(v.v.row(0), h.h.row(0)));
    // The rank-one A leaves (A + μI)⁻¹ badly conditioned; collinearity holds
    // only to about 1e-7.
    EXPECT_NEAR(inner, std::sqrt(trace_gram(v.v) * trace_gram(h.h)), 1e-6 * inner);
  }
}

TEST(UpdateVExact, LocallyOptimalAmongFeasiblePerturbations) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Channel h = probe_channel(c, t);
    const Beamformer v0 = probe_beamformer(c, t, c.max_power);
    const auto w = update_w(h, v0, c);
    const auto u = update_u(h, v0, c);
    const Beamformer best = update_v_exact(h, w, u, c, kTight);
    const double f = inner_cost(h, w, u, best, c);
    for (int p = 0; p < 100; ++p) {
      Beamformer other = best;
      for (cplx& x : other.v.entries()) x += 0.05 * cplx(g(rng), g(rng));
      const double power = trace_gram(other.v);
      if (power > c.max_power) other.v *= cplx(std::sqrt(c.max_power / power), 0.0);
      EXPECT_LE(f, inner_cost(h, w, u, other, c) + 1e-8);
    }
  }
}

TEST(RunWmmse, SumRateNonDecreasing) {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const SystemConfig c = SystemConfig::from_snr_db(t % 2 ? 20.0 : 10.0);
    const Trajectory tr = run_wmmse(probe_channel(c, t), c, StopRule::truncated(12), kTight);
    double prev = tr.initial_wsr;
    for (const Iterate& it : tr.iterates) {
      worst = std::max(worst, prev - it.wsr);
      prev = it.wsr;
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(RunWmmse, BlockObjectiveNonIncreasing) {
  // u, w and V each minimize Σ α(w e − log2 w) over their own block. update_u
  // and update_w read only V, so running them as u then w gives the same
  // iterates as the w, u, V listing.
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 300; ++t) {
    const SystemConfig c = SystemConfig::from_snr_db(t % 2 ? 20.0 : 10.0);
    const Channel h = probe_channel(c, t);
    Beamformer v = matched_filter_init(h, c);
    std::vector<double> w = update_w(h, v, c);
    std::vector<cplx> u = update_u(h, v, c);
    for (int it = 0; it < 8; ++it) {
      const double f0 = inner_cost(h, w, u, v, c);
      u = update_u(h, v, c);
      const double f1 = inner_cost(h, w, u, v, c);
      w = update_w(h, v, c);
      const double f2 = inner_cost(h, w, u, v, c);
      v = update_v_exact(h, w, u, c, kTight);
      const double f3 = inner_cost(h, w, u, v, c);
      worst = std::max({worst, f1 - f0, f2 - f1, f3 - f2});
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(RunWmmse, IteratesStayFeasible) {
  const SystemConfig c = SystemConfig::from_snr_db(20.0);
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Trajectory tr = run_wmmse(probe_channel(c, t), c, StopRule::truncated(6));
    for (const Iterate& it : tr.iterates) EXPECT_LE(trace_gram(it.v.v), c.max_power + 1e-4);
  }
}

TEST(RunWmmse, SingleUserConvergesToClosedForm) {
  for (std::uint64_t t = 0; t < 50; ++t) {
    const SystemConfig c = config(4, 1, 0.5 + t);
    const Channel h = probe_channel(c, t);
    const Trajectory tr = run_wmmse(h, c, StopRule::converged(), kTight);
    const double closed = std::log2(1.0 + c.max_power * trace_gram(h.h) / c.noise_power);
    EXPECT_NEAR(tr.final_wsr(), closed, 1e-6);
    Beamformer mrt{h.h};
    mrt.v *= cplx(std::sqrt(c.max_power / trace_gram(h.h)), 0.0);
    // Equal up to a common phase.
    const double align = std::abs(dot_conj(tr.final_beamformer().v.row(0), mrt.v.row(0)));
    EXPECT_NEAR(align, c.max_power, 1e-6 * c.max_power);
  }
}

TEST(RunWmmse, StopRules) {
  const SystemConfig c = SystemConfig::from_snr_db(10.0);
  const Channel h = probe_channel(c, 9);
  const Trajectory three = run_wmmse(h, c, StopRule::truncated(3));
  EXPECT_EQ(three.iterations(), 3u);
  EXPECT_EQ(three.reason, StopReason::kMaxIterations);
  const Trajectory conv = run_wmmse(h, c, StopRule::converged());
  EXPECT_EQ(conv.reason, StopReason::kWsrIncrementBelowTol);
  ASSERT_GE(conv.iterations(), 2u);
  const auto& it = conv.iterates;
  EXPECT_LE(it.back().wsr - it[it.size() - 2].wsr, 1e-4);
  // Truncation is a prefix of the converged run.
  EXPECT_EQ(three.iterates[2].wsr, conv.iterates[2].wsr);
  EXPECT_THROW(run_wmmse(h, c, StopRule{}), Error);
}
