// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "uwmmse/model.hpp"
#include "uwmmse/numkit.hpp"
#include "uwmmse/train.hpp"
#include "uwmmse/unfolded.hpp"
#include "uwmmse/wmmse.hpp"

namespace uwmmse {

namespace {

// Bisection tolerance for the oracles that need the exact V update to hit the
// power budget to machine precision.
constexpr double kTightBisection = 1e-11;

struct Probe {
  std::uint64_t seed;
  std::uint64_t next = 0;

  std::mt19937_64 engine() { return sample_stream(seed, StreamDomain::kProbe, next++).engine(); }

  Channel channel(const SystemConfig& cfg) {
    return sample_channel(cfg, sample_stream(seed, StreamDomain::kProbe, next++));
  }

  // Random beamformer with Tr(VVᴴ) drawn uniformly in (0, P].
  Beamformer beamformer(const SystemConfig& cfg) {
    Beamformer v{sample_channel(cfg, sample_stream(seed, StreamDomain::kProbe, next++)).h};
    auto e = engine();
    const double target = std::uniform_real_distribution<double>(0.05, 1.0)(e) * cfg.max_power;
    v.v *= cplx(std::sqrt(target / trace_gram(v.v)), 0.0);
    return v;
  }
};

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

SelftestResult inner_cost_gradient(Probe& p) {
  constexpr double kStep = 1e-6;
  constexpr double kLimit = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SystemConfig cfg = SystemConfig::from_snr_db(trial % 2 ? 20.0 : 10.0);
    const Channel h = p.channel(cfg);
    const Beamformer v = p.beamformer(cfg);
    const std::vector<double> w = update_w(h, p.beamformer(cfg), cfg);
    const std::vector<cplx> u = update_u(h, p.beamformer(cfg), cfg);
    const CMatrix g = pgd_gradient(h, w, u, v, cfg);
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t e = 0; e < g.entries().size(); ++e) {
      for (const cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
        Beamformer plus = v;
        Beamformer minus = v;
        plus.v.entries()[e] += kStep * dir;
        minus.v.entries()[e] -= kStep * dir;
        const double fd =
            (inner_cost(h, w, u, plus, cfg) - inner_cost(h, w, u, minus, cfg)) / (2 * kStep);
        const double an = dir.real() != 0.0 ? g.entries()[e].real() : g.entries()[e].imag();
        err = std::max(err, std::abs(fd - an));
        scale = std::max(scale, std::abs(an));
      }
    }
    worst = std::max(worst, err / std::max(scale, 1e-300));
  }
  return {"(a) inner-cost gradient vs finite differences, 100 instances", worst <= kLimit,
          fmt("max relative error %.3g (limit %.0e)", worst, kLimit)};
}

SelftestResult training_gradient(Probe& p) {
  constexpr double kStep = 1e-6;
  constexpr double kLimit = 1e-5;
  struct Shape {
    std::size_t layers, steps;
    bool tied;
    double snr;
  };
  constexpr Shape kShapes[] = {{1, 4, false, 10.0}, {2, 3, false, 20.0}, {3, 4, false, 10.0},
                               {2, 2, true, 10.0}};
  double worst = 0.0;
  int probes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Shape& s = kShapes[trial % 4];
    const SystemConfig cfg = SystemConfig::from_snr_db(s.snr);
    const UnfoldConfig ucfg{s.layers, s.steps, s.tied};
    std::vector<Channel> batch;
    for (int n = 0; n < 10; ++n) batch.push_back(p.channel(cfg));
    auto e = p.engine();
    // Alternate between steps near 0, near 1, and spread out.
    const double lo = trial % 3 == 0 ? 0.01 : (trial % 3 == 1 ? 0.9 : 0.05);
    const double hi = trial % 3 == 0 ? 0.1 : (trial % 3 == 1 ? 1.1 : 1.5);
    StepSizes steps(s.layers, s.steps);
    std::uniform_real_distribution<double> draw(lo, hi);
    for (std::size_t l = 0; l < s.layers; ++l) {
      const double shared = draw(e);
      for (std::size_t k = 0; k < s.steps; ++k) steps(l, k) = s.tied ? shared : draw(e);
    }
    const GradRecord g = grad_wrt_steps(batch, steps, cfg, ucfg);
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t l = 0; l < s.layers; ++l) {
      for (std::size_t k = 0; k < (s.tied ? 1 : s.steps); ++k) {
        StepSizes plus = steps;
        StepSizes minus = steps;
        for (std::size_t kk = 0; kk < s.steps; ++kk) {
          if (!s.tied && kk != k) continue;
          plus(l, kk) += kStep;
          minus(l, kk) -= kStep;
        }
        const double fd = (loss(batch, plus, cfg, ucfg) - loss(batch, minus, cfg, ucfg)) / (2 * kStep);
        err = std::max(err, std::abs(fd - g.partials(l, k)));
        scale = std::max(scale, std::abs(fd));
      }
    }
    worst = std::max(worst, err / std::max(scale, 1e-300));
    ++probes;
  }
  return {"(b) training gradient vs finite differences, " + std::to_string(probes) + " probes",
          worst <= kLimit, fmt("max relative error %.3g (limit %.0e)", worst, kLimit)};
}

SelftestResult eigensolver(Probe& p) {
  constexpr double kLimit = 1e-10;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
    auto e = p.engine();
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, i) = g(e);
      for (std::size_t j = i + 1; j < n; ++j) {
        a(i, j) = cplx(g(e), g(e));
        a(j, i) = std::conj(a(i, j));
      }
    }
    const EigResult r = herm_eig(a);
    CMatrix lambda(n, n);
    for (std::size_t i = 0; i < n; ++i) lambda(i, i) = r.eigvals[i];
    const CMatrix rebuilt = matmul(matmul(r.eigvecs, lambda), r.eigvecs.adjoint());
    const double recon = max_abs_diff(rebuilt, a) / std::max(1.0, frob_norm(a));
    const double unit = max_abs_diff(matmul(r.eigvecs.adjoint(), r.eigvecs), CMatrix::identity(n));
    worst = std::max({worst, recon, unit});
  }
  return {"(c) eigendecomposition reconstruction and unitarity, 200 matrices", worst <= kLimit,
          fmt("max error %.3g (limit %.0e)", worst, kLimit)};
}

SelftestResult bisection_residual(Probe& p) {
  constexpr double kLimit = 1e-4;
  double worst = 0.0;
  int active = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const SystemConfig cfg = SystemConfig::from_snr_db(5.0 + 5.0 * (trial % 4));
    const Channel h = p.channel(cfg);
    const Beamformer v0 = p.beamformer(cfg);
    const std::vector<double> w = update_w(h, v0, cfg);
    const std::vector<cplx> u = update_u(h, v0, cfg);
    const ExactVUpdate x = solve_v_exact(h, w, u, cfg);
    if (x.mu > 0.0) {
      ++active;
      worst = std::max(worst, std::abs(trace_gram(x.v.v) - cfg.max_power));
    }
  }
  return {"(d) bisection power residual when mu > 0, " + std::to_string(active) + " instances",
          active > 0 && worst <= kLimit,
          fmt("max |Tr(VV^H) - P| %.3g (limit %.0e)", worst, kLimit)};
}

SelftestResult mmse_weight_identity(Probe& p) {
  constexpr double kLimit = 1e-10;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const SystemConfig cfg = SystemConfig::from_snr_db(10.0);
    const Channel h = p.channel(cfg);
    const Beamformer v = p.beamformer(cfg);
    const std::vector<double> w = update_w(h, v, cfg);
    for (std::size_t i = 0; i < cfg.users; ++i) {
      const double s = 1.0 + sinr(h, v, cfg, i);
      worst = std::max(worst, std::abs(w[i] - s) / s);
    }
  }
  return {"(e) w_i = 1 + SINR_i, 200 instances", worst <= kLimit,
          fmt("max relative error %.3g (limit %.0e)", worst, kLimit)};
}

SelftestResult wmmse_monotone(Probe& p) {
  constexpr double kSlack = 1e-8;
  double worst_drop = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const SystemConfig cfg = SystemConfig::from_snr_db(trial % 2 ? 20.0 : 10.0);
    const Channel h = p.channel(cfg);
    const Trajectory t = run_wmmse(h, cfg, StopRule::truncated(15), kTightBisection);
    double prev = t.initial_wsr;
    for (const Iterate& it : t.iterates) {
      worst_drop = std::max(worst_drop, prev - it.wsr);
      prev = it.wsr;
    }
  }
  return {"(f) WMMSE sum rate non-decreasing, 1000 instances x 15 iterations",
          worst_drop <= kSlack, fmt("largest drop %.3g (slack %.0e)", worst_drop, kSlack)};
}

SelftestResult long_pgd(Probe& p) {
  constexpr double kLimit = 1e-6;
  constexpr std::size_t kSteps = 200;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SystemConfig cfg = SystemConfig::from_snr_db(trial % 2 ? 20.0 : 10.0);
    const Channel h = p.channel(cfg);
    const Beamformer v0 = matched_filter_init(h, cfg);
    const std::vector<double> w = update_w(h, v0, cfg);
    const std::vector<cplx> u = update_u(h, v0, cfg);
    const CMatrix a = build_A(h, w, u, cfg);
    const double gamma = 0.9 / (2.0 * herm_eig(a).eigvals.back());
    const std::vector<double> steps(kSteps, gamma);
    const Beamformer pgd = pgd_inner(h, w, u, v0, steps, cfg);
    const Beamformer exact = solve_v_exact(h, w, u, cfg, kTightBisection).v;
    const double gap = inner_cost(h, w, u, pgd, cfg) - inner_cost(h, w, u, exact, cfg);
    worst = std::max(worst, std::abs(gap));
  }
  return {"(g) 200-step PGD vs exact inner solve, 100 instances", worst <= kLimit,
          fmt("max cost gap %.3g (limit %.0e)", worst, kLimit)};
}

SelftestResult single_user(Probe& p) {
  constexpr double kLimit = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SystemConfig cfg = SystemConfig::from_snr_db(-5.0 + 2.5 * (trial % 11), 4, 1);
    const Channel h = p.channel(cfg);
    const Trajectory t = run_wmmse(h, cfg, StopRule::converged(), kTightBisection);
    const double closed =
        std::log2(1.0 + cfg.max_power * trace_gram(h.h) / cfg.noise_power);
    worst = std::max(worst, std::abs(t.final_wsr() - closed));
  }
  return {"(h) single-user WMMSE vs log2(1 + P|h|^2/sigma^2), 100 instances", worst <= kLimit,
          fmt("max error %.3g (limit %.0e)", worst, kLimit)};
}

}  // namespace

std::vector<SelftestResult> run_selftest(
    std::uint64_t seed, const std::function<void(const SelftestResult&)>& report) {
  using Suite = SelftestResult (*)(Probe&);
  constexpr Suite kSuites[] = {inner_cost_gradient, training_gradient, eigensolver,
                               bisection_residual,  mmse_weight_identity, wmmse_monotone,
                               long_pgd,            single_user};
  std::vector<SelftestResult> out;
  for (std::size_t s = 0; s < std::size(kSuites); ++s) {
    Probe p{seed ^ (0x5e1f7e57ULL << 8) ^ s};
    SelftestResult r;
    try {
      r = kSuites[s](p);
    } catch (const std::exception& e) {
      r = {"suite " + std::to_string(s + 1), false, std::string("threw: ") + e.what()};
    }
    if (report) report(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace uwmmse
