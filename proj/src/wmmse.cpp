// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/wmmse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "model_detail.hpp"
#include "uwmmse/error.hpp"

namespace uwmmse {

namespace {

constexpr double kEigenClampTolerance = 1e-10;
constexpr double kDenominatorFloor = 1e-12;
constexpr int kBisectionMaxIterations = 500;

void check_receiver(const SystemConfig& cfg, std::span<const double> w,
                    std::span<const cplx> u) {
  if (w.size() != cfg.users || u.size() != cfg.users)
    throw Error(ErrorCode::kDimension, "receiver state length does not match users");
}

// Σ c_i h_i h_iᴴ with row-stored channels: entry (j, k) = Σ_i c_i H(i,j) conj(H(i,k)).
CMatrix weighted_outer_sum(const Channel& h, std::span<const double> coeff) {
  const std::size_t m = h.antennas();
  CMatrix out(m, m);
  for (std::size_t i = 0; i < h.users(); ++i) {
    if (coeff[i] == 0.0) continue;
    const auto hi = h.h.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const cplx a = coeff[i] * hi[j];
      for (std::size_t k = 0; k < m; ++k) out(j, k) += a * std::conj(hi[k]);
    }
  }
  return out;
}

std::vector<double> clamped_eigvals(const EigResult& eig) {
  double scale = 1.0;
  for (double l : eig.eigvals) scale = std::max(scale, std::abs(l));
  std::vector<double> out(eig.eigvals);
  for (double& l : out) {
    if (l < -kEigenClampTolerance * scale)
      throw Error(ErrorCode::kDomain, "solve_mu: matrix is not positive semidefinite");
    l = std::max(l, 0.0);
  }
  return out;
}

}  // namespace

std::vector<double> update_w(const Channel& h, const Beamformer& v, const SystemConfig& cfg) {
  detail::check_instance(h, v, cfg);
  const CMatrix s = channel_gains(h, v);
  std::vector<double> w(h.users());
  for (std::size_t i = 0; i < h.users(); ++i) {
    double total = cfg.noise_power;
    for (std::size_t j = 0; j < h.users(); ++j) total += std::norm(s(i, j));
    w[i] = total / (total - std::norm(s(i, i)));
  }
  return w;
}

std::vector<cplx> update_u(const Channel& h, const Beamformer& v, const SystemConfig& cfg) {
  detail::check_instance(h, v, cfg);
  const CMatrix s = channel_gains(h, v);
  std::vector<cplx> u(h.users());
  for (std::size_t i = 0; i < h.users(); ++i) {
    double total = cfg.noise_power;
    for (std::size_t j = 0; j < h.users(); ++j) total += std::norm(s(i, j));
    u[i] = s(i, i) / total;
  }
  return u;
}

CMatrix build_A(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                const SystemConfig& cfg) {
  detail::check_channel(h, cfg);
  check_receiver(cfg, w, u);
  std::vector<double> c(h.users());
  for (std::size_t i = 0; i < h.users(); ++i)
    c[i] = cfg.priorities[i] * w[i] * std::norm(u[i]);
  return weighted_outer_sum(h, c);
}

CMatrix build_B(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                const SystemConfig& cfg) {
  detail::check_channel(h, cfg);
  check_receiver(cfg, w, u);
  std::vector<double> c(h.users());
  for (std::size_t i = 0; i < h.users(); ++i) {
    const double aw = cfg.priorities[i] * w[i];
    c[i] = aw * aw * std::norm(u[i]);
  }
  return weighted_outer_sum(h, c);
}

double power_at_multiplier(std::span<const double> eigvals, std::span<const double> phi_diag,
                           double mu) {
  double total = 0.0;
  for (std::size_t j = 0; j < eigvals.size(); ++j) {
    if (phi_diag[j] == 0.0) continue;
    const double d = std::max(eigvals[j] + mu, kDenominatorFloor);
    total += phi_diag[j] / (d * d);
  }
  return total;
}

std::vector<double> rotated_diagonal(const EigResult& eig, const CMatrix& b) {
  const std::size_t m = b.rows();
  if (!b.square() || eig.eigvecs.rows() != m)
    throw Error(ErrorCode::kDimension, "rotated_diagonal: shape mismatch");
  std::vector<double> phi(m);
  for (std::size_t j = 0; j < m; ++j) {
    cplx acc{0.0, 0.0};
    for (std::size_t r = 0; r < m; ++r) {
      cplx bu{0.0, 0.0};
      for (std::size_t c = 0; c < m; ++c) bu += b(r, c) * eig.eigvecs(c, j);
      acc += std::conj(eig.eigvecs(r, j)) * bu;
    }
    // B is PSD, so only roundoff can push a diagonal entry below zero.
    phi[j] = std::max(acc.real(), 0.0);
  }
  return phi;
}

double solve_mu(const EigResult& eig_a, const CMatrix& b, double max_power, double tolerance) {
  if (!(max_power > 0.0)) throw Error(ErrorCode::kInvalidArgument, "solve_mu: P must be positive");
  if (hermitian_defect(b) > 1e-12 * std::max(1.0, frob_norm(b)))
    throw Error(ErrorCode::kDomain, "solve_mu: B is not Hermitian");
  const std::vector<double> lambda = clamped_eigvals(eig_a);
  const std::vector<double> phi = rotated_diagonal(eig_a, b);

  double phi_sum = 0.0;
  for (double p : phi) phi_sum += p;
  if (phi_sum == 0.0) return 0.0;
  if (power_at_multiplier(lambda, phi, 0.0) <= max_power) return 0.0;

  // The power is decreasing in μ; at √(ΣΦ/P) it is at most P (each λ_j ≥ 0),
  // at 0 it exceeds P. (Called μ_low and μ_high respectively in the usual
  // WMMSE write-ups, despite the ordering.)
  double lo = 0.0;
  double hi = std::sqrt(phi_sum / max_power);
  const double min_width = 1e-14 * hi;
  double mid = hi;
  for (int it = 0; it < kBisectionMaxIterations; ++it) {
    mid = 0.5 * (lo + hi);
    const double excess = power_at_multiplier(lambda, phi, mid) - max_power;
    if (std::abs(excess) <= tolerance) return mid;
    if (excess > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= min_width) break;
  }
  return hi;
}

double solve_mu(const CMatrix& a, const CMatrix& b, double max_power, double tolerance) {
  if (!a.square() || !b.square() || a.rows() != b.rows())
    throw Error(ErrorCode::kDimension, "solve_mu: A and B must be square and equal-sized");
  if (hermitian_defect(a) > 1e-12 * std::max(1.0, frob_norm(a)))
    throw Error(ErrorCode::kDomain, "solve_mu: A is not Hermitian");
  return solve_mu(herm_eig(a), b, max_power, tolerance);
}

ExactVUpdate solve_v_exact(const Channel& h, std::span<const double> w,
                           std::span<const cplx> u, const SystemConfig& cfg,
                           double bisection_tolerance) {
  const CMatrix a = build_A(h, w, u, cfg);
  const CMatrix b = build_B(h, w, u, cfg);
  const EigResult eig = herm_eig(a);
  const double mu = solve_mu(eig, b, cfg.max_power, bisection_tolerance);
  const std::vector<double> lambda = clamped_eigvals(eig);

  const std::size_t m = h.antennas();
  ExactVUpdate out{Beamformer{CMatrix(h.users(), m)}, mu};
  for (std::size_t i = 0; i < h.users(); ++i) {
    const cplx scale = cfg.priorities[i] * w[i] * u[i];
    if (scale == cplx{0.0, 0.0}) continue;
    const auto hi = h.h.row(i);
    auto vi = out.v.v.row(i);
    // (A + μI)⁻¹ h_i = Σ_j U_j (U_jᴴ h_i) / (λ_j + μ)
    for (std::size_t j = 0; j < m; ++j) {
      cplx proj{0.0, 0.0};
      for (std::size_t r = 0; r < m; ++r) proj += std::conj(eig.eigvecs(r, j)) * hi[r];
      const cplx coeff = scale * proj / std::max(lambda[j] + mu, kDenominatorFloor);
      for (std::size_t r = 0; r < m; ++r) vi[r] += coeff * eig.eigvecs(r, j);
    }
  }
  return out;
}

Beamformer update_v_exact(const Channel& h, std::span<const double> w,
                          std::span<const cplx> u, const SystemConfig& cfg,
                          double bisection_tolerance) {
  return solve_v_exact(h, w, u, cfg, bisection_tolerance).v;
}

double mse(const Channel& h, const Beamformer& v, cplx u_i, std::size_t i,
           const SystemConfig& cfg) {
  detail::check_instance(h, v, cfg);
  if (i >= h.users()) throw Error(ErrorCode::kIndexOutOfRange, "mse: user index out of range");
  double total = cfg.noise_power;
  cplx own{0.0, 0.0};
  for (std::size_t j = 0; j < h.users(); ++j) {
    const cplx s = dot_conj(h.h.row(i), v.v.row(j));
    total += std::norm(s);
    if (j == i) own = s;
  }
  return std::norm(u_i) * total - 2.0 * (std::conj(u_i) * own).real() + 1.0;
}

double inner_cost(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                  const Beamformer& v, const SystemConfig& cfg) {
  check_receiver(cfg, w, u);
  double f = 0.0;
  for (std::size_t i = 0; i < h.users(); ++i)
    f += cfg.priorities[i] * (w[i] * mse(h, v, u[i], i, cfg) - std::log2(w[i]));
  return f;
}

Trajectory run_wmmse(const Channel& h, const SystemConfig& cfg, const StopRule& stop,
                     double bisection_tolerance) {
  if (!stop.max_iterations && !stop.wsr_increment_tol)
    throw Error(ErrorCode::kInvalidArgument, "run_wmmse: stop rule sets no criterion");
  cfg.validate();
  Trajectory traj;
  traj.initial = matched_filter_init(h, cfg);
  traj.initial_wsr = wsr(h, traj.initial, cfg);

  const std::size_t cap = stop.max_iterations.value_or(kConvergenceIterationCap);
  Beamformer v = traj.initial;
  double previous = traj.initial_wsr;
  for (std::size_t it = 0; it < cap; ++it) {
    ReceiverState state{update_w(h, v, cfg), update_u(h, v, cfg)};
    v = update_v_exact(h, state.w, state.u, cfg, bisection_tolerance);
    const double rate = wsr(h, v, cfg);
    traj.iterates.push_back(Iterate{std::move(state), v, rate});
    if (stop.wsr_increment_tol && rate - previous <= *stop.wsr_increment_tol) {
      traj.reason = StopReason::kWsrIncrementBelowTol;
      return traj;
    }
    previous = rate;
  }
  traj.reason = StopReason::kMaxIterations;
  return traj;
}

}  // namespace uwmmse
