// SPDX-License-Identifier: Apache-2.0
#include "unrolled.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "uwmmse/error.hpp"

namespace uwmmse::detail {

namespace {

[[noreturn]] void non_finite(std::size_t layer, std::size_t step, const char* where) {
  throw Error(ErrorCode::kNonFinite, std::string("non-finite ") + where + " at layer " +
                                         std::to_string(layer + 1) + ", PGD step " +
                                         std::to_string(step + 1));
}

}  // namespace

// Adjoint convention: for the real loss and a complex intermediate z,
// z̄ = ∂/∂Re z + j ∂/∂Im z. Then z = a·b gives ā += z̄·conj(b), and a real
// r = |z|² gives z̄ += 2 r̄ z.

UnrolledNetwork::UnrolledNetwork(const SystemConfig& cfg, const UnfoldConfig& ucfg)
    : cfg_(cfg),
      ucfg_(ucfg),
      n_(cfg.users),
      m_(cfg.antennas),
      nm_(cfg.users * cfg.antennas),
      k_(ucfg.pgd_steps),
      radius_(std::sqrt(cfg.max_power)) {
  const std::size_t layers = ucfg.layers;
  const std::size_t slots = layers * k_;
  gains_.resize(layers * n_ * n_);
  out_gains_.resize(layers * n_ * n_);
  total_.resize(layers * n_);
  interf_.resize(layers * n_);
  w_.resize(layers * n_);
  u_.resize(layers * n_);
  a_.resize(layers * m_ * m_);
  v_before_.resize(slots * nm_);
  grad_.resize(slots * nm_);
  moved_.resize(slots * nm_);
  norm_.resize(slots);
  gamma_.resize(slots);
  v_out_.resize(layers * nm_);
  v_bar_.resize(nm_);
  moved_bar_.resize(nm_);
  a_bar_.resize(m_ * m_);
  b_bar_.resize(nm_);
  s_bar_.resize(n_ * n_);
  w_bar_.resize(n_);
  u_bar_.resize(n_);
}

void UnrolledNetwork::compute_gains(const Channel& h, const cplx* v, cplx* s) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const cplx* hi = &h.h(i, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      const cplx* vj = v + j * m_;
      cplx acc{0.0, 0.0};
      for (std::size_t r = 0; r < m_; ++r) acc += std::conj(hi[r]) * vj[r];
      s[i * n_ + j] = acc;
    }
  }
}

double UnrolledNetwork::readout_wsr(const cplx* s) const {
  double rate = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double interf = cfg_.noise_power;
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i) interf += std::norm(s[i * n_ + j]);
    rate += cfg_.priorities[i] * std::log2(1.0 + std::norm(s[i * n_ + i]) / interf);
  }
  return rate;
}

double UnrolledNetwork::forward(const Channel& h, const StepSizes& steps) {
  // Matched filter V = aH with Tr(VVᴴ) = P.
  double energy = 0.0;
  for (const cplx& x : h.h.entries()) energy += std::norm(x);
  if (!(energy > 0.0))
    throw Error(ErrorCode::kDegenerateInput, "matched filter of an all-zero channel");
  const double a0 = std::sqrt(cfg_.max_power / energy);
  std::vector<cplx> start(nm_);
  for (std::size_t e = 0; e < nm_; ++e) start[e] = a0 * h.h.entries()[e];

  double rate_sum = 0.0;
  const cplx* v_in = start.data();
  for (std::size_t l = 0; l < ucfg_.layers; ++l) {
    cplx* s = &gains_[l * n_ * n_];
    double* total = &total_[l * n_];
    double* interf = &interf_[l * n_];
    double* w = &w_[l * n_];
    cplx* u = &u_[l * n_];
    cplx* a = &a_[l * m_ * m_];

    compute_gains(h, v_in, s);
    for (std::size_t i = 0; i < n_; ++i) {
      double t = cfg_.noise_power;
      for (std::size_t j = 0; j < n_; ++j) t += std::norm(s[i * n_ + j]);
      total[i] = t;
      interf[i] = t - std::norm(s[i * n_ + i]);
      w[i] = t / interf[i];
      u[i] = s[i * n_ + i] / t;
    }
    std::fill(a, a + m_ * m_, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_; ++i) {
      const double c = cfg_.priorities[i] * w[i] * std::norm(u[i]);
      const cplx* hi = &h.h(i, 0);
      for (std::size_t j = 0; j < m_; ++j) {
        const cplx chj = c * hi[j];
        for (std::size_t k = 0; k < m_; ++k) a[j * m_ + k] += chj * std::conj(hi[k]);
      }
    }

    const cplx* v = v_in;
    for (std::size_t k = 0; k < k_; ++k) {
      const std::size_t sl = slot(l, k);
      const double gamma = effective_step(steps, ucfg_, l, k);
      cplx* vb = &v_before_[sl * nm_];
      cplx* g = &grad_[sl * nm_];
      cplx* mv = &moved_[sl * nm_];
      std::copy(v, v + nm_, vb);
      double sq = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const cplx b = 2.0 * cfg_.priorities[i] * w[i] * u[i];
        const cplx* hi = &h.h(i, 0);
        for (std::size_t j = 0; j < m_; ++j) {
          cplx av{0.0, 0.0};
          for (std::size_t r = 0; r < m_; ++r) av += a[j * m_ + r] * vb[i * m_ + r];
          const cplx gij = 2.0 * av - b * hi[j];
          g[i * m_ + j] = gij;
          mv[i * m_ + j] = vb[i * m_ + j] - gamma * gij;
          sq += std::norm(mv[i * m_ + j]);
        }
      }
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) non_finite(l, k, "beamformer");
      norm_[sl] = norm;
      gamma_[sl] = gamma;
      const double scale = projection_scale(norm, cfg_.max_power);
      cplx* next = (k + 1 == k_) ? &v_out_[l * nm_] : &v_before_[(sl + 1) * nm_];
      for (std::size_t e = 0; e < nm_; ++e) next[e] = scale * mv[e];
      v = next;
    }
    cplx* s_out = &out_gains_[l * n_ * n_];
    compute_gains(h, &v_out_[l * nm_], s_out);
    rate_sum += readout_wsr(s_out);
    v_in = &v_out_[l * nm_];
  }
  return rate_sum;
}

void UnrolledNetwork::readout_adjoint(const Channel& h, const cplx* s, double weight,
                                      cplx* v_bar) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double total = cfg_.noise_power;
    for (std::size_t j = 0; j < n_; ++j) total += std::norm(s[i * n_ + j]);
    const double interf = total - std::norm(s[i * n_ + i]);
    const double c = -weight * cfg_.priorities[i] / std::numbers::ln2;
    const cplx* hi = &h.h(i, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      const double g_bar = c * (1.0 / total - (j == i ? 0.0 : 1.0 / interf));
      const cplx s_bar = 2.0 * g_bar * s[i * n_ + j];
      for (std::size_t r = 0; r < m_; ++r) v_bar[j * m_ + r] += s_bar * hi[r];
    }
  }
}

void UnrolledNetwork::layer_backward(const Channel& h, std::size_t l, StepGrid& grad) {
  const cplx* a = &a_[l * m_ * m_];
  const double* w = &w_[l * n_];
  const cplx* u = &u_[l * n_];
  std::fill(a_bar_.begin(), a_bar_.end(), cplx{0.0, 0.0});
  std::fill(b_bar_.begin(), b_bar_.end(), cplx{0.0, 0.0});

  for (std::size_t k = k_; k-- > 0;) {
    const std::size_t sl = slot(l, k);
    const cplx* mv = &moved_[sl * nm_];
    const cplx* g = &grad_[sl * nm_];
    const cplx* vb = &v_before_[sl * nm_];
    const double norm = norm_[sl];

    // Projection. Inside the ball (and on its boundary) it is the identity.
    if (norm > radius_) {
      double radial = 0.0;
      for (std::size_t e = 0; e < nm_; ++e) radial += (std::conj(v_bar_[e]) * mv[e]).real();
      const double c1 = radius_ / norm;
      const double c2 = radius_ * radial / (norm * norm * norm);
      for (std::size_t e = 0; e < nm_; ++e) moved_bar_[e] = c1 * v_bar_[e] - c2 * mv[e];
    } else {
      std::copy(v_bar_.begin(), v_bar_.end(), moved_bar_.begin());
    }

    // Ṽ = V − γ ∇f(V) with ∇f(V) row i = 2A v_i − 2 b_i.
    double gamma_bar = 0.0;
    for (std::size_t e = 0; e < nm_; ++e) gamma_bar -= (std::conj(moved_bar_[e]) * g[e]).real();
    if (!std::isfinite(gamma_bar)) non_finite(l, k, "step-size derivative");
    if (ucfg_.tie_within_layer)
      grad(l, 0) += gamma_bar;  // folded into the row sum by the caller
    else
      grad(l, k) += gamma_bar;

    const double gamma = gamma_[sl];
    std::copy(moved_bar_.begin(), moved_bar_.end(), v_bar_.begin());
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        const cplx gb = -2.0 * gamma * moved_bar_[i * m_ + j];  // 2 × adjoint of ∇f(V)(i, j)
        b_bar_[i * m_ + j] -= gb;
        for (std::size_t r = 0; r < m_; ++r) {
          v_bar_[i * m_ + r] += gb * std::conj(a[j * m_ + r]);
          a_bar_[j * m_ + r] += gb * std::conj(vb[i * m_ + r]);
        }
      }
    }
  }

  // A = Σ c_i h_i h_iᴴ with c_i = α_i w_i |u_i|²;  b_i = β_i h_i with β_i = α_i w_i u_i.
  for (std::size_t i = 0; i < n_; ++i) {
    const cplx* hi = &h.h(i, 0);
    double c_bar = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      cplx row{0.0, 0.0};
      for (std::size_t r = 0; r < m_; ++r) row += std::conj(a_bar_[j * m_ + r]) * std::conj(hi[r]);
      c_bar += (row * hi[j]).real();
    }
    cplx beta_bar{0.0, 0.0};
    for (std::size_t j = 0; j < m_; ++j) beta_bar += b_bar_[i * m_ + j] * std::conj(hi[j]);
    const double alpha = cfg_.priorities[i];
    w_bar_[i] = alpha * std::norm(u[i]) * c_bar + alpha * (std::conj(beta_bar) * u[i]).real();
    u_bar_[i] = 2.0 * alpha * w[i] * c_bar * u[i] + alpha * w[i] * beta_bar;
  }

  // w_i = T_i / I_i, u_i = s_ii / T_i, I_i = T_i − |s_ii|², T_i = Σ_j |s_ij|² + σ².
  const cplx* s = &gains_[l * n_ * n_];
  const double* total = &total_[l * n_];
  const double* interf = &interf_[l * n_];
  for (std::size_t i = 0; i < n_; ++i) {
    const double t = total[i];
    const double it = interf[i];
    const cplx sii = s[i * n_ + i];
    const double interf_bar = -w_bar_[i] * t / (it * it);
    const double total_bar =
        w_bar_[i] / it + interf_bar + (std::conj(u_bar_[i]) * (-sii / (t * t))).real();
    const cplx* hi = &h.h(i, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      double g_bar = total_bar;
      if (j == i) g_bar -= interf_bar;
      cplx s_bar = 2.0 * g_bar * s[i * n_ + j];
      if (j == i) s_bar += u_bar_[i] / t;
      for (std::size_t r = 0; r < m_; ++r) v_bar_[j * m_ + r] += s_bar * hi[r];
    }
  }
}

void UnrolledNetwork::backward(const Channel& h, double weight, StepGrid& grad) {
  std::fill(v_bar_.begin(), v_bar_.end(), cplx{0.0, 0.0});
  for (std::size_t l = ucfg_.layers; l-- > 0;) {
    readout_adjoint(h, &out_gains_[l * n_ * n_], weight, v_bar_.data());
    layer_backward(h, l, grad);
  }
}

}  // namespace uwmmse::detail
