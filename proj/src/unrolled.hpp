// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uwmmse/model.hpp"
#include "uwmmse/unfolded.hpp"

namespace uwmmse::detail {

/// Taped forward and reverse sweep of the unfolded network for one channel.
/// All intermediates live in flat buffers sized once per instance, so a
/// worker can reuse one object across the samples it processes.
class UnrolledNetwork {
 public:
  UnrolledNetwork(const SystemConfig& cfg, const UnfoldConfig& ucfg);

  /// Forward pass with taping. Returns Σ_l WSR(V_l). Throws kNonFinite.
  double forward(const Channel& h, const StepSizes& steps);

  /// Adds weight · ∂(−Σ_l WSR(V_l))/∂γ(l, k) into grad. Must follow forward()
  /// on the same channel.
  void backward(const Channel& h, double weight, StepGrid& grad);

  std::span<const cplx> layer_output(std::size_t l) const {
    return {v_out_.data() + l * nm_, nm_};
  }

 private:
  std::size_t slot(std::size_t l, std::size_t k) const { return l * k_ + k; }
  void compute_gains(const Channel& h, const cplx* v, cplx* s) const;
  double readout_wsr(const cplx* s) const;
  void readout_adjoint(const Channel& h, const cplx* s, double weight, cplx* v_bar) const;
  void layer_backward(const Channel& h, std::size_t l, StepGrid& grad);

  SystemConfig cfg_;
  UnfoldConfig ucfg_;
  std::size_t n_, m_, nm_, k_;
  double radius_;

  std::vector<cplx> gains_;      // per layer, N×N at the layer input
  std::vector<double> total_;    // per layer, N
  std::vector<double> interf_;   // per layer, N
  std::vector<double> w_;        // per layer, N
  std::vector<cplx> u_;          // per layer, N
  std::vector<cplx> a_;          // per layer, M×M
  std::vector<cplx> v_before_;   // per (layer, step), N×M
  std::vector<cplx> grad_;       // per (layer, step), N×M
  std::vector<cplx> moved_;      // per (layer, step), N×M
  std::vector<double> norm_;     // per (layer, step)
  std::vector<double> gamma_;    // per (layer, step)
  std::vector<cplx> v_out_;      // per layer, N×M
  std::vector<cplx> out_gains_;  // per layer, N×N at the layer output

  std::vector<cplx> v_bar_, moved_bar_, a_bar_, b_bar_, s_bar_;
  std::vector<double> w_bar_;
  std::vector<cplx> u_bar_;
};

}  // namespace uwmmse::detail
