// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uwmmse/model.hpp"
#include "uwmmse/unfolded.hpp"

namespace uwmmse {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::size_t num_batches = 2000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  double snr_db = 10.0;
  std::size_t antennas = 4;
  std::size_t users = 4;
  UnfoldConfig unfold;
  double step_init = 1.0;
  /// Rescale a minibatch gradient whose Euclidean norm exceeds this value.
  /// Zero disables clipping.
  double grad_clip = 0.0;

  void validate() const;
  SystemConfig system() const { return SystemConfig::from_snr_db(snr_db, antennas, users); }
  std::uint64_t training_samples() const { return batch_size * num_batches; }
};

struct AdamState {
  StepGrid m;
  StepGrid v;
  std::uint64_t t = 0;

  static AdamState zeros_like(const StepGrid& g) {
    return {StepGrid(g.layers(), g.steps()), StepGrid(g.layers(), g.steps()), 0};
  }
};

/// ∂loss/∂γ(l, k) over one minibatch. In tied mode every entry of a row holds
/// the row sum, which is the derivative with respect to the shared value.
struct GradRecord {
  StepGrid partials;
  double loss = 0.0;
};

/// −(1/|batch|) Σ_n Σ_l WSR(H_n, V_l).
double loss(std::span<const Channel> batch, const StepSizes& steps, const SystemConfig& cfg,
            const UnfoldConfig& ucfg);

/// Reverse-mode derivative of `loss` through the whole unrolled network.
/// Throws kNonFinite naming the first layer/step that produced a non-finite
/// value.
GradRecord grad_wrt_steps(std::span<const Channel> batch, const StepSizes& steps,
                          const SystemConfig& cfg, const UnfoldConfig& ucfg);

/// Bias-corrected Adam update applied in place.
void adam_step(StepSizes& steps, const GradRecord& grad, AdamState& state,
               const TrainConfig& cfg);

struct TrainResult {
  StepSizes steps;
  std::vector<double> loss_history;  // one entry per minibatch, before its update
};

/// Online training on freshly drawn channels, starting from step_init.
TrainResult train(const TrainConfig& cfg);

/// Same loop from an explicit starting grid. sample_offset shifts the
/// training stream so that successive stages never reuse channels.
TrainResult train_from(const TrainConfig& cfg, StepSizes init, std::uint64_t sample_offset = 0);

/// Grows K one step at a time up to target_steps. Each new step starts at
/// cfg.step_init and the whole grid is retrained for cfg.num_batches batches.
TrainResult extend_pgd_progressive(const StepSizes& base, std::size_t target_steps,
                                   const TrainConfig& cfg);

/// Appends `count` columns filled with `value`.
StepSizes append_steps(const StepSizes& base, std::size_t count, double value);

/// CSV with header batch_index,loss.
void write_loss_csv(const std::string& path, std::span<const double> history);

}  // namespace uwmmse
