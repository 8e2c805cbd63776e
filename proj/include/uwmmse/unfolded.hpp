// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uwmmse/model.hpp"
#include "uwmmse/numkit.hpp"

namespace uwmmse {

/// Dense L×K grid of reals, indexed (layer, step). Used for step sizes and
/// for everything shaped like them (gradients, optimizer moments).
class StepGrid {
 public:
  StepGrid() = default;
  StepGrid(std::size_t layers, std::size_t steps, double fill = 0.0)
      : layers_(layers), steps_(steps), values_(layers * steps, fill) {}

  std::size_t layers() const noexcept { return layers_; }
  std::size_t steps() const noexcept { return steps_; }

  double& operator()(std::size_t l, std::size_t k) { return values_[l * steps_ + k]; }
  double operator()(std::size_t l, std::size_t k) const { return values_[l * steps_ + k]; }

  std::span<double> row(std::size_t l) { return {values_.data() + l * steps_, steps_}; }
  std::span<const double> row(std::size_t l) const {
    return {values_.data() + l * steps_, steps_};
  }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const StepGrid& o) const noexcept {
    return layers_ == o.layers_ && steps_ == o.steps_;
  }
  bool operator==(const StepGrid&) const = default;

 private:
  std::size_t layers_ = 0;
  std::size_t steps_ = 0;
  std::vector<double> values_;
};

/// Γ: γ(l, k) is the step of the k-th PGD step in layer l. Unconstrained reals.
using StepSizes = StepGrid;

struct UnfoldConfig {
  std::size_t layers = 1;     // L
  std::size_t pgd_steps = 4;  // K
  /// Every PGD step of a layer uses that layer's first entry.
  bool tie_within_layer = false;

  void validate() const;
  void check_steps(const StepSizes& steps) const;
};

/// Step size actually applied at (l, k) under the tying mode.
inline double effective_step(const StepSizes& steps, const UnfoldConfig& ucfg, std::size_t l,
                             std::size_t k) {
  return ucfg.tie_within_layer ? steps(l, 0) : steps(l, k);
}

/// Row i: −2α_i w_i u_i h_i + 2A v_i, i.e. (∂f/∂Re v_i + j ∂f/∂Im v_i) of the
/// inner cost. A is rebuilt from (w, u).
CMatrix pgd_gradient(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                     const Beamformer& v, const SystemConfig& cfg);

/// Same gradient with A supplied by the caller.
CMatrix pgd_gradient(const Channel& h, const CMatrix& a, std::span<const double> w,
                     std::span<const cplx> u, const Beamformer& v, const SystemConfig& cfg);

/// Scale factor √P / (max(0, ‖V‖ − √P) + √P) of the power-ball projection.
double projection_scale(double frob, double max_power);

/// Euclidean projection onto {Tr(VVᴴ) ≤ P}, written without a branch.
Beamformer project_power(const Beamformer& v, double max_power);

/// K projected gradient steps on the inner cost, starting from v_in.
Beamformer pgd_inner(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                     const Beamformer& v_in, std::span<const double> steps,
                     const SystemConfig& cfg);

/// Unfolded network output: one beamformer per layer, starting from the
/// matched filter.
std::vector<Beamformer> forward(const Channel& h, const StepSizes& steps,
                                const SystemConfig& cfg, const UnfoldConfig& ucfg);

}  // namespace uwmmse
