// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "model_detail.hpp"
#include "parallel.hpp"
#include "unrolled.hpp"
#include "uwmmse/error.hpp"
#include "uwmmse/wmmse.hpp"

namespace uwmmse {

namespace {

struct SampleGrad {
  StepGrid partials;
  double loss = 0.0;
};

void check_batch(std::span<const Channel> batch, const SystemConfig& cfg) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty minibatch");
  cfg.validate();
  for (const Channel& h : batch) detail::check_channel(h, cfg);
}

std::vector<Channel> draw_batch(const SystemConfig& sys, std::uint64_t seed,
                                std::uint64_t first_index, std::size_t count) {
  std::vector<Channel> batch(count);
  for (std::size_t j = 0; j < count; ++j)
    batch[j] = sample_channel(sys, sample_stream(seed, StreamDomain::kTrain, first_index + j));
  return batch;
}

void clip_gradient(StepGrid& g, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double x : g.values()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm)
    for (double& x : g.values()) x *= max_norm / norm;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be positive");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be at least 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "adam_eps must be positive");
  if (grad_clip < 0.0) throw Error(ErrorCode::kInvalidArgument, "grad_clip must be >= 0");
  unfold.validate();
  system().validate();
}

double loss(std::span<const Channel> batch, const StepSizes& steps, const SystemConfig& cfg,
            const UnfoldConfig& ucfg) {
  check_batch(batch, cfg);
  ucfg.check_steps(steps);
  std::vector<double> per_sample(batch.size());
  detail::parallel_for(batch.size(), [&](std::size_t n) {
    double s = 0.0;
    for (const Beamformer& v : forward(batch[n], steps, cfg, ucfg)) s += wsr(batch[n], v, cfg);
    per_sample[n] = s;
  });
  double total = 0.0;
  for (double s : per_sample) total += s;
  return -total / static_cast<double>(batch.size());
}

GradRecord grad_wrt_steps(std::span<const Channel> batch, const StepSizes& steps,
                          const SystemConfig& cfg, const UnfoldConfig& ucfg) {
  check_batch(batch, cfg);
  ucfg.check_steps(steps);
  const double weight = 1.0 / static_cast<double>(batch.size());
  std::vector<SampleGrad> per_sample(batch.size());
  detail::parallel_ranges(batch.size(), [&](std::size_t begin, std::size_t end) {
    detail::UnrolledNetwork net(cfg, ucfg);
    for (std::size_t n = begin; n < end; ++n) {
      SampleGrad& out = per_sample[n];
      out.partials = StepGrid(ucfg.layers, ucfg.pgd_steps);
      out.loss = -weight * net.forward(batch[n], steps);
      net.backward(batch[n], weight, out.partials);
    }
  });

  GradRecord out{StepGrid(ucfg.layers, ucfg.pgd_steps), 0.0};
  for (const SampleGrad& s : per_sample) {  // fixed order keeps the sum reproducible
    out.loss += s.loss;
    for (std::size_t e = 0; e < s.partials.values().size(); ++e)
      out.partials.values()[e] += s.partials.values()[e];
  }
  if (ucfg.tie_within_layer) {
    for (std::size_t l = 0; l < ucfg.layers; ++l) {
      double sum = 0.0;
      for (double g : out.partials.row(l)) sum += g;
      for (double& g : out.partials.row(l)) g = sum;
    }
  }
  return out;
}

void adam_step(StepSizes& steps, const GradRecord& grad, AdamState& state,
               const TrainConfig& cfg) {
  if (!steps.same_shape(grad.partials) || !steps.same_shape(state.m) ||
      !steps.same_shape(state.v))
    throw Error(ErrorCode::kShapeMismatch, "adam_step: grid shapes disagree");
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);
  auto gamma = steps.values();
  auto g = grad.partials.values();
  auto m = state.m.values();
  auto v = state.v.values();
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    m[e] = cfg.adam_beta1 * m[e] + (1.0 - cfg.adam_beta1) * g[e];
    v[e] = cfg.adam_beta2 * v[e] + (1.0 - cfg.adam_beta2) * g[e] * g[e];
    const double m_hat = m[e] / correction1;
    const double v_hat = v[e] / correction2;
    gamma[e] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

TrainResult train_from(const TrainConfig& cfg, StepSizes init, std::uint64_t sample_offset) {
  cfg.validate();
  cfg.unfold.check_steps(init);
  const SystemConfig sys = cfg.system();
  TrainResult out{std::move(init), {}};
  out.loss_history.reserve(cfg.num_batches);
  AdamState adam = AdamState::zeros_like(out.steps);
  for (std::size_t b = 0; b < cfg.num_batches; ++b) {
    const std::vector<Channel> batch =
        draw_batch(sys, cfg.seed, sample_offset + b * cfg.batch_size, cfg.batch_size);
    GradRecord grad = grad_wrt_steps(batch, out.steps, sys, cfg.unfold);
    clip_gradient(grad.partials, cfg.grad_clip);
    out.loss_history.push_back(grad.loss);
    adam_step(out.steps, grad, adam, cfg);
  }
  return out;
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  return train_from(cfg, StepSizes(cfg.unfold.layers, cfg.unfold.pgd_steps, cfg.step_init));
}

StepSizes append_steps(const StepSizes& base, std::size_t count, double value) {
  StepSizes out(base.layers(), base.steps() + count, value);
  for (std::size_t l = 0; l < base.layers(); ++l)
    for (std::size_t k = 0; k < base.steps(); ++k) out(l, k) = base(l, k);
  return out;
}

TrainResult extend_pgd_progressive(const StepSizes& base, std::size_t target_steps,
                                   const TrainConfig& cfg) {
  if (target_steps <= base.steps())
    throw Error(ErrorCode::kInvalidArgument,
                "extend: target PGD steps (" + std::to_string(target_steps) +
                    ") must exceed the current " + std::to_string(base.steps()));
  TrainResult out{base, {}};
  TrainConfig stage = cfg;
  stage.unfold.layers = base.layers();
  std::uint64_t stage_index = 0;
  while (out.steps.steps() < target_steps) {
    // Each stage draws from its own slice of the training stream, clear of
    // the base run's samples.
    const std::uint64_t offset = ++stage_index << 40;
    stage.unfold.pgd_steps = out.steps.steps() + 1;
    StepSizes grown = append_steps(out.steps, 1, cfg.step_init);
    if (cfg.unfold.tie_within_layer)  // keep each row on its shared value
      for (std::size_t l = 0; l < grown.layers(); ++l) grown(l, grown.steps() - 1) = grown(l, 0);
    TrainResult r = train_from(stage, std::move(grown), offset);
    out.steps = std::move(r.steps);
    out.loss_history.insert(out.loss_history.end(), r.loss_history.begin(),
                            r.loss_history.end());
  }
  return out;
}

void write_loss_csv(const std::string& path, std::span<const double> history) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  f << "batch_index,loss\n" << std::setprecision(10);
  for (std::size_t b = 0; b < history.size(); ++b) f << b << ',' << history[b] << '\n';
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace uwmmse
