// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/uwmmse.h"

#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "uwmmse/bench.hpp"
#include "uwmmse/error.hpp"
#include "uwmmse/selftest.hpp"
#include "uwmmse/train.hpp"

struct uwmmse_steps {
  uwmmse::StepSizeArtifact artifact;
};

namespace {

thread_local std::string g_last_error;

uwmmse_status fail(uwmmse_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class Fn>
uwmmse_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return UWMMSE_OK;
  } catch (const uwmmse::Error& e) {
    return fail(static_cast<uwmmse_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(UWMMSE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UWMMSE_E_INTERNAL, e.what());
  } catch (...) {
    return fail(UWMMSE_E_INTERNAL, "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw uwmmse::Error(uwmmse::ErrorCode::kInvalidArgument, what);
}

uwmmse::ProgressFn wrap(uwmmse_progress_fn progress, void* user) {
  if (!progress) return {};
  return [progress, user](std::string_view msg) { progress(std::string(msg).c_str(), user); };
}

void note(uwmmse_progress_fn progress, void* user, const std::string& msg) {
  if (progress) progress(msg.c_str(), user);
}

}  // namespace

extern "C" {

const char* uwmmse_version(void) { return "1.0.0"; }

const char* uwmmse_status_name(uwmmse_status status) {
  switch (status) {
    case UWMMSE_OK: return "ok";
    case UWMMSE_E_INTERNAL: return "internal";
    default: return uwmmse::error_code_name(static_cast<uwmmse::ErrorCode>(status));
  }
}

const char* uwmmse_last_error(void) { return g_last_error.c_str(); }

void uwmmse_train_options_default(uwmmse_train_options* opts) {
  if (!opts) return;
  const uwmmse::TrainConfig d;
  opts->snr_db = d.snr_db;
  opts->layers = d.unfold.layers;
  opts->pgd_steps = d.unfold.pgd_steps;
  opts->tied = 0;
  opts->batch_size = d.batch_size;
  opts->training_samples = uwmmse::BudgetSchedule{}.base_training_samples;
  opts->learning_rate = d.learning_rate;
  opts->step_init = d.step_init;
  opts->grad_clip = d.grad_clip;
  opts->seed = d.seed;
}

uwmmse_status uwmmse_train(const uwmmse_train_options* opts, const char* loss_csv,
                           uwmmse_progress_fn progress, void* user, uwmmse_steps** out) {
  return guarded([&] {
    require(opts && out, "uwmmse_train: null argument");
    *out = nullptr;
    require(opts->batch_size >= 1, "batch_size must be >= 1");
    require(opts->training_samples >= 1, "training budget must be >= 1 sample");
    uwmmse::TrainConfig tc;
    tc.snr_db = opts->snr_db;
    tc.unfold = {opts->layers, opts->pgd_steps, opts->tied != 0};
    tc.batch_size = opts->batch_size;
    tc.num_batches = static_cast<std::size_t>((opts->training_samples + opts->batch_size - 1) /
                                              opts->batch_size);
    tc.learning_rate = opts->learning_rate;
    tc.step_init = opts->step_init;
    tc.grad_clip = opts->grad_clip;
    tc.seed = opts->seed;
    tc.validate();
    note(progress, user,
         "training L=" + std::to_string(tc.unfold.layers) + " K=" +
             std::to_string(tc.unfold.pgd_steps) + " on " +
             std::to_string(tc.training_samples()) + " samples");
    uwmmse::TrainResult r = uwmmse::train(tc);
    if (loss_csv) uwmmse::write_loss_csv(loss_csv, r.loss_history);
    *out = new uwmmse_steps{
        {std::move(r.steps), tc.unfold.tie_within_layer, tc.snr_db, tc.seed,
         tc.training_samples()}};
  });
}

uwmmse_status uwmmse_extend(const uwmmse_steps* base, size_t target_pgd_steps,
                            uint64_t stage_samples, uwmmse_progress_fn progress, void* user,
                            uwmmse_steps** out) {
  return guarded([&] {
    require(base && out, "uwmmse_extend: null argument");
    *out = nullptr;
    const uwmmse::StepSizeArtifact& a = base->artifact;
    uwmmse::TrainConfig tc;
    tc.snr_db = a.snr_db;
    tc.seed = a.seed;
    tc.unfold = a.unfold();
    if (stage_samples == 0) stage_samples = uwmmse::BudgetSchedule{}.extension_stage_samples;
    tc.num_batches =
        static_cast<std::size_t>((stage_samples + tc.batch_size - 1) / tc.batch_size);
    tc.validate();
    note(progress, user,
         "extending K=" + std::to_string(a.steps.steps()) + " to " +
             std::to_string(target_pgd_steps) + ", " + std::to_string(tc.training_samples()) +
             " samples per added step");
    uwmmse::TrainResult r = uwmmse::extend_pgd_progressive(a.steps, target_pgd_steps, tc);
    const std::uint64_t spent = tc.training_samples() * (target_pgd_steps - a.steps.steps());
    *out = new uwmmse_steps{
        {std::move(r.steps), a.tied, a.snr_db, a.seed, a.training_samples + spent}};
  });
}

uwmmse_status uwmmse_steps_save(const uwmmse_steps* steps, const char* path) {
  return guarded([&] {
    require(steps && path, "uwmmse_steps_save: null argument");
    uwmmse::save_steps(path, steps->artifact);
  });
}

uwmmse_status uwmmse_steps_load(const char* path, uwmmse_steps** out) {
  return guarded([&] {
    require(path && out, "uwmmse_steps_load: null argument");
    *out = nullptr;
    *out = new uwmmse_steps{uwmmse::load_steps(path)};
  });
}

void uwmmse_steps_free(uwmmse_steps* steps) { delete steps; }

uwmmse_status uwmmse_steps_shape(const uwmmse_steps* steps, size_t* layers, size_t* pgd_steps,
                                 int* tied) {
  return guarded([&] {
    require(steps, "uwmmse_steps_shape: null handle");
    if (layers) *layers = steps->artifact.steps.layers();
    if (pgd_steps) *pgd_steps = steps->artifact.steps.steps();
    if (tied) *tied = steps->artifact.tied ? 1 : 0;
  });
}

uwmmse_status uwmmse_steps_get(const uwmmse_steps* steps, size_t layer, size_t step,
                               double* value) {
  return guarded([&] {
    require(steps && value, "uwmmse_steps_get: null argument");
    const uwmmse::StepSizes& g = steps->artifact.steps;
    if (layer >= g.layers() || step >= g.steps())
      throw uwmmse::Error(uwmmse::ErrorCode::kIndexOutOfRange,
                          "step index (" + std::to_string(layer) + ", " + std::to_string(step) +
                              ") outside " + std::to_string(g.layers()) + "x" +
                              std::to_string(g.steps()));
    *value = g(layer, step);
  });
}

uwmmse_status uwmmse_steps_metadata(const uwmmse_steps* steps, double* snr_db, uint64_t* seed,
                                    uint64_t* training_samples) {
  return guarded([&] {
    require(steps, "uwmmse_steps_metadata: null handle");
    if (snr_db) *snr_db = steps->artifact.snr_db;
    if (seed) *seed = steps->artifact.seed;
    if (training_samples) *training_samples = steps->artifact.training_samples;
  });
}

uwmmse_status uwmmse_evaluate(const char* method, double snr_db, size_t layers,
                              const uwmmse_steps* steps, size_t samples, uint64_t seed,
                              double* mean, double* std_error) {
  return guarded([&] {
    require(method && mean, "uwmmse_evaluate: null argument");
    uwmmse::MethodInstance inst{uwmmse::parse_method(method), layers, std::nullopt};
    if (inst.method == uwmmse::Method::kUnfolded || inst.method == uwmmse::Method::kUnfoldedTied) {
      require(steps != nullptr, "unfolded methods need a step-size artifact");
      if ((inst.method == uwmmse::Method::kUnfoldedTied) != steps->artifact.tied)
        throw uwmmse::Error(uwmmse::ErrorCode::kShapeMismatch,
                            std::string("step-size artifact is ") +
                                (steps->artifact.tied ? "tied" : "untied") + " but method is " +
                                method);
      inst.steps = steps->artifact.steps;
    }
    const uwmmse::Estimate e = uwmmse::evaluate(inst, snr_db, samples, seed);
    *mean = e.mean;
    if (std_error) *std_error = e.std_error;
  });
}

uwmmse_status uwmmse_reproduce(int figure, double scale, uint64_t seed, const char* csv_path,
                               uwmmse_progress_fn progress, void* user) {
  return guarded([&] {
    require(csv_path != nullptr, "uwmmse_reproduce: null path");
    uwmmse::BudgetSchedule budget;
    budget.scale = scale;
    budget.seed = seed;
    const auto rows = uwmmse::reproduce_figure(figure, budget, wrap(progress, user));
    uwmmse::write_figure_csv(csv_path, rows);
  });
}

uwmmse_status uwmmse_run_experiment(const char* config_path, const char* csv_path,
                                    uwmmse_progress_fn progress, void* user) {
  return guarded([&] {
    require(config_path != nullptr, "uwmmse_run_experiment: null config path");
    const uwmmse::ExperimentSpec spec = uwmmse::load_experiment(config_path);
    const std::string out = csv_path ? csv_path : spec.output;
    require(!out.empty(), "no output path: set `output` in the config or pass one");
    const auto rows = uwmmse::run_experiment(spec, wrap(progress, user));
    std::ofstream f(out);
    if (!f) throw uwmmse::Error(uwmmse::ErrorCode::kIo, "cannot open " + out + " for writing");
    uwmmse::write_experiment_csv(f, rows);
    f.flush();
    if (!f) throw uwmmse::Error(uwmmse::ErrorCode::kIo, "write to " + out + " failed");
  });
}

uwmmse_status uwmmse_selftest(uint64_t seed, uwmmse_selftest_fn report, void* user,
                              int* all_passed) {
  return guarded([&] {
    require(all_passed != nullptr, "uwmmse_selftest: null argument");
    bool ok = true;
    uwmmse::run_selftest(seed, [&](const uwmmse::SelftestResult& r) {
      ok = ok && r.passed;
      if (report) report(r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str(), user);
    });
    *all_passed = ok ? 1 : 0;
  });
}

}  // extern "C"
