// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwmmse/train.hpp"
#include "uwmmse/unfolded.hpp"

namespace uwmmse {

enum class Method { kWmmseConvergence, kWmmseTruncated, kUnfolded, kUnfoldedTied };

/// wmmse_convergence, wmmse_truncated, unfolded, unfolded_tied.
std::string_view method_name(Method m);
/// Inverse of method_name. Throws kInvalidArgument.
Method parse_method(std::string_view name);

/// A concrete method to score. `layers` is the truncation depth for
/// wmmse_truncated; unfolded methods take L and K from `steps`.
struct MethodInstance {
  Method method = Method::kWmmseConvergence;
  std::size_t layers = 1;
  std::optional<StepSizes> steps;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Default number of test channels per evaluation.
constexpr std::size_t kDefaultEvalSamples = 10000;

/// Mean WSR of the method's final beamformer over `samples` i.i.d. test
/// channels drawn from `seed`, with the standard error of that mean. The
/// result does not depend on the worker count.
Estimate evaluate(const MethodInstance& method, double snr_db, std::size_t samples,
                  std::uint64_t seed, std::size_t antennas = 4, std::size_t users = 4);

/// Trained step sizes plus the metadata needed to reuse them.
struct StepSizeArtifact {
  StepSizes steps;
  bool tied = false;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  std::uint64_t training_samples = 0;

  UnfoldConfig unfold() const { return {steps.layers(), steps.steps(), tied}; }
};

constexpr int kArtifactFormatVersion = 1;

/// Text format: a magic line, key=value metadata, one gamma.<l> row per layer
/// with %.17g values, and an end marker. Throws kIo.
void save_steps(const std::string& path, const StepSizeArtifact& artifact);

/// Throws kIo (unreadable), kCorruptFile (malformed or truncated) or
/// kVersionMismatch (unknown format_version).
StepSizeArtifact load_steps(const std::string& path);

/// As above, then kShapeMismatch unless L, K and the tied flag match.
StepSizeArtifact load_steps(const std::string& path, const UnfoldConfig& expected);

/// One line of a reproduced figure. `x` is L for figures 2-4 and SNR (dB)
/// for figure 5.
struct FigureRow {
  int figure = 0;
  std::string series;
  double x = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  std::optional<double> paper_value;
};

/// Training and evaluation budget of a reproduction at a given scale. Every
/// count below is the scale-1 value; the scale multiplies all of them.
struct BudgetSchedule {
  double scale = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t base_training_samples = 2'000'000;  // per trained network
  std::uint64_t high_snr_training_samples = 6'000'000;  // at or above high_snr_db
  double high_snr_db = 15.0;
  std::uint64_t extension_stage_samples = 1'000'000;  // per added PGD step
  std::size_t base_eval_samples = kDefaultEvalSamples;

  void validate() const;  // scale in (0, 1]
  std::uint64_t training_samples(double snr_db) const;
  std::size_t training_batches(double snr_db, std::size_t batch_size) const;
  std::size_t extension_batches(std::size_t batch_size) const;
  std::size_t eval_samples() const;
};

using ProgressFn = std::function<void(std::string_view)>;

/// Per-batch losses of one network trained during a reproduction.
struct TrainingLog {
  std::string label;  // e.g. "unfolded L=3 10 dB"
  std::vector<double> loss_history;
};

/// Regenerates figure 2 (10 dB, K=4, vs L), 3 (20 dB, K=4, vs L),
/// 4 (20 dB, 4 vs 8 PGD steps, vs L) or 5 (L=1, K=4, vs SNR).
/// Throws kUnknownFigure for any other id. When `logs` is set, every
/// training run appends its loss history there.
std::vector<FigureRow> reproduce_figure(int figure, const BudgetSchedule& budget,
                                        const ProgressFn& progress = {},
                                        std::vector<TrainingLog>* logs = nullptr);

/// Published values for one figure, in the row order reproduce_figure emits.
std::vector<FigureRow> reference_figure(int figure);

/// Header figure,series,x,value,stderr,paper_value; 10 significant digits.
void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows);
void write_figure_csv(const std::string& path, const std::vector<FigureRow>& rows);

/// A grid of evaluations read from a flat `key = value` file.
///
///   method = unfolded          # wmmse_convergence | wmmse_truncated | unfolded | unfolded_tied
///   snr_db = 10, 20
///   layers = 1, 2, 3
///   pgd_steps = 4
///   eval_samples = 10000
///   train_samples = 2000000
///   batch_size = 100
///   learning_rate = 0.001
///   step_init = 1
///   grad_clip = 0
///   antennas = 4
///   users = 4
///   seed = 1
///   output = results.csv
struct ExperimentSpec {
  Method method = Method::kWmmseConvergence;
  std::vector<double> snr_db{10.0};
  std::vector<std::size_t> layers{1};
  std::size_t pgd_steps = 4;
  std::size_t eval_samples = kDefaultEvalSamples;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string output;

  void validate() const;
};

/// Throws kInvalidArgument naming the offending line.
ExperimentSpec parse_experiment(std::istream& in);
ExperimentSpec load_experiment(const std::string& path);

struct ExperimentRow {
  Method method = Method::kWmmseConvergence;
  double snr_db = 0.0;
  std::size_t layers = 0;
  std::size_t pgd_steps = 0;
  Estimate estimate;
};

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec,
                                          const ProgressFn& progress = {});

/// Header method,snr_db,layers,pgd_steps,value,stderr,samples.
void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

}  // namespace uwmmse
