// SPDX-License-Identifier: Apache-2.0
// unfold-wmmse: train, extend, evaluate and reproduce from the command line.
// Failures print one line, `error: <code>: <message>`, to stderr and exit
// with the numeric status.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "uwmmse/uwmmse.h"

namespace {

struct StepsDeleter {
  void operator()(uwmmse_steps* s) const { uwmmse_steps_free(s); }
};
using StepsPtr = std::unique_ptr<uwmmse_steps, StepsDeleter>;

int report_failure(int status, std::string message) {
  for (char& c : message)
    if (c == '\n' || c == '\r') c = ' ';
  std::fprintf(stderr, "error: %s: %s\n",
               uwmmse_status_name(static_cast<uwmmse_status>(status)), message.c_str());
  return status;
}

struct Failure {
  uwmmse_status status;
};

void check(uwmmse_status s) {
  if (s != UWMMSE_OK) throw Failure{s};
}

void progress_to_stderr(const char* message, void*) {
  std::fprintf(stderr, "[unfold-wmmse] %s\n", message);
}

void print_steps(const uwmmse_steps* steps) {
  size_t layers = 0, k = 0;
  int tied = 0;
  check(uwmmse_steps_shape(steps, &layers, &k, &tied));
  for (size_t l = 0; l < layers; ++l) {
    std::printf("gamma.%zu =", l + 1);
    for (size_t j = 0; j < k; ++j) {
      double v = 0.0;
      check(uwmmse_steps_get(steps, l, j, &v));
      std::printf(" %.10g", v);
    }
    std::printf("\n");
  }
}

void print_selftest(const char* name, int passed, const char* detail, void*) {
  std::printf("%s %s: %s\n", passed ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unfolded WMMSE beamforming: training, evaluation and figure reproduction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(uwmmse_version()));

  uwmmse_train_options topt;
  uwmmse_train_options_default(&topt);
  bool tied = false;
  std::string out_path, loss_csv;
  auto* train = app.add_subcommand("train", "Train step sizes on freshly drawn channels");
  train->add_option("--snr", topt.snr_db, "SNR in dB (P = 10^(snr/10), unit noise)")->required();
  train->add_option("--layers", topt.layers, "Number of unfolded layers L")->required();
  train->add_option("--pgd-steps", topt.pgd_steps, "PGD steps per layer K")->required();
  train->add_flag("--tied", tied, "Share one step size across the PGD steps of a layer");
  train->add_option("--budget", topt.training_samples, "Training channels")
      ->capture_default_str();
  train->add_option("--batch-size", topt.batch_size, "Channels per minibatch")
      ->capture_default_str();
  train->add_option("--lr", topt.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--step-init", topt.step_init, "Initial step size")->capture_default_str();
  train->add_option("--grad-clip", topt.grad_clip, "Gradient-norm clip (0 disables)")
      ->capture_default_str();
  train->add_option("--seed", topt.seed, "Seed")->required();
  train->add_option("--out", out_path, "Step-size file to write")->required();
  train->add_option("--loss-csv", loss_csv, "Also write the per-batch loss history");

  std::string in_path;
  std::size_t target_k = 0;
  std::uint64_t stage_budget = 0;
  auto* extend = app.add_subcommand("extend", "Progressively add PGD steps and retrain");
  extend->add_option("--in", in_path, "Trained step-size file")->required()->check(
      CLI::ExistingFile);
  extend->add_option("--target-pgd-steps", target_k, "Final number of PGD steps")->required();
  extend->add_option("--stage-budget", stage_budget,
                     "Training channels per added step (default 1000000)");
  extend->add_option("--out", out_path, "Step-size file to write")->required();

  std::string method, steps_path, eval_out;
  double snr = 0.0;
  std::size_t layers = 1, samples = 10000;
  std::uint64_t seed = 1;
  auto* eval = app.add_subcommand("eval", "Monte Carlo mean WSR of one method");
  eval->add_option("--method", method,
                   "wmmse_convergence | wmmse_truncated | unfolded | unfolded_tied")
      ->required();
  eval->add_option("--snr", snr, "SNR in dB")->required();
  eval->add_option("--layers", layers, "Iterations for wmmse_truncated")->capture_default_str();
  eval->add_option("--steps", steps_path, "Step-size file for unfolded methods")
      ->check(CLI::ExistingFile);
  eval->add_option("--samples", samples, "Test channels")->required();
  eval->add_option("--seed", seed, "Seed of the test set")->required();
  eval->add_option("--out", eval_out, "Write the result CSV here instead of stdout");

  int figure = 0;
  double scale = 1.0;
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate the data of one figure");
  reproduce->add_option("--figure", figure, "2, 3, 4 or 5")->required();
  reproduce->add_option("--scale", scale, "Budget scale in (0, 1]")->capture_default_str();
  reproduce->add_option("--seed", seed, "Seed")->capture_default_str();
  reproduce->add_option("--out", out_path, "CSV to write")->required();

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment described by a key = value file");
  run->add_option("--config", config_path, "Experiment file")->required()->check(
      CLI::ExistingFile);
  run->add_option("--out", out_path, "Override the file's output path");

  std::uint64_t selftest_seed = 7;
  auto* selftest = app.add_subcommand("selftest", "Run the numerical oracle suites");
  selftest->add_option("--seed", selftest_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_failure(UWMMSE_E_INVALID_ARGUMENT, e.what());
  }

  try {
    if (*train) {
      topt.tied = tied ? 1 : 0;
      uwmmse_steps* raw = nullptr;
      check(uwmmse_train(&topt, loss_csv.empty() ? nullptr : loss_csv.c_str(),
                         progress_to_stderr, nullptr, &raw));
      StepsPtr steps(raw);
      check(uwmmse_steps_save(steps.get(), out_path.c_str()));
      print_steps(steps.get());
    } else if (*extend) {
      uwmmse_steps* raw = nullptr;
      check(uwmmse_steps_load(in_path.c_str(), &raw));
      StepsPtr base(raw);
      raw = nullptr;
      check(uwmmse_extend(base.get(), target_k, stage_budget, progress_to_stderr, nullptr, &raw));
      StepsPtr grown(raw);
      check(uwmmse_steps_save(grown.get(), out_path.c_str()));
      print_steps(grown.get());
    } else if (*eval) {
      StepsPtr steps;
      if (!steps_path.empty()) {
        uwmmse_steps* raw = nullptr;
        check(uwmmse_steps_load(steps_path.c_str(), &raw));
        steps.reset(raw);
      }
      double mean = 0.0, std_error = 0.0;
      check(uwmmse_evaluate(method.c_str(), snr, layers, steps.get(), samples, seed, &mean,
                            &std_error));
      std::FILE* f = eval_out.empty() ? stdout : std::fopen(eval_out.c_str(), "w");
      if (!f) return report_failure(UWMMSE_E_IO, "cannot open " + eval_out + " for writing");
      std::fprintf(f, "method,snr_db,layers,samples,seed,value,stderr\n%s,%.10g,%zu,%zu,%llu,%.10g,%.10g\n",
                   method.c_str(), snr, layers, samples, static_cast<unsigned long long>(seed),
                   mean, std_error);
      if (f != stdout && std::fclose(f) != 0)
        return report_failure(UWMMSE_E_IO, "write to " + eval_out + " failed");
    } else if (*reproduce) {
      check(uwmmse_reproduce(figure, scale, seed, out_path.c_str(), progress_to_stderr, nullptr));
    } else if (*run) {
      check(uwmmse_run_experiment(config_path.c_str(), out_path.empty() ? nullptr : out_path.c_str(),
                                  progress_to_stderr, nullptr));
    } else if (*selftest) {
      int ok = 0;
      check(uwmmse_selftest(selftest_seed, print_selftest, nullptr, &ok));
      if (!ok) {
        std::fprintf(stderr, "error: selftest_failed: one or more oracle suites failed\n");
        return EXIT_FAILURE;
      }
    }
  } catch (const Failure& f) {
    return report_failure(f.status, uwmmse_last_error());
  }
  return EXIT_SUCCESS;
}
