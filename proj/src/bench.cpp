// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "parallel.hpp"
#include "uwmmse/error.hpp"
#include "uwmmse/model.hpp"
#include "uwmmse/wmmse.hpp"

namespace uwmmse {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 4> kMethodNames{{
    {Method::kWmmseConvergence, "wmmse_convergence"},
    {Method::kWmmseTruncated, "wmmse_truncated"},
    {Method::kUnfolded, "unfolded"},
    {Method::kUnfoldedTied, "unfolded_tied"},
}};

std::string format_double(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
std::optional<T> parse_number(std::string_view text) {
  text = trim(text);
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto comma = text.find(',');
    parts.push_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Published curves. Figures 2-4 are indexed by L = 1..6, figure 5 by SNR.

constexpr std::array<double, 6> kFig2Unfolded{8.55238878736002, 9.31791222232729,
                                              9.54739862646093, 9.65311001630277,
                                              9.71138830671989, 9.74597729840455};
constexpr std::array<double, 6> kFig2Wmmse{7.94556340991089, 9.10786237131682,
                                           9.48402979482838, 9.63048534031205,
                                           9.70503811522628, 9.74962895835738};
constexpr std::array<double, 6> kFig2Tied{7.58810253106744, 8.6926536988122,
                                          9.15003443838656, 9.37242139244959,
                                          9.49881819729442, 9.57269861820653};
constexpr double kFig2Convergence = 9.86428211286433;

constexpr std::array<double, 6> kFig3Unfolded{12.4708852016052, 15.5750042200248,
                                              16.7086710437917, 17.0015535957825,
                                              17.2190194449553, 17.2314861828137};
constexpr std::array<double, 6> kFig3Wmmse{10.9921967126972, 15.3398891414424,
                                           17.3626205644617, 18.1085861095798,
                                           18.4175821599519, 18.57297621584};
constexpr std::array<double, 6> kFig3Tied{9.84101085924647, 12.4878643449648,
                                          13.7419801311465, 14.5670963987776,
                                          15.1311066425139, 15.5676164705176};
constexpr double kFig3Convergence = 19.2377116361486;

constexpr std::array<double, 6> kFig4Unfolded8{12.8716090978318, 16.5091810381069,
                                               17.6763175681697, 17.9306262847849,
                                               18.1530108179765, 18.2748562726735};

constexpr std::array<double, 7> kFig5Snr{5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0};
constexpr std::array<double, 7> kFig5Unfolded{5.72214184840159, 7.13891467534541,
                                              8.55238878736002, 9.83180849371341,
                                              10.9054756790702, 11.8118736693653,
                                              12.4708852016052};
constexpr std::array<double, 7> kFig5Wmmse{5.52920786702354, 6.77231149599143,
                                           7.94556340991089, 8.97640887611549,
                                           9.82715410871368, 10.493111606781,
                                           10.9921967126972};
constexpr std::array<double, 7> kFig5Tied{5.44649886652019, 6.5828710301115,
                                          7.58810253106744, 8.40839215193566,
                                          9.04086183774931, 9.50829837466094,
                                          9.84101085924647};

constexpr std::size_t kFigureLayers = 6;
constexpr std::size_t kFigurePgdSteps = 4;
constexpr std::size_t kExtendedPgdSteps = 8;

struct SeriesRef {
  std::string_view name;
  std::span<const double> values;
};

struct FigureLayout {
  double snr_db = 0.0;  // figures 2-4
  std::vector<SeriesRef> series;
  std::optional<double> convergence;
};

FigureLayout layout(int figure) {
  switch (figure) {
    case 2:
      return {10.0, {{"unfolded", kFig2Unfolded}, {"wmmse_truncated", kFig2Wmmse},
                     {"unfolded_tied", kFig2Tied}}, kFig2Convergence};
    case 3:
      return {20.0, {{"unfolded", kFig3Unfolded}, {"wmmse_truncated", kFig3Wmmse},
                     {"unfolded_tied", kFig3Tied}}, kFig3Convergence};
    case 4:
      return {20.0, {{"unfolded_4pgd", kFig3Unfolded}, {"unfolded_8pgd", kFig4Unfolded8},
                     {"wmmse_truncated", kFig3Wmmse}}, kFig3Convergence};
    case 5:
      return {0.0, {{"unfolded", kFig5Unfolded}, {"wmmse_truncated", kFig5Wmmse},
                    {"unfolded_tied", kFig5Tied}}, std::nullopt};
    default:
      throw Error(ErrorCode::kUnknownFigure,
                  "unknown figure id " + std::to_string(figure) + " (expected 2, 3, 4 or 5)");
  }
}

// Row order: series-major, x ascending; the convergence line comes last.
std::vector<FigureRow> reference_rows(int figure, const FigureLayout& lay) {
  std::vector<FigureRow> rows;
  for (const SeriesRef& s : lay.series) {
    for (std::size_t p = 0; p < s.values.size(); ++p) {
      const double x = figure == 5 ? kFig5Snr[p] : static_cast<double>(p + 1);
      rows.push_back({figure, std::string(s.name), x, 0.0, 0.0, s.values[p]});
    }
  }
  if (lay.convergence)
    for (std::size_t l = 1; l <= kFigureLayers; ++l)
      rows.push_back({figure, "wmmse_convergence", static_cast<double>(l), 0.0, 0.0,
                      *lay.convergence});
  return rows;
}

// ---------------------------------------------------------------------------
// Figure cells.

struct CellContext {
  const BudgetSchedule& budget;
  const ProgressFn& progress;
  int figure;
  std::vector<TrainingLog>* logs;

  void record(std::string label, TrainResult& r) const {
    if (logs) logs->push_back({std::move(label), std::move(r.loss_history)});
  }

  void note(const std::string& msg) const {
    if (progress) progress("figure " + std::to_string(figure) + ": " + msg);
  }

  TrainConfig train_config(double snr_db, std::size_t layers, bool tied) const {
    TrainConfig tc;
    tc.snr_db = snr_db;
    tc.seed = budget.seed;
    tc.unfold = {layers, kFigurePgdSteps, tied};
    tc.num_batches = budget.training_batches(snr_db, tc.batch_size);
    return tc;
  }

  StepSizes train_cell(double snr_db, std::size_t layers, bool tied) const {
    const TrainConfig tc = train_config(snr_db, layers, tied);
    note(std::string("training ") + (tied ? "unfolded_tied" : "unfolded") + " L=" +
         std::to_string(layers) + " at " + format_double("%g", snr_db) + " dB on " +
         std::to_string(tc.training_samples()) + " samples");
    TrainResult r = train(tc);
    record(std::string(tied ? "unfolded_tied" : "unfolded") + " L=" + std::to_string(layers) +
               " " + format_double("%g", snr_db) + " dB",
           r);
    return std::move(r.steps);
  }

  Estimate score(Method m, double snr_db, std::size_t layers,
                 std::optional<StepSizes> steps = std::nullopt) const {
    return evaluate({m, layers, std::move(steps)}, snr_db, budget.eval_samples(), budget.seed);
  }
};

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames)
    if (method == m) return name;
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames)
    if (n == name) return method;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown method '" + std::string(name) +
                  "' (expected wmmse_convergence, wmmse_truncated, unfolded or unfolded_tied)");
}

Estimate evaluate(const MethodInstance& method, double snr_db, std::size_t samples,
                  std::uint64_t seed, std::size_t antennas, std::size_t users) {
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "evaluate: samples must be >= 1");
  const SystemConfig cfg = SystemConfig::from_snr_db(snr_db, antennas, users);
  cfg.validate();

  UnfoldConfig ucfg;
  switch (method.method) {
    case Method::kWmmseConvergence:
      break;
    case Method::kWmmseTruncated:
      if (method.layers < 1)
        throw Error(ErrorCode::kInvalidArgument, "wmmse_truncated needs layers >= 1");
      break;
    case Method::kUnfolded:
    case Method::kUnfoldedTied:
      if (!method.steps)
        throw Error(ErrorCode::kInvalidArgument, "unfolded methods need trained step sizes");
      ucfg = {method.steps->layers(), method.steps->steps(),
              method.method == Method::kUnfoldedTied};
      ucfg.validate();
      ucfg.check_steps(*method.steps);
      break;
  }

  std::vector<double> rate(samples);
  detail::parallel_for(samples, [&](std::size_t n) {
    const Channel h = sample_channel(cfg, sample_stream(seed, StreamDomain::kTest, n));
    switch (method.method) {
      case Method::kWmmseConvergence:
        rate[n] = run_wmmse(h, cfg, StopRule::converged()).final_wsr();
        break;
      case Method::kWmmseTruncated:
        rate[n] = run_wmmse(h, cfg, StopRule::truncated(method.layers)).final_wsr();
        break;
      case Method::kUnfolded:
      case Method::kUnfoldedTied:
        rate[n] = wsr(h, forward(h, *method.steps, cfg, ucfg).back(), cfg);
        break;
    }
  });

  double sum = 0.0;
  for (double r : rate) sum += r;
  const double mean = sum / static_cast<double>(samples);
  double sq = 0.0;
  for (double r : rate) sq += (r - mean) * (r - mean);
  const double var = samples > 1 ? sq / static_cast<double>(samples - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

// ---------------------------------------------------------------------------
// Step-size artifact.

namespace {

constexpr std::string_view kArtifactMagic = "uwmmse-steps";

[[noreturn]] void corrupt(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::kCorruptFile, "corrupt step-size file " + path + ": " + why);
}

}  // namespace

void save_steps(const std::string& path, const StepSizeArtifact& artifact) {
  const StepSizes& g = artifact.steps;
  if (g.layers() < 1 || g.steps() < 1)
    throw Error(ErrorCode::kInvalidArgument, "save_steps: empty step-size grid");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << kArtifactMagic << '\n'
      << "format_version=" << kArtifactFormatVersion << '\n'
      << "layers=" << g.layers() << '\n'
      << "pgd_steps=" << g.steps() << '\n'
      << "tied=" << (artifact.tied ? 1 : 0) << '\n'
      << "snr_db=" << format_double("%.17g", artifact.snr_db) << '\n'
      << "seed=" << artifact.seed << '\n'
      << "training_samples=" << artifact.training_samples << '\n';
  for (std::size_t l = 0; l < g.layers(); ++l) {
    out << "gamma." << (l + 1) << '=';
    for (std::size_t k = 0; k < g.steps(); ++k)
      out << (k ? "," : "") << format_double("%.17g", g(l, k));
    out << '\n';
  }
  out << "end\n";
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to " + path + " failed");
}

StepSizeArtifact load_steps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || trim(line) != kArtifactMagic) corrupt(path, "missing header");

  std::map<std::string, std::string, std::less<>> fields;
  std::vector<std::pair<std::string, std::string>> rows;
  bool ended = false;
  while (std::getline(in, line)) {
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t == "end") {
      ended = true;
      break;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) corrupt(path, "malformed line '" + std::string(t) + "'");
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (key.rfind("gamma.", 0) == 0)
      rows.emplace_back(std::move(key), std::move(value));
    else if (!fields.emplace(key, value).second)
      corrupt(path, "duplicate key " + key);
  }
  if (!ended) corrupt(path, "missing end marker (truncated?)");

  const auto field = [&](std::string_view key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) corrupt(path, "missing key " + std::string(key));
    return it->second;
  };
  const auto version = parse_number<int>(field("format_version"));
  if (!version) corrupt(path, "bad format_version");
  if (*version != kArtifactFormatVersion)
    throw Error(ErrorCode::kVersionMismatch,
                "step-size file " + path + " has format_version " + std::to_string(*version) +
                    ", expected " + std::to_string(kArtifactFormatVersion));

  const auto layers = parse_number<std::size_t>(field("layers"));
  const auto steps = parse_number<std::size_t>(field("pgd_steps"));
  const auto tied = parse_number<int>(field("tied"));
  const auto snr = parse_number<double>(field("snr_db"));
  const auto seed = parse_number<std::uint64_t>(field("seed"));
  const auto samples = parse_number<std::uint64_t>(field("training_samples"));
  if (!layers || !steps || *layers < 1 || *steps < 1) corrupt(path, "bad layers/pgd_steps");
  if (!tied || (*tied != 0 && *tied != 1)) corrupt(path, "bad tied flag");
  if (!snr || !seed || !samples) corrupt(path, "bad metadata value");
  if (rows.size() != *layers)
    corrupt(path, "expected " + std::to_string(*layers) + " gamma rows, found " +
                      std::to_string(rows.size()));

  StepSizeArtifact a{StepSizes(*layers, *steps), *tied == 1, *snr, *seed, *samples};
  std::vector<bool> seen(*layers, false);
  for (const auto& [key, value] : rows) {
    const auto index = parse_number<std::size_t>(std::string_view(key).substr(6));
    if (!index || *index < 1 || *index > *layers || seen[*index - 1])
      corrupt(path, "bad row key " + key);
    seen[*index - 1] = true;
    const auto parts = split_list(value);
    if (parts.size() != *steps) corrupt(path, key + " has the wrong number of entries");
    for (std::size_t k = 0; k < *steps; ++k) {
      const auto v = parse_number<double>(parts[k]);
      if (!v || !std::isfinite(*v)) corrupt(path, "bad value in " + key);
      a.steps(*index - 1, k) = *v;
    }
  }
  return a;
}

StepSizeArtifact load_steps(const std::string& path, const UnfoldConfig& expected) {
  StepSizeArtifact a = load_steps(path);
  const UnfoldConfig got = a.unfold();
  if (got.layers != expected.layers || got.pgd_steps != expected.pgd_steps ||
      got.tie_within_layer != expected.tie_within_layer)
    throw Error(ErrorCode::kShapeMismatch,
                "step-size file " + path + " holds L=" + std::to_string(got.layers) +
                    " K=" + std::to_string(got.pgd_steps) + (got.tie_within_layer ? " tied" : "") +
                    ", expected L=" + std::to_string(expected.layers) +
                    " K=" + std::to_string(expected.pgd_steps) +
                    (expected.tie_within_layer ? " tied" : ""));
  return a;
}

// ---------------------------------------------------------------------------
// Figures.

void BudgetSchedule::validate() const {
  if (!(scale > 0.0 && scale <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "scale must lie in (0, 1]");
  if (base_eval_samples < 1)
    throw Error(ErrorCode::kInvalidArgument, "base_eval_samples must be >= 1");
}

namespace {

std::size_t scaled_batches(double scale, std::uint64_t samples, std::size_t batch_size) {
  const double batches =
      scale * static_cast<double>(samples) / static_cast<double>(batch_size);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(batches)));
}

}  // namespace

std::uint64_t BudgetSchedule::training_samples(double snr_db) const {
  return snr_db >= high_snr_db ? high_snr_training_samples : base_training_samples;
}

std::size_t BudgetSchedule::training_batches(double snr_db, std::size_t batch_size) const {
  return scaled_batches(scale, training_samples(snr_db), batch_size);
}

std::size_t BudgetSchedule::extension_batches(std::size_t batch_size) const {
  return scaled_batches(scale, extension_stage_samples, batch_size);
}

std::size_t BudgetSchedule::eval_samples() const {
  const double n = scale * static_cast<double>(base_eval_samples);
  return std::max<std::size_t>(10, static_cast<std::size_t>(std::llround(n)));
}

std::vector<FigureRow> reference_figure(int figure) {
  return reference_rows(figure, layout(figure));
}

std::vector<FigureRow> reproduce_figure(int figure, const BudgetSchedule& budget,
                                        const ProgressFn& progress,
                                        std::vector<TrainingLog>* logs) {
  const FigureLayout lay = layout(figure);
  budget.validate();
  std::vector<FigureRow> rows = reference_rows(figure, lay);
  const CellContext ctx{budget, progress, figure, logs};
  auto fill = [&](std::string_view series, double x, const Estimate& e) {
    for (FigureRow& r : rows) {
      if (r.series == series && r.x == x) {
        r.value = e.mean;
        r.std_error = e.std_error;
        return;
      }
    }
  };

  if (figure == 5) {
    for (double snr : kFig5Snr) {
      fill("unfolded", snr,
           ctx.score(Method::kUnfolded, snr, 1, ctx.train_cell(snr, 1, false)));
      fill("unfolded_tied", snr,
           ctx.score(Method::kUnfoldedTied, snr, 1, ctx.train_cell(snr, 1, true)));
      ctx.note("evaluating wmmse_truncated at " + format_double("%g", snr) + " dB");
      fill("wmmse_truncated", snr, ctx.score(Method::kWmmseTruncated, snr, 1));
    }
    return rows;
  }

  const double snr = lay.snr_db;
  for (std::size_t l = 1; l <= kFigureLayers; ++l) {
    const double x = static_cast<double>(l);
    const StepSizes untied = ctx.train_cell(snr, l, false);
    const Estimate e4 = ctx.score(Method::kUnfolded, snr, l, untied);
    if (figure == 4) {
      fill("unfolded_4pgd", x, e4);
      TrainConfig tc = ctx.train_config(snr, l, false);
      tc.num_batches = budget.extension_batches(tc.batch_size);
      ctx.note("extending L=" + std::to_string(l) + " to " + std::to_string(kExtendedPgdSteps) +
               " PGD steps, " + std::to_string(tc.training_samples()) + " samples per step");
      TrainResult extended = extend_pgd_progressive(untied, kExtendedPgdSteps, tc);
      const StepSizes steps8 = extended.steps;
      ctx.record("unfolded_8pgd L=" + std::to_string(l) + " extension", extended);
      fill("unfolded_8pgd", x, ctx.score(Method::kUnfolded, snr, l, steps8));
    } else {
      fill("unfolded", x, e4);
      fill("unfolded_tied", x,
           ctx.score(Method::kUnfoldedTied, snr, l, ctx.train_cell(snr, l, true)));
    }
    ctx.note("evaluating wmmse_truncated L=" + std::to_string(l));
    fill("wmmse_truncated", x, ctx.score(Method::kWmmseTruncated, snr, l));
  }
  ctx.note("evaluating wmmse_convergence");
  const Estimate conv = ctx.score(Method::kWmmseConvergence, snr, 0);
  for (std::size_t l = 1; l <= kFigureLayers; ++l)
    fill("wmmse_convergence", static_cast<double>(l), conv);
  return rows;
}

void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows) {
  out << "figure,series,x,value,stderr,paper_value\n";
  for (const FigureRow& r : rows) {
    out << r.figure << ',' << r.series << ',' << format_double("%.10g", r.x) << ','
        << format_double("%.10g", r.value) << ',' << format_double("%.10g", r.std_error) << ',';
    if (r.paper_value) out << format_double("%.10g", *r.paper_value);
    out << '\n';
  }
}

void write_figure_csv(const std::string& path, const std::vector<FigureRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  write_figure_csv(out, rows);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to " + path + " failed");
}

// ---------------------------------------------------------------------------
// Experiment files.

void ExperimentSpec::validate() const {
  if (snr_db.empty()) throw Error(ErrorCode::kInvalidArgument, "experiment: snr_db is empty");
  for (double s : snr_db)
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "experiment: bad snr_db");
  if (method != Method::kWmmseConvergence) {
    if (layers.empty()) throw Error(ErrorCode::kInvalidArgument, "experiment: layers is empty");
    for (std::size_t l : layers)
      if (l < 1) throw Error(ErrorCode::kInvalidArgument, "experiment: layers must be >= 1");
  }
  if (pgd_steps < 1) throw Error(ErrorCode::kInvalidArgument, "experiment: pgd_steps must be >= 1");
  if (eval_samples < 1)
    throw Error(ErrorCode::kInvalidArgument, "experiment: eval_samples must be >= 1");
  train.validate();
}

ExperimentSpec parse_experiment(std::istream& in) {
  ExperimentSpec spec;
  std::uint64_t train_samples = spec.train.training_samples();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = line;
    if (const auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
    t = trim(t);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const auto bad = [&](const std::string& why) {
      return Error(ErrorCode::kInvalidArgument,
                   "experiment line " + std::to_string(lineno) + ": " + why);
    };
    if (eq == std::string_view::npos) throw bad("expected key = value");
    const std::string_view key = trim(t.substr(0, eq));
    const std::string_view value = trim(t.substr(eq + 1));

    auto real = [&](std::string_view v) {
      const auto x = parse_number<double>(v);
      if (!x) throw bad("'" + std::string(v) + "' is not a number");
      return *x;
    };
    auto count = [&](std::string_view v) {
      const auto x = parse_number<std::uint64_t>(v);
      if (!x) throw bad("'" + std::string(v) + "' is not a non-negative integer");
      return *x;
    };

    if (key == "method") {
      spec.method = parse_method(value);
    } else if (key == "snr_db") {
      spec.snr_db.clear();
      for (std::string_view v : split_list(value)) spec.snr_db.push_back(real(v));
    } else if (key == "layers") {
      spec.layers.clear();
      for (std::string_view v : split_list(value)) spec.layers.push_back(count(v));
    } else if (key == "pgd_steps") {
      spec.pgd_steps = count(value);
    } else if (key == "eval_samples") {
      spec.eval_samples = count(value);
    } else if (key == "train_samples") {
      train_samples = count(value);
    } else if (key == "batch_size") {
      spec.train.batch_size = count(value);
    } else if (key == "learning_rate") {
      spec.train.learning_rate = real(value);
    } else if (key == "step_init") {
      spec.train.step_init = real(value);
    } else if (key == "grad_clip") {
      spec.train.grad_clip = real(value);
    } else if (key == "antennas") {
      spec.train.antennas = count(value);
    } else if (key == "users") {
      spec.train.users = count(value);
    } else if (key == "seed") {
      spec.seed = count(value);
    } else if (key == "output") {
      spec.output = std::string(value);
    } else {
      throw bad("unknown key '" + std::string(key) + "'");
    }
  }
  if (spec.train.batch_size < 1)
    throw Error(ErrorCode::kInvalidArgument, "experiment: batch_size must be >= 1");
  spec.train.num_batches = static_cast<std::size_t>(
      (train_samples + spec.train.batch_size - 1) / spec.train.batch_size);
  spec.train.seed = spec.seed;
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return parse_experiment(in);
}

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec,
                                          const ProgressFn& progress) {
  spec.validate();
  const auto note = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  const std::vector<std::size_t> depths =
      spec.method == Method::kWmmseConvergence ? std::vector<std::size_t>{0} : spec.layers;
  std::vector<ExperimentRow> rows;
  for (double snr : spec.snr_db) {
    for (std::size_t l : depths) {
      MethodInstance inst{spec.method, l, std::nullopt};
      std::size_t k = 0;
      if (spec.method == Method::kUnfolded || spec.method == Method::kUnfoldedTied) {
        TrainConfig tc = spec.train;
        tc.snr_db = snr;
        tc.unfold = {l, spec.pgd_steps, spec.method == Method::kUnfoldedTied};
        note("training " + std::string(method_name(spec.method)) + " L=" + std::to_string(l) +
             " at " + format_double("%g", snr) + " dB");
        inst.steps = train(tc).steps;
        k = spec.pgd_steps;
      }
      note("evaluating " + std::string(method_name(spec.method)) + " at " +
           format_double("%g", snr) + " dB");
      rows.push_back({spec.method, snr, l, k,
                      evaluate(inst, snr, spec.eval_samples, spec.seed, spec.train.antennas,
                               spec.train.users)});
    }
  }
  return rows;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "method,snr_db,layers,pgd_steps,value,stderr,samples\n";
  for (const ExperimentRow& r : rows) {
    out << method_name(r.method) << ',' << format_double("%.10g", r.snr_db) << ',' << r.layers
        << ',' << r.pgd_steps << ',' << format_double("%.10g", r.estimate.mean) << ','
        << format_double("%.10g", r.estimate.std_error) << ',' << r.estimate.samples << '\n';
  }
}

}  // namespace uwmmse
