// experiment.hpp — per-action leave-one-subject-out training and
// evaluation of the temporal models, with report emission. Every output
// under the configured directory has a stable name and byte-deterministic
// content for a fixed config and seed.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "completion/config.hpp"
#include "completion/lstm.hpp"
#include "completion/metrics.hpp"
#include "completion/synth.hpp"
#include "completion/types.hpp"

namespace completion {

enum class ModelKind { PcaHmm, Lstm, PcaLstm };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ExperimentConfig {
  std::string manifest_path;
  std::string features_dir;
  std::string output_dir;
  // Empty means every action in the dataset.
  std::vector<std::string> actions;
  ModelKind model = ModelKind::PcaHmm;
  double variance_threshold = 0.90;
  TrainConfig lstm;
  bool train_complete_only = false;
  bool save_models = false;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct FoldSkip {
  std::string action;
  std::string subject;
  std::string reason;
};

struct RunResult {
  std::vector<ShiftRow> shifts;  // sorted by (action, subject, sequence)
  std::map<std::string, ConfusionCounts> counts_by_action;
  std::vector<FoldSkip> skips;
  RunSummary summary;
};

// Trains and evaluates per action, per fold. PCA (when the model uses it)
// is fit on the fold's training frames only. Degenerate folds — an
// unobservable state, too few frames for a covariance, a singular
// covariance, or no complete training sequences under the complete-only
// ablation — are skipped and recorded, never silent. Writes shifts.csv,
// frame_metrics.csv, skips.csv, summary.csv and per-group curve files
// under output_dir.
RunResult run_loso(const ExperimentConfig& config);

// Rebuilds summary.csv and the curve files from shifts.csv,
// frame_metrics.csv and skips.csv in `dir`; byte-identical to what
// run_loso wrote.
RunSummary regenerate_report(const std::string& dir);

ExperimentConfig experiment_config_from_file(const std::string& path);
SynthConfig synth_config_from_file(const std::string& path);

}  // namespace completion
