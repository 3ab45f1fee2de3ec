#include "completion/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <future>

#include <json.hpp>

#include "completion/csv.hpp"
#include "completion/dataset_io.hpp"
#include "completion/hmm.hpp"
#include "completion/pca.hpp"

namespace completion {

namespace fs = std::filesystem;

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::PcaHmm:
      return "pca_hmm";
    case ModelKind::Lstm:
      return "lstm";
    case ModelKind::PcaLstm:
      return "pca_lstm";
  }
  throw Error("unreachable model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "pca_hmm") return ModelKind::PcaHmm;
  if (name == "lstm") return ModelKind::Lstm;
  if (name == "pca_lstm") return ModelKind::PcaLstm;
  throw ConfigError("unknown model '" + name +
                    "' (expected pca_hmm, lstm or pca_lstm)");
}

namespace {

struct FoldOutcome {
  std::vector<ShiftRow> shifts;
  ConfusionCounts counts;
  std::optional<FoldSkip> skip;
};

std::vector<TrainSequence> to_train_sequences(const Dataset& train,
                                              const PcaModel* pca) {
  std::vector<TrainSequence> out;
  out.reserve(train.sequences.size());
  for (const FeatureSequence& seq : train.sequences) {
    TrainSequence ts;
    ts.frames = pca ? pca->transform_rows(seq.frames) : seq.frames;
    ts.labels = derive_labels(seq.meta, seq.length());
    out.push_back(std::move(ts));
  }
  return out;
}

PcaModel fit_fold_pca(const Dataset& train, double variance_threshold) {
  Eigen::Index rows = 0;
  for (const FeatureSequence& seq : train.sequences) rows += seq.length();
  Eigen::MatrixXd stacked(rows, train.sequences.front().frames.cols());
  Eigen::Index at = 0;
  for (const FeatureSequence& seq : train.sequences) {
    stacked.middleRows(at, seq.length()) = seq.frames;
    at += seq.length();
  }
  return fit_pca(stacked, variance_threshold);
}

void save_fold_models(const ExperimentConfig& config,
                      const std::string& action, const std::string& subject,
                      const PcaModel* pca, const CompletionHmm* hmm,
                      const LstmModel* lstm, std::uint64_t lstm_seed) {
  const fs::path dir =
      fs::path(config.output_dir) / "models" / action / subject;
  if (pca) csv::write_file((dir / "pca.csv").string(), pca_to_csv(*pca));
  if (hmm) csv::write_file((dir / "hmm.csv").string(), hmm_to_csv(*hmm));
  if (lstm) {
    csv::write_file((dir / "lstm.csv").string(), lstm_to_csv(*lstm));
    nlohmann::json sidecar{
        {"hidden_size", lstm->hidden_size()},
        {"input_dim", lstm->input_dim()},
        {"seed", lstm_seed},
        {"epochs", config.lstm.epochs},
        {"lr_first_epoch", config.lstm.lr_first_epoch},
        {"lr_rest", config.lstm.lr_rest},
        {"grad_clip_norm", config.lstm.grad_clip_norm},
        {"init_scale", config.lstm.init_scale},
    };
    csv::write_file((dir / "lstm.json").string(), sidecar.dump(2) + "\n");
  }
}

FoldOutcome run_fold(const ExperimentConfig& config, const std::string& action,
                     const LosoFold& fold, std::size_t fold_index) {
  FoldOutcome outcome;
  try {
    Dataset train = fold.train;
    if (config.train_complete_only) {
      // No complete sequences in the fold is a recorded skip, same as an
      // unobservable state.
      try {
        train = filter_complete(train);
      } catch (const ValidationError& e) {
        throw TrainError(e.what());
      }
    }

    std::optional<PcaModel> pca;
    if (config.model == ModelKind::PcaHmm ||
        config.model == ModelKind::PcaLstm)
      pca = fit_fold_pca(train, config.variance_threshold);

    const std::vector<TrainSequence> train_seqs =
        to_train_sequences(train, pca ? &*pca : nullptr);

    std::optional<CompletionHmm> hmm;
    std::optional<LstmModel> lstm;
    std::uint64_t lstm_seed = 0;
    if (config.model == ModelKind::PcaHmm) {
      hmm = train_hmm(train_seqs);
    } else {
      TrainConfig lstm_config = config.lstm;
      // Sub-seed tied to action name and fold position, not execution
      // order, so results are independent of other actions and of the
      // jobs setting.
      lstm_seed = mix_seed(config.seed, action, fold_index);
      lstm_config.seed = lstm_seed;
      lstm = train_lstm(train_seqs, lstm_config);
    }

    for (const FeatureSequence& seq : fold.test.sequences) {
      const Eigen::MatrixXd frames =
          pca ? pca->transform_rows(seq.frames) : seq.frames;
      const LabelVector predicted =
          hmm ? viterbi(*hmm, frames) : lstm_predict(*lstm, frames);
      const LabelVector truth = derive_labels(seq.meta, seq.length());
      outcome.counts.add(predicted, truth, seq.meta.sequence_id);
      outcome.shifts.push_back(ShiftRow{action, seq.meta.subject_id,
                                        seq.meta.is_complete,
                                        completion_shift(predicted, seq.meta)});
    }

    if (config.save_models)
      save_fold_models(config, action, fold.test_subject,
                       pca ? &*pca : nullptr, hmm ? &*hmm : nullptr,
                       lstm ? &*lstm : nullptr, lstm_seed);
  } catch (const DivergenceError&) {
    throw;  // diverged training aborts the whole run
  } catch (const TrainError& e) {
    // Degenerate training data for this fold: unobservable state, too few
    // frames, singular covariance, or nothing complete to train on.
    std::string reason = e.what();
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    outcome = FoldOutcome{};
    outcome.skip = FoldSkip{action, fold.test_subject, std::move(reason)};
  }
  return outcome;
}

Dataset action_subset(const Dataset& dataset, const std::string& action) {
  Dataset out;
  for (const FeatureSequence& seq : dataset.sequences) {
    if (seq.meta.action != action) continue;
    out.sequences.push_back(seq);
    out.subjects.insert(seq.meta.subject_id);
  }
  out.actions.insert(action);
  return out;
}

void write_curve_files(const std::string& dir, const std::string& group,
                       const std::vector<const ShiftRow*>& rows) {
  std::vector<CompletionShift> complete_shifts, incomplete_shifts;
  for (const ShiftRow* row : rows) {
    (row->is_complete ? complete_shifts : incomplete_shifts)
        .push_back(row->shift);
  }
  const auto write = [&dir, &group](const char* name,
                                    const std::vector<CompletionShift>& s) {
    const std::string content =
        s.empty() ? std::string("i,c\n") : curve_to_csv(cumulative_curve(s));
    csv::write_file((fs::path(dir) / group / name).string(), content);
  };
  write("curve_complete.csv", complete_shifts);
  write("curve_incomplete.csv", incomplete_shifts);
}

void write_report_files(const std::string& dir,
                        const std::vector<ShiftRow>& shifts,
                        const std::map<std::string, ConfusionCounts>& counts,
                        const std::vector<FoldSkip>& skips,
                        const RunSummary& summary) {
  std::vector<std::pair<std::string, FrameMetrics>> metric_rows;
  ConfusionCounts total;
  for (const auto& [action, c] : counts) {
    metric_rows.emplace_back(action, FrameMetrics::from_counts(c));
    total += c;
  }
  metric_rows.emplace_back("total", FrameMetrics::from_counts(total));
  csv::write_file((fs::path(dir) / "frame_metrics.csv").string(),
                  frame_metrics_to_csv(metric_rows));

  std::string skips_csv = "action,subject,reason\n";
  for (const FoldSkip& s : skips) {
    if (s.reason.find_first_of(",\n\r") != std::string::npos)
      throw Error("skip reason contains a comma or newline");
    skips_csv += csv::join_row({s.action, s.subject, s.reason});
  }
  csv::write_file((fs::path(dir) / "skips.csv").string(), skips_csv);

  std::map<std::string, std::vector<const ShiftRow*>> by_action;
  std::vector<const ShiftRow*> all;
  for (const ShiftRow& row : shifts) {
    by_action[row.action].push_back(&row);
    all.push_back(&row);
  }
  for (const auto& [action, c] : counts)
    by_action.try_emplace(action);  // all-skipped actions still get curves
  for (const auto& [action, rows] : by_action)
    write_curve_files(dir, action, rows);
  write_curve_files(dir, "total", all);

  csv::write_file((fs::path(dir) / "summary.csv").string(),
                  summary_to_csv(summary));
}

}  // namespace

RunResult run_loso(const ExperimentConfig& config) {
  if (config.output_dir.empty())
    throw ConfigError("run: output_dir is required");
  if (config.jobs < 1) throw ConfigError("run: jobs must be >= 1");
  const Dataset dataset =
      load_dataset(config.manifest_path, config.features_dir);

  std::vector<std::string> actions(config.actions);
  if (actions.empty())
    actions.assign(dataset.actions.begin(), dataset.actions.end());
  std::sort(actions.begin(), actions.end());
  for (const std::string& action : actions)
    if (!dataset.actions.count(action))
      throw ConfigError("run: action '" + action + "' not in the dataset");

  // One task per (action, fold), executed possibly concurrently and merged
  // in deterministic order.
  struct Task {
    std::string action;
    LosoFold fold;
    std::size_t fold_index = 0;
  };
  std::vector<Task> tasks;
  std::map<std::string, std::size_t> skipped_folds;
  for (const std::string& action : actions) {
    skipped_folds[action] = 0;
    Dataset sub = action_subset(dataset, action);
    std::vector<LosoFold> folds = loso_splits(sub);
    for (std::size_t f = 0; f < folds.size(); ++f)
      tasks.push_back(Task{action, std::move(folds[f]), f});
  }

  std::vector<FoldOutcome> outcomes(tasks.size());
  if (config.jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      outcomes[i] = run_fold(config, tasks[i].action, tasks[i].fold,
                             tasks[i].fold_index);
  } else {
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        outcomes[i] = run_fold(config, tasks[i].action, tasks[i].fold,
                               tasks[i].fold_index);
      }
    };
    std::vector<std::future<void>> futures;
    const std::size_t n_workers = std::min<std::size_t>(
        static_cast<std::size_t>(config.jobs), tasks.size());
    for (std::size_t w = 0; w < n_workers; ++w)
      futures.push_back(std::async(std::launch::async, worker));
    for (auto& f : futures) f.get();
  }

  RunResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    FoldOutcome& outcome = outcomes[i];
    if (outcome.skip) {
      ++skipped_folds[outcome.skip->action];
      result.skips.push_back(std::move(*outcome.skip));
      continue;
    }
    result.counts_by_action[tasks[i].action] += outcome.counts;
    result.shifts.insert(result.shifts.end(),
                         std::make_move_iterator(outcome.shifts.begin()),
                         std::make_move_iterator(outcome.shifts.end()));
  }
  for (const std::string& action : actions)
    result.counts_by_action.try_emplace(action);

  std::sort(result.shifts.begin(), result.shifts.end(),
            [](const ShiftRow& a, const ShiftRow& b) {
              return std::tie(a.action, a.subject_id, a.shift.sequence_id) <
                     std::tie(b.action, b.subject_id, b.shift.sequence_id);
            });
  result.summary =
      summarize(result.shifts, result.counts_by_action, skipped_folds);

  fs::create_directories(config.output_dir);
  csv::write_file((fs::path(config.output_dir) / "shifts.csv").string(),
                  shifts_to_csv(result.shifts));
  write_report_files(config.output_dir, result.shifts,
                     result.counts_by_action, result.skips, result.summary);
  return result;
}

RunSummary regenerate_report(const std::string& dir) {
  const auto read = [&dir](const char* name) {
    const auto lines = csv::read_lines((fs::path(dir) / name).string());
    std::string content;
    for (const std::string& l : lines) {
      content += l;
      content += '\n';
    }
    return content;
  };

  const std::vector<ShiftRow> shifts = shifts_from_csv(read("shifts.csv"));
  const auto metric_rows = frame_metrics_from_csv(read("frame_metrics.csv"));
  std::map<std::string, ConfusionCounts> counts;
  for (const auto& [group, m] : metric_rows)
    if (group != "total") counts[group] = m.counts;

  std::map<std::string, std::size_t> skipped_folds;
  std::vector<FoldSkip> skips;
  for (const auto& [group, m] : metric_rows)
    if (group != "total") skipped_folds[group] = 0;
  {
    const auto lines = csv::read_lines((fs::path(dir) / "skips.csv").string());
    if (lines.empty() || lines[0] != "action,subject,reason")
      throw LoadError("skips file: missing or wrong header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto fields = csv::split(lines[i]);
      if (fields.size() != 3)
        throw LoadError("skips file: row " + std::to_string(i + 1) +
                        " has wrong arity");
      skips.push_back(FoldSkip{std::string(fields[0]), std::string(fields[1]),
                               std::string(fields[2])});
      ++skipped_folds[std::string(fields[0])];
    }
  }

  const RunSummary summary = summarize(shifts, counts, skipped_folds);
  write_report_files(dir, shifts, counts, skips, summary);
  return summary;
}

ExperimentConfig experiment_config_from_file(const std::string& path) {
  ConfigFile cfg = ConfigFile::parse_file(path);
  ExperimentConfig e;
  e.manifest_path = cfg.get_string("manifest");
  e.features_dir = cfg.get_string("features_dir");
  e.output_dir = cfg.get_string("output_dir");
  if (cfg.has("actions")) {
    const auto actions = cfg.get_strings("actions");
    // "all" keeps the default of every action in the dataset.
    if (!(actions.size() == 1 && actions[0] == "all")) e.actions = actions;
  }
  e.model = model_kind_from_name(cfg.get_string("model", "pca_hmm"));
  e.variance_threshold = cfg.get_double("variance_threshold", 0.90);
  e.train_complete_only = cfg.get_bool("train_complete_only", false);
  e.save_models = cfg.get_bool("save_models", false);
  e.seed = cfg.get_uint("seed", 0);
  e.jobs = static_cast<int>(cfg.get_int("jobs", 1));
  e.lstm.epochs = static_cast<int>(cfg.get_int("lstm.epochs", 25));
  e.lstm.lr_first_epoch = cfg.get_double("lstm.lr_first_epoch", 1e-3);
  e.lstm.lr_rest = cfg.get_double("lstm.lr_rest", 1e-4);
  e.lstm.grad_clip_norm = cfg.get_double("lstm.grad_clip_norm", 5.0);
  e.lstm.init_scale = cfg.get_double("lstm.init_scale", 0.08);
  e.lstm.hidden_size =
      static_cast<Eigen::Index>(cfg.get_int("lstm.hidden_size", 128));
  cfg.finish();
  return e;
}

SynthConfig synth_config_from_file(const std::string& path) {
  ConfigFile cfg = ConfigFile::parse_file(path);
  SynthConfig s;
  s.feature_dim =
      static_cast<Eigen::Index>(cfg.get_int("feature_dim", 8));

  const auto read_mean = [&cfg, &s, &path](const std::string& key) {
    const std::vector<double> values = cfg.get_doubles(key);
    Eigen::VectorXd v;
    if (values.size() == 1) {  // scalar broadcasts over every dimension
      v = Eigen::VectorXd::Constant(s.feature_dim, values[0]);
    } else {
      if (static_cast<Eigen::Index>(values.size()) != s.feature_dim)
        throw ConfigError(path + ": key '" + key + "' must have 1 or " +
                          std::to_string(s.feature_dim) + " values");
      v = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                            static_cast<Eigen::Index>(
                                                values.size()));
    }
    return v;
  };
  s.pre_mean = read_mean("pre_mean");
  s.post_mean = read_mean("post_mean");
  if (cfg.has("distractor_mean")) s.distractor_mean = read_mean("distractor_mean");
  s.noise_std = cfg.get_double("noise_std", 1.0);
  s.length_min = static_cast<Eigen::Index>(cfg.get_int("length_min", 20));
  s.length_max = static_cast<Eigen::Index>(cfg.get_int("length_max", 40));
  s.completion_fraction_min =
      cfg.get_double("completion_fraction_min", 0.3);
  s.completion_fraction_max =
      cfg.get_double("completion_fraction_max", 0.7);
  s.incomplete_fraction = cfg.get_double("incomplete_fraction", 0.2);
  s.subjects = static_cast<std::size_t>(cfg.get_int("subjects", 4));
  s.sequences_per_subject =
      static_cast<std::size_t>(cfg.get_int("sequences_per_subject", 25));
  s.seed = cfg.get_uint("seed", 1);
  if (cfg.has("actions")) s.actions = cfg.get_strings("actions");
  cfg.finish();
  s.validate();
  return s;
}

}  // namespace completion
