// completion — command-line front end: synthetic dataset generation,
// dataset validation, LOSO runs, and report regeneration.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "completion/dataset_io.hpp"
#include "completion/experiment.hpp"
#include "completion/synth.hpp"

namespace {

using namespace completion;

void print_summary(const RunSummary& summary, std::ostream& out) {
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("NA");
  };
  out << "group sequences skipped precision recall f1 c10_complete\n";
  for (const GroupSummary& g : summary.groups) {
    out << g.group << " " << g.sequences << " " << g.skipped_folds << " "
        << cell(g.frames.precision) << " " << cell(g.frames.recall) << " "
        << cell(g.frames.f1) << " " << cell(g.c10_complete) << "\n";
  }
}

int run_synth(const std::string& config_path, const std::string& out_dir) {
  const SynthConfig config = synth_config_from_file(config_path);
  const Dataset dataset = generate(config);
  save_dataset(dataset, out_dir);
  std::cout << "wrote " << dataset.sequences.size() << " sequences ("
            << dataset.subjects.size() << " subjects, "
            << dataset.actions.size() << " actions) to " << out_dir
            << "\nregime separation: " << format_double(config.separation())
            << "\n";
  return 0;
}

int run_validate(const std::string& manifest, const std::string& features) {
  const Dataset dataset = load_dataset(manifest, features);
  std::size_t complete = 0;
  for (const FeatureSequence& s : dataset.sequences)
    complete += s.meta.is_complete;
  std::cout << "ok: " << dataset.sequences.size() << " sequences ("
            << complete << " complete), " << dataset.subjects.size()
            << " subjects, " << dataset.actions.size() << " actions\n";
  return 0;
}

int run_run(const std::string& config_path) {
  const ExperimentConfig config = experiment_config_from_file(config_path);
  const RunResult result = run_loso(config);
  print_summary(result.summary, std::cout);
  if (!result.skips.empty())
    std::cout << result.skips.size() << " fold(s) skipped; see skips.csv\n";
  std::cout << "outputs written to " << config.output_dir << "\n";
  return 0;
}

int run_report(const std::string& dir) {
  print_summary(regenerate_report(dir), std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal models for localising the moment of action "
               "completion in per-frame feature sequences"};
  app.require_subcommand(1);

  std::string synth_config, synth_out;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic dataset from a config file");
  synth->add_option("--config", synth_config, "Synth config file")
      ->required();
  synth->add_option("--out", synth_out,
                    "Output directory (manifest.csv + features/)")
      ->required();

  std::string val_manifest, val_features;
  CLI::App* validate =
      app.add_subcommand("validate", "Validate a dataset on disk");
  validate->add_option("--manifest", val_manifest, "Manifest CSV")
      ->required();
  validate->add_option("--features-dir", val_features, "Feature directory")
      ->required();

  std::string run_config;
  CLI::App* run = app.add_subcommand(
      "run", "Run leave-one-subject-out training and evaluation");
  run->add_option("--config", run_config, "Experiment config file")
      ->required();

  std::string report_dir;
  CLI::App* report = app.add_subcommand(
      "report", "Recompute summary and curves from an output directory");
  report->add_option("--dir", report_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(synth_config, synth_out);
    if (validate->parsed()) return run_validate(val_manifest, val_features);
    if (run->parsed()) return run_run(run_config);
    if (report->parsed()) return run_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
