#include "completion/dataset_io.hpp"

#include <filesystem>

#include "completion/csv.hpp"

namespace completion {

namespace {

constexpr std::string_view kManifestHeader =
    "sequence_id,subject_id,action,is_complete,completion_frame,feature_file";

void check_token(std::string_view value, const std::string& what) {
  if (value.empty())
    throw ValidationError(what + " is empty");
  if (value.find_first_of(",\n\r") != std::string_view::npos)
    throw ValidationError(what + " contains a comma or newline: '" +
                          std::string(value) + "'");
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path,
                     const std::string& features_dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(manifest_path))
    throw LoadError("manifest file not found: " + manifest_path);

  const auto lines = csv::read_lines(manifest_path);
  if (lines.empty() || lines[0] != kManifestHeader)
    throw LoadError(manifest_path + ": first line must be the header '" +
                    std::string(kManifestHeader) + "'");

  Dataset dataset;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string where =
        manifest_path + " row " + std::to_string(row + 1);
    const auto fields = csv::split(lines[row]);
    if (fields.size() != 6)
      throw LoadError(where + ": expected 6 fields, got " +
                      std::to_string(fields.size()));

    SequenceMeta meta;
    meta.sequence_id = std::string(fields[0]);
    meta.subject_id = std::string(fields[1]);
    meta.action = std::string(fields[2]);
    check_token(meta.sequence_id, where + ": sequence_id");
    check_token(meta.subject_id, where + ": subject_id");
    check_token(meta.action, where + ": action");

    if (fields[3] == "true")
      meta.is_complete = true;
    else if (fields[3] == "false")
      meta.is_complete = false;
    else
      throw LoadError(where + ": is_complete must be 'true' or 'false', got '" +
                      std::string(fields[3]) + "'");

    if (!fields[4].empty()) {
      const long long cf = parse_int(fields[4], where + ": completion_frame");
      if (cf < 0)
        throw ValidationError(where + ": completion_frame must be >= 0");
      meta.completion_frame = static_cast<Eigen::Index>(cf);
    }
    if (meta.is_complete != meta.completion_frame.has_value())
      throw ValidationError(
          where + " (sequence '" + meta.sequence_id +
          "'): completion_frame must be present iff is_complete is true");

    const std::string feature_file = std::string(fields[5]);
    check_token(feature_file, where + ": feature_file");
    const fs::path feature_path = fs::path(features_dir) / feature_file;
    if (!fs::exists(feature_path))
      throw LoadError("feature file not found: " + feature_path.string() +
                      " (sequence '" + meta.sequence_id + "')");

    FeatureSequence seq;
    seq.meta = std::move(meta);
    seq.frames = csv::read_matrix(feature_path.string());
    if (seq.meta.completion_frame &&
        *seq.meta.completion_frame >= seq.length())
      throw ValidationError(
          "sequence '" + seq.meta.sequence_id + "': completion_frame " +
          std::to_string(*seq.meta.completion_frame) +
          " out of range for length " + std::to_string(seq.length()));

    dataset.actions.insert(seq.meta.action);
    dataset.subjects.insert(seq.meta.subject_id);
    dataset.sequences.push_back(std::move(seq));
  }

  if (dataset.sequences.empty())
    throw LoadError(manifest_path + ": manifest lists no sequences");
  validate_dataset(dataset);
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  validate_dataset(dataset);

  std::string manifest(kManifestHeader);
  manifest += '\n';
  for (const FeatureSequence& seq : dataset.sequences) {
    const SequenceMeta& m = seq.meta;
    manifest += csv::join_row(
        {m.sequence_id, m.subject_id, m.action,
         m.is_complete ? "true" : "false",
         m.completion_frame ? std::to_string(*m.completion_frame) : "",
         m.sequence_id + ".csv"});
    csv::write_file((fs::path(dir) / "features" / (m.sequence_id + ".csv"))
                        .string(),
                    csv::matrix_to_csv(seq.frames));
  }
  csv::write_file((fs::path(dir) / "manifest.csv").string(), manifest);
}

}  // namespace completion
