// types.hpp — core data model: per-frame labels, sequence metadata, feature
// sequences and datasets, plus label derivation and LOSO fold construction.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "completion/common.hpp"

namespace completion {

// Post-completion is the positive class everywhere.
enum class CompletionLabel : std::uint8_t { Pre = 0, Post = 1 };

// Unconstrained per-frame labels. Ground truth is wrapped in
// LabeledSequence which enforces monotonicity; model predictions stay as a
// plain LabelVector because an LSTM can flicker back to Pre.
using LabelVector = std::vector<CompletionLabel>;

struct SequenceMeta {
  std::string sequence_id;
  std::string subject_id;
  std::string action;
  bool is_complete = false;
  // First post-completion frame, 0-based. Present iff is_complete.
  std::optional<Eigen::Index> completion_frame;
};

struct FeatureSequence {
  SequenceMeta meta;
  Eigen::MatrixXd frames;  // T rows x D feature columns

  Eigen::Index length() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

// Frames [0, completion_frame) are Pre, [completion_frame, length) are
// Post; an incomplete sequence is all Pre.
LabelVector derive_labels(const SequenceMeta& meta, Eigen::Index length);

// Ground-truth labels; construction rejects non-monotone label vectors and
// any Post label on an incomplete sequence.
struct LabeledSequence {
  FeatureSequence features;
  LabelVector labels;

  static LabeledSequence make(FeatureSequence features, LabelVector labels);
};

struct Dataset {
  std::vector<FeatureSequence> sequences;
  std::set<std::string> actions;
  std::set<std::string> subjects;
};

// Runs every type invariant over the dataset; throws ValidationError with
// the offending sequence named.
void validate_dataset(const Dataset& dataset);

struct LosoFold {
  std::string test_subject;
  Dataset train;
  Dataset test;
};

// One fold per subject in sorted subject-id order. Requires >= 2 subjects.
std::vector<LosoFold> loso_splits(const Dataset& dataset);

// Keeps only complete sequences; errors if none remain.
Dataset filter_complete(const Dataset& dataset);

}  // namespace completion
