#include <algorithm>
#include <functional>
#include <map>

#include "completion/types.hpp"

namespace completion {

LabelVector derive_labels(const SequenceMeta& meta, Eigen::Index length) {
  if (length < 1)
    throw ValidationError("sequence '" + meta.sequence_id +
                          "': length must be >= 1");
  if (!meta.is_complete) return LabelVector(length, CompletionLabel::Pre);

  if (!meta.completion_frame)
    throw ValidationError("sequence '" + meta.sequence_id +
                          "': complete but completion_frame missing");
  const Eigen::Index cf = *meta.completion_frame;
  if (cf < 0 || cf >= length)
    throw ValidationError(
        "sequence '" + meta.sequence_id + "': completion_frame " +
        std::to_string(cf) + " out of range for length " +
        std::to_string(length));

  LabelVector labels(length, CompletionLabel::Pre);
  std::fill(labels.begin() + cf, labels.end(), CompletionLabel::Post);
  return labels;
}

LabeledSequence LabeledSequence::make(FeatureSequence features,
                                      LabelVector labels) {
  if (static_cast<Eigen::Index>(labels.size()) != features.length())
    throw ValidationError("sequence '" + features.meta.sequence_id +
                          "': label count does not match frame count");
  bool seen_post = false;
  for (const CompletionLabel l : labels) {
    if (l == CompletionLabel::Post)
      seen_post = true;
    else if (seen_post)
      throw ValidationError("sequence '" + features.meta.sequence_id +
                            "': ground-truth labels are not monotone");
  }
  if (!features.meta.is_complete && seen_post)
    throw ValidationError("sequence '" + features.meta.sequence_id +
                          "': incomplete sequence has a Post label");
  return LabeledSequence{std::move(features), std::move(labels)};
}

void validate_dataset(const Dataset& dataset) {
  std::map<std::string, const FeatureSequence*> dim_witness;
  std::set<std::string> seen_ids;
  for (const FeatureSequence& seq : dataset.sequences) {
    const SequenceMeta& meta = seq.meta;
    if (meta.sequence_id.empty())
      throw ValidationError("sequence with empty sequence_id");
    if (!seen_ids.insert(meta.sequence_id).second)
      throw ValidationError("duplicate sequence_id '" + meta.sequence_id +
                            "'");
    if (!dataset.actions.count(meta.action))
      throw ValidationError("sequence '" + meta.sequence_id + "': action '" +
                            meta.action + "' not in the declared action set");
    if (meta.action == "total")
      throw ValidationError("sequence '" + meta.sequence_id +
                            "': action name 'total' is reserved for pooled "
                            "report rows");
    if (!dataset.subjects.count(meta.subject_id))
      throw ValidationError("sequence '" + meta.sequence_id + "': subject '" +
                            meta.subject_id +
                            "' not in the declared subject set");
    if (seq.length() < 1)
      throw ValidationError("sequence '" + meta.sequence_id +
                            "': no frames");
    if (!seq.frames.allFinite())
      throw ValidationError("sequence '" + meta.sequence_id +
                            "': non-finite feature value");
    if (meta.is_complete != meta.completion_frame.has_value())
      throw ValidationError("sequence '" + meta.sequence_id +
                            "': completion_frame must be present iff "
                            "is_complete");
    if (meta.completion_frame &&
        (*meta.completion_frame < 0 || *meta.completion_frame >= seq.length()))
      throw ValidationError(
          "sequence '" + meta.sequence_id + "': completion_frame " +
          std::to_string(*meta.completion_frame) +
          " out of range for length " + std::to_string(seq.length()));

    // Feature dimension must be uniform within an action; models are
    // trained per action.
    const auto [it, inserted] = dim_witness.emplace(meta.action, &seq);
    if (!inserted && it->second->dim() != seq.dim())
      throw ValidationError(
          "action '" + meta.action + "': feature dimension mismatch between '" +
          it->second->meta.sequence_id + "' (D=" +
          std::to_string(it->second->dim()) + ") and '" + meta.sequence_id +
          "' (D=" + std::to_string(seq.dim()) + ")");
  }
}

namespace {

Dataset subset(const Dataset& dataset,
               const std::function<bool(const FeatureSequence&)>& keep) {
  Dataset out;
  for (const FeatureSequence& seq : dataset.sequences) {
    if (!keep(seq)) continue;
    out.sequences.push_back(seq);
    out.actions.insert(seq.meta.action);
    out.subjects.insert(seq.meta.subject_id);
  }
  return out;
}

}  // namespace

std::vector<LosoFold> loso_splits(const Dataset& dataset) {
  if (dataset.subjects.size() < 2)
    throw ValidationError(
        "leave-one-subject-out needs >= 2 subjects, dataset has " +
        std::to_string(dataset.subjects.size()));

  std::vector<LosoFold> folds;
  for (const std::string& subject : dataset.subjects) {  // std::set: sorted
    LosoFold fold;
    fold.test_subject = subject;
    fold.test = subset(dataset, [&](const FeatureSequence& s) {
      return s.meta.subject_id == subject;
    });
    fold.train = subset(dataset, [&](const FeatureSequence& s) {
      return s.meta.subject_id != subject;
    });
    folds.push_back(std::move(fold));
  }
  return folds;
}

Dataset filter_complete(const Dataset& dataset) {
  Dataset out = subset(dataset, [](const FeatureSequence& s) {
    return s.meta.is_complete;
  });
  if (out.sequences.empty())
    throw ValidationError("no complete sequences: nothing to train on");
  return out;
}

}  // namespace completion
