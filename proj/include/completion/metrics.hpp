// metrics.hpp — frame-level precision/recall/F1 with post-completion as the
// positive class, signed completion shifts, and the cumulative C(i) curve:
// the fraction of sequences whose predicted completion is at most i frames
// after the annotated one. Undetected completions have infinite shift and
// never enter the curve.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "completion/types.hpp"

namespace completion {

struct ConfusionCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;

  // Pools one (prediction, ground truth) pair; lengths must match.
  void add(const LabelVector& predicted, const LabelVector& truth,
           const std::string& sequence_name);
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  long long total() const { return tp + fp + fn + tn; }
};

// precision/recall are absent ("NA") when their denominator is zero; F1 is
// absent when either is, 0 when either is zero, harmonic mean otherwise.
struct FrameMetrics {
  ConfusionCounts counts;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;

  static FrameMetrics from_counts(const ConfusionCounts& counts);
};

// Micro-averaged over all frames of all pairs (prediction first).
FrameMetrics frame_metrics(
    const std::vector<std::pair<LabelVector, LabelVector>>& pairs);

// Signed completion shift p - g. g is the annotated completion frame (0
// for incomplete sequences); p is the first predicted Post frame. An
// absent p means completion was never detected and the shift is infinite.
struct CompletionShift {
  std::string sequence_id;
  long long g = 0;
  std::optional<long long> p;
  std::optional<long long> shift;
};

CompletionShift completion_shift(const LabelVector& predicted,
                                 const SequenceMeta& meta);

// C(i) sampled on the integer grid [i_min, i_max].
struct CompletionCurve {
  int i_min = -50;
  int i_max = 50;
  std::size_t n = 0;          // sequence count, including infinite shifts
  std::vector<double> values;  // size i_max - i_min + 1

  double at(int i) const;
};

CompletionCurve cumulative_curve(const std::vector<CompletionShift>& shifts,
                                 int i_min = -50, int i_max = 50);

// One row of shifts.csv; the complete/incomplete curve split is driven by
// is_complete.
struct ShiftRow {
  std::string action;
  std::string subject_id;
  bool is_complete = false;
  CompletionShift shift;
};

struct GroupSummary {
  std::string group;  // action name, or "total" for the pooled row
  std::size_t sequences = 0;
  std::size_t complete = 0;
  std::size_t incomplete = 0;
  std::size_t skipped_folds = 0;
  FrameMetrics frames;
  std::optional<double> c10_complete;  // headline: C(10) over complete
  std::optional<double> c0_complete;
  std::optional<double> detected_complete;    // finite-shift fraction
  std::optional<double> detected_incomplete;  // false detections
};

// Per-action rows in sorted order plus a pooled "total" row.
struct RunSummary {
  std::vector<GroupSummary> groups;
};

RunSummary summarize(
    const std::vector<ShiftRow>& shifts,
    const std::map<std::string, ConfusionCounts>& counts_by_action,
    const std::map<std::string, std::size_t>& skipped_folds);

// CSV codecs; serialising then parsing is lossless.
std::string shifts_to_csv(const std::vector<ShiftRow>& rows);
std::vector<ShiftRow> shifts_from_csv(const std::string& content);
std::string curve_to_csv(const CompletionCurve& curve);
std::string frame_metrics_to_csv(
    const std::vector<std::pair<std::string, FrameMetrics>>& rows);
std::vector<std::pair<std::string, FrameMetrics>> frame_metrics_from_csv(
    const std::string& content);
std::string summary_to_csv(const RunSummary& summary);
RunSummary summary_from_csv(const std::string& content);

}  // namespace completion
