#include "completion/metrics.hpp"

#include <algorithm>

#include "completion/csv.hpp"
#include "completion/hmm.hpp"  // first_post

namespace completion {

void ConfusionCounts::add(const LabelVector& predicted,
                          const LabelVector& truth,
                          const std::string& sequence_name) {
  if (predicted.size() != truth.size())
    throw ValidationError("frame metrics: sequence '" + sequence_name +
                          "': prediction has " +
                          std::to_string(predicted.size()) +
                          " labels, ground truth has " +
                          std::to_string(truth.size()));
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const bool pred_post = predicted[t] == CompletionLabel::Post;
    const bool true_post = truth[t] == CompletionLabel::Post;
    if (pred_post && true_post)
      ++tp;
    else if (pred_post && !true_post)
      ++fp;
    else if (!pred_post && true_post)
      ++fn;
    else
      ++tn;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

FrameMetrics FrameMetrics::from_counts(const ConfusionCounts& counts) {
  FrameMetrics m;
  m.counts = counts;
  if (counts.tp + counts.fp > 0)
    m.precision = static_cast<double>(counts.tp) /
                  static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0)
    m.recall = static_cast<double>(counts.tp) /
               static_cast<double>(counts.tp + counts.fn);
  if (m.precision && m.recall) {
    if (*m.precision > 0.0 && *m.recall > 0.0)
      m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    else
      m.f1 = 0.0;
  }
  return m;
}

FrameMetrics frame_metrics(
    const std::vector<std::pair<LabelVector, LabelVector>>& pairs) {
  ConfusionCounts counts;
  std::size_t i = 0;
  for (const auto& [predicted, truth] : pairs)
    counts.add(predicted, truth, "pair " + std::to_string(i++));
  return FrameMetrics::from_counts(counts);
}

CompletionShift completion_shift(const LabelVector& predicted,
                                 const SequenceMeta& meta) {
  if (meta.is_complete && !meta.completion_frame)
    throw ValidationError("sequence '" + meta.sequence_id +
                          "': complete but completion_frame missing");
  CompletionShift s;
  s.sequence_id = meta.sequence_id;
  s.g = meta.is_complete ? static_cast<long long>(*meta.completion_frame) : 0;
  if (const auto p = first_post(predicted)) {
    s.p = static_cast<long long>(*p);
    s.shift = *s.p - s.g;
  }
  return s;
}

CompletionCurve cumulative_curve(const std::vector<CompletionShift>& shifts,
                                 int i_min, int i_max) {
  if (shifts.empty())
    throw ValidationError("cumulative curve: empty shift list");
  if (i_min > i_max)
    throw ValidationError("cumulative curve: malformed grid");

  CompletionCurve curve;
  curve.i_min = i_min;
  curve.i_max = i_max;
  curve.n = shifts.size();
  curve.values.resize(static_cast<std::size_t>(i_max - i_min) + 1);
  for (int i = i_min; i <= i_max; ++i) {
    long long count = 0;
    for (const CompletionShift& s : shifts)
      if (s.shift && *s.shift <= i) ++count;
    curve.values[static_cast<std::size_t>(i - i_min)] =
        static_cast<double>(count) / static_cast<double>(curve.n);
  }
  return curve;
}

double CompletionCurve::at(int i) const {
  if (i < i_min || i > i_max)
    throw ValidationError("curve evaluated outside its grid");
  return values[static_cast<std::size_t>(i - i_min)];
}

namespace {

constexpr std::string_view kNa = "NA";

std::string opt_to_string(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kNa);
}

std::optional<double> opt_from_string(std::string_view s,
                                      const std::string& context) {
  if (s == kNa) return std::nullopt;
  return parse_double(s, context);
}

std::optional<double> fraction(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

RunSummary summarize(
    const std::vector<ShiftRow>& shifts,
    const std::map<std::string, ConfusionCounts>& counts_by_action,
    const std::map<std::string, std::size_t>& skipped_folds) {
  std::map<std::string, std::vector<const ShiftRow*>> by_action;
  for (const ShiftRow& row : shifts)
    by_action[row.action].push_back(&row);
  // Actions whose folds were all skipped still get a summary row.
  for (const auto& [action, counts] : counts_by_action)
    by_action.try_emplace(action);
  for (const auto& [action, skipped] : skipped_folds)
    by_action.try_emplace(action);

  const auto group_row = [&](const std::string& name,
                             const std::vector<const ShiftRow*>& rows,
                             const ConfusionCounts& counts,
                             std::size_t skipped) {
    GroupSummary g;
    g.group = name;
    g.sequences = rows.size();
    g.skipped_folds = skipped;
    g.frames = FrameMetrics::from_counts(counts);

    std::vector<CompletionShift> complete_shifts, incomplete_shifts;
    std::size_t detected_complete = 0, detected_incomplete = 0;
    for (const ShiftRow* row : rows) {
      if (row->is_complete) {
        ++g.complete;
        complete_shifts.push_back(row->shift);
        if (row->shift.p) ++detected_complete;
      } else {
        ++g.incomplete;
        incomplete_shifts.push_back(row->shift);
        if (row->shift.p) ++detected_incomplete;
      }
    }
    if (!complete_shifts.empty()) {
      const CompletionCurve curve = cumulative_curve(complete_shifts);
      g.c10_complete = curve.at(10);
      g.c0_complete = curve.at(0);
    }
    g.detected_complete = fraction(detected_complete, g.complete);
    g.detected_incomplete = fraction(detected_incomplete, g.incomplete);
    return g;
  };

  RunSummary summary;
  std::vector<const ShiftRow*> all_rows;
  ConfusionCounts total_counts;
  std::size_t total_skipped = 0;
  for (const auto& [action, rows] : by_action) {
    ConfusionCounts counts;
    if (const auto it = counts_by_action.find(action);
        it != counts_by_action.end())
      counts = it->second;
    std::size_t skipped = 0;
    if (const auto it = skipped_folds.find(action); it != skipped_folds.end())
      skipped = it->second;
    summary.groups.push_back(group_row(action, rows, counts, skipped));
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    total_counts += counts;
    total_skipped += skipped;
  }
  summary.groups.push_back(
      group_row("total", all_rows, total_counts, total_skipped));
  return summary;
}

std::string shifts_to_csv(const std::vector<ShiftRow>& rows) {
  std::string out = "sequence_id,action,subject_id,is_complete,g,p,shift\n";
  for (const ShiftRow& r : rows) {
    out += csv::join_row(
        {r.shift.sequence_id, r.action, r.subject_id,
         r.is_complete ? "true" : "false", std::to_string(r.shift.g),
         r.shift.p ? std::to_string(*r.shift.p) : "inf",
         r.shift.shift ? std::to_string(*r.shift.shift) : "inf"});
  }
  return out;
}

std::vector<ShiftRow> shifts_from_csv(const std::string& content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.push_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  if (lines.empty() ||
      lines[0] != "sequence_id,action,subject_id,is_complete,g,p,shift")
    throw LoadError("shifts file: missing or wrong header");

  std::vector<ShiftRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = csv::split(lines[i]);
    if (fields.size() != 7)
      throw LoadError("shifts file: row " + std::to_string(i + 1) +
                      " has wrong arity");
    ShiftRow r;
    r.shift.sequence_id = std::string(fields[0]);
    r.action = std::string(fields[1]);
    r.subject_id = std::string(fields[2]);
    if (fields[3] == "true")
      r.is_complete = true;
    else if (fields[3] == "false")
      r.is_complete = false;
    else
      throw LoadError("shifts file: bad is_complete at row " +
                      std::to_string(i + 1));
    r.shift.g = parse_int(fields[4], "shifts g");
    if (fields[5] != "inf") r.shift.p = parse_int(fields[5], "shifts p");
    if (fields[6] != "inf")
      r.shift.shift = parse_int(fields[6], "shifts shift");
    if (r.shift.p.has_value() != r.shift.shift.has_value())
      throw LoadError("shifts file: p and shift must both be finite or both "
                      "inf at row " +
                      std::to_string(i + 1));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string curve_to_csv(const CompletionCurve& curve) {
  std::string out = "i,c\n";
  for (int i = curve.i_min; i <= curve.i_max; ++i)
    out += std::to_string(i) + "," + format_double(curve.at(i)) + "\n";
  return out;
}

std::string frame_metrics_to_csv(
    const std::vector<std::pair<std::string, FrameMetrics>>& rows) {
  std::string out = "group,tp,fp,fn,tn,precision,recall,f1\n";
  for (const auto& [group, m] : rows) {
    out += csv::join_row({group, std::to_string(m.counts.tp),
                          std::to_string(m.counts.fp),
                          std::to_string(m.counts.fn),
                          std::to_string(m.counts.tn),
                          opt_to_string(m.precision), opt_to_string(m.recall),
                          opt_to_string(m.f1)});
  }
  return out;
}

std::vector<std::pair<std::string, FrameMetrics>> frame_metrics_from_csv(
    const std::string& content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.push_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  if (lines.empty() || lines[0] != "group,tp,fp,fn,tn,precision,recall,f1")
    throw LoadError("frame metrics file: missing or wrong header");

  std::vector<std::pair<std::string, FrameMetrics>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = csv::split(lines[i]);
    if (fields.size() != 8)
      throw LoadError("frame metrics file: row " + std::to_string(i + 1) +
                      " has wrong arity");
    ConfusionCounts c;
    c.tp = parse_int(fields[1], "tp");
    c.fp = parse_int(fields[2], "fp");
    c.fn = parse_int(fields[3], "fn");
    c.tn = parse_int(fields[4], "tn");
    rows.emplace_back(std::string(fields[0]), FrameMetrics::from_counts(c));
  }
  return rows;
}

namespace {

constexpr std::string_view kSummaryHeader =
    "group,sequences,complete,incomplete,skipped_folds,tp,fp,fn,tn,"
    "precision,recall,f1,c10_complete,c0_complete,detected_complete,"
    "detected_incomplete";

}  // namespace

std::string summary_to_csv(const RunSummary& summary) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const GroupSummary& g : summary.groups) {
    out += csv::join_row(
        {g.group, std::to_string(g.sequences), std::to_string(g.complete),
         std::to_string(g.incomplete), std::to_string(g.skipped_folds),
         std::to_string(g.frames.counts.tp), std::to_string(g.frames.counts.fp),
         std::to_string(g.frames.counts.fn), std::to_string(g.frames.counts.tn),
         opt_to_string(g.frames.precision), opt_to_string(g.frames.recall),
         opt_to_string(g.frames.f1), opt_to_string(g.c10_complete),
         opt_to_string(g.c0_complete), opt_to_string(g.detected_complete),
         opt_to_string(g.detected_incomplete)});
  }
  return out;
}

RunSummary summary_from_csv(const std::string& content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.push_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  if (lines.empty() || lines[0] != kSummaryHeader)
    throw LoadError("summary file: missing or wrong header");

  RunSummary summary;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = csv::split(lines[i]);
    if (fields.size() != 16)
      throw LoadError("summary file: row " + std::to_string(i + 1) +
                      " has wrong arity");
    GroupSummary g;
    g.group = std::string(fields[0]);
    g.sequences = static_cast<std::size_t>(parse_int(fields[1], "sequences"));
    g.complete = static_cast<std::size_t>(parse_int(fields[2], "complete"));
    g.incomplete =
        static_cast<std::size_t>(parse_int(fields[3], "incomplete"));
    g.skipped_folds =
        static_cast<std::size_t>(parse_int(fields[4], "skipped_folds"));
    ConfusionCounts c;
    c.tp = parse_int(fields[5], "tp");
    c.fp = parse_int(fields[6], "fp");
    c.fn = parse_int(fields[7], "fn");
    c.tn = parse_int(fields[8], "tn");
    g.frames = FrameMetrics::from_counts(c);
    g.c10_complete = opt_from_string(fields[12], "c10_complete");
    g.c0_complete = opt_from_string(fields[13], "c0_complete");
    g.detected_complete = opt_from_string(fields[14], "detected_complete");
    g.detected_incomplete = opt_from_string(fields[15], "detected_incomplete");
    summary.groups.push_back(std::move(g));
  }
  return summary;
}

}  // namespace completion
