#include "completion/hmm.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "completion/csv.hpp"

namespace completion {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr int kPre = 0;
constexpr int kPost = 1;

}  // namespace

GaussianEmission GaussianEmission::from_moments(Eigen::VectorXd mean,
                                                Eigen::MatrixXd covariance) {
  if (covariance.rows() != covariance.cols() ||
      covariance.rows() != mean.size())
    throw TrainError("Gaussian emission: mean/covariance shape mismatch");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if (((covariance - covariance.transpose()).cwiseAbs().maxCoeff()) >
      1e-10 * scale)
    throw TrainError("Gaussian emission: covariance not symmetric");
  covariance = ((covariance + covariance.transpose()) / 2.0).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw TrainError("Gaussian emission: covariance is singular");

  GaussianEmission e;
  e.mean = std::move(mean);
  e.covariance = std::move(covariance);
  e.precision = llt.solve(
      Eigen::MatrixXd::Identity(e.covariance.rows(), e.covariance.cols()));
  e.log_det = 2.0 * Eigen::MatrixXd(llt.matrixL())
                        .diagonal()
                        .array()
                        .log()
                        .sum();
  return e;
}

double GaussianEmission::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw ValidationError("Gaussian emission: input has dimension " +
                          std::to_string(x.size()) + ", expected " +
                          std::to_string(dim()));
  const Eigen::VectorXd d = x - mean;
  const double quad = d.dot(precision * d);
  return -0.5 * (static_cast<double>(dim()) * kLog2Pi + log_det + quad);
}

namespace {

GaussianEmission fit_state_emission(const std::vector<TrainSequence>& seqs,
                                    CompletionLabel state,
                                    const char* state_name) {
  const Eigen::Index dim = seqs.front().frames.cols();
  Eigen::Index count = 0;
  for (const TrainSequence& s : seqs)
    for (const CompletionLabel l : s.labels)
      if (l == state) ++count;

  if (count == 0) {
    if (state == CompletionLabel::Post)
      throw TrainError("post-completion state unobservable: no Post frame "
                       "in the training data");
    throw TrainError("pre-completion state unobservable: no Pre frame in "
                     "the training data");
  }
  if (count < 2)
    throw TrainError(std::string("cannot estimate ") + state_name +
                     " covariance from a single frame");

  Eigen::MatrixXd stacked(count, dim);
  Eigen::Index row = 0;
  for (const TrainSequence& s : seqs)
    for (Eigen::Index t = 0; t < s.frames.rows(); ++t)
      if (s.labels[static_cast<std::size_t>(t)] == state)
        stacked.row(row++) = s.frames.row(t);

  const Eigen::VectorXd mean = stacked.colwise().mean();
  const Eigen::MatrixXd centered = stacked.rowwise() - mean.transpose();
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(count - 1);
  const double eps = 1e-6 * cov.trace() / static_cast<double>(dim);
  cov.diagonal().array() += eps;
  return GaussianEmission::from_moments(mean, std::move(cov));
}

}  // namespace

CompletionHmm train_hmm(const std::vector<TrainSequence>& sequences) {
  if (sequences.empty()) throw TrainError("HMM training: no sequences");
  const Eigen::Index dim = sequences.front().frames.cols();
  for (const TrainSequence& s : sequences) {
    if (s.frames.cols() != dim)
      throw TrainError("HMM training: inconsistent feature dimensions");
    if (s.frames.rows() < 1)
      throw TrainError("HMM training: empty sequence");
    if (static_cast<Eigen::Index>(s.labels.size()) != s.frames.rows())
      throw TrainError("HMM training: label/frame count mismatch");
  }

  // Initial distribution: first-frame label frequencies. A Post start
  // (completion annotated at frame 0) conflicts with the structural
  // constraint, so it is clamped out.
  Eigen::Index post_starts = 0;
  for (const TrainSequence& s : sequences)
    if (s.labels.front() == CompletionLabel::Post) ++post_starts;
  if (post_starts > 0)
    std::cerr << "hmm: " << post_starts
              << " training sequence(s) start post-completion; initial "
                 "distribution clamped to (1, 0)\n";

  CompletionHmm hmm;
  hmm.initial_log_prob << 0.0, kNegInf;  // log(1), log(0)

  // Transitions: pooled bigram counts with structural zeros. The Post row
  // is (0, 1) by construction.
  double pre_pre = 0.0, pre_post = 0.0;
  for (const TrainSequence& s : sequences) {
    for (std::size_t t = 0; t + 1 < s.labels.size(); ++t) {
      if (s.labels[t] != CompletionLabel::Pre) continue;
      if (s.labels[t + 1] == CompletionLabel::Pre)
        pre_pre += 1.0;
      else
        pre_post += 1.0;
    }
  }
  const double pre_total = pre_pre + pre_post;
  if (pre_total > 0.0) {
    hmm.transition_log_prob(kPre, kPre) =
        pre_pre > 0.0 ? std::log(pre_pre / pre_total) : kNegInf;
    hmm.transition_log_prob(kPre, kPost) =
        pre_post > 0.0 ? std::log(pre_post / pre_total) : kNegInf;
  } else {
    // No bigram ever leaves Pre (all length-1 sequences); stay put.
    std::cerr << "hmm: no pre-completion bigrams observed; Pre row set to "
                 "(1, 0)\n";
    hmm.transition_log_prob(kPre, kPre) = 0.0;
    hmm.transition_log_prob(kPre, kPost) = kNegInf;
  }
  hmm.transition_log_prob(kPost, kPre) = kNegInf;
  hmm.transition_log_prob(kPost, kPost) = 0.0;

  hmm.emissions[kPre] =
      fit_state_emission(sequences, CompletionLabel::Pre, "pre-completion");
  hmm.emissions[kPost] =
      fit_state_emission(sequences, CompletionLabel::Post, "post-completion");
  return hmm;
}

Eigen::MatrixX2d emission_log_densities(const CompletionHmm& hmm,
                                        const Eigen::MatrixXd& frames) {
  Eigen::MatrixX2d densities(frames.rows(), 2);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    const Eigen::VectorXd x = frames.row(t).transpose();
    densities(t, kPre) = hmm.emissions[kPre].log_density(x);
    densities(t, kPost) = hmm.emissions[kPost].log_density(x);
  }
  return densities;
}

LabelVector viterbi_path(const Eigen::Vector2d& initial_log_prob,
                         const Eigen::Matrix2d& transition_log_prob,
                         const Eigen::MatrixX2d& log_densities,
                         double* path_score) {
  const Eigen::Index n = log_densities.rows();
  if (n < 1) throw ValidationError("viterbi: empty sequence");

  // delta(t, s): best log score of any path ending in state s at frame t.
  // Backpointers record the chosen predecessor; all ties prefer Pre so the
  // decoded completion moment is the latest optimum.
  Eigen::MatrixX2d delta(n, 2);
  Eigen::Matrix<int, Eigen::Dynamic, 2> back(n, 2);
  delta(0, kPre) = initial_log_prob[kPre] + log_densities(0, kPre);
  delta(0, kPost) = initial_log_prob[kPost] + log_densities(0, kPost);

  for (Eigen::Index t = 1; t < n; ++t) {
    for (int s = 0; s < 2; ++s) {
      const double from_pre = delta(t - 1, kPre) + transition_log_prob(kPre, s);
      const double from_post =
          delta(t - 1, kPost) + transition_log_prob(kPost, s);
      if (from_post > from_pre) {
        delta(t, s) = from_post + log_densities(t, s);
        back(t, s) = kPost;
      } else {
        delta(t, s) = from_pre + log_densities(t, s);
        back(t, s) = kPre;
      }
    }
  }

  int state = delta(n - 1, kPost) > delta(n - 1, kPre) ? kPost : kPre;
  if (path_score) *path_score = delta(n - 1, state);

  LabelVector path(static_cast<std::size_t>(n));
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    path[static_cast<std::size_t>(t)] = static_cast<CompletionLabel>(state);
    if (t > 0) state = back(t, state);
  }
  return path;
}

LabelVector viterbi(const CompletionHmm& hmm, const Eigen::MatrixXd& frames) {
  if (frames.cols() != hmm.feature_dim())
    throw ValidationError("viterbi: frames have dimension " +
                          std::to_string(frames.cols()) + ", model expects " +
                          std::to_string(hmm.feature_dim()));
  return viterbi_path(hmm.initial_log_prob, hmm.transition_log_prob,
                      emission_log_densities(hmm, frames));
}

std::optional<Eigen::Index> first_post(const LabelVector& labels) {
  for (std::size_t t = 0; t < labels.size(); ++t)
    if (labels[t] == CompletionLabel::Post)
      return static_cast<Eigen::Index>(t);
  return std::nullopt;
}

std::optional<Eigen::Index> decode_completion(const CompletionHmm& hmm,
                                              const Eigen::MatrixXd& frames) {
  return first_post(viterbi(hmm, frames));
}

namespace {

std::string vec_csv(std::string_view tag, const Eigen::VectorXd& v) {
  std::string out(tag);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += ',';
    out += format_double(v[i]);
  }
  out += '\n';
  return out;
}

}  // namespace

std::string hmm_to_csv(const CompletionHmm& hmm) {
  const Eigen::Index k = hmm.feature_dim();
  std::string out = "format,hmm,1\n";
  out += "dims," + std::to_string(k) + "\n";
  out += vec_csv("initial_log_prob", hmm.initial_log_prob);
  out += vec_csv("transition_log_prob",
                 hmm.transition_log_prob.row(kPre).transpose());
  out += vec_csv("transition_log_prob",
                 hmm.transition_log_prob.row(kPost).transpose());
  for (int s = 0; s < 2; ++s) {
    out += std::string("state,") + (s == kPre ? "pre" : "post") + "\n";
    out += vec_csv("mean", hmm.emissions[s].mean);
    for (Eigen::Index r = 0; r < k; ++r)
      out += vec_csv("cov", hmm.emissions[s].covariance.row(r).transpose());
  }
  return out;
}

CompletionHmm hmm_from_csv(const std::string& content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.push_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  if (lines.size() < 5 || lines[0] != "format,hmm,1")
    throw LoadError("not an HMM model bundle");

  const auto dims = csv::split(lines[1]);
  if (dims.size() != 2 || dims[0] != "dims")
    throw LoadError("HMM bundle: malformed dims row");
  const Eigen::Index k = parse_int(dims[1], "hmm dims");
  if (k < 1) throw LoadError("HMM bundle: invalid dims");
  if (static_cast<Eigen::Index>(lines.size()) != 5 + 2 * (2 + k))
    throw LoadError("HMM bundle: unexpected row count");

  auto parse_vec = [&lines](std::size_t row, std::string_view tag,
                            Eigen::Index expected) {
    const auto fields = csv::split(lines[row]);
    if (fields.empty() || fields[0] != tag)
      throw LoadError("HMM bundle: expected '" + std::string(tag) +
                      "' at row " + std::to_string(row + 1));
    if (static_cast<Eigen::Index>(fields.size()) - 1 != expected)
      throw LoadError("HMM bundle: row " + std::to_string(row + 1) +
                      " has wrong arity");
    Eigen::VectorXd v(expected);
    for (Eigen::Index i = 0; i < expected; ++i)
      v[i] = parse_double(fields[static_cast<std::size_t>(i) + 1],
                          std::string(tag));
    return v;
  };

  CompletionHmm hmm;
  hmm.initial_log_prob = parse_vec(2, "initial_log_prob", 2);
  hmm.transition_log_prob.row(kPre) =
      parse_vec(3, "transition_log_prob", 2).transpose();
  hmm.transition_log_prob.row(kPost) =
      parse_vec(4, "transition_log_prob", 2).transpose();

  std::size_t row = 5;
  for (int s = 0; s < 2; ++s) {
    const auto state = csv::split(lines[row]);
    if (state.size() != 2 || state[0] != "state" ||
        state[1] != (s == kPre ? "pre" : "post"))
      throw LoadError("HMM bundle: malformed state row");
    ++row;
    Eigen::VectorXd mean = parse_vec(row++, "mean", k);
    Eigen::MatrixXd cov(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
      cov.row(r) = parse_vec(row++, "cov", k).transpose();
    hmm.emissions[s] =
        GaussianEmission::from_moments(std::move(mean), std::move(cov));
  }
  return hmm;
}

}  // namespace completion
