// hmm.hpp — supervised two-state Gaussian HMM over pre/post-completion
// frames. The structure is constrained: sequences start in Pre and can
// never leave Post, so every finite-probability state path is monotone.
// Decoding is log-space Viterbi.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "completion/types.hpp"

namespace completion {

// Multivariate Gaussian with cached precision matrix and log-determinant.
struct GaussianEmission {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd precision;
  double log_det = 0.0;

  // Validates symmetry (1e-10) and positive definiteness, then caches the
  // precision and log-determinant via Cholesky.
  static GaussianEmission from_moments(Eigen::VectorXd mean,
                                       Eigen::MatrixXd covariance);

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::Index dim() const { return mean.size(); }
};

// One sequence of (possibly PCA-reduced) frames with per-frame labels; the
// common currency of both temporal-model trainers.
struct TrainSequence {
  Eigen::MatrixXd frames;  // T x k
  LabelVector labels;      // T
};

struct CompletionHmm {
  // Index 0 = Pre, 1 = Post. Structural zeros are -inf log probabilities:
  // initial_log_prob[Post] and transition_log_prob(Post, Pre) are always
  // -inf; they participate only in comparisons, never arithmetic that
  // could produce NaN.
  Eigen::Vector2d initial_log_prob;
  Eigen::Matrix2d transition_log_prob;  // (from, to)
  std::array<GaussianEmission, 2> emissions;

  Eigen::Index feature_dim() const { return emissions[0].dim(); }
};

// Maximum-likelihood training from labelled sequences: initial = first-frame
// label frequencies (clamped to (1, 0) with a warning if any sequence
// starts Post), transitions = pooled label-bigram frequencies with the
// structural zeros imposed, emissions = per-state sample mean/covariance
// with eps = 1e-6 * trace/k added to the diagonal.
//
// Throws TrainError when a state has no frames ("post-completion state
// unobservable" when Post is missing), fewer than 2 frames for covariance
// estimation, or a covariance still singular after regularisation.
CompletionHmm train_hmm(const std::vector<TrainSequence>& sequences);

// T x 2 matrix of per-frame emission log densities (columns: Pre, Post).
Eigen::MatrixX2d emission_log_densities(const CompletionHmm& hmm,
                                        const Eigen::MatrixXd& frames);

// Core DP over a precomputed log-density matrix. Ties prefer Pre, i.e. the
// later completion moment.
LabelVector viterbi_path(const Eigen::Vector2d& initial_log_prob,
                         const Eigen::Matrix2d& transition_log_prob,
                         const Eigen::MatrixX2d& log_densities,
                         double* path_score = nullptr);

LabelVector viterbi(const CompletionHmm& hmm, const Eigen::MatrixXd& frames);

// Index of the first Post frame in a label vector; absent when all Pre.
std::optional<Eigen::Index> first_post(const LabelVector& labels);

// first_post of the Viterbi path.
std::optional<Eigen::Index> decode_completion(const CompletionHmm& hmm,
                                              const Eigen::MatrixXd& frames);

std::string hmm_to_csv(const CompletionHmm& hmm);
CompletionHmm hmm_from_csv(const std::string& content);

}  // namespace completion
