// synth.hpp — synthetic labelled datasets with known completion moments.
// Frames are drawn from isotropic Gaussian regimes: pre-completion frames
// around pre_mean, post-completion frames around post_mean. Incomplete
// sequences stay in the pre regime unless a distractor regime is
// configured, in which case they switch to it where a completion would
// otherwise have occurred (an attempt that fails to complete).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "completion/types.hpp"

namespace completion {

struct SynthConfig {
  Eigen::Index feature_dim = 8;
  Eigen::VectorXd pre_mean;   // feature_dim
  Eigen::VectorXd post_mean;  // feature_dim
  std::optional<Eigen::VectorXd> distractor_mean;
  double noise_std = 1.0;  // 0 produces exact regime means
  Eigen::Index length_min = 20;
  Eigen::Index length_max = 40;
  double completion_fraction_min = 0.3;
  double completion_fraction_max = 0.7;
  double incomplete_fraction = 0.2;
  std::size_t subjects = 4;
  std::size_t sequences_per_subject = 25;
  std::uint64_t seed = 1;
  std::vector<std::string> actions = {"synthetic"};

  void validate() const;
  // ||post_mean - pre_mean|| / noise_std; infinite when noise_std is 0.
  double separation() const;
};

// Deterministic under the seed. Each subject contributes
// round(incomplete_fraction * sequences_per_subject) incomplete sequences;
// completion frames sit at a uniform position within the fraction range,
// clamped to [1, T-1].
Dataset generate(const SynthConfig& config);

}  // namespace completion
