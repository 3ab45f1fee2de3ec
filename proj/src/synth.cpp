#include "completion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace completion {

void SynthConfig::validate() const {
  if (feature_dim < 1) throw ConfigError("synth: feature_dim must be >= 1");
  if (pre_mean.size() != feature_dim || post_mean.size() != feature_dim)
    throw ConfigError("synth: pre_mean/post_mean must have feature_dim "
                      "entries");
  if (distractor_mean && distractor_mean->size() != feature_dim)
    throw ConfigError("synth: distractor_mean must have feature_dim entries");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw ConfigError("synth: noise_std must be a finite value >= 0");
  if (length_min < 2) throw ConfigError("synth: length_min must be >= 2");
  if (length_max < length_min)
    throw ConfigError("synth: length range is not well-ordered");
  if (!(completion_fraction_min > 0.0 && completion_fraction_max < 1.0 &&
        completion_fraction_min <= completion_fraction_max))
    throw ConfigError(
        "synth: completion fraction range must satisfy 0 < min <= max < 1");
  if (!(incomplete_fraction >= 0.0 && incomplete_fraction <= 1.0))
    throw ConfigError("synth: incomplete_fraction must be in [0, 1]");
  if (subjects < 1) throw ConfigError("synth: subjects must be >= 1");
  if (sequences_per_subject < 1)
    throw ConfigError("synth: sequences_per_subject must be >= 1");
  if (actions.empty()) throw ConfigError("synth: no actions configured");
  for (const std::string& a : actions) {
    if (a.empty() || a == "total" ||
        a.find_first_of(",\n\r") != std::string::npos)
      throw ConfigError("synth: invalid action name '" + a + "'");
  }
}

double SynthConfig::separation() const {
  if (noise_std == 0.0) return std::numeric_limits<double>::infinity();
  return (post_mean - pre_mean).norm() / noise_std;
}

namespace {

std::string pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

Eigen::MatrixXd sample_regime_rows(Rng& rng, const Eigen::VectorXd& mean,
                                   double noise_std, Eigen::Index rows) {
  Eigen::MatrixXd m(rows, mean.size());
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < mean.size(); ++c)
      m(r, c) = mean[c] + noise_std * rng.normal();
  return m;
}

}  // namespace

Dataset generate(const SynthConfig& config) {
  config.validate();

  Dataset dataset;
  const std::size_t incomplete_per_subject = static_cast<std::size_t>(
      std::llround(config.incomplete_fraction *
                   static_cast<double>(config.sequences_per_subject)));

  for (const std::string& action : config.actions) {
    Rng rng(mix_seed(config.seed, action));
    for (std::size_t s = 0; s < config.subjects; ++s) {
      const std::string subject_id = "s" + pad(s + 1, 2);
      for (std::size_t j = 0; j < config.sequences_per_subject; ++j) {
        const Eigen::Index t_len =
            config.length_min +
            static_cast<Eigen::Index>(rng.uniform_int(static_cast<uint64_t>(
                config.length_max - config.length_min + 1)));
        // The switch point is drawn for every sequence so the random
        // stream does not depend on completeness.
        const double frac = rng.uniform(config.completion_fraction_min,
                                        config.completion_fraction_max);
        const Eigen::Index switch_frame = std::clamp<Eigen::Index>(
            static_cast<Eigen::Index>(frac * static_cast<double>(t_len)), 1,
            t_len - 1);
        const bool is_complete = j >= incomplete_per_subject;

        FeatureSequence seq;
        seq.meta.sequence_id =
            action + "_" + subject_id + "_" + pad(j + 1, 3);
        seq.meta.subject_id = subject_id;
        seq.meta.action = action;
        seq.meta.is_complete = is_complete;

        if (is_complete) {
          seq.meta.completion_frame = switch_frame;
          seq.frames.resize(t_len, config.feature_dim);
          seq.frames.topRows(switch_frame) = sample_regime_rows(
              rng, config.pre_mean, config.noise_std, switch_frame);
          seq.frames.bottomRows(t_len - switch_frame) = sample_regime_rows(
              rng, config.post_mean, config.noise_std, t_len - switch_frame);
        } else if (config.distractor_mean) {
          seq.frames.resize(t_len, config.feature_dim);
          seq.frames.topRows(switch_frame) = sample_regime_rows(
              rng, config.pre_mean, config.noise_std, switch_frame);
          seq.frames.bottomRows(t_len - switch_frame) = sample_regime_rows(
              rng, *config.distractor_mean, config.noise_std,
              t_len - switch_frame);
        } else {
          seq.frames = sample_regime_rows(rng, config.pre_mean,
                                          config.noise_std, t_len);
        }
        dataset.sequences.push_back(std::move(seq));
      }
      dataset.subjects.insert(subject_id);
    }
    dataset.actions.insert(action);
  }
  validate_dataset(dataset);
  return dataset;
}

}  // namespace completion
