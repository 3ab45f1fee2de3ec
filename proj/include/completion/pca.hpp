// pca.hpp — dimensionality reduction by principal component analysis,
// keeping the minimal number of components whose cumulative explained
// variance reaches a threshold (default 90%).
#pragma once

#include <Eigen/Dense>
#include <string>

#include "completion/common.hpp"

namespace completion {

struct PcaModel {
  Eigen::VectorXd mean;            // D
  Eigen::MatrixXd components;      // k x D, orthonormal rows
  Eigen::VectorXd explained_variance;  // k, nonincreasing
  double variance_threshold = 0.0;
  double variance_ratio_retained = 0.0;

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.rows(); }

  // components * (x - mean)
  Eigen::VectorXd transform(const Eigen::VectorXd& frame) const;
  // Row-wise transform of a T x D frame matrix.
  Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& frames) const;
};

enum class PcaMethod {
  Auto,    // Gram when D > N, direct otherwise
  Direct,  // eigendecomposition of the D x D sample covariance
  Gram,    // eigendecomposition of the N x N Gram matrix
};

// Fits on N x D data (rows are observations), sample covariance with
// divisor N-1. Sign convention: the largest-magnitude entry of each
// component is positive, so fits are reproducible. Throws TrainError for
// N < 2, a threshold outside (0, 1], or zero total variance.
PcaModel fit_pca(const Eigen::MatrixXd& frames, double variance_threshold = 0.90,
                 PcaMethod method = PcaMethod::Auto);

std::string pca_to_csv(const PcaModel& model);
PcaModel pca_from_csv(const std::string& content);

}  // namespace completion
