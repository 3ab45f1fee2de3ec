#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "completion/pca.hpp"

using namespace completion;

namespace {

Eigen::MatrixXd random_gaussian(Rng& rng, Eigen::Index n, Eigen::Index d,
                                const Eigen::VectorXd& scales) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = scales[c] * rng.normal();
  return m;
}

// Oracle: naive covariance assembly and a fresh eigendecomposition,
// independent of fit_pca's code path, plus the minimal-k rule applied to
// the raw eigenvalue list.
struct SpectrumOracle {
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::Index minimal_k(double threshold) const {
    const double total = eigenvalues.sum();
    double running = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
      running += eigenvalues[k];
      if (running >= threshold * total) return k + 1;
    }
    return eigenvalues.size();
  }
};

SpectrumOracle covariance_oracle(const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index r = 0; r < n; ++r) mean += data.row(r).transpose();
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::VectorXd c = data.row(r).transpose() - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  REQUIRE(solver.info() == Eigen::Success);
  SpectrumOracle oracle;
  oracle.eigenvalues = solver.eigenvalues().reverse();
  return oracle;
}

}  // namespace

TEST_CASE("rank-1 data keeps one component along the line") {
  // Points on y = x around mean (2, 3).
  Eigen::MatrixXd data(5, 2);
  for (int i = 0; i < 5; ++i) {
    data(i, 0) = 2.0 + i;
    data(i, 1) = 3.0 + i;
  }
  const PcaModel model = fit_pca(data, 0.90);
  REQUIRE(model.output_dim() == 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(model.components(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-10));
  CHECK(model.components(0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-10));
}

TEST_CASE("isotropic 3-D sample needs all three components at 90%") {
  Rng rng(11);
  const Eigen::MatrixXd data =
      random_gaussian(rng, 2000, 3, Eigen::VectorXd::Ones(3));
  const SpectrumOracle oracle = covariance_oracle(data);
  REQUIRE(oracle.minimal_k(0.90) == 3);  // each axis carries about a third

  const PcaModel model = fit_pca(data, 0.90);
  CHECK(model.output_dim() == 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(model.explained_variance[i] ==
          doctest::Approx(oracle.eigenvalues[i]).epsilon(1e-9));
}

TEST_CASE("threshold 1.0 retains exactly the covariance rank") {
  Rng rng(13);
  // Two informative directions embedded in 5-D: rank 2.
  Eigen::MatrixXd data(40, 5);
  data.setZero();
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const double a = rng.normal(), b = rng.normal();
    data(r, 0) = a;
    data(r, 1) = b;
    data(r, 2) = a + b;
    data(r, 3) = 2.0 * a - b;
    data(r, 4) = -a;
  }
  // Columns 2..4 are linear in columns 0..1.
  const PcaModel model = fit_pca(data, 1.0);
  CHECK(model.output_dim() == 2);
  CHECK(model.variance_ratio_retained == doctest::Approx(1.0));
}

TEST_CASE("minimal-k rule matches the oracle across random spectra") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform_int(6));
    const Eigen::Index n = d + 2 + static_cast<Eigen::Index>(rng.uniform_int(40));
    Eigen::VectorXd scales(d);
    for (Eigen::Index i = 0; i < d; ++i)
      scales[i] = std::pow(2.0, -static_cast<double>(i)) *
                  (0.5 + rng.uniform());
    const Eigen::MatrixXd data = random_gaussian(rng, n, d, scales);
    const double threshold = 0.5 + 0.45 * rng.uniform();

    const PcaModel model = fit_pca(data, threshold);
    const SpectrumOracle oracle = covariance_oracle(data);
    CHECK(model.output_dim() == oracle.minimal_k(threshold));
    CHECK(model.variance_ratio_retained >= threshold);
    if (model.output_dim() > 1)
      CHECK(model.variance_ratio_retained -
                model.explained_variance[model.output_dim() - 1] /
                    oracle.eigenvalues.sum() <
            threshold);  // k is minimal
  }
}

TEST_CASE("transform centres and aligns with components") {
  Rng rng(19);
  const Eigen::MatrixXd data =
      random_gaussian(rng, 100, 4, Eigen::VectorXd::Ones(4));
  const PcaModel model = fit_pca(data, 0.99);

  CHECK(model.transform(model.mean).norm() == doctest::Approx(0.0));

  const double c = 2.5;
  const Eigen::VectorXd shifted =
      model.mean + c * model.components.row(0).transpose();
  const Eigen::VectorXd projected = model.transform(shifted);
  CHECK(projected[0] == doctest::Approx(c).epsilon(1e-10));
  for (Eigen::Index i = 1; i < projected.size(); ++i)
    CHECK(projected[i] == doctest::Approx(0.0).epsilon(1e-10));

  // Brute-force dot products.
  Eigen::VectorXd frame(4);
  for (Eigen::Index i = 0; i < 4; ++i) frame[i] = rng.normal();
  const Eigen::VectorXd got = model.transform(frame);
  for (Eigen::Index i = 0; i < model.output_dim(); ++i) {
    double dot = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j)
      dot += model.components(i, j) * (frame[j] - model.mean[j]);
    CHECK(got[i] == doctest::Approx(dot).epsilon(1e-12));
  }

  CHECK_THROWS_AS(model.transform(Eigen::VectorXd::Zero(5)), ValidationError);
}

TEST_CASE("orthonormality and transformed-data statistics") {
  Rng rng(23);
  Eigen::VectorXd scales(6);
  for (Eigen::Index i = 0; i < 6; ++i)
    scales[i] = std::pow(1.7, -static_cast<double>(i));
  const Eigen::MatrixXd data = random_gaussian(rng, 400, 6, scales);
  const PcaModel model = fit_pca(data, 0.95);

  const Eigen::MatrixXd gram = model.components * model.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-8);

  for (Eigen::Index i = 0; i + 1 < model.output_dim(); ++i)
    CHECK(model.explained_variance[i] >= model.explained_variance[i + 1]);

  const Eigen::MatrixXd projected = model.transform_rows(data);
  CHECK(projected.colwise().mean().cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::MatrixXd centered =
      projected.rowwise() - projected.colwise().mean();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) /
                              static_cast<double>(data.rows() - 1);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      if (i == j)
        CHECK(cov(i, j) == doctest::Approx(model.explained_variance[i])
                               .epsilon(1e-6));
      else
        CHECK(std::abs(cov(i, j)) < 1e-6 * model.explained_variance[0]);
    }
  }
}

TEST_CASE("reconstruction error is nonincreasing in k") {
  Rng rng(29);
  Eigen::VectorXd scales(5);
  for (Eigen::Index i = 0; i < 5; ++i)
    scales[i] = std::pow(2.0, -static_cast<double>(i));
  const Eigen::MatrixXd data = random_gaussian(rng, 150, 5, scales);

  // Nested fits via increasing thresholds.
  double previous_error = std::numeric_limits<double>::infinity();
  Eigen::Index previous_k = 0;
  for (const double threshold : {0.5, 0.8, 0.95, 1.0}) {
    const PcaModel model = fit_pca(data, threshold);
    CHECK(model.output_dim() >= previous_k);
    double error = 0.0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      const Eigen::VectorXd x = data.row(r).transpose();
      const Eigen::VectorXd reconstructed =
          model.mean + model.components.transpose() * model.transform(x);
      error += (x - reconstructed).squaredNorm();
    }
    CHECK(error <= previous_error + 1e-9);
    previous_error = error;
    previous_k = model.output_dim();
  }
}

TEST_CASE("Gram and direct routes agree to 1e-8") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 10 + static_cast<Eigen::Index>(rng.uniform_int(20));
    const Eigen::Index d = 25 + static_cast<Eigen::Index>(rng.uniform_int(30));
    Eigen::VectorXd scales(d);
    for (Eigen::Index i = 0; i < d; ++i)
      scales[i] = std::pow(1.5, -static_cast<double>(i % 7));
    const Eigen::MatrixXd data = random_gaussian(rng, n, d, scales);

    const PcaModel direct = fit_pca(data, 0.90, PcaMethod::Direct);
    const PcaModel gram = fit_pca(data, 0.90, PcaMethod::Gram);
    REQUIRE(direct.output_dim() == gram.output_dim());
    CHECK((direct.mean - gram.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct.explained_variance - gram.explained_variance)
              .cwiseAbs()
              .maxCoeff() < 1e-8);
    CHECK((direct.components - gram.components).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Random(1, 3), 0.9), TrainError);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Constant(10, 3, 4.2), 0.9),
                  TrainError);  // zero variance
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Random(10, 3), 0.0), TrainError);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Random(10, 3), 1.5), TrainError);
}

TEST_CASE("serialisation round-trips exactly") {
  Rng rng(37);
  const Eigen::MatrixXd data =
      random_gaussian(rng, 60, 4, Eigen::VectorXd::Ones(4));
  const PcaModel model = fit_pca(data, 0.9);
  const std::string bundle = pca_to_csv(model);
  const PcaModel back = pca_from_csv(bundle);
  CHECK(back.mean == model.mean);
  CHECK(back.components == model.components);
  CHECK(back.explained_variance == model.explained_variance);
  CHECK(back.variance_threshold == model.variance_threshold);
  CHECK(back.variance_ratio_retained == model.variance_ratio_retained);
  CHECK(pca_to_csv(back) == bundle);
}
