#include "completion/pca.hpp"

#include <algorithm>

#include "completion/csv.hpp"

namespace completion {

namespace {

// Eigenvalues below this fraction of the leading one are treated as exact
// zeros when ranking the spectrum, so that a threshold of 1.0 retains
// exactly rank-of-covariance components.
constexpr double kRankTolerance = 1e-12;

void fix_sign(Eigen::MatrixXd& components, Eigen::Index row) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < components.cols(); ++i) {
    const double a = std::abs(components(row, i));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (components(row, arg) < 0.0) components.row(row) = -components.row(row);
}

struct Spectrum {
  Eigen::VectorXd eigenvalues;  // descending, sub-tolerance tail zeroed
  Eigen::MatrixXd components;   // one row per eigenvalue, unit norm
};

// Direct route: D x D sample covariance.
Spectrum direct_spectrum(const Eigen::MatrixXd& centered) {
  const Eigen::Index n = centered.rows();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw TrainError("PCA eigendecomposition failed to converge");

  const Eigen::Index d = cov.rows();
  Spectrum s;
  s.eigenvalues.resize(d);
  s.components.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {  // solver returns ascending order
    s.eigenvalues[i] = solver.eigenvalues()[d - 1 - i];
    s.components.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
  }
  return s;
}

// Gram route: eigendecompose the N x N matrix X Xt / (N-1); nonzero
// eigenvalues coincide with the covariance's and components are recovered
// as Xt u / sqrt((N-1) lambda). Much cheaper when D >> N.
Spectrum gram_spectrum(const Eigen::MatrixXd& centered) {
  const Eigen::Index n = centered.rows();
  const Eigen::MatrixXd gram =
      (centered * centered.transpose()) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success)
    throw TrainError("PCA eigendecomposition failed to converge");

  Spectrum s;
  s.eigenvalues.resize(n);
  s.components.resize(n, centered.cols());
  s.components.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lambda = solver.eigenvalues()[n - 1 - i];
    s.eigenvalues[i] = lambda;
    if (lambda > 0.0) {
      s.components.row(i) =
          (centered.transpose() * solver.eigenvectors().col(n - 1 - i))
              .transpose() /
          std::sqrt(static_cast<double>(n - 1) * lambda);
    }
  }
  return s;
}

}  // namespace

PcaModel fit_pca(const Eigen::MatrixXd& frames, double variance_threshold,
                 PcaMethod method) {
  const Eigen::Index n = frames.rows();
  const Eigen::Index d = frames.cols();
  if (n < 2)
    throw TrainError("PCA needs at least 2 observations, got " +
                     std::to_string(n));
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
    throw TrainError("variance threshold must be in (0, 1]");
  if (!frames.allFinite())
    throw TrainError("PCA input contains non-finite values");

  PcaModel model;
  model.variance_threshold = variance_threshold;
  model.mean = frames.colwise().mean();

  const Eigen::MatrixXd centered = frames.rowwise() - model.mean.transpose();
  const bool use_gram =
      method == PcaMethod::Gram || (method == PcaMethod::Auto && d > n);
  Spectrum s = use_gram ? gram_spectrum(centered) : direct_spectrum(centered);

  if (s.eigenvalues.size() == 0 || s.eigenvalues[0] <= 0.0)
    throw TrainError("PCA input has zero total variance");
  // Zero the sub-tolerance tail so cumulative ratios are exact at full rank.
  const double floor = s.eigenvalues[0] * kRankTolerance;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    if (s.eigenvalues[i] < floor) s.eigenvalues[i] = 0.0;

  Eigen::VectorXd cumulative(s.eigenvalues.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    running += s.eigenvalues[i];
    cumulative[i] = running;
  }
  const double total = cumulative[cumulative.size() - 1];

  Eigen::Index k = 1;
  while (k < s.eigenvalues.size() &&
         cumulative[k - 1] < variance_threshold * total)
    ++k;
  // Never retain zero-variance directions (reachable only at threshold 1.0
  // on rank-deficient data, where the cumulative sum plateaus early).
  while (k > 1 && s.eigenvalues[k - 1] == 0.0) --k;

  model.components = s.components.topRows(k);
  model.explained_variance = s.eigenvalues.head(k);
  model.variance_ratio_retained = cumulative[k - 1] / total;
  for (Eigen::Index i = 0; i < k; ++i) fix_sign(model.components, i);
  return model;
}

Eigen::VectorXd PcaModel::transform(const Eigen::VectorXd& frame) const {
  if (frame.size() != input_dim())
    throw ValidationError("PCA transform: frame has dimension " +
                          std::to_string(frame.size()) + ", model expects " +
                          std::to_string(input_dim()));
  return components * (frame - mean);
}

Eigen::MatrixXd PcaModel::transform_rows(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != input_dim())
    throw ValidationError("PCA transform: frames have dimension " +
                          std::to_string(frames.cols()) + ", model expects " +
                          std::to_string(input_dim()));
  return (frames.rowwise() - mean.transpose()) * components.transpose();
}

namespace {

std::string row_csv(std::string_view tag, const Eigen::VectorXd& v) {
  std::string out(tag);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += ',';
    out += format_double(v[i]);
  }
  out += '\n';
  return out;
}

Eigen::VectorXd parse_row(const std::vector<std::string_view>& fields,
                          std::string_view tag, Eigen::Index expected) {
  if (fields.empty() || fields[0] != tag)
    throw LoadError("model bundle: expected '" + std::string(tag) + "' row");
  if (static_cast<Eigen::Index>(fields.size()) - 1 != expected)
    throw LoadError("model bundle: '" + std::string(tag) + "' row has " +
                    std::to_string(fields.size() - 1) + " values, expected " +
                    std::to_string(expected));
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i)
    v[i] = parse_double(fields[static_cast<std::size_t>(i) + 1],
                        std::string(tag) + " row");
  return v;
}

}  // namespace

std::string pca_to_csv(const PcaModel& model) {
  std::string out = "format,pca,1\n";
  out += "dims," + std::to_string(model.input_dim()) + "," +
         std::to_string(model.output_dim()) + "\n";
  out += "threshold," + format_double(model.variance_threshold) + "\n";
  out += "retained," + format_double(model.variance_ratio_retained) + "\n";
  out += row_csv("mean", model.mean);
  for (Eigen::Index i = 0; i < model.output_dim(); ++i)
    out += row_csv("component", model.components.row(i));
  out += row_csv("explained_variance", model.explained_variance);
  return out;
}

PcaModel pca_from_csv(const std::string& content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.push_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  if (lines.size() < 6 || lines[0] != "format,pca,1")
    throw LoadError("not a PCA model bundle");

  const auto dims = csv::split(lines[1]);
  if (dims.size() != 3 || dims[0] != "dims")
    throw LoadError("PCA bundle: malformed dims row");
  const Eigen::Index d = parse_int(dims[1], "pca dims");
  const Eigen::Index k = parse_int(dims[2], "pca dims");

  PcaModel model;
  const auto threshold = csv::split(lines[2]);
  if (threshold.size() != 2 || threshold[0] != "threshold")
    throw LoadError("PCA bundle: malformed threshold row");
  model.variance_threshold = parse_double(threshold[1], "pca threshold");
  const auto retained = csv::split(lines[3]);
  if (retained.size() != 2 || retained[0] != "retained")
    throw LoadError("PCA bundle: malformed retained row");
  model.variance_ratio_retained = parse_double(retained[1], "pca retained");

  if (static_cast<Eigen::Index>(lines.size()) != 6 + k)
    throw LoadError("PCA bundle: unexpected row count");
  if (d < 1 || k < 1 || k > d)
    throw LoadError("PCA bundle: invalid dims");
  model.mean = parse_row(csv::split(lines[4]), "mean", d);
  model.components.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    model.components.row(i) =
        parse_row(csv::split(lines[5 + static_cast<std::size_t>(i)]),
                  "component", d)
            .transpose();
  model.explained_variance =
      parse_row(csv::split(lines[5 + static_cast<std::size_t>(k)]),
                "explained_variance", k);
  return model;
}

}  // namespace completion
