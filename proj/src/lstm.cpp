#include "completion/lstm.hpp"

#include <cmath>

#include "completion/csv.hpp"

namespace completion {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_model_shapes(const LstmModel& m) {
  const Eigen::Index h = m.hidden_size();
  if (m.input_weights.rows() != 4 * h || m.recurrent_weights.rows() != 4 * h ||
      m.gate_biases.size() != 4 * h || m.output_weights.cols() != h ||
      m.output_weights.rows() != 2)
    throw ValidationError("LSTM model: inconsistent parameter shapes");
}

}  // namespace

LstmForward lstm_forward(const LstmModel& model, const Eigen::MatrixXd& seq) {
  check_model_shapes(model);
  if (seq.cols() != model.input_dim())
    throw ValidationError("LSTM forward: input has dimension " +
                          std::to_string(seq.cols()) + ", model expects " +
                          std::to_string(model.input_dim()));
  const Eigen::Index t_len = seq.rows();
  if (t_len < 1) throw ValidationError("LSTM forward: empty sequence");
  const Eigen::Index h = model.hidden_size();

  LstmForward f;
  f.probs.resize(t_len, 2);
  f.logits.resize(t_len, 2);
  f.gate_i.resize(t_len, h);
  f.gate_f.resize(t_len, h);
  f.gate_g.resize(t_len, h);
  f.gate_o.resize(t_len, h);
  f.cell.resize(t_len, h);
  f.cell_tanh.resize(t_len, h);
  f.hidden.resize(t_len, h);

  // Input contributions for the whole sequence in one product.
  const Eigen::MatrixXd input_pre = model.input_weights * seq.transpose();

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::VectorXd pre = input_pre.col(t) +
                                model.recurrent_weights * h_prev +
                                model.gate_biases;
    const Eigen::VectorXd gi =
        pre.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd gf =
        pre.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd gg = pre.segment(2 * h, h).array().tanh().matrix();
    const Eigen::VectorXd go =
        pre.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });

    f.gate_i.row(t) = gi.transpose();
    f.gate_f.row(t) = gf.transpose();
    f.gate_g.row(t) = gg.transpose();
    f.gate_o.row(t) = go.transpose();

    const Eigen::VectorXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    const Eigen::VectorXd ct = c.array().tanh().matrix();
    const Eigen::VectorXd hidden = go.cwiseProduct(ct);
    f.cell.row(t) = c.transpose();
    f.cell_tanh.row(t) = ct.transpose();
    f.hidden.row(t) = hidden.transpose();

    const Eigen::Vector2d logits =
        model.output_weights * hidden + model.output_bias;
    const double zmax = logits.maxCoeff();
    // Scalar exp so extreme logit gaps saturate to an exact one-hot.
    const double e0 = std::exp(logits[0] - zmax);
    const double e1 = std::exp(logits[1] - zmax);
    f.logits.row(t) = logits.transpose();
    f.probs(t, 0) = e0 / (e0 + e1);
    f.probs(t, 1) = e1 / (e0 + e1);

    if (!f.hidden.row(t).allFinite() || !f.probs.row(t).allFinite())
      throw TrainError("LSTM forward: non-finite activation at frame " +
                       std::to_string(t));
    h_prev = hidden;
    c_prev = c;
  }
  return f;
}

double lstm_loss(const LstmForward& fwd, const LabelVector& labels) {
  const Eigen::Index t_len = fwd.logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != t_len)
    throw ValidationError("LSTM loss: label count does not match frames");
  double total = 0.0;
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const int y = labels[static_cast<std::size_t>(t)] == CompletionLabel::Post;
    const double zmax = std::max(fwd.logits(t, 0), fwd.logits(t, 1));
    const double log_z = std::log(std::exp(fwd.logits(t, 0) - zmax) +
                                  std::exp(fwd.logits(t, 1) - zmax)) +
                         zmax;
    total += log_z - fwd.logits(t, y);
  }
  return total / static_cast<double>(t_len);
}

double LstmGradients::global_norm() const {
  double sq = input_weights.squaredNorm() + recurrent_weights.squaredNorm() +
              gate_biases.squaredNorm() + output_weights.squaredNorm() +
              output_bias.squaredNorm();
  return std::sqrt(sq);
}

void LstmGradients::scale(double factor) {
  input_weights *= factor;
  recurrent_weights *= factor;
  gate_biases *= factor;
  output_weights *= factor;
  output_bias *= factor;
}

LstmGradients lstm_gradients(const LstmModel& model, const Eigen::MatrixXd& seq,
                             const LabelVector& labels, double* loss_out) {
  const LstmForward fwd = lstm_forward(model, seq);
  const Eigen::Index t_len = seq.rows();
  if (static_cast<Eigen::Index>(labels.size()) != t_len)
    throw ValidationError("LSTM gradients: label count does not match frames");
  if (loss_out) *loss_out = lstm_loss(fwd, labels);
  const Eigen::Index h = model.hidden_size();

  LstmGradients g;
  g.input_weights = Eigen::MatrixXd::Zero(4 * h, model.input_dim());
  g.recurrent_weights = Eigen::MatrixXd::Zero(4 * h, h);
  g.gate_biases = Eigen::VectorXd::Zero(4 * h);
  g.output_weights = Eigen::MatrixXd::Zero(2, h);
  g.output_bias.setZero();

  Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(h);
  const double inv_t = 1.0 / static_cast<double>(t_len);

  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const int y = labels[static_cast<std::size_t>(t)] == CompletionLabel::Post;
    Eigen::Vector2d dlogits = fwd.probs.row(t).transpose() * inv_t;
    dlogits[y] -= inv_t;

    g.output_weights.noalias() += dlogits * fwd.hidden.row(t);
    g.output_bias += dlogits;

    Eigen::VectorXd dh =
        model.output_weights.transpose() * dlogits + dh_carry;

    const Eigen::VectorXd gi = fwd.gate_i.row(t).transpose();
    const Eigen::VectorXd gf = fwd.gate_f.row(t).transpose();
    const Eigen::VectorXd gg = fwd.gate_g.row(t).transpose();
    const Eigen::VectorXd go = fwd.gate_o.row(t).transpose();
    const Eigen::VectorXd ct = fwd.cell_tanh.row(t).transpose();
    const Eigen::VectorXd c_prev =
        t > 0 ? Eigen::VectorXd(fwd.cell.row(t - 1).transpose())
              : Eigen::VectorXd(Eigen::VectorXd::Zero(h));

    const Eigen::VectorXd dc =
        dh.cwiseProduct(go)
            .cwiseProduct((1.0 - ct.array().square()).matrix()) +
        dc_carry;

    Eigen::VectorXd dpre(4 * h);
    // d(sigmoid) = s (1 - s); d(tanh) = 1 - tanh^2
    dpre.segment(0, h) = dc.cwiseProduct(gg)
                             .cwiseProduct(gi)
                             .cwiseProduct((1.0 - gi.array()).matrix());
    dpre.segment(h, h) = dc.cwiseProduct(c_prev)
                             .cwiseProduct(gf)
                             .cwiseProduct((1.0 - gf.array()).matrix());
    dpre.segment(2 * h, h) =
        dc.cwiseProduct(gi).cwiseProduct((1.0 - gg.array().square()).matrix());
    dpre.segment(3 * h, h) = dh.cwiseProduct(ct)
                                 .cwiseProduct(go)
                                 .cwiseProduct((1.0 - go.array()).matrix());

    g.input_weights.noalias() += dpre * seq.row(t);
    if (t > 0) g.recurrent_weights.noalias() += dpre * fwd.hidden.row(t - 1);
    g.gate_biases += dpre;

    dh_carry.noalias() = model.recurrent_weights.transpose() * dpre;
    dc_carry = dc.cwiseProduct(gf);
  }
  return g;
}

LstmModel train_lstm(const std::vector<TrainSequence>& sequences,
                     const TrainConfig& config, std::vector<EpochLog>* log) {
  if (sequences.empty()) throw TrainError("LSTM training: no sequences");
  if (config.epochs < 1) throw TrainError("LSTM training: epochs must be >= 1");
  if (!(config.lr_first_epoch > 0.0) || !(config.lr_rest > 0.0))
    throw TrainError("LSTM training: learning rates must be > 0");
  const Eigen::Index k = sequences.front().frames.cols();
  for (const TrainSequence& s : sequences) {
    if (s.frames.cols() != k)
      throw TrainError("LSTM training: inconsistent feature dimensions");
    if (s.frames.rows() < 1) throw TrainError("LSTM training: empty sequence");
    if (static_cast<Eigen::Index>(s.labels.size()) != s.frames.rows())
      throw TrainError("LSTM training: label/frame count mismatch");
  }
  const Eigen::Index h = config.hidden_size;
  if (h < 1) throw TrainError("LSTM training: hidden size must be >= 1");

  Rng rng(config.seed);
  const auto init = [&rng, &config](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        m(r, c) = rng.uniform(-config.init_scale, config.init_scale);
    return m;
  };

  LstmModel model;
  model.input_weights = init(4 * h, k);
  model.recurrent_weights = init(4 * h, h);
  model.gate_biases = init(4 * h, 1);
  model.output_weights = init(2, h);
  model.output_bias = init(2, 1);
  model.gate_biases.segment(h, h).setOnes();  // forget gate starts open

  std::vector<std::size_t> order(sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = epoch == 1 ? config.lr_first_epoch : config.lr_rest;
    rng.shuffle(order);

    double epoch_loss = 0.0;
    for (const std::size_t idx : order) {
      double loss = 0.0;
      LstmGradients grads =
          lstm_gradients(model, sequences[idx].frames, sequences[idx].labels,
                         &loss);
      if (!std::isfinite(loss))
        throw DivergenceError("LSTM training: non-finite loss at epoch " +
                              std::to_string(epoch) + ", sequence " +
                              std::to_string(idx));
      epoch_loss += loss;

      const double norm = grads.global_norm();
      if (config.grad_clip_norm > 0.0 && norm > config.grad_clip_norm)
        grads.scale(config.grad_clip_norm / norm);

      model.input_weights -= lr * grads.input_weights;
      model.recurrent_weights -= lr * grads.recurrent_weights;
      model.gate_biases -= lr * grads.gate_biases;
      model.output_weights -= lr * grads.output_weights;
      model.output_bias -= lr * grads.output_bias;
    }
    if (log)
      log->push_back(EpochLog{epoch, lr,
                              epoch_loss / static_cast<double>(order.size())});
  }
  return model;
}

LabelVector lstm_predict(const LstmModel& model, const Eigen::MatrixXd& seq) {
  const LstmForward fwd = lstm_forward(model, seq);
  LabelVector labels(static_cast<std::size_t>(seq.rows()));
  for (Eigen::Index t = 0; t < seq.rows(); ++t)
    labels[static_cast<std::size_t>(t)] = fwd.probs(t, 1) > fwd.probs(t, 0)
                                              ? CompletionLabel::Post
                                              : CompletionLabel::Pre;
  return labels;
}

namespace {

std::string block_csv(std::string_view tag, const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += tag;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string lstm_to_csv(const LstmModel& model) {
  std::string out = "format,lstm,1\n";
  out += "dims," + std::to_string(model.hidden_size()) + "," +
         std::to_string(model.input_dim()) + "\n";
  out += block_csv("input_weights", model.input_weights);
  out += block_csv("recurrent_weights", model.recurrent_weights);
  out += block_csv("gate_biases", model.gate_biases.transpose());
  out += block_csv("output_weights", model.output_weights);
  out += block_csv("output_bias", model.output_bias.transpose());
  return out;
}

LstmModel lstm_from_csv(const std::string& content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.push_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  if (lines.size() < 2 || lines[0] != "format,lstm,1")
    throw LoadError("not an LSTM model bundle");
  const auto dims = csv::split(lines[1]);
  if (dims.size() != 3 || dims[0] != "dims")
    throw LoadError("LSTM bundle: malformed dims row");
  const Eigen::Index h = parse_int(dims[1], "lstm dims");
  const Eigen::Index k = parse_int(dims[2], "lstm dims");
  if (h < 1 || k < 1) throw LoadError("LSTM bundle: invalid dims");
  if (static_cast<Eigen::Index>(lines.size()) != 2 + 4 * h + 4 * h + 1 + 2 + 1)
    throw LoadError("LSTM bundle: unexpected row count");

  std::size_t row = 2;
  const auto read_block = [&lines, &row](std::string_view tag,
                                         Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r, ++row) {
      const auto fields = csv::split(lines[row]);
      if (fields.empty() || fields[0] != tag)
        throw LoadError("LSTM bundle: expected '" + std::string(tag) +
                        "' at row " + std::to_string(row + 1));
      if (static_cast<Eigen::Index>(fields.size()) - 1 != cols)
        throw LoadError("LSTM bundle: row " + std::to_string(row + 1) +
                        " has wrong arity");
      for (Eigen::Index c = 0; c < cols; ++c)
        m(r, c) = parse_double(fields[static_cast<std::size_t>(c) + 1],
                               std::string(tag));
    }
    return m;
  };

  LstmModel model;
  model.input_weights = read_block("input_weights", 4 * h, k);
  model.recurrent_weights = read_block("recurrent_weights", 4 * h, h);
  model.gate_biases = read_block("gate_biases", 1, 4 * h).row(0).transpose();
  model.output_weights = read_block("output_weights", 2, h);
  model.output_bias = read_block("output_bias", 1, 2).row(0).transpose();
  check_model_shapes(model);
  return model;
}

}  // namespace completion
