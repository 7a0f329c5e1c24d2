#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actbench/activations.hpp"
#include "actbench/data.hpp"
#include "actbench/graph.hpp"
#include "actbench/init.hpp"
#include "actbench/optim.hpp"
#include "actbench/report.hpp"
#include "actbench/rng.hpp"
#include "actbench/tensor.hpp"

namespace actbench {

enum class ModelFamily { kMlp, kCnn, kRnn, kLstm };

inline std::string_view family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kMlp: return "mlp";
    case ModelFamily::kCnn: return "cnn";
    case ModelFamily::kRnn: return "rnn";
    case ModelFamily::kLstm: return "lstm";
  }
  throw UnknownNameError("unknown model family");
}

inline ModelFamily family_from_name(std::string_view name) {
  if (name == "mlp") return ModelFamily::kMlp;
  if (name == "cnn") return ModelFamily::kCnn;
  if (name == "rnn") return ModelFamily::kRnn;
  if (name == "lstm") return ModelFamily::kLstm;
  throw UnknownNameError("unknown model family: " + std::string(name));
}

struct ModelSpec {
  ModelFamily family = ModelFamily::kMlp;
  long layers = 1;
  long hidden_units = 64;  // dense / recurrent width, or filter count for cnn
  long filter_size = 3;
  long embedding_dim = 50;
  ActivationSpec activation = ActivationSpec::of(ActivationKind::kRelu);
  ActivationSpec gate_sigma = ActivationSpec::of(ActivationKind::kSigmoid);
  ActivationSpec gate_tau = ActivationSpec::of(ActivationKind::kTanh);
  bool bidirectional = true;
  double dropout = 0.0;
  InitializerKind initializer = InitializerKind::kGlorotUniform;
  InitializerKind recurrent_initializer = InitializerKind::kGlorotUniform;
};

class Model {
 public:
  virtual ~Model() = default;

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

  // Builds the scalar loss for the given item indices of the task.
  virtual int loss_graph(Graph& g, const Task& task, std::span<const std::size_t> items,
                         Rng& rng, bool training) = 0;

  // Appends one prediction (or one per token) and the matching gold label.
  virtual void predict(const Task& task, std::span<const std::size_t> items,
                       std::vector<int>& preds, std::vector<int>& golds) = 0;

 protected:
  Parameter* add_param(Tensor t) {
    params_.push_back(std::make_unique<Parameter>(std::move(t)));
    return params_.back().get();
  }

  std::vector<std::unique_ptr<Parameter>> params_;
};

namespace detail {

inline int argmax_row(const Tensor& probs, long row) {
  int best = 0;
  for (long c = 1; c < probs.cols(); ++c)
    if (probs.at2(row, c) > probs.at2(row, best)) best = static_cast<int>(c);
  return best;
}

}  // namespace detail

// A dense "unit": one affine map per maxout branch (one branch for scalar
// activations), plus a learnable slope for prelu.
struct DenseUnit {
  std::vector<Parameter*> W;
  std::vector<Parameter*> b;
  Parameter* slope = nullptr;
};

// --- MLP sentence classifier -------------------------------------------------

class MlpModel : public Model {
 public:
  MlpModel(const ModelSpec& spec, long input_dim, int n_classes, Rng& rng)
      : spec_(spec), input_dim_(input_dim), n_classes_(n_classes) {
    long in = input_dim;
    const long H = spec.hidden_units;
    for (long l = 0; l < spec.layers; ++l) {
      hidden_.push_back(make_unit(in, H, rng));
      in = H;
    }
    w_out_ = add_param(init_tensor(spec.initializer, {in, n_classes}, in, n_classes, rng));
    b_out_ = add_param(Tensor({static_cast<long>(n_classes)}));
  }

  // Class probabilities; dropout active only when training with an rng.
  Tensor forward(const Tensor& x, bool training = false, Rng* rng = nullptr) {
    Graph g;
    return g.value(g.softmax(logits(g, x, training, rng)));
  }

  int loss_graph(Graph& g, const Task& task, std::span<const std::size_t> items, Rng& rng,
                 bool training) override {
    Tensor x({static_cast<long>(items.size()), input_dim_});
    std::vector<int> y(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& row = task.vectors[items[i]];
      for (long j = 0; j < input_dim_; ++j) x.at2(static_cast<long>(i), j) = row[static_cast<std::size_t>(j)];
      y[i] = task.labels[items[i]];
    }
    return g.softmax_cross_entropy(stack(g, g.leaf(std::move(x)), training, &rng), y);
  }

  void predict(const Task& task, std::span<const std::size_t> items, std::vector<int>& preds,
               std::vector<int>& golds) override {
    Tensor x({static_cast<long>(items.size()), input_dim_});
    for (std::size_t i = 0; i < items.size(); ++i)
      for (long j = 0; j < input_dim_; ++j)
        x.at2(static_cast<long>(i), j) = task.vectors[items[i]][static_cast<std::size_t>(j)];
    const Tensor probs = forward(x);
    for (std::size_t i = 0; i < items.size(); ++i) {
      preds.push_back(detail::argmax_row(probs, static_cast<long>(i)));
      golds.push_back(task.labels[items[i]]);
    }
  }

 private:
  DenseUnit make_unit(long in, long out, Rng& rng) {
    DenseUnit u;
    const int k = spec_.activation.arity;
    for (int j = 0; j < k; ++j) {
      u.W.push_back(add_param(init_tensor(spec_.initializer, {in, out}, in, out, rng)));
      u.b.push_back(add_param(Tensor({out})));
    }
    if (spec_.activation.kind == ActivationKind::kPrelu)
      u.slope = add_param(Tensor::scalar(kPreluDefaultSlope));
    return u;
  }

  int apply_unit(Graph& g, const DenseUnit& u, int x) {
    if (u.W.size() > 1) {
      std::vector<int> branches;
      for (std::size_t j = 0; j < u.W.size(); ++j)
        branches.push_back(g.linear(x, g.param(*u.W[j]), g.param(*u.b[j])));
      return g.maxout(branches);
    }
    const int z = g.linear(x, g.param(*u.W[0]), g.param(*u.b[0]));
    if (u.slope) return g.prelu(z, g.param(*u.slope));
    return g.activation(spec_.activation, z);
  }

  int stack(Graph& g, int x, bool training, Rng* rng) {
    if (g.value(x).ndim() != 2 || g.value(x).dim(1) != input_dim_)
      throw DimensionError("mlp input width mismatch");
    int node = x;
    for (const DenseUnit& u : hidden_) {
      node = apply_unit(g, u, node);
      if (training && rng && spec_.dropout > 0.0)
        node = g.dropout(node, spec_.dropout, *rng, true);
    }
    return g.linear(node, g.param(*w_out_), g.param(*b_out_));
  }

  int logits(Graph& g, const Tensor& x, bool training, Rng* rng) {
    return stack(g, g.leaf(x), training, rng);
  }

  ModelSpec spec_;
  long input_dim_;
  int n_classes_;
  std::vector<DenseUnit> hidden_;
  Parameter* w_out_;
  Parameter* b_out_;
};

inline Tensor mlp_forward(MlpModel& model, const Tensor& x) { return model.forward(x); }

// --- 1D-CNN document classifier ----------------------------------------------

class CnnModel : public Model {
 public:
  CnnModel(const ModelSpec& spec, long vocab_size, int n_classes, Rng& rng)
      : spec_(spec), vocab_size_(vocab_size), n_classes_(n_classes) {
    const long E = spec.embedding_dim, K = spec.hidden_units, h = spec.filter_size;
    embedding_ = add_param(
        init_tensor(InitializerKind::kRandomUniform, {vocab_size, E}, vocab_size, E, rng));
    long in_ch = E;
    for (long l = 0; l < spec.layers; ++l) {
      ConvUnit u;
      const int k = spec.activation.arity;
      for (int j = 0; j < k; ++j) {
        u.filters.push_back(
            add_param(init_tensor(spec.initializer, {K, h, in_ch}, h * in_ch, K, rng)));
        u.bias.push_back(add_param(Tensor({K})));
      }
      if (spec.activation.kind == ActivationKind::kPrelu)
        u.slope = add_param(Tensor::scalar(kPreluDefaultSlope));
      conv_.push_back(u);
      in_ch = K;
    }
    w_out_ = add_param(init_tensor(spec.initializer, {K, n_classes}, K, n_classes, rng));
    b_out_ = add_param(Tensor({static_cast<long>(n_classes)}));
  }

  Tensor forward(const std::vector<long>& tokens) {
    Graph g;
    const int pooled = g.as_row(doc_features(g, g.param(*embedding_), tokens));
    return g.value(g.softmax(g.linear(pooled, g.param(*w_out_), g.param(*b_out_))));
  }

  int loss_graph(Graph& g, const Task& task, std::span<const std::size_t> items, Rng& rng,
                 bool training) override {
    const int emb = g.param(*embedding_);
    std::vector<int> rows;
    std::vector<int> y;
    for (std::size_t i : items) {
      rows.push_back(g.as_row(doc_features(g, emb, task.token_ids[i])));
      y.push_back(task.labels[i]);
    }
    int batch = g.concat_rows(rows);
    if (training && spec_.dropout > 0.0) batch = g.dropout(batch, spec_.dropout, rng, true);
    return g.softmax_cross_entropy(g.linear(batch, g.param(*w_out_), g.param(*b_out_)), y);
  }

  void predict(const Task& task, std::span<const std::size_t> items, std::vector<int>& preds,
               std::vector<int>& golds) override {
    for (std::size_t i : items) {
      const Tensor probs = forward(task.token_ids[i]);
      preds.push_back(detail::argmax_row(probs, 0));
      golds.push_back(task.labels[i]);
    }
  }

 private:
  struct ConvUnit {
    std::vector<Parameter*> filters;
    std::vector<Parameter*> bias;
    Parameter* slope = nullptr;
  };

  // embedding lookup -> stacked convolutions -> global max pool, as a {K} node
  int doc_features(Graph& g, int emb, const std::vector<long>& tokens) {
    int node = g.embedding_lookup(emb, tokens);
    for (const ConvUnit& u : conv_) {
      if (u.filters.size() > 1) {
        std::vector<int> branches;
        for (std::size_t j = 0; j < u.filters.size(); ++j)
          branches.push_back(g.conv1d(node, g.param(*u.filters[j]), g.param(*u.bias[j])));
        node = g.maxout(branches);
      } else {
        const int z = g.conv1d(node, g.param(*u.filters[0]), g.param(*u.bias[0]));
        node = u.slope ? g.prelu(z, g.param(*u.slope)) : g.activation(spec_.activation, z);
      }
    }
    return g.global_max_pool(node);
  }

  ModelSpec spec_;
  long vocab_size_;
  int n_classes_;
  Parameter* embedding_;
  std::vector<ConvUnit> conv_;
  Parameter* w_out_;
  Parameter* b_out_;
};

inline Tensor cnn_forward(CnnModel& model, const std::vector<long>& tokens) {
  return model.forward(tokens);
}

// --- (bidirectional) RNN / LSTM tagger ----------------------------------------

class RnnTagger : public Model {
 public:
  RnnTagger(const ModelSpec& spec, long vocab_size, int n_classes, Rng& rng)
      : spec_(spec), vocab_size_(vocab_size), n_classes_(n_classes) {
    if (spec.activation.arity > 1)
      throw ValueError("maxout activations are not supported in recurrent cells");
    if (spec.gate_sigma.arity > 1 || spec.gate_tau.arity > 1)
      throw ValueError("maxout activations are not supported as lstm gates");
    const long E = spec.embedding_dim, H = spec.hidden_units;
    embedding_ = add_param(
        init_tensor(InitializerKind::kRandomUniform, {vocab_size, E}, vocab_size, E, rng));
    long in = E;
    for (long l = 0; l < spec.layers; ++l) {
      make_direction(in, H, rng);  // forward cells
      if (spec.bidirectional) make_direction(in, H, rng);
      in = spec.bidirectional ? 2 * H : H;
    }
    w_out_ = add_param(init_tensor(spec.initializer, {in, n_classes}, in, n_classes, rng));
    b_out_ = add_param(Tensor({static_cast<long>(n_classes)}));
  }

  bool is_lstm() const { return spec_.family == ModelFamily::kLstm; }

  // Per-token label probabilities [T x C].
  Tensor forward(const std::vector<long>& tokens) {
    Graph g;
    Rng unused(0);
    return g.value(g.softmax(tag_logits(g, g.param(*embedding_), tokens, unused, false)));
  }

  int loss_graph(Graph& g, const Task& task, std::span<const std::size_t> items, Rng& rng,
                 bool training) override {
    const int emb = g.param(*embedding_);
    std::vector<int> losses;
    for (std::size_t i : items)
      losses.push_back(g.softmax_cross_entropy(
          tag_logits(g, emb, task.token_ids[i], rng, training), task.tags[i]));
    return g.mean_scalars(losses);
  }

  void predict(const Task& task, std::span<const std::size_t> items, std::vector<int>& preds,
               std::vector<int>& golds) override {
    for (std::size_t i : items) {
      const Tensor probs = forward(task.token_ids[i]);
      for (long t = 0; t < probs.dim(0); ++t) {
        preds.push_back(detail::argmax_row(probs, t));
        golds.push_back(task.tags[i][static_cast<std::size_t>(t)]);
      }
    }
  }

 private:
  struct Cell {
    // simple rnn: h = f(h W + x U + b)
    Parameter* W = nullptr;
    Parameter* U = nullptr;
    Parameter* b = nullptr;
    Parameter* slope = nullptr;
    // lstm: gates over the concatenated [h ; x] row, no biases
    Parameter* Wf = nullptr;
    Parameter* Wi = nullptr;
    Parameter* Wo = nullptr;
    Parameter* Wc = nullptr;
  };

  // Gate matrices stack the recurrent block on top of the input block so the
  // recurrent initializer (identity included) lands on the h-to-h square.
  Tensor gate_matrix(long in, long H, Rng& rng) {
    const Tensor rec = init_tensor(spec_.recurrent_initializer, {H, H}, H, H, rng);
    const Tensor inp = init_tensor(spec_.initializer, {in, H}, in, H, rng);
    Tensor out({H + in, H});
    for (long r = 0; r < H; ++r)
      for (long c = 0; c < H; ++c) out.at2(r, c) = rec.at2(r, c);
    for (long r = 0; r < in; ++r)
      for (long c = 0; c < H; ++c) out.at2(H + r, c) = inp.at2(r, c);
    return out;
  }

  void make_direction(long in, long H, Rng& rng) {
    Cell cell;
    if (is_lstm()) {
      cell.Wf = add_param(gate_matrix(in, H, rng));
      cell.Wi = add_param(gate_matrix(in, H, rng));
      cell.Wo = add_param(gate_matrix(in, H, rng));
      cell.Wc = add_param(gate_matrix(in, H, rng));
    } else {
      cell.W = add_param(init_tensor(spec_.recurrent_initializer, {H, H}, H, H, rng));
      cell.U = add_param(init_tensor(spec_.initializer, {in, H}, in, H, rng));
      cell.b = add_param(Tensor({H}));
      if (spec_.activation.kind == ActivationKind::kPrelu)
        cell.slope = add_param(Tensor::scalar(kPreluDefaultSlope));
    }
    cells_.push_back(cell);
  }

  int rnn_step_node(Graph& g, const Cell& cell, int w_node, int u_node, int b_node,
                    int slope_node, int h_prev, int x_t) {
    const int z = g.add_bias(g.add(g.matmul(h_prev, w_node), g.matmul(x_t, u_node)), b_node);
    if (slope_node >= 0) return g.prelu(z, slope_node);
    return g.activation(spec_.activation, z);
  }

  std::pair<int, int> lstm_step_node(Graph& g, int wf, int wi, int wo, int wc, int h_prev,
                                     int c_prev, int x_t) {
    const int z = g.concat_cols(h_prev, x_t);
    const int f = g.activation(spec_.gate_sigma, g.matmul(z, wf));
    const int i = g.activation(spec_.gate_sigma, g.matmul(z, wi));
    const int o = g.activation(spec_.gate_sigma, g.matmul(z, wo));
    const int c_cand = g.activation(spec_.gate_tau, g.matmul(z, wc));
    const int c_t = g.add(g.mul(f, c_prev), g.mul(i, c_cand));
    const int h_t = g.mul(o, g.activation(spec_.gate_tau, c_t));
    return {h_t, c_t};
  }

  // One direction over the sequence; returns the state node per position.
  std::vector<int> run_direction(Graph& g, const Cell& cell, const std::vector<int>& xs,
                                 bool reversed) {
    const long H = spec_.hidden_units;
    const long T = static_cast<long>(xs.size());
    std::vector<int> states(xs.size());
    int h = g.leaf(Tensor({1, H}));
    int c = -1;
    int wf = -1, wi = -1, wo = -1, wc = -1, w = -1, u = -1, b = -1, slope = -1;
    if (is_lstm()) {
      c = g.leaf(Tensor({1, H}));
      wf = g.param(*cell.Wf);
      wi = g.param(*cell.Wi);
      wo = g.param(*cell.Wo);
      wc = g.param(*cell.Wc);
    } else {
      w = g.param(*cell.W);
      u = g.param(*cell.U);
      b = g.param(*cell.b);
      if (cell.slope) slope = g.param(*cell.slope);
    }
    for (long step = 0; step < T; ++step) {
      const long t = reversed ? T - 1 - step : step;
      const int x_t = xs[static_cast<std::size_t>(t)];
      if (is_lstm()) {
        auto [h_t, c_t] = lstm_step_node(g, wf, wi, wo, wc, h, c, x_t);
        h = h_t;
        c = c_t;
      } else {
        h = rnn_step_node(g, cell, w, u, b, slope, h, x_t);
      }
      states[static_cast<std::size_t>(t)] = h;
    }
    return states;
  }

  int tag_logits(Graph& g, int emb, const std::vector<long>& tokens, Rng& rng, bool training) {
    if (tokens.empty()) throw ValueError("tagger requires a non-empty sequence");
    int seq = g.embedding_lookup(emb, tokens);
    std::size_t cell_at = 0;
    for (long l = 0; l < spec_.layers; ++l) {
      if (training && spec_.dropout > 0.0) seq = g.dropout(seq, spec_.dropout, rng, true);
      std::vector<int> xs(tokens.size());
      for (std::size_t t = 0; t < tokens.size(); ++t) xs[t] = g.row(seq, static_cast<long>(t));
      const std::vector<int> fwd = run_direction(g, cells_[cell_at++], xs, false);
      std::vector<int> rows = fwd;
      if (spec_.bidirectional) {
        const std::vector<int> bwd = run_direction(g, cells_[cell_at++], xs, true);
        for (std::size_t t = 0; t < rows.size(); ++t) rows[t] = g.concat_cols(fwd[t], bwd[t]);
      }
      seq = g.concat_rows(rows);
    }
    return g.linear(seq, g.param(*w_out_), g.param(*b_out_));
  }

  ModelSpec spec_;
  long vocab_size_;
  int n_classes_;
  Parameter* embedding_;
  std::vector<Cell> cells_;  // layer-major, forward then backward direction
  Parameter* w_out_;
  Parameter* b_out_;
};

// Single-step reference forms used by the cell implementations' tests.
inline Tensor rnn_step(const ActivationSpec& f, const Tensor& h_prev, const Tensor& w_i,
                       const Tensor& W, const Tensor& U, const Tensor& b) {
  Graph g;
  const int z =
      g.add_bias(g.add(g.matmul(g.leaf(h_prev), g.leaf(W)), g.matmul(g.leaf(w_i), g.leaf(U))),
                 g.leaf(b));
  return g.value(g.activation(f, z));
}

inline std::pair<Tensor, Tensor> lstm_step(const ActivationSpec& sigma, const ActivationSpec& tau,
                                           const Tensor& h_prev, const Tensor& c_prev,
                                           const Tensor& x_t, const Tensor& wf, const Tensor& wi,
                                           const Tensor& wo, const Tensor& wc) {
  Graph g;
  const int z = g.concat_cols(g.leaf(h_prev), g.leaf(x_t));
  const int f = g.activation(sigma, g.matmul(z, g.leaf(wf)));
  const int i = g.activation(sigma, g.matmul(z, g.leaf(wi)));
  const int o = g.activation(sigma, g.matmul(z, g.leaf(wo)));
  const int cand = g.activation(tau, g.matmul(z, g.leaf(wc)));
  const int c_t = g.add(g.mul(f, g.leaf(c_prev)), g.mul(i, cand));
  const int h_t = g.mul(o, g.activation(tau, c_t));
  return {g.value(h_t), g.value(c_t)};
}

// --- construction, training, evaluation ---------------------------------------

inline std::unique_ptr<Model> make_model(const ModelSpec& spec, const Task& task, Rng& rng) {
  if (!task.finalized) throw ConfigError("task must be split and finalized before training");
  switch (spec.family) {
    case ModelFamily::kMlp:
      if (task.kind != TaskKind::kVectorClassification)
        throw ConfigError("mlp requires a vector-classification task");
      return std::make_unique<MlpModel>(spec, task.feature_dim(), task.n_classes, rng);
    case ModelFamily::kCnn:
      if (task.kind != TaskKind::kDocumentClassification)
        throw ConfigError("cnn requires a document-classification task");
      return std::make_unique<CnnModel>(spec, task.vocab_size, task.n_classes, rng);
    case ModelFamily::kRnn:
    case ModelFamily::kLstm:
      if (task.kind != TaskKind::kSequenceTagging)
        throw ConfigError("rnn/lstm requires a sequence-tagging task");
      return std::make_unique<RnnTagger>(spec, task.vocab_size, task.n_classes, rng);
  }
  throw ConfigError("unknown model family");
}

// One shuffled pass of mini-batch steps; returns the mean batch loss.
// Non-finite losses surface as a DivergedSignal for trial-level handling.
inline double train_epoch(Model& model, const Task& task, Optimizer& opt, long batch_size,
                          Rng& rng) {
  if (task.train.empty()) throw ValueError("train split is empty");
  if (batch_size < 1) throw ValueError("batch size must be at least 1");
  std::vector<std::size_t> order = task.train;
  rng.shuffle(order);
  const std::vector<Parameter*> params = model.parameters();
  double loss_sum = 0.0;
  long batches = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    Graph g;
    model.zero_grads();
    const int loss = model.loss_graph(
        g, task, std::span<const std::size_t>(order.data() + start, end - start), rng, true);
    const double value = g.value(loss)[0];
    if (!std::isfinite(value)) throw DivergedSignal(0);
    g.backward(loss);
    opt.step(params);
    loss_sum += value;
    ++batches;
  }
  return loss_sum / static_cast<double>(batches);
}

// Task-level score on a split: accuracy, or macro-F1 for tagging tasks.
inline double evaluate(Model& model, const Task& task, std::span<const std::size_t> items) {
  if (items.empty()) throw ValueError("evaluation split is empty");
  std::vector<int> preds, golds;
  model.predict(task, items, preds, golds);
  if (task.metric == Metric::kMacroF1) return macro_f1(preds, golds, task.n_classes);
  return accuracy(preds, golds);
}

}  // namespace actbench
