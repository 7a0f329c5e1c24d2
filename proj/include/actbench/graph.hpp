#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "actbench/activations.hpp"
#include "actbench/errors.hpp"
#include "actbench/rng.hpp"
#include "actbench/tensor.hpp"

namespace actbench {

// A trainable tensor: value, gradient, and per-optimizer state slots.
struct Parameter {
  Tensor value;
  Tensor grad;
  std::vector<Tensor> state;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

// Collects the smallest margin seen at non-smooth operations (activation
// kinks, maxout and max-pool ties) during a forward pass.  Gradient checks
// use it to reject configurations too close to a non-differentiable point.
struct KinkMonitor {
  double min_margin = std::numeric_limits<double>::infinity();
  void report(double margin) { min_margin = std::min(min_margin, margin); }
};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Reverse-mode tape over tensors.  A forward pass appends nodes; backward
// replays them once in reverse.  One graph per forward pass.
class Graph {
 public:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;  // set for parameter leaves
    Tensor grad;
    Parameter* param = nullptr;
    std::function<void(Graph&, Node&)> backprop;
    std::vector<long> indices;  // argmax routes / labels / embedding ids
    Tensor aux;                 // masks, softmax probabilities

    const Tensor& value() const { return external ? *external : owned; }
  };

  KinkMonitor* monitor = nullptr;

  void reset() {
    nodes_.clear();
    backward_done_ = false;
  }

  std::size_t node_count() const { return nodes_.size(); }

  const Tensor& value(int id) const { return nodes_[check(id)].value(); }
  const Tensor& grad(int id) const { return nodes_[check(id)].grad; }
  const Tensor& aux(int id) const { return nodes_[check(id)].aux; }

  int leaf(Tensor value) {
    Node n;
    n.owned = std::move(value);
    n.grad = Tensor(n.owned.shape());
    return push(std::move(n));
  }

  int param(Parameter& p) {
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.grad = Tensor(p.value.shape());
    n.backprop = [](Graph&, Node& self) { self.param->grad += self.grad; };
    return push(std::move(n));
  }

  // [n x d] * [d x m] -> [n x m]
  int matmul(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.dim(1) != tb.dim(0))
      throw DimensionError("matmul shape mismatch " + ta.shape_string() + " * " + tb.shape_string());
    Node n;
    n.owned = Tensor({ta.dim(0), tb.dim(1)});
    map(n.owned) = cmap(ta) * cmap(tb);
    n.grad = Tensor(n.owned.shape());
    n.backprop = [a, b](Graph& g, Node& self) {
      const Tensor& va = g.value(a);
      const Tensor& vb = g.value(b);
      g.map_grad(a) += cmap(self.grad) * cmap(vb).transpose();
      g.map_grad(b) += cmap(va).transpose() * cmap(self.grad);
    };
    return push(std::move(n));
  }

  // [n x m] + bias[m], broadcast over rows
  int add_bias(int x, int b) {
    const Tensor& tx = value(x);
    const Tensor& tb = value(b);
    if (tx.ndim() != 2 || static_cast<long>(tb.size()) != tx.dim(1))
      throw DimensionError("bias length does not match columns");
    Node n;
    n.owned = tx;
    const long rows = tx.dim(0), cols = tx.dim(1);
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) n.owned.at2(i, j) += tb[static_cast<std::size_t>(j)];
    n.grad = Tensor(n.owned.shape());
    n.backprop = [x, b, rows, cols](Graph& g, Node& self) {
      Tensor& gx = g.nodes_[static_cast<std::size_t>(x)].grad;
      Tensor& gb = g.nodes_[static_cast<std::size_t>(b)].grad;
      for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) {
          gx.at2(i, j) += self.grad.at2(i, j);
          gb[static_cast<std::size_t>(j)] += self.grad.at2(i, j);
        }
    };
    return push(std::move(n));
  }

  int add(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimensionError("add shape mismatch");
    Node n;
    n.owned = ta;
    n.owned += tb;
    n.grad = Tensor(n.owned.shape());
    n.backprop = [a, b](Graph& g, Node& self) {
      g.nodes_[static_cast<std::size_t>(a)].grad += self.grad;
      g.nodes_[static_cast<std::size_t>(b)].grad += self.grad;
    };
    return push(std::move(n));
  }

  int mul(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimensionError("mul shape mismatch");
    Node n;
    n.owned = ta;
    for (std::size_t i = 0; i < n.owned.size(); ++i) n.owned[i] *= tb[i];
    n.grad = Tensor(n.owned.shape());
    n.backprop = [a, b](Graph& g, Node& self) {
      const Tensor& va = g.value(a);
      const Tensor& vb = g.value(b);
      Tensor& ga = g.nodes_[static_cast<std::size_t>(a)].grad;
      Tensor& gb = g.nodes_[static_cast<std::size_t>(b)].grad;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        ga[i] += self.grad[i] * vb[i];
        gb[i] += self.grad[i] * va[i];
      }
    };
    return push(std::move(n));
  }

  int scale(int a, double s) {
    Node n;
    n.owned = value(a);
    n.owned.scale(s);
    n.grad = Tensor(n.owned.shape());
    n.backprop = [a, s](Graph& g, Node& self) {
      Tensor& ga = g.nodes_[static_cast<std::size_t>(a)].grad;
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += s * self.grad[i];
    };
    return push(std::move(n));
  }

  int sum(int a) {
    const Tensor& ta = value(a);
    double total = 0.0;
    for (double v : ta.data()) total += v;
    Node n;
    n.owned = Tensor::scalar(total);
    n.grad = Tensor({1});
    n.backprop = [a](Graph& g, Node& self) {
      Tensor& ga = g.nodes_[static_cast<std::size_t>(a)].grad;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[0];
    };
    return push(std::move(n));
  }

  int mean_scalars(std::span<const int> ids) {
    if (ids.empty()) throw DimensionError("mean over no nodes");
    double total = 0.0;
    for (int id : ids) {
      if (value(id).size() != 1) throw DimensionError("mean_scalars expects scalar nodes");
      total += value(id)[0];
    }
    Node n;
    n.owned = Tensor::scalar(total / static_cast<double>(ids.size()));
    n.grad = Tensor({1});
    std::vector<int> captured(ids.begin(), ids.end());
    n.backprop = [captured](Graph& g, Node& self) {
      const double share = self.grad[0] / static_cast<double>(captured.size());
      for (int id : captured) g.nodes_[static_cast<std::size_t>(id)].grad[0] += share;
    };
    return push(std::move(n));
  }

  // Elementwise scalar activation.  Maxout kinds are built from `maxout`.
  int activation(const ActivationSpec& spec, int x) {
    if (spec.arity > 1) throw ValueError("maxout requires vector input");
    const Tensor& tx = value(x);
    Node n;
    n.owned = Tensor(tx.shape());
    for (std::size_t i = 0; i < tx.size(); ++i)
      n.owned[i] = activation_eval(spec, tx[i]);
    if (monitor) {
      for (double kink : activation_kinks(spec.kind))
        for (double v : tx.data()) monitor->report(std::abs(v - kink));
    }
    n.grad = Tensor(n.owned.shape());
    n.backprop = [spec, x](Graph& g, Node& self) {
      const Tensor& vx = g.value(x);
      Tensor& gx = g.nodes_[static_cast<std::size_t>(x)].grad;
      for (std::size_t i = 0; i < vx.size(); ++i)
        gx[i] += self.grad[i] * activation_derivative(spec, vx[i]);
    };
    return push(std::move(n));
  }

  // prelu with a learnable slope shared across the unit: slope node is {1}.
  int prelu(int x, int slope) {
    const Tensor& tx = value(x);
    if (value(slope).size() != 1) throw DimensionError("prelu slope must be scalar");
    const double a = value(slope)[0];
    Node n;
    n.owned = Tensor(tx.shape());
    for (std::size_t i = 0; i < tx.size(); ++i)
      n.owned[i] = tx[i] > 0.0 ? tx[i] : a * tx[i];
    if (monitor)
      for (double v : tx.data()) monitor->report(std::abs(v));
    n.grad = Tensor(n.owned.shape());
    n.backprop = [x, slope](Graph& g, Node& self) {
      const Tensor& vx = g.value(x);
      const double a = g.value(slope)[0];
      Tensor& gx = g.nodes_[static_cast<std::size_t>(x)].grad;
      Tensor& ga = g.nodes_[static_cast<std::size_t>(slope)].grad;
      for (std::size_t i = 0; i < vx.size(); ++i) {
        gx[i] += self.grad[i] * (vx[i] >= 0.0 ? 1.0 : a);
        ga[0] += self.grad[i] * std::min(vx[i], 0.0);
      }
    };
    return push(std::move(n));
  }

  // Elementwise max over k same-shaped branches; gradient routes only to
  // the winner, ties to the lowest branch index.
  int maxout(std::span<const int> branches) {
    if (branches.size() < 2) throw DimensionError("maxout needs at least 2 branches");
    const Tensor& first = value(branches[0]);
    for (int b : branches)
      if (!value(b).same_shape(first)) throw DimensionError("maxout branch shape mismatch");
    Node n;
    n.owned = first;
    n.indices.assign(first.size(), 0);
    for (std::size_t k = 1; k < branches.size(); ++k) {
      const Tensor& tb = value(branches[k]);
      for (std::size_t i = 0; i < tb.size(); ++i) {
        if (tb[i] > n.owned[i]) {
          n.owned[i] = tb[i];
          n.indices[i] = static_cast<long>(k);
        }
      }
    }
    if (monitor) {
      for (std::size_t i = 0; i < first.size(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        double second = top;
        for (int b : branches) {
          const double v = value(b)[i];
          if (v > top) { second = top; top = v; }
          else if (v > second) second = v;
        }
        monitor->report(top - second);
      }
    }
    n.grad = Tensor(n.owned.shape());
    std::vector<int> captured(branches.begin(), branches.end());
    n.backprop = [captured](Graph& g, Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const int winner = captured[static_cast<std::size_t>(self.indices[i])];
        g.nodes_[static_cast<std::size_t>(winner)].grad[i] += self.grad[i];
      }
    };
    return push(std::move(n));
  }

  // Valid 1-D convolution: seq [T x d], filters [K x h x d], bias [K]
  // -> pre-activations [(T-h+1) x K].
  int conv1d(int seq, int filters, int bias) {
    const Tensor& ts = value(seq);
    const Tensor& tf = value(filters);
    const Tensor& tb = value(bias);
    if (ts.ndim() != 2 || tf.ndim() != 3) throw DimensionError("conv1d operand rank");
    const long T = ts.dim(0), d = ts.dim(1);
    const long K = tf.dim(0), h = tf.dim(1);
    if (tf.dim(2) != d) throw DimensionError("conv1d channel mismatch");
    if (static_cast<long>(tb.size()) != K) throw DimensionError("conv1d bias length");
    if (T < h) throw ValueError("sequence too short for filter size");
    Node n;
    n.owned = Tensor({T - h + 1, K});
    auto fidx = [h, d](long k, long j, long c) {
      return static_cast<std::size_t>((k * h + j) * d + c);
    };
    for (long i = 0; i <= T - h; ++i)
      for (long k = 0; k < K; ++k) {
        double acc = tb[static_cast<std::size_t>(k)];
        for (long j = 0; j < h; ++j)
          for (long c = 0; c < d; ++c) acc += tf[fidx(k, j, c)] * ts.at2(i + j, c);
        n.owned.at2(i, k) = acc;
      }
    n.grad = Tensor(n.owned.shape());
    n.backprop = [seq, filters, bias, T, d, K, h, fidx](Graph& g, Node& self) {
      const Tensor& vs = g.value(seq);
      const Tensor& vf = g.value(filters);
      Tensor& gs = g.nodes_[static_cast<std::size_t>(seq)].grad;
      Tensor& gf = g.nodes_[static_cast<std::size_t>(filters)].grad;
      Tensor& gb = g.nodes_[static_cast<std::size_t>(bias)].grad;
      for (long i = 0; i <= T - h; ++i)
        for (long k = 0; k < K; ++k) {
          const double go = self.grad.at2(i, k);
          if (go == 0.0) continue;
          gb[static_cast<std::size_t>(k)] += go;
          for (long j = 0; j < h; ++j)
            for (long c = 0; c < d; ++c) {
              gf[fidx(k, j, c)] += go * vs.at2(i + j, c);
              gs.at2(i + j, c) += go * vf[fidx(k, j, c)];
            }
        }
    };
    return push(std::move(n));
  }

  // Columnwise max of [T x K] -> [K]; gradient goes to the earliest argmax.
  int global_max_pool(int features) {
    const Tensor& tf = value(features);
    if (tf.ndim() != 2) throw DimensionError("global_max_pool expects a matrix");
    const long T = tf.dim(0), K = tf.dim(1);
    if (T < 1) throw ValueError("global_max_pool over empty feature map");
    Node n;
    n.owned = Tensor({K});
    n.indices.assign(static_cast<std::size_t>(K), 0);
    for (long k = 0; k < K; ++k) {
      double best = tf.at2(0, k);
      long arg = 0;
      for (long i = 1; i < T; ++i)
        if (tf.at2(i, k) > best) { best = tf.at2(i, k); arg = i; }
      n.owned[static_cast<std::size_t>(k)] = best;
      n.indices[static_cast<std::size_t>(k)] = arg;
      if (monitor && T > 1) {
        double second = -std::numeric_limits<double>::infinity();
        for (long i = 0; i < T; ++i)
          if (i != arg) second = std::max(second, tf.at2(i, k));
        monitor->report(best - second);
      }
    }
    n.grad = Tensor(n.owned.shape());
    n.backprop = [features, K](Graph& g, Node& self) {
      Tensor& gin = g.nodes_[static_cast<std::size_t>(features)].grad;
      for (long k = 0; k < K; ++k)
        gin.at2(self.indices[static_cast<std::size_t>(k)], k) += self.grad[static_cast<std::size_t>(k)];
    };
    return push(std::move(n));
  }

  // [K] -> [1 x K]
  int as_row(int v) {
    const Tensor& tv = value(v);
    if (tv.ndim() != 1) throw DimensionError("as_row expects a vector");
    Node n;
    n.owned = Tensor({1, tv.dim(0)}, tv.data());
    n.grad = Tensor(n.owned.shape());
    n.backprop = [v](Graph& g, Node& self) {
      Tensor& gv = g.nodes_[static_cast<std::size_t>(v)].grad;
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += self.grad[i];
    };
    return push(std::move(n));
  }

  // [n x p] ++ [n x q] -> [n x (p+q)]
  int concat_cols(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.dim(0) != tb.dim(0))
      throw DimensionError("concat_cols row mismatch");
    const long n_rows = ta.dim(0), p = ta.dim(1), q = tb.dim(1);
    Node n;
    n.owned = Tensor({n_rows, p + q});
    for (long i = 0; i < n_rows; ++i) {
      for (long j = 0; j < p; ++j) n.owned.at2(i, j) = ta.at2(i, j);
      for (long j = 0; j < q; ++j) n.owned.at2(i, p + j) = tb.at2(i, j);
    }
    n.grad = Tensor(n.owned.shape());
    n.backprop = [a, b, n_rows, p, q](Graph& g, Node& self) {
      Tensor& ga = g.nodes_[static_cast<std::size_t>(a)].grad;
      Tensor& gb = g.nodes_[static_cast<std::size_t>(b)].grad;
      for (long i = 0; i < n_rows; ++i) {
        for (long j = 0; j < p; ++j) ga.at2(i, j) += self.grad.at2(i, j);
        for (long j = 0; j < q; ++j) gb.at2(i, j) += self.grad.at2(i, p + j);
      }
    };
    return push(std::move(n));
  }

  // k row vectors [1 x m] -> [k x m]
  int concat_rows(std::span<const int> rows_in) {
    if (rows_in.empty()) throw DimensionError("concat_rows over no rows");
    const long m = value(rows_in[0]).cols();
    Node n;
    n.owned = Tensor({static_cast<long>(rows_in.size()), m});
    for (std::size_t r = 0; r < rows_in.size(); ++r) {
      const Tensor& tr = value(rows_in[r]);
      if (tr.ndim() != 2 || tr.dim(0) != 1 || tr.dim(1) != m)
        throw DimensionError("concat_rows expects [1 x m] rows");
      for (long j = 0; j < m; ++j) n.owned.at2(static_cast<long>(r), j) = tr.at2(0, j);
    }
    n.grad = Tensor(n.owned.shape());
    std::vector<int> captured(rows_in.begin(), rows_in.end());
    n.backprop = [captured, m](Graph& g, Node& self) {
      for (std::size_t r = 0; r < captured.size(); ++r) {
        Tensor& gr = g.nodes_[static_cast<std::size_t>(captured[r])].grad;
        for (long j = 0; j < m; ++j) gr.at2(0, j) += self.grad.at2(static_cast<long>(r), j);
      }
    };
    return push(std::move(n));
  }

  // [n x m] -> [1 x m], row r
  int row(int mat, long r) {
    const Tensor& tm = value(mat);
    if (tm.ndim() != 2 || r < 0 || r >= tm.dim(0)) throw DimensionError("row index out of range");
    const long m = tm.dim(1);
    Node n;
    n.owned = Tensor({1, m});
    for (long j = 0; j < m; ++j) n.owned.at2(0, j) = tm.at2(r, j);
    n.grad = Tensor(n.owned.shape());
    n.backprop = [mat, r, m](Graph& g, Node& self) {
      Tensor& gm = g.nodes_[static_cast<std::size_t>(mat)].grad;
      for (long j = 0; j < m; ++j) gm.at2(r, j) += self.grad.at2(0, j);
    };
    return push(std::move(n));
  }

  // table [V x E], ids -> [T x E]
  int embedding_lookup(int table, const std::vector<long>& ids) {
    const Tensor& tt = value(table);
    if (tt.ndim() != 2) throw DimensionError("embedding table must be a matrix");
    const long V = tt.dim(0), E = tt.dim(1);
    Node n;
    n.owned = Tensor({static_cast<long>(ids.size()), E});
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (ids[t] < 0 || ids[t] >= V) throw ValueError("token id outside vocabulary");
      for (long j = 0; j < E; ++j) n.owned.at2(static_cast<long>(t), j) = tt.at2(ids[t], j);
    }
    n.grad = Tensor(n.owned.shape());
    n.indices = ids;
    n.backprop = [table, E](Graph& g, Node& self) {
      Tensor& gt = g.nodes_[static_cast<std::size_t>(table)].grad;
      for (std::size_t t = 0; t < self.indices.size(); ++t)
        for (long j = 0; j < E; ++j)
          gt.at2(self.indices[t], j) += self.grad.at2(static_cast<long>(t), j);
    };
    return push(std::move(n));
  }

  // Inverted dropout: zero with probability `rate`, scale survivors by
  // 1/(1-rate).  Identity when not training or rate == 0.
  int dropout(int x, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw ValueError("dropout rate must be in [0, 1)");
    const Tensor& tx = value(x);
    Node n;
    n.owned = tx;
    n.aux = Tensor::full(tx.shape(), 1.0);
    if (training && rate > 0.0) {
      const double keep_scale = 1.0 / (1.0 - rate);
      for (std::size_t i = 0; i < tx.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        n.aux[i] = m;
        n.owned[i] = tx[i] * m;
      }
    }
    n.grad = Tensor(n.owned.shape());
    n.backprop = [x](Graph& g, Node& self) {
      Tensor& gx = g.nodes_[static_cast<std::size_t>(x)].grad;
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * self.aux[i];
    };
    return push(std::move(n));
  }

  // Row-wise softmax, numerically stabilized.
  int softmax(int logits) {
    const Tensor& tl = value(logits);
    if (tl.ndim() != 2) throw DimensionError("softmax expects [n x C] logits");
    Node n;
    n.owned = softmax_rows(tl);
    n.grad = Tensor(n.owned.shape());
    n.backprop = [logits](Graph& g, Node& self) {
      const Tensor& p = self.owned;
      Tensor& gl = g.nodes_[static_cast<std::size_t>(logits)].grad;
      const long rows = p.dim(0), cols = p.dim(1);
      for (long i = 0; i < rows; ++i) {
        double dot = 0.0;
        for (long c = 0; c < cols; ++c) dot += self.grad.at2(i, c) * p.at2(i, c);
        for (long c = 0; c < cols; ++c)
          gl.at2(i, c) += p.at2(i, c) * (self.grad.at2(i, c) - dot);
      }
    };
    return push(std::move(n));
  }

  // Mean negative log-likelihood over the batch; probabilities kept in aux.
  int softmax_cross_entropy(int logits, const std::vector<int>& labels) {
    const Tensor& tl = value(logits);
    if (tl.ndim() != 2) throw DimensionError("cross entropy expects [n x C] logits");
    const long n_rows = tl.dim(0), C = tl.dim(1);
    if (static_cast<long>(labels.size()) != n_rows)
      throw DimensionError("label count does not match batch size");
    if (n_rows == 0) throw DimensionError("cross entropy over empty batch");
    for (int y : labels)
      if (y < 0 || y >= C) throw ValueError("label out of range");
    Node n;
    n.aux = softmax_rows(tl);
    double loss = 0.0;
    for (long i = 0; i < n_rows; ++i)
      loss -= std::log(std::max(n.aux.at2(i, labels[static_cast<std::size_t>(i)]),
                                std::numeric_limits<double>::min()));
    n.owned = Tensor::scalar(loss / static_cast<double>(n_rows));
    n.grad = Tensor({1});
    n.indices.assign(labels.begin(), labels.end());
    n.backprop = [logits, n_rows, C](Graph& g, Node& self) {
      Tensor& gl = g.nodes_[static_cast<std::size_t>(logits)].grad;
      const double gscale = self.grad[0] / static_cast<double>(n_rows);
      for (long i = 0; i < n_rows; ++i)
        for (long c = 0; c < C; ++c) {
          const double indicator = (self.indices[static_cast<std::size_t>(i)] == c) ? 1.0 : 0.0;
          gl.at2(i, c) += gscale * (self.aux.at2(i, c) - indicator);
        }
    };
    return push(std::move(n));
  }

  int linear(int x, int W, int b) { return add_bias(matmul(x, W), b); }

  void backward(int loss_id) {
    if (nodes_.empty()) throw GraphStateError("backward without a recorded forward pass");
    if (backward_done_) throw GraphStateError("backward called twice on the same graph");
    Node& loss = nodes_[check(loss_id)];
    if (loss.value().size() != 1) throw DimensionError("backward expects a scalar loss");
    loss.grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backprop) n.backprop(*this, n);
    }
    backward_done_ = true;
  }

  static Tensor softmax_rows(const Tensor& logits) {
    Tensor probs(logits.shape());
    const long rows = logits.dim(0), cols = logits.dim(1);
    for (long i = 0; i < rows; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (long c = 0; c < cols; ++c) mx = std::max(mx, logits.at2(i, c));
      double z = 0.0;
      for (long c = 0; c < cols; ++c) {
        const double e = std::exp(logits.at2(i, c) - mx);
        probs.at2(i, c) = e;
        z += e;
      }
      for (long c = 0; c < cols; ++c) probs.at2(i, c) /= z;
    }
    return probs;
  }

 private:
  std::size_t check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw GraphStateError("node id out of range");
    return static_cast<std::size_t>(id);
  }

  int push(Node&& n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
  }

  static ConstMatMap cmap(const Tensor& t) {
    return ConstMatMap(t.data().data(), t.rows(), t.cols());
  }

  MatMap map_grad(int id) {
    Tensor& g = nodes_[check(id)].grad;
    return MatMap(g.data().data(), g.rows(), g.cols());
  }

  static MatMap map(Tensor& t) { return MatMap(t.data().data(), t.rows(), t.cols()); }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// --- Convenience single-op wrappers -------------------------------------

inline Tensor linear_forward(const Tensor& x, const Tensor& W, const Tensor& b) {
  Graph g;
  return g.value(g.linear(g.leaf(x), g.leaf(W), g.leaf(b)));
}

inline Tensor conv1d_forward(const Tensor& seq, const Tensor& filters, const Tensor& bias,
                             const ActivationSpec& act) {
  Graph g;
  return g.value(g.activation(act, g.conv1d(g.leaf(seq), g.leaf(filters), g.leaf(bias))));
}

inline Tensor global_max_pool(const Tensor& features) {
  Graph g;
  return g.value(g.global_max_pool(g.leaf(features)));
}

struct SoftmaxLossResult {
  double loss;
  Tensor probs;
};

inline SoftmaxLossResult softmax_cross_entropy(const Tensor& logits,
                                               const std::vector<int>& labels) {
  Graph g;
  const int node = g.softmax_cross_entropy(g.leaf(logits), labels);
  return {g.value(node)[0], g.aux(node)};
}

inline Tensor dropout_apply(const Tensor& x, double rate, Rng& rng, bool training) {
  Graph g;
  return g.value(g.dropout(g.leaf(x), rate, rng, training));
}

}  // namespace actbench
