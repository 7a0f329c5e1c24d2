#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "actbench/errors.hpp"

namespace actbench {

// --- Metrics --------------------------------------------------------------

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw ValueError("prediction/label length mismatch");
  if (preds.empty()) throw ValueError("empty prediction set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

// Unweighted mean of per-class F1; classes with no predicted and no true
// support contribute 0.  Labels outside [0,C) (the rejected bucket) belong to
// no class and can only produce false positives.
inline double macro_f1(std::span<const int> preds, std::span<const int> labels, int C) {
  if (preds.size() != labels.size()) throw ValueError("prediction/label length mismatch");
  if (preds.empty() || C < 1) throw ValueError("empty prediction set or class count");
  std::vector<long> tp(static_cast<std::size_t>(C), 0), fp(tp), fn(tp);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if (p == y && p >= 0 && p < C) {
      ++tp[static_cast<std::size_t>(p)];
      continue;
    }
    if (p >= 0 && p < C) ++fp[static_cast<std::size_t>(p)];
    if (y >= 0 && y < C) ++fn[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  for (int c = 0; c < C; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double denom = static_cast<double>(2 * tp[i] + fp[i] + fn[i]);
    sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp[i]) / denom;
  }
  return sum / static_cast<double>(C);
}

// --- best / mean aggregation ----------------------------------------------

struct TrialOutcome {
  long draw = 0;
  long init = 0;
  bool diverged = false;
  double best_dev = 0.0;
  double test = 0.0;
};

namespace detail {

struct DrawAverages {
  double dev_ok = 0.0;   // over non-diverged inits only
  double test_ok = 0.0;
  double test_all = 0.0; // diverged trials counted as 0
  long n_ok = 0;
  long n_all = 0;
};

inline std::map<long, DrawAverages> by_draw(std::span<const TrialOutcome> trials) {
  std::map<long, DrawAverages> draws;
  for (const TrialOutcome& t : trials) {
    DrawAverages& d = draws[t.draw];
    ++d.n_all;
    if (!t.diverged) {
      ++d.n_ok;
      d.dev_ok += t.best_dev;
      d.test_ok += t.test;
    }
  }
  for (auto& [_, d] : draws) {
    // test_all averages over every init, diverged ones contributing 0
    d.test_all = d.test_ok / static_cast<double>(d.n_all);
    if (d.n_ok > 0) {
      d.dev_ok /= static_cast<double>(d.n_ok);
      d.test_ok /= static_cast<double>(d.n_ok);
    }
  }
  return draws;
}

}  // namespace detail

// Test score of the draw with the best init-averaged dev score.  Diverged
// trials are excluded from candidacy; a draw whose inits all diverged is
// skipped, and if nothing remains the result is 0.
inline double best_of(std::span<const TrialOutcome> trials) {
  if (trials.empty()) throw AggregationError("best_of over empty trial set");
  const auto draws = detail::by_draw(trials);
  bool found = false;
  double best_dev = 0.0, best_test = 0.0;
  for (const auto& [draw, d] : draws) {
    if (d.n_ok == 0) continue;
    if (!found || d.dev_ok > best_dev) {
      found = true;
      best_dev = d.dev_ok;
      best_test = d.test_ok;
    }
  }
  return found ? best_test : 0.0;
}

// Mean over draws of the init-averaged test score, diverged trials scoring 0.
inline double mean_of(std::span<const TrialOutcome> trials) {
  if (trials.empty()) throw AggregationError("mean_of over empty trial set");
  const auto draws = detail::by_draw(trials);
  double sum = 0.0;
  for (const auto& [draw, d] : draws) sum += d.test_all;
  return sum / static_cast<double>(draws.size());
}

// --- normalization, rankings, winner counts --------------------------------

inline std::vector<double> max_normalize(std::span<const double> column) {
  if (column.empty()) throw AggregationError("max_normalize over empty column");
  const double mx = *std::max_element(column.begin(), column.end());
  if (!(mx > 0.0)) throw AggregationError("max_normalize: column maximum is not positive");
  std::vector<double> out(column.begin(), column.end());
  for (double& v : out) v /= mx;
  return out;
}

// rows = activations, columns = mini-experiments
struct ScoreTable {
  std::vector<std::string> activations;
  std::vector<std::string> experiments;
  std::vector<std::vector<double>> cells;  // [activation][experiment]

  double at(std::size_t row, std::size_t col) const { return cells[row][col]; }

  std::vector<double> column(std::size_t col) const {
    std::vector<double> out(activations.size());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = cells[r][col];
    return out;
  }
};

inline std::vector<double> cross_experiment_average(const ScoreTable& table) {
  if (table.activations.empty() || table.experiments.empty())
    throw AggregationError("cross_experiment_average over empty table");
  std::vector<double> out(table.activations.size(), 0.0);
  for (std::size_t r = 0; r < table.activations.size(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < table.experiments.size(); ++c) sum += table.cells[r][c];
    out[r] = sum / static_cast<double>(table.experiments.size());
  }
  return out;
}

// Per experiment, count every activation ranked in the top 3 (score
// descending, ties broken by name ascending).
inline std::map<std::string, int> top3_counts(const ScoreTable& table) {
  std::map<std::string, int> counts;
  for (const std::string& a : table.activations) counts[a] = 0;
  for (std::size_t c = 0; c < table.experiments.size(); ++c) {
    std::vector<std::size_t> order(table.activations.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      if (table.cells[i][c] != table.cells[j][c]) return table.cells[i][c] > table.cells[j][c];
      return table.activations[i] < table.activations[j];
    });
    for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k)
      ++counts[table.activations[order[k]]];
  }
  return counts;
}

struct Top3Stats {
  std::map<std::string, int> best;
  std::map<std::string, int> mean;
};

inline Top3Stats top3_stats(const ScoreTable& best_table, const ScoreTable& mean_table) {
  return {top3_counts(best_table), top3_counts(mean_table)};
}

// --- Spearman ---------------------------------------------------------------

namespace detail {

inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Rank correlation with average ranks for ties.  Identical and exactly
// mirrored rankings short-circuit to +/-1 so the invariance checks are exact.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValueError("spearman length mismatch");
  if (a.size() < 2) throw ValueError("spearman needs at least 2 entries");
  const std::vector<double> ra = detail::average_ranks(a);
  const std::vector<double> rb = detail::average_ranks(b);
  const double n = static_cast<double>(a.size());
  bool same = true, mirrored = true;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    same = same && ra[i] == rb[i];
    mirrored = mirrored && ra[i] + rb[i] == n + 1.0;
  }
  bool const_a = true, const_b = true;
  for (std::size_t i = 1; i < ra.size(); ++i) {
    const_a = const_a && ra[i] == ra[0];
    const_b = const_b && rb[i] == rb[0];
  }
  if (const_a && const_b) return 1.0;
  if (const_a || const_b) return 0.0;
  if (same) return 1.0;
  if (mirrored) return -1.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

// --- Eq.-style hyperparameter regression ------------------------------------

struct RegressionRecord {
  double score = 0.0;
  long layers = 1;
  double dropout = 0.0;
  long hidden = 1;  // hidden units or filter count, whichever the family uses
  double learning_rate = 1.0;
  std::string optimizer;
  std::string initializer;
};

struct RegressionFit {
  std::vector<std::string> columns;
  std::vector<double> coefficients;
  double residual_norm = 0.0;
};

// OLS of score on log(layers), dropout, log(hidden), log(lr), and dummy
// columns for optimizer/initializer levels found in the data (first level by
// name dropped), plus an intercept.  Normal equations; ridge fallback
// (lambda = 1e-8) on rank deficiency.
inline RegressionFit fit_regression(std::span<const RegressionRecord> records) {
  if (records.empty()) throw SingularDesignError("no records to regress");
  std::set<std::string> opt_levels, init_levels;
  for (const auto& r : records) {
    opt_levels.insert(r.optimizer);
    init_levels.insert(r.initializer);
  }
  std::vector<std::string> columns = {"log_layers", "dropout", "log_hidden", "log_learning_rate"};
  std::vector<std::string> opt_dummy(opt_levels.begin(), opt_levels.end());
  std::vector<std::string> init_dummy(init_levels.begin(), init_levels.end());
  if (!opt_dummy.empty()) opt_dummy.erase(opt_dummy.begin());
  if (!init_dummy.empty()) init_dummy.erase(init_dummy.begin());
  for (const auto& name : opt_dummy) columns.push_back("optimizer=" + name);
  for (const auto& name : init_dummy) columns.push_back("initializer=" + name);
  columns.push_back("intercept");

  const long n = static_cast<long>(records.size());
  const long p = static_cast<long>(columns.size());
  if (n < p) throw SingularDesignError("fewer records than design columns");

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    const RegressionRecord& r = records[static_cast<std::size_t>(i)];
    long j = 0;
    X(i, j++) = std::log(static_cast<double>(r.layers));
    X(i, j++) = r.dropout;
    X(i, j++) = std::log(static_cast<double>(r.hidden));
    X(i, j++) = std::log(r.learning_rate);
    for (const auto& name : opt_dummy) X(i, j++) = r.optimizer == name ? 1.0 : 0.0;
    for (const auto& name : init_dummy) X(i, j++) = r.initializer == name ? 1.0 : 0.0;
    X(i, j++) = 1.0;
    y(i) = r.score;
  }

  Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) xtx += 1e-8 * Eigen::MatrixXd::Identity(p, p);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularDesignError("design matrix is rank deficient");
  const Eigen::VectorXd beta = ldlt.solve(xty);

  RegressionFit fit;
  fit.columns = std::move(columns);
  fit.coefficients.assign(beta.data(), beta.data() + p);
  fit.residual_norm = (y - X * beta).norm();
  return fit;
}

}  // namespace actbench
