#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "actbench/harness.hpp"
#include "actbench/report.hpp"
#include "actbench/store.hpp"

namespace actbench {

namespace detail {

inline std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '-';
  return out;
}

inline void write_plot_file(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, double>>& rows) {
  std::vector<std::pair<std::string, double>> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write plot file: " + path.string());
  for (const auto& [name, score] : sorted) out << name << ' ' << format_double(score) << '\n';
}

}  // namespace detail

struct ActivationSummary {
  double best = 0.0;
  double mean = 0.0;
  long n_trials = 0;
  long n_diverged = 0;
};

// Aggregates a results store into report.txt, report.json, and plot-data
// files.  The suite config supplies the draw lists so sampled hyperparameters
// can be joined back onto records for the regression.
inline void generate_report(const SuiteConfig& cfg, const ResultsStore& store,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (store.records().empty()) throw ConfigError("results store is empty; nothing to report");
  fs::create_directories(fs::path(out_dir) / "plots");

  // experiment -> activation -> outcomes
  std::map<std::string, std::map<std::string, std::vector<TrialOutcome>>> grouped;
  for (const TrialRecord& r : store.records()) {
    TrialOutcome o;
    o.draw = r.draw;
    o.init = r.init;
    o.diverged = r.status == "diverged";
    o.best_dev = r.best_dev;
    o.test = r.test;
    grouped[r.task][r.activation].push_back(o);
  }

  std::map<std::string, std::map<std::string, ActivationSummary>> summaries;
  for (const auto& [exp, by_act] : grouped)
    for (const auto& [act, outcomes] : by_act) {
      ActivationSummary s;
      s.best = best_of(outcomes);
      s.mean = mean_of(outcomes);
      s.n_trials = static_cast<long>(outcomes.size());
      for (const TrialOutcome& o : outcomes)
        if (o.diverged) ++s.n_diverged;
      summaries[exp][act] = s;
    }

  // activations present in every experiment form the cross-experiment tables
  std::vector<std::string> experiments;
  for (const auto& [exp, _] : summaries) experiments.push_back(exp);
  std::vector<std::string> common;
  for (const auto& [act, _] : summaries.begin()->second) {
    bool everywhere = true;
    for (const auto& [exp, by_act] : summaries) everywhere = everywhere && by_act.count(act) > 0;
    if (everywhere) common.push_back(act);
  }

  ScoreTable best_table{common, experiments, {}};
  ScoreTable mean_table{common, experiments, {}};
  for (const std::string& act : common) {
    std::vector<double> best_row, mean_row;
    for (const std::string& exp : experiments) {
      best_row.push_back(summaries[exp][act].best);
      mean_row.push_back(summaries[exp][act].mean);
    }
    best_table.cells.push_back(best_row);
    mean_table.cells.push_back(mean_row);
  }

  auto normalize_table = [](const ScoreTable& t) {
    ScoreTable out = t;
    for (std::size_t c = 0; c < t.experiments.size(); ++c) {
      const std::vector<double> norm = max_normalize(t.column(c));
      for (std::size_t r = 0; r < t.activations.size(); ++r) out.cells[r][c] = norm[r];
    }
    return out;
  };
  const ScoreTable best_norm = normalize_table(best_table);
  const ScoreTable mean_norm = normalize_table(mean_table);
  const std::vector<double> overall_best = cross_experiment_average(best_norm);
  const std::vector<double> overall_mean = cross_experiment_average(mean_norm);
  const Top3Stats top3 = top3_stats(best_table, mean_table);

  std::map<std::string, std::pair<double, double>> rank_stability;  // exp -> (best, mean)
  for (std::size_t c = 0; c < experiments.size(); ++c)
    rank_stability[experiments[c]] = {spearman(best_table.column(c), best_norm.column(c)),
                                      spearman(mean_table.column(c), mean_norm.column(c))};

  // regression per (experiment, activation): join draws back on draw index
  std::map<std::string, const ExperimentConfig*> exp_cfg;
  for (const ExperimentConfig& ec : cfg.experiments) exp_cfg[ec.name] = &ec;
  std::map<std::string, json> regression_out;
  for (const auto& [exp, by_act] : grouped) {
    const auto it = exp_cfg.find(exp);
    if (it == exp_cfg.end()) {
      regression_out[exp + "/*"] = "skipped: experiment not in config";
      continue;
    }
    const std::vector<SampledHyperParams> draws = experiment_draws(
        cfg.space, it->second->family, cfg.master_seed, exp, cfg.n_draws);
    for (const auto& [act, outcomes] : by_act) {
      const std::string key = exp + "/" + act;
      std::map<long, std::pair<double, long>> per_draw;  // draw -> (test sum, count)
      for (const TrialOutcome& o : outcomes) {
        auto& [sum, count] = per_draw[o.draw];
        sum += o.diverged ? 0.0 : o.test;
        ++count;
      }
      std::vector<RegressionRecord> records;
      for (const auto& [draw, agg] : per_draw) {
        if (draw < 0 || draw >= static_cast<long>(draws.size())) continue;
        const SampledHyperParams& hp = draws[static_cast<std::size_t>(draw)];
        RegressionRecord r;
        r.score = agg.first / static_cast<double>(agg.second);
        r.layers = hp.layers;
        r.dropout = hp.dropout;
        r.hidden = hp.hidden;
        r.learning_rate = hp.learning_rate;
        r.optimizer = std::string(optimizer_name(hp.optimizer));
        r.initializer = std::string(initializer_name(hp.initializer));
        records.push_back(r);
      }
      try {
        const RegressionFit fit = fit_regression(records);
        json jf;
        jf["columns"] = fit.columns;
        jf["coefficients"] = fit.coefficients;
        jf["residual_norm"] = fit.residual_norm;
        regression_out[key] = jf;
      } catch (const SingularDesignError& ex) {
        regression_out[key] = std::string("skipped: ") + ex.what();
      }
    }
  }

  // ---- report.txt ----
  std::ostringstream txt;
  txt << "activation benchmark report\n";
  txt << "===========================\n\n";
  txt << "notes:\n";
  txt << "- diverged trials score 0; they are included in mean aggregation and in\n";
  txt << "  the regression, and excluded from best candidacy.\n";
  txt << "- rankings break ties by activation name.\n";
  txt << "- regression dummy coding drops the first level (by name) of each\n";
  txt << "  discrete regressor.\n\n";

  for (const std::string& exp : experiments) {
    txt << "experiment " << exp << "\n";
    txt << std::string(11 + exp.size(), '-') << "\n";
    txt << "  " << std::left << std::setw(16) << "activation" << std::setw(24) << "best"
        << std::setw(24) << "mean" << std::setw(8) << "trials" << "diverged\n";
    for (const auto& [act, s] : summaries[exp]) {
      txt << "  " << std::left << std::setw(16) << act << std::setw(24) << format_double(s.best)
          << std::setw(24) << format_double(s.mean) << std::setw(8) << s.n_trials
          << s.n_diverged << "\n";
    }
    txt << "\n";
  }

  auto ranking_block = [&](const char* title, const std::vector<double>& scores) {
    std::vector<std::pair<std::string, double>> rows;
    for (std::size_t r = 0; r < common.size(); ++r) rows.emplace_back(common[r], scores[r]);
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    txt << "  " << title << ":\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
      txt << "    " << std::right << std::setw(2) << (i + 1) << ". " << std::left << std::setw(16)
          << rows[i].first << format_double(rows[i].second) << "\n";
  };
  txt << "overall (max-normalized, averaged over " << experiments.size() << " experiment"
      << (experiments.size() == 1 ? "" : "s") << ")\n";
  txt << "--------------------------------------------------\n";
  ranking_block("best protocol", overall_best);
  ranking_block("mean protocol", overall_mean);
  txt << "\n";

  txt << "rank stability under max normalization (spearman raw vs normalized)\n";
  txt << "--------------------------------------------------------------------\n";
  for (const auto& [exp, sp] : rank_stability)
    txt << "  " << std::left << std::setw(24) << exp << "best " << format_double(sp.first)
        << "  mean " << format_double(sp.second) << "\n";
  txt << "\n";

  txt << "top-3 winner counts\n";
  txt << "-------------------\n";
  auto top3_block = [&](const char* title, const std::map<std::string, int>& counts) {
    txt << "  " << title << ":";
    for (const auto& [act, n] : counts)
      if (n > 0) txt << " " << act << "=" << n;
    txt << "\n";
  };
  top3_block("best", top3.best);
  top3_block("mean", top3.mean);
  txt << "\n";

  txt << "regression (per activation x experiment)\n";
  txt << "----------------------------------------\n";
  for (const auto& [key, value] : regression_out) {
    if (value.is_string()) {
      txt << "  " << key << ": " << value.get<std::string>() << "\n";
    } else {
      txt << "  " << key << ":\n";
      const auto& cols = value.at("columns");
      const auto& coef = value.at("coefficients");
      for (std::size_t i = 0; i < cols.size(); ++i)
        txt << "    " << std::left << std::setw(28) << cols[i].get<std::string>()
            << format_double(coef[i].get<double>()) << "\n";
      txt << "    residual_norm " << format_double(value.at("residual_norm").get<double>())
          << "\n";
    }
  }

  std::ofstream txt_out(fs::path(out_dir) / "report.txt");
  if (!txt_out) throw ConfigError("cannot write report.txt under " + out_dir);
  txt_out << txt.str();
  txt_out.close();

  // ---- report.json ----
  json jr;
  for (const auto& [exp, by_act] : summaries)
    for (const auto& [act, s] : by_act) {
      jr["experiments"][exp][act] = {{"best", s.best},
                                     {"mean", s.mean},
                                     {"trials", s.n_trials},
                                     {"diverged", s.n_diverged}};
    }
  for (std::size_t r = 0; r < common.size(); ++r) {
    jr["overall"]["best"][common[r]] = overall_best[r];
    jr["overall"]["mean"][common[r]] = overall_mean[r];
  }
  for (const auto& [act, n] : top3.best) jr["top3"]["best"][act] = n;
  for (const auto& [act, n] : top3.mean) jr["top3"]["mean"][act] = n;
  for (const auto& [exp, sp] : rank_stability) {
    jr["rank_stability"][exp]["best"] = sp.first;
    jr["rank_stability"][exp]["mean"] = sp.second;
  }
  for (const auto& [key, value] : regression_out) jr["regression"][key] = value;
  std::ofstream json_out(fs::path(out_dir) / "report.json");
  if (!json_out) throw ConfigError("cannot write report.json under " + out_dir);
  json_out << jr.dump(2) << '\n';
  json_out.close();

  // ---- plot data ----
  for (std::size_t c = 0; c < experiments.size(); ++c) {
    std::vector<std::pair<std::string, double>> best_rows, mean_rows;
    for (const auto& [act, s] : summaries[experiments[c]]) {
      best_rows.emplace_back(act, s.best);
      mean_rows.emplace_back(act, s.mean);
    }
    const std::string stem = detail::sanitize_filename(experiments[c]);
    detail::write_plot_file(fs::path(out_dir) / "plots" / (stem + "_best.dat"), best_rows);
    detail::write_plot_file(fs::path(out_dir) / "plots" / (stem + "_mean.dat"), mean_rows);
  }
  std::vector<std::pair<std::string, double>> overall_best_rows, overall_mean_rows;
  for (std::size_t r = 0; r < common.size(); ++r) {
    overall_best_rows.emplace_back(common[r], overall_best[r]);
    overall_mean_rows.emplace_back(common[r], overall_mean[r]);
  }
  detail::write_plot_file(fs::path(out_dir) / "plots" / "overall_best.dat", overall_best_rows);
  detail::write_plot_file(fs::path(out_dir) / "plots" / "overall_mean.dat", overall_mean_rows);
}

}  // namespace actbench
