#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "actbench/data.hpp"
#include "actbench/models.hpp"
#include "actbench/numio.hpp"
#include "actbench/report.hpp"
#include "actbench/store.hpp"

namespace actbench {

// --- Search space (defaults = the experiment grid) --------------------------

struct HyperParamSpace {
  std::vector<OptimizerKind> optimizers{optimizer_catalog().begin(), optimizer_catalog().end()};
  std::vector<long> mlp_layers{1, 2, 3, 4};
  std::vector<long> cnn_layers{1, 2, 3};
  std::vector<long> rnn_layers{1, 2, 3, 4};
  double dropout_lo = 0.1, dropout_hi = 0.75;
  long hidden_lo = 30, hidden_hi = 500;
  long filters_lo = 30, filters_hi = 500;
  long embedding_lo = 40, embedding_hi = 200;
  std::vector<long> filter_sizes{1, 2, 2, 3, 3, 3, 4};  // multiset: 3 is 3x as likely
  std::vector<InitializerKind> initializers{
      InitializerKind::kRandomNormal,    InitializerKind::kRandomUniform,
      InitializerKind::kVarianceScaling, InitializerKind::kOrthogonal,
      InitializerKind::kLecunUniform,    InitializerKind::kGlorotNormal,
      InitializerKind::kGlorotUniform,   InitializerKind::kHeNormal,
      InitializerKind::kHeUniform,
  };
  std::vector<InitializerKind> recurrent_initializers{
      InitializerKind::kRandomNormal,    InitializerKind::kRandomUniform,
      InitializerKind::kVarianceScaling, InitializerKind::kOrthogonal,
      InitializerKind::kLecunUniform,    InitializerKind::kGlorotNormal,
      InitializerKind::kGlorotUniform,   InitializerKind::kHeNormal,
      InitializerKind::kHeUniform,       InitializerKind::kIdentity,
  };
};

struct SampledHyperParams {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  long layers = 1;
  double dropout = 0.1;
  long hidden = 30;  // hidden units, or filter count for cnn
  double learning_rate = 0.001;
  InitializerKind initializer = InitializerKind::kGlorotUniform;
  InitializerKind recurrent_initializer = InitializerKind::kGlorotUniform;
  long embedding_dim = 40;  // cnn only
  long filter_size = 3;     // cnn only
};

// Negative draws from N(m, m/5) fall back to the optimizer default m.
inline double clamped_learning_rate(double raw, double m) { return raw < 0.0 ? m : raw; }

namespace detail {

template <typename T>
inline const T& pick(const std::vector<T>& options, Rng& rng) {
  if (options.empty()) throw ConfigError("empty hyperparameter option set");
  return options[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<long>(options.size()) - 1))];
}

}  // namespace detail

// Draw order is fixed per family so that draw sequences are reproducible.
inline SampledHyperParams sample_hyperparams(const HyperParamSpace& space, ModelFamily family,
                                             Rng& rng) {
  SampledHyperParams hp;
  hp.optimizer = detail::pick(space.optimizers, rng);
  const double m = default_learning_rate(hp.optimizer);
  switch (family) {
    case ModelFamily::kMlp:
      hp.layers = detail::pick(space.mlp_layers, rng);
      hp.dropout = rng.uniform(space.dropout_lo, space.dropout_hi);
      hp.hidden = rng.uniform_int(space.hidden_lo, space.hidden_hi);
      hp.learning_rate = clamped_learning_rate(rng.normal(m, m / 5.0), m);
      hp.initializer = detail::pick(space.initializers, rng);
      break;
    case ModelFamily::kCnn:
      hp.dropout = rng.uniform(space.dropout_lo, space.dropout_hi);
      hp.learning_rate = clamped_learning_rate(rng.normal(m, m / 5.0), m);
      hp.initializer = detail::pick(space.initializers, rng);
      hp.embedding_dim = rng.uniform_int(space.embedding_lo, space.embedding_hi);
      hp.hidden = rng.uniform_int(space.filters_lo, space.filters_hi);
      hp.layers = detail::pick(space.cnn_layers, rng);
      hp.filter_size = detail::pick(space.filter_sizes, rng);
      break;
    case ModelFamily::kRnn:
    case ModelFamily::kLstm:
      hp.layers = detail::pick(space.rnn_layers, rng);
      hp.dropout = rng.uniform(space.dropout_lo, space.dropout_hi);
      hp.hidden = rng.uniform_int(space.hidden_lo, space.hidden_hi);
      hp.learning_rate = clamped_learning_rate(rng.normal(m, m / 5.0), m);
      hp.recurrent_initializer = detail::pick(space.recurrent_initializers, rng);
      break;
  }
  return hp;
}

// --- Trial execution ---------------------------------------------------------

struct TrialConfig {
  std::string experiment;
  std::string activation;
  long draw = 0;
  long init = 0;
  SampledHyperParams hp;
  std::uint64_t seed = 0;
  ModelFamily family = ModelFamily::kMlp;
  long epochs = 100;
  long patience = 10;
  long batch_size = 16;
  std::string lstm_gate = "tau";  // which gate the tested activation replaces
};

struct TrialResult {
  std::vector<double> dev_scores;
  double best_dev = 0.0;
  double test = 0.0;
  bool diverged = false;
  long epochs_run = 0;
  double seconds = 0.0;
};

// Pure restatement of the early-stopping rule over a hypothetical full dev
// trace: training stops once dev has not strictly improved for `patience`
// consecutive epochs.  Returns 1-based epochs.
struct EarlyStopTrace {
  long best_epoch = 0;
  long stop_epoch = 0;
  double best_dev = -std::numeric_limits<double>::infinity();
};

inline EarlyStopTrace trace_early_stopping(std::span<const double> dev_scores, long patience) {
  EarlyStopTrace out;
  long since_improvement = 0;
  for (long epoch = 1; epoch <= static_cast<long>(dev_scores.size()); ++epoch) {
    const double dev = dev_scores[static_cast<std::size_t>(epoch - 1)];
    out.stop_epoch = epoch;
    if (dev > out.best_dev) {
      out.best_dev = dev;
      out.best_epoch = epoch;
      since_improvement = 0;
    } else if (++since_improvement == patience) {
      return out;
    }
  }
  return out;
}

inline ModelSpec to_model_spec(const TrialConfig& cfg) {
  ModelSpec spec;
  spec.family = cfg.family;
  spec.layers = cfg.hp.layers;
  spec.hidden_units = cfg.hp.hidden;
  spec.filter_size = cfg.hp.filter_size;
  spec.embedding_dim = cfg.hp.embedding_dim;
  spec.dropout = cfg.hp.dropout;
  spec.initializer = cfg.hp.initializer;
  spec.recurrent_initializer = cfg.hp.recurrent_initializer;
  const ActivationSpec act = ActivationSpec::of(activation_from_name(cfg.activation));
  spec.activation = act;
  if (cfg.family == ModelFamily::kLstm) {
    if (cfg.lstm_gate == "tau") {
      spec.gate_tau = act;
    } else if (cfg.lstm_gate == "sigma") {
      spec.gate_sigma = act;
    } else if (cfg.lstm_gate == "both") {
      spec.gate_sigma = act;
      spec.gate_tau = act;
    } else {
      throw ConfigError("lstm_gate must be tau, sigma, or both");
    }
  }
  return spec;
}

// Train with early stopping on dev; report the test score at the best-dev
// epoch.  Non-finite losses mark the trial diverged with score 0.
inline TrialResult run_trial(const TrialConfig& cfg, const Task& task) {
  if (task.train.empty() || task.dev.empty() || task.test.empty())
    throw ConfigError("task is missing a train/dev/test split");
  const auto t0 = std::chrono::steady_clock::now();
  TrialResult res;
  Rng rng(cfg.seed);
  const ModelSpec spec = to_model_spec(cfg);
  std::unique_ptr<Model> model = make_model(spec, task, rng);
  Optimizer opt(cfg.hp.optimizer, cfg.hp.learning_rate);
  double best_dev = -std::numeric_limits<double>::infinity();
  double test_at_best = 0.0;
  long since_improvement = 0;
  try {
    for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
      train_epoch(*model, task, opt, cfg.batch_size, rng);
      const double dev = evaluate(*model, task, task.dev);
      res.dev_scores.push_back(dev);
      res.epochs_run = epoch;
      if (dev > best_dev) {  // ties do not count as improvement
        best_dev = dev;
        since_improvement = 0;
        test_at_best = evaluate(*model, task, task.test);
      } else if (++since_improvement == cfg.patience) {
        break;
      }
    }
    res.best_dev = best_dev;
    res.test = test_at_best;
  } catch (const DivergedSignal&) {
    res.diverged = true;
    res.best_dev = 0.0;
    res.test = 0.0;
    res.epochs_run = static_cast<long>(res.dev_scores.size()) + 1;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// The shared draw list for one experiment: depends on the master seed and the
// experiment id only, never on the activation.
inline std::vector<SampledHyperParams> experiment_draws(const HyperParamSpace& space,
                                                        ModelFamily family,
                                                        std::uint64_t master_seed,
                                                        const std::string& experiment,
                                                        long n_draws) {
  Rng rng(mix_seed(master_seed, experiment + "/draws", 0, 0));
  std::vector<SampledHyperParams> draws;
  draws.reserve(static_cast<std::size_t>(n_draws));
  for (long i = 0; i < n_draws; ++i) draws.push_back(sample_hyperparams(space, family, rng));
  return draws;
}

// --- Suite configuration -------------------------------------------------------

struct ExperimentConfig {
  std::string name;
  ModelFamily family = ModelFamily::kMlp;
  std::string task_path;
  TaskKind task_kind = TaskKind::kVectorClassification;
  double train_frac = 0.5, dev_frac = 0.25;
  long train_n = -1, dev_n = -1;  // absolute split mode when >= 0
  std::uint64_t split_seed = 1;
  long epochs = 0, patience = 0, batch_size = 0;  // 0 = family default
  std::string metric;                             // "", "accuracy", or "macro-f1"
};

struct SuiteConfig {
  std::uint64_t master_seed = 1;
  long n_draws = 200;
  long n_inits = 5;
  int workers = 1;
  bool record_seconds = true;
  std::string lstm_gate = "tau";
  std::vector<std::string> activations;                          // default: full catalog
  std::map<std::string, std::vector<std::string>> exclusions;    // family -> activations
  HyperParamSpace space;
  std::vector<ExperimentConfig> experiments;
};

inline void family_training_defaults(ModelFamily family, long& epochs, long& patience,
                                     long& batch) {
  switch (family) {
    case ModelFamily::kMlp: epochs = 100; patience = 10; batch = 16; break;
    case ModelFamily::kCnn: epochs = 50; patience = 10; batch = 64; break;
    case ModelFamily::kRnn:
    case ModelFamily::kLstm: epochs = 50; patience = 5; batch = 32; break;
  }
}

inline std::map<std::string, std::vector<std::string>> default_exclusions() {
  const std::vector<std::string> recurrent_excl = {"prelu", "maxout-2", "maxout-3", "maxout-4",
                                                   "cube"};
  return {{"rnn", recurrent_excl}, {"lstm", recurrent_excl}};
}

inline SuiteConfig parse_suite_config(const json& j) {
  SuiteConfig cfg;
  try {
    cfg.master_seed = j.value("master_seed", std::uint64_t{1});
    cfg.n_draws = j.value("n_draws", 200L);
    cfg.n_inits = j.value("n_inits", 5L);
    cfg.workers = j.value("workers", 1);
    cfg.record_seconds = j.value("record_seconds", true);
    cfg.lstm_gate = j.value("lstm_gate", std::string("tau"));
    if (j.contains("activations")) {
      cfg.activations = j.at("activations").get<std::vector<std::string>>();
    } else {
      for (const ActivationSpec& spec : activation_catalog())
        cfg.activations.emplace_back(activation_name(spec.kind));
    }
    for (const std::string& a : cfg.activations) activation_from_name(a);  // validate
    cfg.exclusions = default_exclusions();
    if (j.contains("exclusions")) {
      cfg.exclusions.clear();
      for (const auto& [fam, list] : j.at("exclusions").items()) {
        family_from_name(fam);
        cfg.exclusions[fam] = list.get<std::vector<std::string>>();
        for (const std::string& a : cfg.exclusions[fam]) activation_from_name(a);
      }
    }
    if (j.contains("space")) {
      const json& s = j.at("space");
      HyperParamSpace& sp = cfg.space;
      if (s.contains("optimizers")) {
        sp.optimizers.clear();
        for (const auto& name : s.at("optimizers"))
          sp.optimizers.push_back(optimizer_from_name(name.get<std::string>()));
      }
      if (s.contains("mlp_layers")) sp.mlp_layers = s.at("mlp_layers").get<std::vector<long>>();
      if (s.contains("cnn_layers")) sp.cnn_layers = s.at("cnn_layers").get<std::vector<long>>();
      if (s.contains("rnn_layers")) sp.rnn_layers = s.at("rnn_layers").get<std::vector<long>>();
      if (s.contains("dropout")) {
        sp.dropout_lo = s.at("dropout").at(0).get<double>();
        sp.dropout_hi = s.at("dropout").at(1).get<double>();
      }
      if (s.contains("hidden")) {
        sp.hidden_lo = s.at("hidden").at(0).get<long>();
        sp.hidden_hi = s.at("hidden").at(1).get<long>();
      }
      if (s.contains("filters")) {
        sp.filters_lo = s.at("filters").at(0).get<long>();
        sp.filters_hi = s.at("filters").at(1).get<long>();
      }
      if (s.contains("embedding_dim")) {
        sp.embedding_lo = s.at("embedding_dim").at(0).get<long>();
        sp.embedding_hi = s.at("embedding_dim").at(1).get<long>();
      }
      if (s.contains("filter_sizes"))
        sp.filter_sizes = s.at("filter_sizes").get<std::vector<long>>();
      if (s.contains("initializers")) {
        sp.initializers.clear();
        for (const auto& name : s.at("initializers"))
          sp.initializers.push_back(initializer_from_name(name.get<std::string>()));
      }
      if (s.contains("recurrent_initializers")) {
        sp.recurrent_initializers.clear();
        for (const auto& name : s.at("recurrent_initializers"))
          sp.recurrent_initializers.push_back(initializer_from_name(name.get<std::string>()));
      }
    }
    if (!j.contains("experiments") || j.at("experiments").empty())
      throw ConfigError("suite config declares no experiments");
    for (const json& e : j.at("experiments")) {
      ExperimentConfig ec;
      ec.name = e.at("name").get<std::string>();
      ec.family = family_from_name(e.at("family").get<std::string>());
      const json& t = e.at("task");
      ec.task_path = t.at("path").get<std::string>();
      ec.task_kind = task_kind_from_name(t.at("kind").get<std::string>());
      if (t.contains("splits")) {
        const json& s = t.at("splits");
        if (s.contains("train_n")) {
          ec.train_n = s.at("train_n").get<long>();
          ec.dev_n = s.at("dev_n").get<long>();
        } else {
          ec.train_frac = s.at("train").get<double>();
          ec.dev_frac = s.at("dev").get<double>();
        }
        ec.split_seed = s.value("seed", std::uint64_t{1});
      }
      family_training_defaults(ec.family, ec.epochs, ec.patience, ec.batch_size);
      ec.epochs = e.value("epochs", ec.epochs);
      ec.patience = e.value("patience", ec.patience);
      ec.batch_size = e.value("batch_size", ec.batch_size);
      ec.metric = e.value("metric", std::string());
      cfg.experiments.push_back(std::move(ec));
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("bad suite config: ") + ex.what());
  }
  return cfg;
}

inline SuiteConfig load_suite_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open suite config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("suite config is not valid JSON: ") + ex.what());
  }
  return parse_suite_config(j);
}

inline Task load_experiment_task(const ExperimentConfig& ec) {
  Task task = load_tsv_dataset(ec.task_path, ec.task_kind);
  task.name = ec.name;
  if (ec.train_n >= 0)
    split_counts(task, static_cast<std::size_t>(ec.train_n), static_cast<std::size_t>(ec.dev_n),
                 ec.split_seed);
  else
    split_fractions(task, ec.train_frac, ec.dev_frac, ec.split_seed);
  if (ec.metric == "accuracy") task.metric = Metric::kAccuracy;
  else if (ec.metric == "macro-f1") task.metric = Metric::kMacroF1;
  else if (!ec.metric.empty()) throw ConfigError("unknown metric: " + ec.metric);
  return task;
}

// --- Mini-experiment and suite -------------------------------------------------

// All activations of one experiment share the same draw list; the trial seed
// mixes (master, experiment, draw, init) and nothing else.
inline std::vector<std::vector<TrialResult>> run_mini_experiment(
    const Task& task, const std::string& activation, const HyperParamSpace& space,
    const ExperimentConfig& ec, std::uint64_t master_seed, long n_draws, long n_inits,
    const std::string& lstm_gate = "tau") {
  const std::vector<SampledHyperParams> draws =
      experiment_draws(space, ec.family, master_seed, ec.name, n_draws);
  std::vector<std::vector<TrialResult>> results(static_cast<std::size_t>(n_draws));
  for (long d = 0; d < n_draws; ++d) {
    for (long i = 0; i < n_inits; ++i) {
      TrialConfig cfg;
      cfg.experiment = ec.name;
      cfg.activation = activation;
      cfg.draw = d;
      cfg.init = i;
      cfg.hp = draws[static_cast<std::size_t>(d)];
      cfg.seed = mix_seed(master_seed, ec.name, static_cast<std::uint64_t>(d),
                          static_cast<std::uint64_t>(i));
      cfg.family = ec.family;
      cfg.epochs = ec.epochs;
      cfg.patience = ec.patience;
      cfg.batch_size = ec.batch_size;
      cfg.lstm_gate = lstm_gate;
      results[static_cast<std::size_t>(d)].push_back(run_trial(cfg, task));
    }
  }
  return results;
}

inline std::vector<std::string> experiment_activations(const SuiteConfig& cfg,
                                                       const ExperimentConfig& ec) {
  std::set<std::string> excluded;
  const auto it = cfg.exclusions.find(std::string(family_name(ec.family)));
  if (it != cfg.exclusions.end()) excluded.insert(it->second.begin(), it->second.end());
  std::vector<std::string> out;
  for (const std::string& a : cfg.activations)
    if (!excluded.count(a)) out.push_back(a);
  return out;
}

// Runs every (experiment, activation, draw, init) job on a worker pool and
// appends finished records to the store in canonical key order, so the log is
// byte-identical for any worker count.  Jobs already in the store are skipped.
inline void run_suite(const SuiteConfig& cfg, ResultsStore& store, std::ostream* log = nullptr) {
  struct Job {
    TrialConfig trial;
    const Task* task;
  };
  std::vector<Task> tasks;
  tasks.reserve(cfg.experiments.size());
  std::vector<const ExperimentConfig*> ecs;
  std::vector<Job> jobs;

  std::vector<const ExperimentConfig*> sorted_ecs;
  for (const auto& ec : cfg.experiments) sorted_ecs.push_back(&ec);
  std::sort(sorted_ecs.begin(), sorted_ecs.end(),
            [](const ExperimentConfig* a, const ExperimentConfig* b) { return a->name < b->name; });
  for (std::size_t i = 0; i + 1 < sorted_ecs.size(); ++i)
    if (sorted_ecs[i]->name == sorted_ecs[i + 1]->name)
      throw ConfigError("duplicate experiment name: " + sorted_ecs[i]->name);

  for (const ExperimentConfig* ec : sorted_ecs) {
    tasks.push_back(load_experiment_task(*ec));
    ecs.push_back(ec);
  }
  for (std::size_t e = 0; e < ecs.size(); ++e) {
    const ExperimentConfig& ec = *ecs[e];
    std::vector<std::string> acts = experiment_activations(cfg, ec);
    std::sort(acts.begin(), acts.end());
    const std::vector<SampledHyperParams> draws =
        experiment_draws(cfg.space, ec.family, cfg.master_seed, ec.name, cfg.n_draws);
    for (const std::string& act : acts)
      for (long d = 0; d < cfg.n_draws; ++d)
        for (long i = 0; i < cfg.n_inits; ++i) {
          Job job;
          job.trial.experiment = ec.name;
          job.trial.activation = act;
          job.trial.draw = d;
          job.trial.init = i;
          job.trial.hp = draws[static_cast<std::size_t>(d)];
          job.trial.seed = mix_seed(cfg.master_seed, ec.name, static_cast<std::uint64_t>(d),
                                    static_cast<std::uint64_t>(i));
          job.trial.family = ec.family;
          job.trial.epochs = ec.epochs;
          job.trial.patience = ec.patience;
          job.trial.batch_size = ec.batch_size;
          job.trial.lstm_gate = cfg.lstm_gate;
          job.task = &tasks[e];
          jobs.push_back(std::move(job));
        }
  }

  // release machinery: results are appended strictly in job order
  std::mutex mu;
  std::map<std::size_t, TrialRecord> pending;
  std::vector<bool> already_done(jobs.size(), false);
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& t = jobs[k].trial;
    already_done[k] = store.has({t.experiment, t.activation, t.draw, t.init});
  }
  std::size_t next_release = 0;
  auto release_ready = [&]() {
    while (next_release < jobs.size()) {
      if (already_done[next_release]) {
        ++next_release;
        continue;
      }
      const auto it = pending.find(next_release);
      if (it == pending.end()) break;
      store.append(it->second);
      pending.erase(it);
      ++next_release;
    }
  };

  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = cursor.fetch_add(1);
      if (k >= jobs.size()) return;
      if (already_done[k]) {
        std::lock_guard<std::mutex> lock(mu);
        release_ready();
        continue;
      }
      const Job& job = jobs[k];
      const TrialResult r = run_trial(job.trial, *job.task);
      TrialRecord rec;
      rec.task = job.trial.experiment;
      rec.activation = job.trial.activation;
      rec.draw = job.trial.draw;
      rec.init = job.trial.init;
      rec.status = r.diverged ? "diverged" : "ok";
      rec.best_dev = r.best_dev;
      rec.test = r.test;
      rec.epochs = r.epochs_run;
      rec.seconds = cfg.record_seconds ? r.seconds : 0.0;
      std::lock_guard<std::mutex> lock(mu);
      pending.emplace(k, std::move(rec));
      release_ready();
    }
  };

  const int n_workers = std::max(1, cfg.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  {
    std::lock_guard<std::mutex> lock(mu);
    release_ready();
  }
  if (next_release != jobs.size() || !pending.empty())
    throw ConfigError("internal error: suite finished with unreleased results");
  if (log) *log << "suite complete: " << jobs.size() << " trials in store " << store.path()
                << "\n";
}

}  // namespace actbench
