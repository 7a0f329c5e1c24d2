#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "actbench/harness.hpp"

using namespace actbench;

namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir()
      : path_(fs::temp_directory_path() / ("actbench_harness_" + std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---- sampler ----

TEST(Sampler, MarginalsStayInsideTheGrid) {
  HyperParamSpace space;
  Rng rng(31);
  const std::set<long> mlp_layers(space.mlp_layers.begin(), space.mlp_layers.end());
  const std::set<long> cnn_layers(space.cnn_layers.begin(), space.cnn_layers.end());
  const std::set<long> sizes(space.filter_sizes.begin(), space.filter_sizes.end());
  for (int i = 0; i < 10000; ++i) {
    const SampledHyperParams hp = sample_hyperparams(space, ModelFamily::kMlp, rng);
    EXPECT_TRUE(mlp_layers.count(hp.layers));
    EXPECT_GE(hp.dropout, 0.1);
    EXPECT_LE(hp.dropout, 0.75);
    EXPECT_GE(hp.hidden, 30);
    EXPECT_LE(hp.hidden, 500);
    EXPECT_GT(hp.learning_rate, 0.0);

    const SampledHyperParams ch = sample_hyperparams(space, ModelFamily::kCnn, rng);
    EXPECT_TRUE(cnn_layers.count(ch.layers));
    EXPECT_GE(ch.embedding_dim, 40);
    EXPECT_LE(ch.embedding_dim, 200);
    EXPECT_GE(ch.hidden, 30);
    EXPECT_LE(ch.hidden, 500);
    EXPECT_TRUE(sizes.count(ch.filter_size));

    const SampledHyperParams rh = sample_hyperparams(space, ModelFamily::kRnn, rng);
    EXPECT_TRUE(mlp_layers.count(rh.layers));
    EXPECT_GT(rh.learning_rate, 0.0);
  }
}

TEST(Sampler, RecurrentInitializerSetAddsIdentity) {
  HyperParamSpace space;
  EXPECT_EQ(space.initializers.size(), 9u);
  EXPECT_EQ(space.recurrent_initializers.size(), 10u);
  EXPECT_TRUE(std::count(space.recurrent_initializers.begin(),
                         space.recurrent_initializers.end(), InitializerKind::kIdentity));
  EXPECT_FALSE(std::count(space.initializers.begin(), space.initializers.end(),
                          InitializerKind::kIdentity));
  Rng rng(37);
  bool identity_seen = false;
  for (int i = 0; i < 2000; ++i) {
    const SampledHyperParams hp = sample_hyperparams(space, ModelFamily::kLstm, rng);
    identity_seen = identity_seen || hp.recurrent_initializer == InitializerKind::kIdentity;
  }
  EXPECT_TRUE(identity_seen);
}

TEST(Sampler, NegativeLearningRateFallsBackToDefault) {
  EXPECT_EQ(clamped_learning_rate(-0.003, 0.001), 0.001);
  EXPECT_EQ(clamped_learning_rate(0.0042, 0.001), 0.0042);
  EXPECT_EQ(clamped_learning_rate(0.0, 0.001), 0.0);  // only strictly negative draws
}

TEST(Sampler, DrawListDependsOnExperimentNotActivation) {
  HyperParamSpace space;
  const auto a = experiment_draws(space, ModelFamily::kMlp, 5, "expA", 20);
  const auto b = experiment_draws(space, ModelFamily::kMlp, 5, "expA", 20);
  const auto c = experiment_draws(space, ModelFamily::kMlp, 5, "expB", 20);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hidden, b[i].hidden);
    EXPECT_EQ(a[i].learning_rate, b[i].learning_rate);
    EXPECT_EQ(a[i].optimizer, b[i].optimizer);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].hidden != c[i].hidden;
  EXPECT_TRUE(differs);
}

// ---- early stopping ----

TEST(EarlyStop, HandTracedExample) {
  // dev [0.5, 0.6, flat...], patience 2: stop after epoch 4, best 0.6 at epoch 2
  const std::vector<double> dev = {0.5, 0.6, 0.6, 0.6, 0.6, 0.6};
  const EarlyStopTrace t = trace_early_stopping(dev, 2);
  EXPECT_EQ(t.stop_epoch, 4);
  EXPECT_EQ(t.best_epoch, 2);
  EXPECT_EQ(t.best_dev, 0.6);
}

TEST(EarlyStop, StrictlyImprovingRunsToTheCap) {
  std::vector<double> dev;
  for (int i = 0; i < 12; ++i) dev.push_back(0.1 * i);
  const EarlyStopTrace t = trace_early_stopping(dev, 3);
  EXPECT_EQ(t.stop_epoch, 12);
  EXPECT_EQ(t.best_epoch, 12);
}

TEST(EarlyStop, TiesDoNotCountAsImprovement) {
  const std::vector<double> dev = {0.7, 0.7, 0.7};
  const EarlyStopTrace t = trace_early_stopping(dev, 2);
  EXPECT_EQ(t.stop_epoch, 3);
  EXPECT_EQ(t.best_epoch, 1);
}

// ---- trials ----

TrialConfig small_trial_config(const std::string& activation) {
  TrialConfig cfg;
  cfg.experiment = "unit";
  cfg.activation = activation;
  cfg.draw = 0;
  cfg.init = 0;
  cfg.family = ModelFamily::kMlp;
  cfg.epochs = 8;
  cfg.patience = 3;
  cfg.batch_size = 16;
  cfg.seed = mix_seed(99, "unit", 0, 0);
  cfg.hp.optimizer = OptimizerKind::kAdam;
  cfg.hp.layers = 2;
  cfg.hp.dropout = 0.1;
  cfg.hp.hidden = 12;
  cfg.hp.learning_rate = 0.002;
  cfg.hp.initializer = InitializerKind::kGlorotUniform;
  return cfg;
}

TEST(RunTrial, DeterministicAndConsistentWithTraceRule) {
  Task task = gen_synth_vectors(3, 80, 6, 2.5, 41);
  split_counts(task, 56, 12, 42);
  const TrialConfig cfg = small_trial_config("relu");
  const TrialResult r1 = run_trial(cfg, task);
  const TrialResult r2 = run_trial(cfg, task);
  EXPECT_EQ(r1.dev_scores, r2.dev_scores);
  EXPECT_EQ(r1.best_dev, r2.best_dev);
  EXPECT_EQ(r1.test, r2.test);
  EXPECT_EQ(r1.epochs_run, r2.epochs_run);
  EXPECT_FALSE(r1.diverged);
  EXPECT_EQ(static_cast<long>(r1.dev_scores.size()), r1.epochs_run);

  const EarlyStopTrace t = trace_early_stopping(r1.dev_scores, cfg.patience);
  EXPECT_EQ(t.stop_epoch, r1.epochs_run);
  EXPECT_EQ(t.best_dev, r1.best_dev);
}

TEST(RunTrial, MissingSplitIsAConfigError) {
  Task task = gen_synth_vectors(3, 80, 6, 2.5, 41);  // never split
  EXPECT_THROW(run_trial(small_trial_config("relu"), task), ConfigError);
}

TEST(RunTrial, LstmGateBindingSelectsTheRightSlot) {
  TrialConfig cfg = small_trial_config("penalized-tanh");
  cfg.family = ModelFamily::kLstm;

  cfg.lstm_gate = "tau";
  ModelSpec tau_spec = to_model_spec(cfg);
  EXPECT_EQ(tau_spec.gate_tau.kind, ActivationKind::kPenalizedTanh);
  EXPECT_EQ(tau_spec.gate_sigma.kind, ActivationKind::kSigmoid);

  cfg.lstm_gate = "sigma";
  ModelSpec sigma_spec = to_model_spec(cfg);
  EXPECT_EQ(sigma_spec.gate_sigma.kind, ActivationKind::kPenalizedTanh);
  EXPECT_EQ(sigma_spec.gate_tau.kind, ActivationKind::kTanh);

  cfg.lstm_gate = "both";
  ModelSpec both_spec = to_model_spec(cfg);
  EXPECT_EQ(both_spec.gate_sigma.kind, ActivationKind::kPenalizedTanh);
  EXPECT_EQ(both_spec.gate_tau.kind, ActivationKind::kPenalizedTanh);

  cfg.lstm_gate = "neither";
  EXPECT_THROW(to_model_spec(cfg), ConfigError);
}

TEST(FamilyDefaults, MatchTheProtocol) {
  long e = 0, p = 0, b = 0;
  family_training_defaults(ModelFamily::kMlp, e, p, b);
  EXPECT_EQ(e, 100); EXPECT_EQ(p, 10); EXPECT_EQ(b, 16);
  family_training_defaults(ModelFamily::kCnn, e, p, b);
  EXPECT_EQ(e, 50); EXPECT_EQ(p, 10); EXPECT_EQ(b, 64);
  family_training_defaults(ModelFamily::kRnn, e, p, b);
  EXPECT_EQ(e, 50); EXPECT_EQ(p, 5); EXPECT_EQ(b, 32);
  family_training_defaults(ModelFamily::kLstm, e, p, b);
  EXPECT_EQ(e, 50); EXPECT_EQ(p, 5); EXPECT_EQ(b, 32);
}

// ---- mini experiment ----

TEST(MiniExperiment, ShapeAndInitPairing) {
  Task task = gen_synth_vectors(3, 60, 5, 2.5, 51);
  split_counts(task, 40, 10, 52);
  ExperimentConfig ec;
  ec.name = "mini";
  ec.family = ModelFamily::kMlp;
  family_training_defaults(ec.family, ec.epochs, ec.patience, ec.batch_size);
  ec.epochs = 4;
  ec.patience = 2;

  const auto relu = run_mini_experiment(task, "relu", HyperParamSpace{}, ec, 7, 3, 2);
  ASSERT_EQ(relu.size(), 3u);
  ASSERT_EQ(relu[0].size(), 2u);
  const auto relu_again = run_mini_experiment(task, "relu", HyperParamSpace{}, ec, 7, 3, 2);
  for (std::size_t d = 0; d < relu.size(); ++d)
    for (std::size_t i = 0; i < relu[d].size(); ++i) {
      EXPECT_EQ(relu[d][i].best_dev, relu_again[d][i].best_dev);
      EXPECT_EQ(relu[d][i].dev_scores, relu_again[d][i].dev_scores);
    }
}

// ---- suite config ----

json minimal_suite_json(const std::string& task_path) {
  json j;
  j["master_seed"] = 3;
  j["n_draws"] = 2;
  j["n_inits"] = 2;
  j["record_seconds"] = false;
  j["activations"] = {"relu", "tanh"};
  j["experiments"] = json::array({json{
      {"name", "e1"},
      {"family", "mlp"},
      {"task", json{{"path", task_path},
                    {"kind", "vector-classification"},
                    {"splits", json{{"train_n", 40}, {"dev_n", 10}, {"seed", 2}}}}},
      {"epochs", 3},
      {"patience", 2},
  }});
  return j;
}

TEST(SuiteConfig, DefaultsAndValidation) {
  json j = minimal_suite_json("unused.tsv");
  const SuiteConfig cfg = parse_suite_config(j);
  EXPECT_EQ(cfg.master_seed, 3u);
  EXPECT_EQ(cfg.n_draws, 2);
  EXPECT_EQ(cfg.activations, (std::vector<std::string>{"relu", "tanh"}));
  EXPECT_FALSE(cfg.record_seconds);
  ASSERT_EQ(cfg.experiments.size(), 1u);
  EXPECT_EQ(cfg.experiments[0].epochs, 3);
  EXPECT_EQ(cfg.experiments[0].batch_size, 16);  // family default kept
  // default exclusions bar non-recurrent-safe functions from rnn/lstm
  EXPECT_EQ(cfg.exclusions.at("rnn"),
            (std::vector<std::string>{"prelu", "maxout-2", "maxout-3", "maxout-4", "cube"}));

  json no_acts = minimal_suite_json("unused.tsv");
  no_acts.erase("activations");
  EXPECT_EQ(parse_suite_config(no_acts).activations.size(), 21u);

  json bad_act = minimal_suite_json("unused.tsv");
  bad_act["activations"] = {"relu", "mystery"};
  EXPECT_THROW(parse_suite_config(bad_act), UnknownNameError);

  json no_exp = minimal_suite_json("unused.tsv");
  no_exp["experiments"] = json::array();
  EXPECT_THROW(parse_suite_config(no_exp), ConfigError);
}

TEST(SuiteConfig, ExperimentActivationsApplyExclusions) {
  json j = minimal_suite_json("unused.tsv");
  j["activations"] = {"relu", "cube", "maxout-2", "tanh"};
  SuiteConfig cfg = parse_suite_config(j);
  ExperimentConfig rnn_exp;
  rnn_exp.name = "r";
  rnn_exp.family = ModelFamily::kRnn;
  const std::vector<std::string> acts = experiment_activations(cfg, rnn_exp);
  EXPECT_EQ(acts, (std::vector<std::string>{"relu", "tanh"}));
  ExperimentConfig mlp_exp;
  mlp_exp.name = "m";
  mlp_exp.family = ModelFamily::kMlp;
  EXPECT_EQ(experiment_activations(cfg, mlp_exp).size(), 4u);
}

// ---- suite runs ----

TEST(Suite, CanonicalOrderResumptionAndWorkerEquivalence) {
  TempDir dir;
  Task task = gen_synth_vectors(3, 60, 5, 2.5, 61);
  write_tsv_dataset(dir.file("t.tsv").string(), task);

  json j = minimal_suite_json(dir.file("t.tsv").string());
  SuiteConfig cfg = parse_suite_config(j);

  const std::string s1 = dir.file("s1.jsonl").string();
  {
    ResultsStore store(s1);
    run_suite(cfg, store);
    EXPECT_EQ(store.records().size(), 2u * 2u * 2u);
    // canonical order: activation asc, then draw, then init
    const auto& recs = store.records();
    for (std::size_t i = 1; i < recs.size(); ++i) {
      EXPECT_LE(recs[i - 1].key(), recs[i].key());
    }
  }
  const std::string bytes1 = read_file(s1);

  // resumption: running again on the same store adds nothing
  {
    ResultsStore store(s1);
    run_suite(cfg, store);
  }
  EXPECT_EQ(read_file(s1), bytes1);

  // 4 workers produce byte-identical output
  const std::string s4 = dir.file("s4.jsonl").string();
  {
    SuiteConfig cfg4 = cfg;
    cfg4.workers = 4;
    ResultsStore store(s4);
    run_suite(cfg4, store);
  }
  EXPECT_EQ(read_file(s4), bytes1);

  // duplicate experiment names rejected
  SuiteConfig dup = cfg;
  dup.experiments.push_back(dup.experiments[0]);
  ResultsStore scratch(dir.file("scratch.jsonl").string());
  EXPECT_THROW(run_suite(dup, scratch), ConfigError);
}

TEST(Suite, LstmFamilySweepsGateActivations) {
  TempDir dir;
  Task task = gen_synth_sequences(30, 71);
  write_tsv_dataset(dir.file("seq.tsv").string(), task);

  json j;
  j["master_seed"] = 9;
  j["n_draws"] = 1;
  j["n_inits"] = 1;
  j["record_seconds"] = false;
  j["space"] = json{{"hidden", {8, 16}}, {"rnn_layers", {1}}};
  j["activations"] = {"penalized-tanh", "cube"};  // cube excluded for lstm by default
  j["experiments"] = json::array({json{
      {"name", "lstm-e"},
      {"family", "lstm"},
      {"task", json{{"path", dir.file("seq.tsv").string()},
                    {"kind", "sequence-tagging"},
                    {"splits", json{{"train_n", 20}, {"dev_n", 5}, {"seed", 2}}}}},
      {"epochs", 2},
      {"patience", 2},
  }});
  SuiteConfig cfg = parse_suite_config(j);
  ResultsStore store(dir.file("lstm.jsonl").string());
  run_suite(cfg, store);
  ASSERT_EQ(store.records().size(), 1u);  // cube excluded
  EXPECT_EQ(store.records()[0].activation, "penalized-tanh");
  EXPECT_EQ(store.records()[0].status, "ok");
}

}  // namespace
