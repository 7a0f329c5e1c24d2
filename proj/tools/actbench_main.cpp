#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "actbench/check.hpp"
#include "actbench/harness.hpp"
#include "actbench/reportgen.hpp"

namespace {

int cmd_gen(const std::string& kind, const std::string& out, long n, long dim, long classes,
            double sep, long vocab, std::uint64_t seed) {
  actbench::Task task;
  if (kind == "vectors") {
    task = actbench::gen_synth_vectors(static_cast<int>(classes), static_cast<std::size_t>(n),
                                       dim, sep, seed);
  } else if (kind == "docs") {
    task = actbench::gen_synth_docs(static_cast<int>(classes), static_cast<std::size_t>(n),
                                    vocab, seed);
  } else if (kind == "sequences") {
    task = actbench::gen_synth_sequences(static_cast<std::size_t>(n), seed);
  } else {
    throw actbench::ConfigError("unknown dataset kind: " + kind);
  }
  actbench::write_tsv_dataset(out, task);
  std::cout << "wrote " << task.size() << " " << kind << " examples to " << out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& store_path, int workers,
            bool quiet) {
  actbench::SuiteConfig cfg = actbench::load_suite_config(config_path);
  if (workers > 0) cfg.workers = workers;
  actbench::ResultsStore store(store_path);
  actbench::run_suite(cfg, store, quiet ? nullptr : &std::cout);
  std::cout << "store now holds " << store.records().size() << " records\n";
  return 0;
}

int cmd_report(const std::string& config_path, const std::string& store_path,
               const std::string& out_dir) {
  const actbench::SuiteConfig cfg = actbench::load_suite_config(config_path);
  const actbench::ResultsStore store(store_path);
  actbench::generate_report(cfg, store, out_dir);
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"activation function benchmark harness"};
  app.require_subcommand(1);

  std::string gen_kind = "vectors", gen_out;
  long gen_n = 240, gen_dim = 16, gen_classes = 3, gen_vocab = 60;
  double gen_sep = 2.0;
  std::uint64_t gen_seed = 1;
  CLI::App* gen = app.add_subcommand("gen", "write a synthetic dataset");
  gen->add_option("--kind", gen_kind, "vectors | docs | sequences")
      ->check(CLI::IsMember({"vectors", "docs", "sequences"}));
  gen->add_option("--out", gen_out, "output TSV path")->required();
  gen->add_option("--n", gen_n, "number of examples");
  gen->add_option("--dim", gen_dim, "feature dimension (vectors)");
  gen->add_option("--classes", gen_classes, "number of classes (vectors, docs)");
  gen->add_option("--sep", gen_sep, "class separation (vectors)");
  gen->add_option("--vocab", gen_vocab, "vocabulary size (docs)");
  gen->add_option("--seed", gen_seed, "generator seed");

  std::string run_config, run_store;
  int run_workers = 0;
  bool run_quiet = false;
  CLI::App* run = app.add_subcommand("run", "execute a suite config");
  run->add_option("--config", run_config, "suite config (json)")->required();
  run->add_option("--store", run_store, "results store (jsonl, append)")->required();
  run->add_option("--workers", run_workers, "override worker count");
  run->add_flag("--quiet", run_quiet, "suppress per-trial progress");

  std::string rep_config, rep_store, rep_out = "report";
  CLI::App* rep = app.add_subcommand("report", "aggregate a results store");
  rep->add_option("--config", rep_config, "suite config (json)")->required();
  rep->add_option("--store", rep_store, "results store (jsonl)")->required();
  rep->add_option("--out", rep_out, "output directory");

  CLI::App* chk = app.add_subcommand("check", "run gradient and oracle self-tests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_kind, gen_out, gen_n, gen_dim, gen_classes, gen_sep,
                                      gen_vocab, gen_seed);
    if (run->parsed()) return cmd_run(run_config, run_store, run_workers, run_quiet);
    if (rep->parsed()) return cmd_report(rep_config, rep_store, rep_out);
    if (chk->parsed()) return actbench::run_self_checks(std::cout) ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
