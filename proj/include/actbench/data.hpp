#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "actbench/errors.hpp"
#include "actbench/numio.hpp"
#include "actbench/rng.hpp"

namespace actbench {

enum class TaskKind {
  kVectorClassification,
  kDocumentClassification,
  kSequenceTagging,
};

inline std::string_view task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kVectorClassification: return "vector-classification";
    case TaskKind::kDocumentClassification: return "document-classification";
    case TaskKind::kSequenceTagging: return "sequence-tagging";
  }
  throw UnknownNameError("unknown task kind");
}

inline TaskKind task_kind_from_name(std::string_view name) {
  if (name == "vector-classification") return TaskKind::kVectorClassification;
  if (name == "document-classification") return TaskKind::kDocumentClassification;
  if (name == "sequence-tagging") return TaskKind::kSequenceTagging;
  throw UnknownNameError("unknown task kind: " + std::string(name));
}

enum class Metric { kAccuracy, kMacroF1 };

// One dataset plus its splits and train-derived encodings.  Raw payloads are
// kept so the task can be re-split or written back out unchanged.
struct Task {
  std::string name;
  TaskKind kind = TaskKind::kVectorClassification;
  Metric metric = Metric::kAccuracy;

  // raw payloads (exactly one family is populated, by kind)
  std::vector<std::vector<double>> vectors;
  std::vector<std::string> raw_labels;                  // classification kinds
  std::vector<std::vector<std::string>> documents;      // document tokens
  std::vector<std::vector<std::string>> sequences;      // tagging tokens
  std::vector<std::vector<std::string>> raw_tags;       // tagging labels

  std::vector<std::size_t> train, dev, test;

  // train-derived encodings (valid once finalized)
  bool finalized = false;
  int n_classes = 0;                                    // rejected bucket = n_classes
  std::vector<std::string> label_names;
  std::vector<int> labels;                              // classification
  std::vector<std::vector<int>> tags;                   // tagging
  std::vector<std::vector<long>> token_ids;             // documents or sequences
  std::unordered_map<std::string, long> vocab;          // id 0 reserved for unknown
  long vocab_size = 0;
  long rejected_labels = 0;

  std::size_t size() const {
    switch (kind) {
      case TaskKind::kVectorClassification: return vectors.size();
      case TaskKind::kDocumentClassification: return documents.size();
      case TaskKind::kSequenceTagging: return sequences.size();
    }
    return 0;
  }

  long feature_dim() const {
    return vectors.empty() ? 0 : static_cast<long>(vectors.front().size());
  }

  // Build label set and vocabulary from the train split only, then encode
  // everything.  Dev/test labels outside the train label set go to a reserved
  // rejected bucket (index n_classes) and are counted.
  void finalize() {
    if (train.empty()) throw ConfigError("task '" + name + "' has no train split");
    rejected_labels = 0;
    std::set<std::string> label_set;
    if (kind == TaskKind::kSequenceTagging) {
      for (std::size_t i : train)
        for (const std::string& t : raw_tags[i]) label_set.insert(t);
    } else {
      for (std::size_t i : train) label_set.insert(raw_labels[i]);
    }
    label_names.assign(label_set.begin(), label_set.end());
    n_classes = static_cast<int>(label_names.size());
    std::map<std::string, int> label_id;
    for (int c = 0; c < n_classes; ++c) label_id[label_names[static_cast<std::size_t>(c)]] = c;
    auto encode_label = [&](const std::string& raw) {
      auto it = label_id.find(raw);
      if (it != label_id.end()) return it->second;
      ++rejected_labels;
      return n_classes;
    };

    if (kind != TaskKind::kSequenceTagging) {
      labels.resize(raw_labels.size());
      for (std::size_t i = 0; i < raw_labels.size(); ++i) labels[i] = encode_label(raw_labels[i]);
    } else {
      tags.resize(raw_tags.size());
      for (std::size_t i = 0; i < raw_tags.size(); ++i) {
        tags[i].resize(raw_tags[i].size());
        for (std::size_t t = 0; t < raw_tags[i].size(); ++t)
          tags[i][t] = encode_label(raw_tags[i][t]);
      }
    }

    if (kind != TaskKind::kVectorClassification) {
      const auto& items = kind == TaskKind::kDocumentClassification ? documents : sequences;
      std::set<std::string> token_set;
      for (std::size_t i : train)
        for (const std::string& tok : items[i]) token_set.insert(tok);
      vocab.clear();
      long next_id = 1;  // 0 = unknown
      for (const std::string& tok : token_set) vocab[tok] = next_id++;
      vocab_size = next_id;
      token_ids.resize(items.size());
      for (std::size_t i = 0; i < items.size(); ++i) {
        token_ids[i].resize(items[i].size());
        for (std::size_t t = 0; t < items[i].size(); ++t) {
          auto it = vocab.find(items[i][t]);
          token_ids[i][t] = it == vocab.end() ? 0 : it->second;
        }
      }
    } else {
      for (const auto& v : vectors)
        if (static_cast<long>(v.size()) != feature_dim())
          throw DimensionError("inconsistent feature dimensions in task '" + name + "'");
    }
    finalized = true;
  }
};

// Deterministic shuffle, then contiguous train/dev/test assignment.  Counts
// are floored; test takes the remainder.
inline void split_counts(Task& task, std::size_t n_train, std::size_t n_dev,
                         std::uint64_t seed) {
  const std::size_t n = task.size();
  if (n_train == 0 || n_train + n_dev >= n)
    throw ConfigError("split sizes leave no room for a test set");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  task.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  task.dev.assign(order.begin() + static_cast<long>(n_train),
                  order.begin() + static_cast<long>(n_train + n_dev));
  task.test.assign(order.begin() + static_cast<long>(n_train + n_dev), order.end());
  task.finalize();
}

inline void split_fractions(Task& task, double train_frac, double dev_frac,
                            std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(dev_frac > 0.0) || train_frac + dev_frac >= 1.0)
    throw ConfigError("split fractions must be positive and sum below 1");
  const double n = static_cast<double>(task.size());
  split_counts(task, static_cast<std::size_t>(n * train_frac),
               static_cast<std::size_t>(n * dev_frac), seed);
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

// Rows are `label<TAB>payload` for classification kinds, or blank-line
// separated `token<TAB>label` blocks for tagging.
inline Task load_tsv_dataset(const std::string& path, TaskKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  Task task;
  task.name = path;
  task.kind = kind;
  if (kind == TaskKind::kSequenceTagging) task.metric = Metric::kMacroF1;
  std::string line;
  long line_no = 0;
  std::vector<std::string> cur_tokens, cur_tags;
  auto flush_block = [&]() {
    if (cur_tokens.empty()) return;
    task.sequences.push_back(cur_tokens);
    task.raw_tags.push_back(cur_tags);
    cur_tokens.clear();
    cur_tags.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (kind == TaskKind::kSequenceTagging) {
      if (line.empty()) {
        flush_block();
        continue;
      }
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
        throw ParseError("expected token<TAB>label", line_no);
      cur_tokens.push_back(line.substr(0, tab));
      cur_tags.push_back(line.substr(tab + 1));
      continue;
    }
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError("expected label<TAB>payload", line_no);
    task.raw_labels.push_back(line.substr(0, tab));
    const std::string payload = line.substr(tab + 1);
    if (kind == TaskKind::kVectorClassification) {
      std::vector<double> v;
      for (const std::string& field : detail::split_ws(payload))
        v.push_back(parse_double(field, line_no));
      if (v.empty()) throw ParseError("empty feature vector", line_no);
      if (!task.vectors.empty() && v.size() != task.vectors.front().size())
        throw ParseError("feature width differs from first row", line_no);
      task.vectors.push_back(std::move(v));
    } else {
      std::vector<std::string> toks = detail::split_ws(payload);
      if (toks.empty()) throw ParseError("empty document", line_no);
      task.documents.push_back(std::move(toks));
    }
  }
  if (kind == TaskKind::kSequenceTagging) flush_block();
  if (task.size() == 0) throw ParseError("dataset has no items", line_no);
  return task;
}

inline void write_tsv_dataset(const std::string& path, const Task& task) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file: " + path);
  switch (task.kind) {
    case TaskKind::kVectorClassification:
      for (std::size_t i = 0; i < task.vectors.size(); ++i) {
        out << task.raw_labels[i] << '\t';
        for (std::size_t j = 0; j < task.vectors[i].size(); ++j) {
          if (j) out << ' ';
          out << format_double(task.vectors[i][j]);
        }
        out << '\n';
      }
      break;
    case TaskKind::kDocumentClassification:
      for (std::size_t i = 0; i < task.documents.size(); ++i) {
        out << task.raw_labels[i] << '\t';
        for (std::size_t j = 0; j < task.documents[i].size(); ++j) {
          if (j) out << ' ';
          out << task.documents[i][j];
        }
        out << '\n';
      }
      break;
    case TaskKind::kSequenceTagging:
      for (std::size_t i = 0; i < task.sequences.size(); ++i) {
        if (i) out << '\n';
        for (std::size_t t = 0; t < task.sequences[i].size(); ++t)
          out << task.sequences[i][t] << '\t' << task.raw_tags[i][t] << '\n';
      }
      break;
  }
}

// C gaussian clusters with pairwise mean distance `separation`.
inline Task gen_synth_vectors(int C, std::size_t n, long d, double separation,
                              std::uint64_t seed) {
  if (C < 2) throw ValueError("need at least 2 classes");
  if (d < C) throw ValueError("need dimension >= class count");
  if (separation < 0.0) throw ValueError("separation must be non-negative");
  Task task;
  task.name = "synth-vectors";
  task.kind = TaskKind::kVectorClassification;
  Rng rng(seed);
  const double coord = separation / std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(C));
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = rng.normal(0.0, 1.0);
    x[static_cast<std::size_t>(c)] += coord;
    task.vectors.push_back(std::move(x));
    task.raw_labels.push_back(std::to_string(c));
  }
  return task;
}

// Each class owns 3 marker tokens planted into background noise.  Lengths
// are >= 10 so every filter-size / layer-count combination from the search
// space fits without padding.
inline Task gen_synth_docs(int C, std::size_t n, long vocab, std::uint64_t seed) {
  if (C < 2) throw ValueError("need at least 2 classes");
  if (vocab < 10 * C) throw ValueError("vocabulary must be at least 10x class count");
  Task task;
  task.name = "synth-docs";
  task.kind = TaskKind::kDocumentClassification;
  Rng rng(seed);
  const long background_lo = 3 * C;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(C));
    const long len = rng.uniform_int(10, 20);
    std::vector<std::string> doc(static_cast<std::size_t>(len));
    for (auto& tok : doc)
      tok = "w" + std::to_string(rng.uniform_int(background_lo, vocab - 1));
    std::vector<std::size_t> pos(static_cast<std::size_t>(len));
    for (std::size_t p = 0; p < pos.size(); ++p) pos[p] = p;
    rng.shuffle(pos);
    for (int m = 0; m < 3; ++m)
      doc[pos[static_cast<std::size_t>(m)]] = "w" + std::to_string(3 * c + m);
    task.documents.push_back(std::move(doc));
    task.raw_labels.push_back(std::to_string(c));
  }
  return task;
}

// BIO-tagged spans: a trigger token starts a span (B-x), and the following
// `cont` tokens continue it (I-x).  The continuation token is shared between
// span types, so its label depends on context seen earlier in the sequence.
inline Task gen_synth_sequences(std::size_t n, std::uint64_t seed) {
  Task task;
  task.name = "synth-sequences";
  task.kind = TaskKind::kSequenceTagging;
  task.metric = Metric::kMacroF1;
  Rng rng(seed);
  const char* kTypes[2] = {"per", "loc"};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> toks, tags;
    const long lead = rng.uniform_int(2, 5);
    for (long t = 0; t < lead; ++t) {
      toks.push_back("bg" + std::to_string(rng.uniform_int(0, 9)));
      tags.push_back("O");
    }
    const char* type = kTypes[i % 2];
    toks.push_back(std::string("trig-") + type);
    tags.push_back(std::string("B-") + type);
    const long cont = static_cast<long>(i % 3);
    for (long t = 0; t < cont; ++t) {
      toks.push_back("cont");
      tags.push_back(std::string("I-") + type);
    }
    const long tail = rng.uniform_int(1, 4);
    for (long t = 0; t < tail; ++t) {
      toks.push_back("bg" + std::to_string(rng.uniform_int(0, 9)));
      tags.push_back("O");
    }
    task.sequences.push_back(std::move(toks));
    task.raw_tags.push_back(std::move(tags));
  }
  return task;
}

// Whitespace-separated embedding text: token then a fixed-width vector.
struct EmbeddingTable {
  long dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  std::vector<double> lookup(const std::string& token) const {
    auto it = vectors.find(token);
    if (it != vectors.end()) return it->second;
    return std::vector<double>(static_cast<std::size_t>(dim), 0.0);
  }
};

inline EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding file: " + path);
  EmbeddingTable table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = detail::split_ws(line);
    if (fields.size() < 2) throw ParseError("embedding line needs token and values", line_no);
    std::vector<double> v;
    for (std::size_t j = 1; j < fields.size(); ++j) v.push_back(parse_double(fields[j], line_no));
    if (table.dim == 0) table.dim = static_cast<long>(v.size());
    if (static_cast<long>(v.size()) != table.dim)
      throw ParseError("embedding width differs from first line", line_no);
    if (table.vectors.count(fields[0]))
      std::cerr << "warning: duplicate embedding token '" << fields[0] << "', last wins\n";
    table.vectors[fields[0]] = std::move(v);
  }
  return table;
}

}  // namespace actbench
