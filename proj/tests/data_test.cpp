#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "actbench/data.hpp"
#include "actbench/numio.hpp"
#include "actbench/store.hpp"

using namespace actbench;

namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("actbench_test_" + std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

// ---- numeric text io ----

TEST(NumIo, FormatRoundTripsShortest) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-8, 123456.789, 0.0}) {
    EXPECT_EQ(parse_double(format_double(v), 1), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_THROW(parse_double("1.2x", 3), ParseError);
  EXPECT_THROW(parse_long("", 1), ParseError);
}

// ---- tsv loading ----

TEST(DataTsv, ClassificationVectorsLoad) {
  TempDir dir;
  write_file(dir.file("v.tsv"),
             "pos\t1.0 2.0\nneg\t-1.0 0.5\npos\t0.25 0.125\n");
  Task task = load_tsv_dataset(dir.file("v.tsv").string(), TaskKind::kVectorClassification);
  ASSERT_EQ(task.size(), 3u);
  EXPECT_EQ(task.vectors[1], (std::vector<double>{-1.0, 0.5}));
  EXPECT_EQ(task.raw_labels[2], "pos");
}

TEST(DataTsv, DocumentsSplitOnWhitespace) {
  TempDir dir;
  write_file(dir.file("d.tsv"), "a\tthe cat sat\nb\tdog  ran\r\n");
  Task task = load_tsv_dataset(dir.file("d.tsv").string(), TaskKind::kDocumentClassification);
  ASSERT_EQ(task.size(), 2u);
  EXPECT_EQ(task.documents[0], (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_EQ(task.documents[1], (std::vector<std::string>{"dog", "ran"}));  // CR stripped
}

TEST(DataTsv, TaggingBlocksSeparatedByBlankLines) {
  TempDir dir;
  write_file(dir.file("t.tsv"), "Paris\tB-loc\nis\tO\n\nnice\tO\ncity\tO\n");
  Task task = load_tsv_dataset(dir.file("t.tsv").string(), TaskKind::kSequenceTagging);
  ASSERT_EQ(task.size(), 2u);
  EXPECT_EQ(task.sequences[0], (std::vector<std::string>{"Paris", "is"}));
  EXPECT_EQ(task.raw_tags[0], (std::vector<std::string>{"B-loc", "O"}));
  EXPECT_EQ(task.sequences[1].size(), 2u);
}

TEST(DataTsv, ErrorsCarryLineNumbers) {
  TempDir dir;
  write_file(dir.file("bad.tsv"), "pos\t1.0 2.0\nno-tab-here\n");
  try {
    load_tsv_dataset(dir.file("bad.tsv").string(), TaskKind::kVectorClassification);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  write_file(dir.file("empty.tsv"), "");
  EXPECT_THROW(load_tsv_dataset(dir.file("empty.tsv").string(), TaskKind::kVectorClassification),
               ParseError);
  EXPECT_THROW(load_tsv_dataset((dir.file("missing.tsv")).string(),
                                TaskKind::kVectorClassification),
               ConfigError);
}

TEST(DataTsv, WriteReadRoundTrip) {
  TempDir dir;
  for (auto kind : {TaskKind::kVectorClassification, TaskKind::kDocumentClassification,
                    TaskKind::kSequenceTagging}) {
    Task task;
    switch (kind) {
      case TaskKind::kVectorClassification:
        task = gen_synth_vectors(3, 30, 5, 2.0, 7);
        break;
      case TaskKind::kDocumentClassification:
        task = gen_synth_docs(3, 30, 40, 7);
        break;
      case TaskKind::kSequenceTagging:
        task = gen_synth_sequences(30, 7);
        break;
    }
    const std::string path = dir.file("rt.tsv").string();
    write_tsv_dataset(path, task);
    const Task back = load_tsv_dataset(path, kind);
    ASSERT_EQ(back.size(), task.size());
    EXPECT_EQ(back.vectors, task.vectors);
    EXPECT_EQ(back.raw_labels, task.raw_labels);
    EXPECT_EQ(back.documents, task.documents);
    EXPECT_EQ(back.sequences, task.sequences);
    EXPECT_EQ(back.raw_tags, task.raw_tags);
  }
}

// ---- splits + finalize ----

TEST(DataSplit, CountsAreContiguousAndSeedStable) {
  Task a = gen_synth_vectors(3, 50, 4, 2.0, 1);
  split_counts(a, 30, 10, 5);
  EXPECT_EQ(a.train.size(), 30u);
  EXPECT_EQ(a.dev.size(), 10u);
  EXPECT_EQ(a.test.size(), 10u);
  EXPECT_TRUE(a.finalized);

  Task b = gen_synth_vectors(3, 50, 4, 2.0, 1);
  split_counts(b, 30, 10, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);

  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.dev.begin(), a.dev.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 50u);  // disjoint cover

  Task c = gen_synth_vectors(3, 50, 4, 2.0, 1);
  EXPECT_THROW(split_counts(c, 40, 10, 5), ConfigError);  // no room for test
}

TEST(DataSplit, FractionsFloorAndValidate) {
  Task a = gen_synth_vectors(2, 10, 4, 2.0, 1);
  split_fractions(a, 0.65, 0.15, 5);
  EXPECT_EQ(a.train.size(), 6u);  // floor(6.5)
  EXPECT_EQ(a.dev.size(), 1u);    // floor(1.5)
  EXPECT_EQ(a.test.size(), 3u);
  Task b = gen_synth_vectors(2, 10, 4, 2.0, 1);
  EXPECT_THROW(split_fractions(b, 0.9, 0.2, 5), ConfigError);
}

TEST(DataFinalize, LabelsAndVocabComeFromTrainOnly) {
  Task task;
  task.kind = TaskKind::kDocumentClassification;
  task.name = "leak";
  task.documents = {{"alpha", "beta"}, {"beta", "gamma"}, {"delta", "omega"}};
  task.raw_labels = {"x", "y", "z"};
  task.train = {0, 1};
  task.dev = {2};
  task.test = {2};
  task.finalize();
  EXPECT_EQ(task.n_classes, 2);  // z unseen in train
  EXPECT_EQ(task.labels[2], task.n_classes);  // rejected bucket
  EXPECT_EQ(task.rejected_labels, 1);         // counted once per encoded item
  EXPECT_EQ(task.vocab.count("delta"), 0u);
  EXPECT_EQ(task.token_ids[2][0], 0);  // unknown id
  EXPECT_EQ(task.vocab_size, 4);       // unknown + alpha,beta,gamma
}

TEST(DataFinalize, InconsistentVectorWidthsRejected) {
  Task task;
  task.kind = TaskKind::kVectorClassification;
  task.vectors = {{1, 2}, {1, 2, 3}};
  task.raw_labels = {"a", "b"};
  task.train = {0, 1};
  EXPECT_THROW(task.finalize(), DimensionError);
}

// ---- generators ----

TEST(Generators, VectorsSeparationAndLabels) {
  Task task = gen_synth_vectors(4, 200, 8, 3.0, 9);
  EXPECT_EQ(task.size(), 200u);
  EXPECT_EQ(task.feature_dim(), 8);
  std::set<std::string> labels(task.raw_labels.begin(), task.raw_labels.end());
  EXPECT_EQ(labels.size(), 4u);
  // same seed -> same data
  Task again = gen_synth_vectors(4, 200, 8, 3.0, 9);
  EXPECT_EQ(task.vectors, again.vectors);
  EXPECT_THROW(gen_synth_vectors(1, 10, 4, 1.0, 9), ValueError);
  EXPECT_THROW(gen_synth_vectors(5, 10, 3, 1.0, 9), ValueError);  // d < C
}

TEST(Generators, DocsCarryClassMarkersAndMinLength) {
  Task task = gen_synth_docs(3, 120, 40, 11);
  EXPECT_EQ(task.size(), 120u);
  for (std::size_t i = 0; i < task.size(); ++i) {
    EXPECT_GE(task.documents[i].size(), 10u);
    EXPECT_LE(task.documents[i].size(), 20u);
    const int c = std::stoi(task.raw_labels[i]);
    int markers = 0;
    for (const std::string& tok : task.documents[i]) {
      const int w = std::stoi(tok.substr(1));
      if (w >= 3 * c && w < 3 * (c + 1)) ++markers;
    }
    EXPECT_EQ(markers, 3) << "doc " << i;
  }
  EXPECT_THROW(gen_synth_docs(3, 10, 20, 11), ValueError);  // vocab < 10*C
}

TEST(Generators, SequencesProduceAllFiveTagLabels) {
  Task task = gen_synth_sequences(40, 13);
  std::set<std::string> seen;
  for (const auto& tags : task.raw_tags)
    for (const std::string& t : tags) seen.insert(t);
  EXPECT_EQ(seen, (std::set<std::string>{"B-loc", "B-per", "I-loc", "I-per", "O"}));
  for (std::size_t i = 0; i < task.size(); ++i)
    EXPECT_EQ(task.sequences[i].size(), task.raw_tags[i].size());
  EXPECT_EQ(task.metric, Metric::kMacroF1);
}

// ---- embeddings ----

TEST(Embeddings, LoadLookupAndErrors) {
  TempDir dir;
  write_file(dir.file("emb.txt"), "cat 1.0 2.0 3.0\ndog 0.5 0.5 0.5\ncat 9.0 9.0 9.0\n");
  testing::internal::CaptureStderr();
  const EmbeddingTable table = load_embeddings(dir.file("emb.txt").string());
  const std::string warn = testing::internal::GetCapturedStderr();
  EXPECT_NE(warn.find("duplicate"), std::string::npos);
  EXPECT_EQ(table.dim, 3);
  EXPECT_EQ(table.lookup("cat"), (std::vector<double>{9.0, 9.0, 9.0}));  // last wins
  EXPECT_EQ(table.lookup("bird"), (std::vector<double>{0.0, 0.0, 0.0}));

  write_file(dir.file("ragged.txt"), "cat 1.0 2.0\ndog 0.5\n");
  EXPECT_THROW(load_embeddings(dir.file("ragged.txt").string()), ParseError);
}

// ---- results store ----

TrialRecord make_record(const std::string& act, long draw, long init, double dev) {
  TrialRecord r;
  r.task = "exp";
  r.activation = act;
  r.draw = draw;
  r.init = init;
  r.status = "ok";
  r.best_dev = dev;
  r.test = dev / 2;
  r.epochs = 3;
  r.seconds = 0.0;
  return r;
}

TEST(Store, AppendReloadAndDedupe) {
  TempDir dir;
  const std::string path = dir.file("s.jsonl").string();
  {
    ResultsStore store(path);
    store.append(make_record("relu", 0, 0, 0.5));
    store.append(make_record("relu", 0, 1, 0.6));
    store.append(make_record("relu", 0, 0, 0.9));  // duplicate key: ignored
    EXPECT_EQ(store.records().size(), 2u);
    EXPECT_TRUE(store.has(make_record("relu", 0, 1, 0).key()));
    EXPECT_FALSE(store.has(make_record("tanh", 0, 0, 0).key()));
  }
  ResultsStore reread(path);
  ASSERT_EQ(reread.records().size(), 2u);
  EXPECT_EQ(reread.records()[0].best_dev, 0.5);
  EXPECT_EQ(reread.records()[1].best_dev, 0.6);
}

TEST(Store, TornFinalRecordDroppedCorruptInteriorRejected) {
  TempDir dir;
  const std::string path = dir.file("torn.jsonl").string();
  {
    ResultsStore store(path);
    store.append(make_record("relu", 0, 0, 0.5));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"activation":"relu","best_dev":0.9,"draw":1,)";  // torn tail, no newline
  }
  ResultsStore store(path);
  EXPECT_EQ(store.records().size(), 1u);  // torn line dropped

  write_file(dir.file("corrupt.jsonl"), "not json at all\n{\"x\":1}\n");
  EXPECT_THROW(ResultsStore(dir.file("corrupt.jsonl").string()), ParseError);
}

TEST(Store, ResumeSkipsExistingKeys) {
  TempDir dir;
  const std::string path = dir.file("resume.jsonl").string();
  {
    ResultsStore store(path);
    store.append(make_record("relu", 0, 0, 0.5));
  }
  ResultsStore resumed(path);
  resumed.append(make_record("relu", 0, 0, 0.999));  // existing key: no-op
  resumed.append(make_record("relu", 1, 0, 0.7));
  ResultsStore verify(path);
  ASSERT_EQ(verify.records().size(), 2u);
  EXPECT_EQ(verify.records()[0].best_dev, 0.5);
}

TEST(Store, JsonLinesAreByteStableAcrossRewrites) {
  TempDir dir;
  const std::string p1 = dir.file("a.jsonl").string();
  const std::string p2 = dir.file("b.jsonl").string();
  {
    ResultsStore s1(p1);
    s1.append(make_record("swish", 3, 1, 0.7311));
  }
  {
    ResultsStore s2(p2);
    s2.append(make_record("swish", 3, 1, 0.7311));
  }
  std::ifstream f1(p1), f2(p2);
  std::string l1, l2;
  std::getline(f1, l1);
  std::getline(f2, l2);
  EXPECT_EQ(l1, l2);
  EXPECT_FALSE(l1.empty());
}

}  // namespace
