#pragma once

#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "actbench/errors.hpp"

namespace actbench {

using json = nlohmann::json;

// One finished trial, as persisted.  `seconds` is wall time and may be
// recorded as 0 when a run wants byte-reproducible logs.
struct TrialRecord {
  std::string task;
  std::string activation;
  long draw = 0;
  long init = 0;
  std::string status;  // ok | diverged
  double best_dev = 0.0;
  double test = 0.0;
  long epochs = 0;
  double seconds = 0.0;

  using Key = std::tuple<std::string, std::string, long, long>;
  Key key() const { return {task, activation, draw, init}; }

  json to_json() const {
    return json{{"task", task},       {"activation", activation}, {"draw", draw},
                {"init", init},       {"status", status},         {"best_dev", best_dev},
                {"test", test},       {"epochs", epochs},         {"seconds", seconds}};
  }

  static TrialRecord from_json(const json& j) {
    TrialRecord r;
    r.task = j.at("task").get<std::string>();
    r.activation = j.at("activation").get<std::string>();
    r.draw = j.at("draw").get<long>();
    r.init = j.at("init").get<long>();
    r.status = j.at("status").get<std::string>();
    r.best_dev = j.at("best_dev").get<double>();
    r.test = j.at("test").get<double>();
    r.epochs = j.at("epochs").get<long>();
    r.seconds = j.at("seconds").get<double>();
    return r;
  }
};

// Append-only line-delimited record log.  A torn final line (no trailing
// newline or unparseable tail) is dropped on load; duplicate keys keep the
// first occurrence.
class ResultsStore {
 public:
  explicit ResultsStore(std::string path) : path_(std::move(path)) { reload(); }

  const std::string& path() const { return path_; }
  const std::vector<TrialRecord>& records() const { return records_; }
  bool has(const TrialRecord::Key& key) const { return index_.count(key) > 0; }
  std::size_t size() const { return records_.size(); }

  void append(const TrialRecord& r) {
    std::lock_guard<std::mutex> lock(mu_);
    if (index_.count(r.key())) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to results store: " + path_);
    out << r.to_json().dump() << '\n';
    out.flush();
    index_.emplace(r.key(), records_.size());
    records_.push_back(r);
  }

 private:
  void reload() {
    records_.clear();
    index_.clear();
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // fresh store
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    long line_no = 0;
    while (pos < content.size()) {
      const std::size_t nl = content.find('\n', pos);
      const bool torn_tail = nl == std::string::npos;
      const std::string line = content.substr(pos, torn_tail ? std::string::npos : nl - pos);
      pos = torn_tail ? content.size() : nl + 1;
      ++line_no;
      if (line.empty()) continue;
      TrialRecord r;
      try {
        r = TrialRecord::from_json(json::parse(line));
      } catch (const json::exception&) {
        const bool is_last = pos >= content.size();
        if (is_last || torn_tail) break;  // torn final record: drop it
        throw ParseError("corrupt results record", line_no);
      }
      if (index_.count(r.key())) continue;
      index_.emplace(r.key(), records_.size());
      records_.push_back(std::move(r));
    }
  }

  std::string path_;
  std::vector<TrialRecord> records_;
  std::map<TrialRecord::Key, std::size_t> index_;
  std::mutex mu_;
};

}  // namespace actbench
