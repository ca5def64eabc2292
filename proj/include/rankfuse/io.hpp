#pragma once

// File formats.
//
//   predictions   JSONL  {"input_id": str, "model_id": str, "predictions": [str, ...]}
//   ground truth  JSONL  {"input_id": str, "ground_truth": str}
//   theta         JSON   {"model_ids": [str, ...], "k_max": int, "theta": [[num, ...], ...]}
//   merged        JSONL  {"input_id": str, "ranked": [str, ...], "scores": [num, ...]}
//   fingerprints  JSONL  {"id": str, "dim": int, "counts": {"<index>": int, ...}}
//   comparisons   JSONL  {"a": str, "b": str, "winner": "a" | "b"}
//   metadata      CSV    input_id,value  (an optional header row is skipped)
//
// Prediction records of one input must be contiguous, with models in the
// same order for every input.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankfuse/elo.hpp"
#include "rankfuse/errors.hpp"
#include "rankfuse/metrics.hpp"
#include "rankfuse/ranklist.hpp"
#include "rankfuse/similarity.hpp"
#include "rankfuse/theta_learner.hpp"

namespace rankfuse::io {

using nlohmann::json;

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

// Line-oriented JSON reader; blank lines are skipped. Errors carry
// "<name>:<line>".
class JsonlReader {
 public:
  JsonlReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  bool next(json& record) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (detail::trim(line).empty()) continue;
      try {
        record = json::parse(line);
      } catch (const json::parse_error& e) {
        throw error(std::string("malformed JSON: ") + e.what());
      }
      if (!record.is_object()) throw error("expected a JSON object");
      return true;
    }
    return false;
  }

  DataError error(const std::string& what) const {
    return DataError(name_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  std::size_t line() const noexcept { return line_no_; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

namespace detail {

inline const json& field(const JsonlReader& r, const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end()) throw r.error(std::string("missing field \"") + key + "\"");
  return *it;
}

inline std::string string_field(const JsonlReader& r, const json& rec, const char* key) {
  const auto& v = field(r, rec, key);
  if (!v.is_string()) throw r.error(std::string("field \"") + key + "\" must be a string");
  auto s = v.get<std::string>();
  if (rankfuse::detail::trim(s).empty()) {
    throw r.error(std::string("field \"") + key + "\" must be non-empty");
  }
  return s;
}

inline std::vector<std::string> string_array(const JsonlReader& r, const json& rec,
                                             const char* key) {
  const auto& v = field(r, rec, key);
  if (!v.is_array()) throw r.error(std::string("field \"") + key + "\" must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string()) throw r.error(std::string("\"") + key + "\" entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predictions

struct InstancePredictions {
  std::string input_id;
  std::vector<ModelOutput> outputs;
};

// Streams prediction records grouped by input.
class PredictionReader {
 public:
  // Lists are cut to `k_max` entries after de-duplication.
  PredictionReader(std::istream& in, std::string name,
                   std::size_t k_max = std::numeric_limits<std::size_t>::max())
      : reader_(in, std::move(name)), k_max_(k_max) {}

  std::optional<InstancePredictions> next() {
    while (true) {
      json rec;
      if (!reader_.next(rec)) break;
      auto input_id = detail::string_field(reader_, rec, "input_id");
      auto model_id = detail::string_field(reader_, rec, "model_id");
      auto keys = detail::string_array(reader_, rec, "predictions");
      ModelOutput output;
      try {
        output = ModelOutput::from_keys(std::move(model_id), keys, k_max_);
      } catch (const DataError& e) {
        throw reader_.error(e.what());
      }
      if (pending_ && pending_->input_id != input_id) {
        auto done = finish(std::move(input_id), std::move(output));
        return done;
      }
      if (!pending_) {
        if (finished_.contains(input_id)) {
          throw reader_.error("records for input '" + input_id + "' are not contiguous");
        }
        pending_ = InstancePredictions{std::move(input_id), {}};
      }
      append(std::move(output));
    }
    if (!pending_) return std::nullopt;
    auto done = std::move(*pending_);
    pending_.reset();
    check_models(done);
    return done;
  }

  // Model order established by the first input; empty before that.
  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }

 private:
  void append(ModelOutput output) {
    for (const auto& o : pending_->outputs) {
      if (o.model_id == output.model_id) {
        throw reader_.error("duplicate record for model '" + output.model_id +
                            "' and input '" + pending_->input_id + "'");
      }
    }
    pending_->outputs.push_back(std::move(output));
  }

  // Closes the pending input and starts a new one with `first`.
  InstancePredictions finish(std::string next_id, ModelOutput first) {
    auto done = std::move(*pending_);
    check_models(done);
    if (finished_.contains(next_id)) {
      throw reader_.error("records for input '" + next_id + "' are not contiguous");
    }
    pending_ = InstancePredictions{std::move(next_id), {}};
    append(std::move(first));
    return done;
  }

  void check_models(const InstancePredictions& inst) {
    finished_.insert(inst.input_id);
    if (model_ids_.empty()) {
      for (const auto& o : inst.outputs) model_ids_.push_back(o.model_id);
      return;
    }
    bool same = inst.outputs.size() == model_ids_.size();
    for (std::size_t i = 0; same && i < model_ids_.size(); ++i) {
      same = inst.outputs[i].model_id == model_ids_[i];
    }
    if (!same) {
      std::string got;
      for (const auto& o : inst.outputs) got += (got.empty() ? "" : ",") + o.model_id;
      std::string want;
      for (const auto& id : model_ids_) want += (want.empty() ? "" : ",") + id;
      throw ConfigError(reader_.name() + ": input '" + inst.input_id + "' lists models [" + got +
                        "], expected [" + want + "] as in the first input");
    }
  }

  JsonlReader reader_;
  std::size_t k_max_;
  std::optional<InstancePredictions> pending_;
  std::unordered_set<std::string> finished_;
  std::vector<std::string> model_ids_;
};

inline TruthMap read_ground_truth(std::istream& in, const std::string& name) {
  JsonlReader reader(in, name);
  TruthMap truth;
  json rec;
  while (reader.next(rec)) {
    auto id = detail::string_field(reader, rec, "input_id");
    auto key = detail::string_field(reader, rec, "ground_truth");
    if (!truth.emplace(id, PredictionKey(key).str()).second) {
      throw reader.error("duplicate ground truth for input '" + id + "'");
    }
  }
  return truth;
}

inline TruthMap read_ground_truth(const std::string& path) {
  auto in = open_input(path);
  return read_ground_truth(in, path);
}

// Joins predictions with ground truth. Every input must appear in both.
inline std::vector<EnsembleInstance> read_dataset(std::istream& predictions,
                                                  const std::string& predictions_name,
                                                  const TruthMap& truth, std::size_t k_max) {
  PredictionReader reader(predictions, predictions_name, k_max);
  std::vector<EnsembleInstance> dataset;
  while (auto inst = reader.next()) {
    auto it = truth.find(inst->input_id);
    if (it == truth.end()) {
      throw DataError(predictions_name + ": no ground truth for input '" + inst->input_id + "'");
    }
    dataset.push_back({std::move(inst->input_id), PredictionKey(it->second),
                       std::move(inst->outputs)});
  }
  if (dataset.size() != truth.size()) {
    std::unordered_set<std::string> seen;
    for (const auto& d : dataset) seen.insert(d.input_id);
    for (const auto& [id, key] : truth) {
      if (!seen.contains(id)) {
        throw DataError("ground truth for input '" + id + "' has no predictions");
      }
    }
  }
  return dataset;
}

inline std::vector<EnsembleInstance> read_dataset(const std::string& predictions_path,
                                                  const std::string& truth_path,
                                                  std::size_t k_max) {
  const auto truth = read_ground_truth(truth_path);
  auto in = open_input(predictions_path);
  return read_dataset(in, predictions_path, truth, k_max);
}

inline void write_prediction_records(std::ostream& out, const std::string& input_id,
                                     std::span<const ModelOutput> outputs) {
  for (const auto& o : outputs) {
    json keys = json::array();
    for (const auto& k : o.predictions) keys.push_back(k.str());
    out << json{{"input_id", input_id}, {"model_id", o.model_id}, {"predictions", keys}}.dump()
        << '\n';
  }
}

inline void write_predictions(std::ostream& out, std::span<const EnsembleInstance> dataset) {
  for (const auto& inst : dataset) write_prediction_records(out, inst.input_id, inst.outputs);
}

inline void write_ground_truth(std::ostream& out, std::span<const EnsembleInstance> dataset) {
  for (const auto& inst : dataset) {
    out << json{{"input_id", inst.input_id}, {"ground_truth", inst.ground_truth.str()}}.dump()
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Theta checkpoint

inline json theta_to_json(const ThetaMatrix& theta) {
  return json{{"model_ids", theta.model_ids()},
              {"k_max", theta.k_max()},
              {"theta", theta.weights().to_rows()}};
}

inline ThetaMatrix theta_from_json(const json& doc, const std::string& name) {
  auto fail = [&](const std::string& what) { return DataError(name + ": " + what); };
  if (!doc.is_object()) throw fail("theta checkpoint must be a JSON object");
  for (const char* key : {"model_ids", "k_max", "theta"}) {
    if (!doc.contains(key)) throw fail(std::string("missing field \"") + key + "\"");
  }
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t k_max = 0;
  try {
    ids = doc.at("model_ids").get<std::vector<std::string>>();
    rows = doc.at("theta").get<std::vector<std::vector<double>>>();
    const auto& k = doc.at("k_max");
    if (!k.is_number_integer() || k.get<long long>() <= 0) {
      throw fail("\"k_max\" must be a positive integer");
    }
    k_max = k.get<std::size_t>();
  } catch (const json::exception& e) {
    throw fail(std::string("bad field type: ") + e.what());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != k_max) {
      throw fail("theta row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                 " entries, expected k_max = " + std::to_string(k_max));
    }
  }
  std::unordered_set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw fail("duplicate model id");
  try {
    return ThetaMatrix(std::move(ids), Matrix<double>::from_rows(rows));
  } catch (const ArgumentError& e) {
    throw fail(e.what());
  }
}

inline ThetaMatrix read_theta(const std::string& path) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": malformed JSON: " + e.what());
  }
  return theta_from_json(doc, path);
}

// ---------------------------------------------------------------------------
// Merged rankings

inline void write_merged(std::ostream& out, const std::string& input_id,
                         std::span<const ScoredKey> merged) {
  json ranked = json::array();
  json scores = json::array();
  for (const auto& s : merged) {
    ranked.push_back(s.key.str());
    scores.push_back(s.score);
  }
  out << json{{"input_id", input_id}, {"ranked", ranked}, {"scores", scores}}.dump() << '\n';
}

inline std::vector<RankedList> read_merged(std::istream& in, const std::string& name) {
  JsonlReader reader(in, name);
  std::vector<RankedList> out;
  json rec;
  while (reader.next(rec)) {
    auto id = detail::string_field(reader, rec, "input_id");
    auto ranked = detail::string_array(reader, rec, "ranked");
    for (auto& k : ranked) k = std::string(rankfuse::detail::trim(k));
    out.push_back({std::move(id), std::move(ranked)});
  }
  return out;
}

inline std::vector<RankedList> read_merged(const std::string& path) {
  auto in = open_input(path);
  return read_merged(in, path);
}

// ---------------------------------------------------------------------------
// Metadata CSV

inline std::unordered_map<std::string, double> read_metadata_csv(std::istream& in,
                                                                 const std::string& name) {
  std::unordered_map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = rankfuse::detail::trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    auto fail = [&](const std::string& what) {
      return DataError(name + ":" + std::to_string(line_no) + ": " + what);
    };
    if (comma == std::string_view::npos) throw fail("expected 'input_id,value'");
    const std::string id(rankfuse::detail::trim(text.substr(0, comma)));
    const auto value_text = rankfuse::detail::trim(text.substr(comma + 1));
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc() || ptr != value_text.data() + value_text.size()) {
      if (out.empty() && line_no == 1) continue;  // header row
      throw fail("cannot parse value '" + std::string(value_text) + "'");
    }
    if (id.empty()) throw fail("empty input_id");
    if (!out.emplace(id, value).second) throw fail("duplicate input_id '" + id + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fingerprints

// All-zero fingerprints are rejected here.
inline std::vector<CountFingerprint> read_fingerprints(std::istream& in, const std::string& name) {
  JsonlReader reader(in, name);
  std::vector<CountFingerprint> out;
  std::unordered_set<std::string> ids;
  json rec;
  while (reader.next(rec)) {
    auto id = detail::string_field(reader, rec, "id");
    const auto& dim_v = detail::field(reader, rec, "dim");
    if (!dim_v.is_number_integer() || dim_v.get<long long>() <= 0) {
      throw reader.error("\"dim\" must be a positive integer");
    }
    const auto& counts_v = detail::field(reader, rec, "counts");
    if (!counts_v.is_object()) throw reader.error("\"counts\" must be an object");
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& [key, value] : counts_v.items()) {
      std::uint32_t index = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
      if (ec != std::errc() || ptr != key.data() + key.size()) {
        throw reader.error("feature index '" + key + "' is not a non-negative integer");
      }
      if (!value.is_number_integer() || value.get<long long>() < 1 ||
          value.get<long long>() > std::numeric_limits<std::uint32_t>::max()) {
        throw reader.error("count for feature " + key + " must be a positive integer");
      }
      counts[index] = value.get<std::uint32_t>();
    }
    if (counts.empty()) throw reader.error("fingerprint '" + id + "' is all zero");
    if (!ids.insert(id).second) throw reader.error("duplicate fingerprint id '" + id + "'");
    try {
      out.emplace_back(std::move(id), dim_v.get<std::size_t>(), counts);
    } catch (const ArgumentError& e) {
      throw reader.error(e.what());
    }
  }
  return out;
}

inline std::vector<CountFingerprint> read_fingerprints(const std::string& path) {
  auto in = open_input(path);
  return read_fingerprints(in, path);
}

inline json fingerprint_to_json(const CountFingerprint& fp) {
  json counts = json::object();
  for (const auto& e : fp.entries()) counts[std::to_string(e.index)] = e.count;
  return json{{"id", fp.id()}, {"dim", fp.dim()}, {"counts", counts}};
}

// ---------------------------------------------------------------------------
// Comparisons

inline std::vector<ComparisonRecord> read_comparisons(std::istream& in, const std::string& name) {
  JsonlReader reader(in, name);
  std::vector<ComparisonRecord> out;
  json rec;
  while (reader.next(rec)) {
    auto a = detail::string_field(reader, rec, "a");
    auto b = detail::string_field(reader, rec, "b");
    const auto winner = detail::string_field(reader, rec, "winner");
    if (a == b) throw reader.error("source '" + a + "' compared with itself");
    Winner w;
    if (winner == "a") {
      w = Winner::kA;
    } else if (winner == "b") {
      w = Winner::kB;
    } else {
      throw reader.error("\"winner\" must be \"a\" or \"b\"");
    }
    out.push_back({std::move(a), std::move(b), w});
  }
  return out;
}

inline std::vector<ComparisonRecord> read_comparisons(const std::string& path) {
  auto in = open_input(path);
  return read_comparisons(in, path);
}

inline json comparison_to_json(const ComparisonRecord& c) {
  return json{{"a", c.source_a}, {"b", c.source_b}, {"winner", c.winner == Winner::kA ? "a" : "b"}};
}

// ---------------------------------------------------------------------------
// Training log

inline void write_training_log(std::ostream& out, std::span<const TrainLogEntry> log) {
  out << "step,lr,T,loss\n";
  char buf[128];
  for (const auto& e : log) {
    // Shortest round-trip form keeps the file byte-stable across runs.
    auto append = [&](char* p, double v) {
      return std::to_chars(p, buf + sizeof(buf), v).ptr;
    };
    char* p = std::to_chars(buf, buf + sizeof(buf), e.step).ptr;
    *p++ = ',';
    p = append(p, e.lr);
    *p++ = ',';
    p = append(p, e.temperature);
    *p++ = ',';
    p = append(p, e.loss);
    out.write(buf, p - buf) << '\n';
  }
}

}  // namespace rankfuse::io
