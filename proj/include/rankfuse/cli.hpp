#pragma once

// The `rankfuse` command line: synth, fit, merge, eval, baseline, simfilter,
// tokenize and elo. Every file written next to a `--out`-style path gets a
// `<path>.manifest.json` sidecar recording the resolved configuration and
// input digests.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rankfuse/elo.hpp"
#include "rankfuse/errors.hpp"
#include "rankfuse/io.hpp"
#include "rankfuse/metrics.hpp"
#include "rankfuse/ranklist.hpp"
#include "rankfuse/similarity.hpp"
#include "rankfuse/smiles_tokenizer.hpp"
#include "rankfuse/synthgen.hpp"
#include "rankfuse/theta_learner.hpp"

namespace rankfuse::cli {

using nlohmann::json;

inline constexpr const char* kToolName = "rankfuse";
inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_file(const std::string& path) {
  auto in = io::open_input(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw DataError("cannot initialize SHA-256");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return "sha256:" + hex.str();
}

// Resolved configuration of one run.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) {
    doc_ = {{"tool", kToolName}, {"version", kToolVersion}, {"subcommand", std::move(subcommand)},
            {"config", json::object()}, {"inputs", json::object()}};
  }

  template <typename T>
  Manifest& set(const std::string& key, const T& value) {
    doc_["config"][key] = value;
    return *this;
  }

  Manifest& input(const std::string& role, const std::string& path) {
    doc_["inputs"][role] = {{"path", path}, {"digest", sha256_file(path)}};
    return *this;
  }

  Manifest& seed(std::uint64_t s) {
    doc_["seed"] = s;
    return *this;
  }

  json& extra() { return doc_; }

  void write_beside(const std::string& output_path) const {
    if (output_path == "-") return;
    auto out = io::open_output(output_path + ".manifest.json");
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
};

// Writes to a file, or to `fallback` when the path is "-".
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path == "-") {
      stream_ = &fallback;
    } else {
      file_ = io::open_output(path);
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw DataError("failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

inline std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = rankfuse::detail::trim(item);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
      throw ArgumentError(std::string("cannot parse ") + what + " entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = rankfuse::detail::trim(item);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
      throw ArgumentError(std::string("cannot parse ") + what + " entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.emplace_back(rankfuse::detail::trim(item));
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
  std::string kind = "complementary";
  std::uint64_t seed = 0;
  std::string predictions;
  std::string ground_truth;
  std::size_t models = 2;
  std::size_t k_max = 10;
  std::size_t n_instances = 1000;
  double rho = 0.0;
  std::size_t pool = 0;
  std::vector<std::string> placement;
  std::string model_ids;
};

inline int cmd_synth(const SynthArgs& a, Streams& s) {
  SynthDataset ds;
  if (a.kind == "complementary") {
    ds = complementary_fixture(a.seed);
  } else if (a.kind == "placement") {
    SynthConfig cfg;
    cfg.m = a.models;
    cfg.k_max = a.k_max;
    cfg.n_instances = a.n_instances;
    cfg.rho = a.rho;
    cfg.pool_size = a.pool;
    cfg.seed = a.seed;
    if (!a.model_ids.empty()) cfg.model_ids = parse_string_list(a.model_ids);
    for (const auto& p : a.placement) cfg.placement.push_back(parse_double_list(p, "placement"));
    ds = gen_dataset(cfg);
  } else {
    throw ArgumentError("unknown synth kind '" + a.kind + "'");
  }

  {
    OutputTarget out(a.predictions, s.out);
    io::write_predictions(out.stream(), ds.instances);
    out.close();
  }
  {
    OutputTarget out(a.ground_truth, s.out);
    io::write_ground_truth(out.stream(), ds.instances);
    out.close();
  }

  Manifest manifest("synth");
  manifest.set("kind", ds.kind).set("model_ids", ds.model_ids).seed(a.seed);
  json params = json::object();
  for (const auto& [k, v] : ds.parameters) params[k] = v;
  manifest.set("parameters", params);
  if (a.kind == "placement") manifest.set("placement", a.placement);
  manifest.write_beside(a.predictions);
  manifest.write_beside(a.ground_truth);
  return 0;
}

struct FitArgs {
  std::string predictions;
  std::string ground_truth;
  std::size_t k_max = 50;
  std::string out;
  std::string log;
  std::string schedule = "geometric";
  TrainConfig cfg;
};

inline int cmd_fit(FitArgs a, Streams& s) {
  auto kind = parse_schedule_kind(a.schedule);
  if (!kind) throw ArgumentError("unknown schedule '" + a.schedule + "'");
  a.cfg.schedule_kind = *kind;
  a.cfg.validate();
  if (a.k_max == 0) throw ArgumentError("k_max must be positive");

  const auto dataset = io::read_dataset(a.predictions, a.ground_truth, a.k_max);
  if (dataset.empty()) throw DataError(a.predictions + ": no prediction records");
  const auto result = fit(dataset, a.k_max, a.cfg);
  s.err << "fit: " << dataset.size() << " instances, " << result.num_instances
        << " with informative pairs, " << result.num_pairs << " pairs kept, "
        << result.skipped_pairs << " skipped\n";
  if (result.status == FitStatus::kEmptyPairTable) {
    throw DegeneracyError(
        "no informative (ground truth, prediction) pairs: every pair is ordered the same way "
        "by all models, so the weights cannot be learned");
  }

  {
    OutputTarget out(a.out, s.out);
    out.stream() << io::theta_to_json(result.theta).dump(2) << '\n';
    out.close();
  }
  if (!a.log.empty()) {
    OutputTarget log(a.log, s.out);
    io::write_training_log(log.stream(), result.log);
    log.close();
  }

  const auto& c = a.cfg;
  Manifest manifest("fit");
  manifest.input("predictions", a.predictions)
      .input("ground_truth", a.ground_truth)
      .set("k_max", a.k_max)
      .set("steps", c.steps)
      .set("lr0", c.lr0)
      .set("T0", c.T0)
      .set("decay_factor", c.decay_factor)
      .set("decay_every", c.decay_every)
      .set("epsilon_margin", c.epsilon_margin)
      .set("w_reg", c.w_reg)
      .set("adam_beta1", c.adam_beta1)
      .set("adam_beta2", c.adam_beta2)
      .set("adam_eps", c.adam_eps)
      .set("schedule", to_string(c.schedule_kind));
  manifest.extra()["pairs"] = {{"instances", dataset.size()},
                               {"informative_instances", result.num_instances},
                               {"kept", result.num_pairs},
                               {"skipped", result.skipped_pairs}};
  manifest.write_beside(a.out);
  if (!a.log.empty()) manifest.write_beside(a.log);
  return 0;
}

struct MergeArgs {
  std::string predictions;
  std::string theta;
  std::size_t output_limit = 50;
  std::string out = "-";
};

inline int cmd_merge(const MergeArgs& a, Streams& s) {
  if (a.output_limit == 0) throw ArgumentError("output limit must be positive");
  const auto loaded = io::read_theta(a.theta);
  auto in = io::open_input(a.predictions);
  io::PredictionReader reader(in, a.predictions, loaded.k_max());
  OutputTarget out(a.out, s.out);
  std::optional<ThetaMatrix> theta;
  while (auto inst = reader.next()) {
    if (!theta) theta = loaded.reordered(reader.model_ids());
    // Ground truth is not needed for merging; the key is a placeholder.
    const EnsembleInstance instance{inst->input_id, PredictionKey("-"), std::move(inst->outputs)};
    io::write_merged(out.stream(), instance.input_id, merge(instance, *theta, a.output_limit));
  }
  out.close();

  Manifest manifest("merge");
  manifest.input("predictions", a.predictions).input("theta", a.theta).set("output_limit", a.output_limit);
  manifest.write_beside(a.out);
  return 0;
}

struct EvalArgs {
  std::string merged;
  std::string ground_truth;
  std::string ks = "1,3,5,10,20,50";
  std::string out = "-";
  std::string metadata;
  std::string boundaries;
  std::size_t bucket_k = 1;
  std::string bucket_csv;
};

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline int cmd_eval(const EvalArgs& a, Streams& s) {
  const auto ks = parse_size_list(a.ks, "--ks");
  const auto merged = io::read_merged(a.merged);
  const auto truth = io::read_ground_truth(a.ground_truth);
  const auto report = evaluate(merged, truth, ks);

  json doc;
  doc["n_instances"] = report.n_instances;
  doc["mrr"] = report.mrr;
  doc["top_k"] = json::object();
  for (const auto& [k, acc] : report.accuracy) doc["top_k"][std::to_string(k)] = acc;

  Manifest manifest("eval");
  manifest.input("merged", a.merged).input("ground_truth", a.ground_truth).set("ks", ks);

  if (!a.metadata.empty()) {
    if (a.boundaries.empty()) throw ArgumentError("--metadata requires --boundaries");
    auto meta_in = io::open_input(a.metadata);
    const auto metadata = io::read_metadata_csv(meta_in, a.metadata);
    const auto bounds = parse_double_list(a.boundaries, "--boundaries");
    const auto buckets = bucketed_accuracy(merged, truth, metadata, bounds, a.bucket_k);
    json rows = json::array();
    for (const auto& b : buckets) {
      rows.push_back({{"lower", nullable(b.lower)},
                      {"upper", nullable(b.upper)},
                      {"count", b.count},
                      {"accuracy", b.accuracy ? json(*b.accuracy) : json(nullptr)}});
    }
    doc["buckets"] = {{"k", a.bucket_k}, {"rows", rows}};
    manifest.input("metadata", a.metadata).set("boundaries", bounds).set("bucket_k", a.bucket_k);

    if (!a.bucket_csv.empty()) {
      OutputTarget csv(a.bucket_csv, s.out);
      csv.stream() << "lower,upper,count,accuracy\n";
      for (const auto& b : buckets) {
        csv.stream() << json(b.lower).dump() << ',' << json(b.upper).dump() << ',' << b.count << ','
                     << (b.accuracy ? json(*b.accuracy).dump() : std::string()) << '\n';
      }
      csv.close();
      manifest.write_beside(a.bucket_csv);
    }
  }

  OutputTarget out(a.out, s.out);
  out.stream() << doc.dump(2) << '\n';
  out.close();
  manifest.write_beside(a.out);
  return 0;
}

struct BaselineArgs {
  std::string kind = "linear";
  std::string models;
  std::size_t k_max = 50;
  std::string weights;
  std::string out = "-";
};

inline int cmd_baseline(const BaselineArgs& a, Streams& s) {
  const auto kind = parse_baseline_kind(a.kind);
  if (!kind) throw ArgumentError("unknown baseline kind '" + a.kind + "'");
  auto ids = parse_string_list(a.models);
  for (const auto& id : ids) {
    if (id.empty()) throw ArgumentError("empty model id in --models");
  }
  const auto weights = a.weights.empty() ? std::vector<double>{}
                                         : parse_double_list(a.weights, "--weights");
  const auto theta = baseline_theta(*kind, ids, a.k_max, weights);
  OutputTarget out(a.out, s.out);
  out.stream() << io::theta_to_json(theta).dump(2) << '\n';
  out.close();

  Manifest manifest("baseline");
  manifest.set("kind", a.kind).set("model_ids", ids).set("k_max", a.k_max).set("weights", weights);
  manifest.write_beside(a.out);
  return 0;
}

struct SimfilterArgs {
  std::string queries;
  std::string references;
  double threshold = 0.95;
  std::size_t block = 1024;
  unsigned threads = 1;
  std::string out = "-";
  std::string report;
};

inline int cmd_simfilter(const SimfilterArgs& a, Streams& s) {
  const auto queries = io::read_fingerprints(a.queries);
  const auto references = io::read_fingerprints(a.references);
  if (!(a.threshold > 0.0 && a.threshold <= 1.0)) {
    throw ArgumentError("threshold must lie in (0, 1]");
  }
  const BlockOptions opts{a.block, a.threads};
  const auto hits = max_similarity(queries, references, opts);

  OutputTarget out(a.out, s.out);
  for (const auto& h : hits) {
    if (h.max_sim < a.threshold) out.stream() << h.query_id << '\n';
  }
  out.close();
  if (!a.report.empty()) {
    OutputTarget rep(a.report, s.out);
    for (const auto& h : hits) {
      rep.stream() << json{{"id", h.query_id}, {"max_sim", h.max_sim}, {"nearest", h.reference_id}}.dump()
                   << '\n';
    }
    rep.close();
  }

  Manifest manifest("simfilter");
  manifest.input("queries", a.queries)
      .input("references", a.references)
      .set("threshold", a.threshold)
      .set("block", a.block);
  manifest.write_beside(a.out);
  if (!a.report.empty()) manifest.write_beside(a.report);
  return 0;
}

inline int cmd_tokenize(Streams& s) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(s.in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      s.out << tokenize(line).joined(" ") << '\n';
    } catch (const DataError& e) {
      throw DataError("stdin:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  s.out.flush();
  return 0;
}

struct EloArgs {
  std::string comparisons;
  std::string anchor;
  std::size_t resamples = 10000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  int max_iter = 10000;
  std::string out = "-";
};

inline int cmd_elo(const EloArgs& a, Streams& s) {
  const auto comparisons = io::read_comparisons(a.comparisons);
  const BradleyTerryOptions fit_opts{a.tol, a.max_iter};
  const auto scores = fit_bradley_terry(comparisons, fit_opts);
  const auto ratings = to_elo(scores, a.anchor);

  json doc;
  doc["anchor"] = a.anchor;
  doc["n_comparisons"] = comparisons.size();
  doc["iterations"] = scores.iterations;
  json rated = json::array();
  for (std::size_t i = 0; i < ratings.sources.size(); ++i) {
    rated.push_back({{"source", ratings.sources[i]},
                     {"score", ratings.scores[i]},
                     {"elo", ratings.elo[i]}});
  }
  doc["ratings"] = rated;
  json matrix = json::object();
  for (const auto& i : ratings.sources) {
    for (const auto& j : ratings.sources) {
      if (i != j) matrix[i][j] = predicted_win_rate(ratings, i, j);
    }
  }
  doc["win_rates"] = matrix;

  if (a.resamples > 0) {
    BootstrapOptions opts;
    opts.n_resamples = a.resamples;
    opts.confidence = a.confidence;
    opts.seed = a.seed;
    opts.fit = fit_opts;
    json intervals = json::array();
    for (const auto& ci : bootstrap_win_rate_ci(comparisons, opts)) {
      intervals.push_back({{"i", ci.source_i},
                           {"j", ci.source_j},
                           {"estimate", ci.estimate},
                           {"low", ci.low},
                           {"high", ci.high}});
    }
    doc["intervals"] = {{"confidence", a.confidence},
                        {"n_resamples", a.resamples},
                        {"seed", a.seed},
                        {"pairs", intervals}};
  }

  OutputTarget out(a.out, s.out);
  out.stream() << doc.dump(2) << '\n';
  out.close();

  Manifest manifest("elo");
  manifest.input("comparisons", a.comparisons)
      .set("anchor", a.anchor)
      .set("resamples", a.resamples)
      .set("confidence", a.confidence)
      .set("tol", a.tol)
      .set("max_iter", a.max_iter)
      .seed(a.seed);
  manifest.write_beside(a.out);
  return 0;
}

// ---------------------------------------------------------------------------

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  Streams streams{in, out, err};
  CLI::App app{"Learned fusion of ranked prediction lists, with evaluation utilities", kToolName};
  app.set_config("--config", "", "TOML/INI file with default flag values (flags win)");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic predictions/ground-truth pair");
  c_synth->add_option("--kind", synth.kind, "complementary | placement")->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--predictions", synth.predictions, "Output predictions JSONL")->required();
  c_synth->add_option("--ground-truth", synth.ground_truth, "Output ground truth JSONL")->required();
  c_synth->add_option("--models", synth.models)->capture_default_str();
  c_synth->add_option("--k-max", synth.k_max)->capture_default_str();
  c_synth->add_option("--n", synth.n_instances, "Number of instances")->capture_default_str();
  c_synth->add_option("--rho", synth.rho, "Coupling of placement draws in [0,1]")->capture_default_str();
  c_synth->add_option("--pool", synth.pool, "Distractors per instance (0 = 5 * k_max)")->capture_default_str();
  c_synth->add_option("--placement", synth.placement,
                      "Per model: comma-separated probabilities for ranks 1..k_max, then absent");
  c_synth->add_option("--model-ids", synth.model_ids, "Comma-separated model ids");

  FitArgs fitargs;
  auto* c_fit = app.add_subcommand("fit", "Learn fusion weights from validation predictions");
  c_fit->add_option("--predictions", fitargs.predictions)->required();
  c_fit->add_option("--ground-truth", fitargs.ground_truth)->required();
  c_fit->add_option("--k-max", fitargs.k_max)->capture_default_str();
  c_fit->add_option("--out", fitargs.out, "Theta checkpoint JSON")->required();
  c_fit->add_option("--log", fitargs.log, "Training log CSV (step,lr,T,loss)");
  c_fit->add_option("--steps", fitargs.cfg.steps)->capture_default_str();
  c_fit->add_option("--lr", fitargs.cfg.lr0)->capture_default_str();
  c_fit->add_option("--temperature", fitargs.cfg.T0)->capture_default_str();
  c_fit->add_option("--decay-factor", fitargs.cfg.decay_factor)->capture_default_str();
  c_fit->add_option("--decay-every", fitargs.cfg.decay_every)->capture_default_str();
  c_fit->add_option("--margin", fitargs.cfg.epsilon_margin)->capture_default_str();
  c_fit->add_option("--w-reg", fitargs.cfg.w_reg)->capture_default_str();
  c_fit->add_option("--adam-beta1", fitargs.cfg.adam_beta1)->capture_default_str();
  c_fit->add_option("--adam-beta2", fitargs.cfg.adam_beta2)->capture_default_str();
  c_fit->add_option("--adam-eps", fitargs.cfg.adam_eps)->capture_default_str();
  c_fit->add_option("--schedule", fitargs.schedule, "geometric | linear")->capture_default_str();

  MergeArgs mergeargs;
  auto* c_merge = app.add_subcommand("merge", "Fuse prediction lists with a theta checkpoint");
  c_merge->add_option("--predictions", mergeargs.predictions)->required();
  c_merge->add_option("--theta", mergeargs.theta)->required();
  c_merge->add_option("--output-limit", mergeargs.output_limit)->capture_default_str();
  c_merge->add_option("--out", mergeargs.out, "Merged JSONL ('-' = stdout)")->capture_default_str();

  EvalArgs evalargs;
  auto* c_eval = app.add_subcommand("eval", "Top-k accuracy and MRR of merged rankings");
  c_eval->add_option("--merged", evalargs.merged)->required();
  c_eval->add_option("--ground-truth", evalargs.ground_truth)->required();
  c_eval->add_option("--ks", evalargs.ks)->capture_default_str();
  c_eval->add_option("--out", evalargs.out)->capture_default_str();
  c_eval->add_option("--metadata", evalargs.metadata, "CSV of input_id,value for bucketing");
  c_eval->add_option("--boundaries", evalargs.boundaries, "Comma-separated increasing bucket edges");
  c_eval->add_option("--bucket-k", evalargs.bucket_k)->capture_default_str();
  c_eval->add_option("--bucket-csv", evalargs.bucket_csv);

  BaselineArgs baseargs;
  auto* c_base = app.add_subcommand("baseline", "Write a hand-designed theta checkpoint");
  c_base->add_option("--kind", baseargs.kind, "linear | reciprocal | weighted_reciprocal")
      ->capture_default_str();
  c_base->add_option("--models", baseargs.models, "Comma-separated model ids")->required();
  c_base->add_option("--k-max", baseargs.k_max)->capture_default_str();
  c_base->add_option("--weights", baseargs.weights, "Per-model c_i for weighted_reciprocal");
  c_base->add_option("--out", baseargs.out)->capture_default_str();

  SimfilterArgs simargs;
  auto* c_sim = app.add_subcommand("simfilter", "Drop queries too similar to any reference");
  c_sim->add_option("--queries", simargs.queries)->required();
  c_sim->add_option("--references", simargs.references)->required();
  c_sim->add_option("--threshold", simargs.threshold)->capture_default_str();
  c_sim->add_option("--block", simargs.block)->capture_default_str();
  c_sim->add_option("--threads", simargs.threads, "0 = all cores")->capture_default_str();
  c_sim->add_option("--out", simargs.out, "Retained ids, one per line")->capture_default_str();
  c_sim->add_option("--report", simargs.report, "Per-query nearest reference JSONL");

  auto* c_tok = app.add_subcommand("tokenize", "Tokenize SMILES lines from stdin");

  EloArgs eloargs;
  auto* c_elo = app.add_subcommand("elo", "Bradley-Terry ratings from pairwise preferences");
  c_elo->add_option("--comparisons", eloargs.comparisons)->required();
  c_elo->add_option("--anchor", eloargs.anchor, "Source pinned to rating 0")->required();
  c_elo->add_option("--resamples", eloargs.resamples, "Bootstrap resamples (0 = none)")
      ->capture_default_str();
  c_elo->add_option("--confidence", eloargs.confidence)->capture_default_str();
  c_elo->add_option("--seed", eloargs.seed)->capture_default_str();
  c_elo->add_option("--tol", eloargs.tol)->capture_default_str();
  c_elo->add_option("--max-iter", eloargs.max_iter)->capture_default_str();
  c_elo->add_option("--out", eloargs.out)->capture_default_str();

  std::vector<const char*> argv{kToolName};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, streams);
    if (c_fit->parsed()) return cmd_fit(fitargs, streams);
    if (c_merge->parsed()) return cmd_merge(mergeargs, streams);
    if (c_eval->parsed()) return cmd_eval(evalargs, streams);
    if (c_base->parsed()) return cmd_baseline(baseargs, streams);
    if (c_sim->parsed()) return cmd_simfilter(simargs, streams);
    if (c_tok->parsed()) return cmd_tokenize(streams);
    if (c_elo->parsed()) return cmd_elo(eloargs, streams);
  } catch (const Error& e) {
    err << kToolName << ": error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  }
  return static_cast<int>(ExitCode::kUsage);
}

}  // namespace rankfuse::cli
