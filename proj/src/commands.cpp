#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "common.hpp"
#include "data.hpp"
#include "embeddings.hpp"
#include "model.hpp"
#include "serialization.hpp"
#include "training.hpp"

namespace clcnn::commands {

namespace fs = std::filesystem;
using nlohmann::json;

const char kVersion[] = "0.1.0";

namespace {

// Removes partially written outputs unless commit() was reached.
class OutputGuard {
 public:
  void track(const std::string& p) { paths_.push_back(p); }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

void check_keys(const json& spec, const std::vector<const char*>& allowed) {
  std::unordered_set<std::string> ok;
  for (const char* k : allowed) ok.insert(k);
  for (const auto& [key, value] : spec.items()) {
    if (!ok.count(key)) fail(concat("spec: unknown field '", key, "'"));
  }
}

std::string require_string(const json& spec, const char* key) {
  check(spec.contains(key) && spec[key].is_string(),
        concat("spec: missing required string field '", key, "'"));
  return spec[key].get<std::string>();
}

template <typename T>
T get_or(const json& spec, const char* key, T dflt) {
  if (!spec.contains(key) || spec[key].is_null()) return dflt;
  try {
    return spec[key].get<T>();
  } catch (const json::exception&) {
    fail(concat("spec: bad value for '", key, "'"));
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), concat("cannot write '", path, "'"));
  out << j.dump(2) << "\n";
  check(out.good(), concat("write failed for '", path, "'"));
}

void write_manifest(const std::string& path, const std::string& command,
                    const json& resolved, const std::vector<std::string>& outputs,
                    const json& extra = json::object()) {
  json m = {{"command", command},
            {"version", kVersion},
            {"spec", resolved},
            {"outputs", outputs}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json_file(m, path);
}

std::vector<std::string> collect_labels(const std::vector<Document>& docs) {
  std::vector<std::string> labels;
  std::unordered_set<std::string> seen;
  for (const Document& doc : docs) {
    for (const Sentence& s : doc.sentences) {
      if (s.label && seen.insert(*s.label).second) labels.push_back(*s.label);
    }
  }
  return labels;
}

// Embeddings are loaded from file when given, otherwise a frozen random
// table (empty vocabulary, pure OOV path) is used. The OOV seed derives
// from the init seed.
std::shared_ptr<const EmbeddingTable> resolve_embeddings(const json& spec,
                                                         ModelConfig& mcfg) {
  const uint64_t oov = mix64(mcfg.seed ^ fnv1a64("oov"));
  if (spec.contains("embeddings") && !spec["embeddings"].is_null()) {
    auto table = std::make_shared<EmbeddingTable>(
        load_word2vec_text(spec["embeddings"].get<std::string>(), oov));
    if (spec.contains("embed_dim") && table->dim != mcfg.embed_dim) {
      fail(concat("embeddings file has dim ", table->dim,
                  " but embed_dim was set to ", mcfg.embed_dim));
    }
    mcfg.embed_dim = table->dim;
    return table;
  }
  return std::make_shared<EmbeddingTable>(
      EmbeddingTable::random(mcfg.embed_dim, oov));
}

json resolved_run_spec(const json& spec, const ModelConfig& mcfg,
                       const TrainConfig& tcfg) {
  json r = model_config_to_json(mcfg);
  const json t = train_config_to_json(tcfg);
  for (const auto& [k, v] : t.items()) r[k] = v;
  r["corpus"] = spec.value("corpus", "");
  r["regime"] = get_or<std::string>(spec, "regime", "adjacent");
  if (spec.contains("embeddings") && !spec["embeddings"].is_null()) {
    r["embeddings"] = spec["embeddings"];
  }
  return r;
}

std::vector<const char*> with_extras(std::initializer_list<const char*> extras) {
  std::vector<const char*> keys = {
      "embed_dim",    "lstm_hidden", "kernel_sizes",   "conv_features",
      "alpha_sent",   "alpha_cont",  "fofe_dense_out", "dropout_rate",
      "init_seed",    "epochs",      "batch_size",     "lr",
      "beta1",        "beta2",       "eps",            "folds",
      "shuffle_seed", "threads"};
  keys.insert(keys.end(), extras.begin(), extras.end());
  return keys;
}

struct LoadedData {
  Corpus corpus;
  std::vector<Instance> instances;
  ContextRegime regime;
};

LoadedData load_training_data(const json& spec) {
  LoadedData d;
  d.corpus = load_corpus(require_string(spec, "corpus"));
  d.regime = parse_regime(get_or<std::string>(spec, "regime", "adjacent"));
  check(d.corpus.labels.size() >= 2,
        "corpus must contain at least 2 distinct labels");
  d.instances = build_instances(d.corpus, d.regime);
  check(!d.instances.empty(), "corpus has no labeled sentences");
  return d;
}

size_t argmax_lowest(const Vector& probs) {
  size_t best = 0;
  for (size_t j = 1; j < probs.size(); ++j) {
    if (probs[j] > probs[best]) best = j;
  }
  return best;
}

}  // namespace

void cmd_synth(const json& spec) {
  check_keys(spec, {"out", "num_documents", "sentences_per_document",
                    "vocab_size", "num_classes", "signal_position",
                    "noise_rate", "distractor_rate", "focus_position",
                    "data_seed"});
  const std::string out = require_string(spec, "out");
  const SynthConfig cfg = synth_config_from_json(spec);
  SynthStats stats;
  const auto docs = generate_synthetic(cfg, &stats);

  const std::string labels_path = out + ".labels.json";
  const std::string manifest_path = out + ".manifest.json";
  OutputGuard guard;
  guard.track(out);
  guard.track(labels_path);
  guard.track(manifest_path);

  save_corpus(docs, out);
  write_json_file(json{{"labels", collect_labels(docs)}}, labels_path);
  json resolved = synth_config_to_json(cfg);
  resolved["out"] = out;
  write_manifest(
      manifest_path, "synth", resolved, {out, labels_path},
      {{"stats",
        {{"instances", stats.instances},
         {"label_flips", stats.label_flips},
         {"flip_fraction", static_cast<double>(stats.label_flips) /
                               static_cast<double>(stats.instances)}}}});
  guard.commit();
}

void cmd_embed(const json& spec) {
  check_keys(spec, {"corpus", "out", "dim", "window", "negatives", "epochs",
                    "lr", "init_seed"});
  const std::string corpus_path = require_string(spec, "corpus");
  const std::string out = require_string(spec, "out");
  SkipgramConfig cfg;
  cfg.dim = get_or<size_t>(spec, "dim", cfg.dim);
  cfg.window = get_or<size_t>(spec, "window", cfg.window);
  cfg.negatives = get_or<size_t>(spec, "negatives", cfg.negatives);
  cfg.epochs = get_or<size_t>(spec, "epochs", cfg.epochs);
  cfg.lr = get_or<double>(spec, "lr", cfg.lr);
  cfg.seed = get_or<uint64_t>(spec, "init_seed", cfg.seed);

  const Corpus corpus = load_corpus(corpus_path);
  std::vector<std::vector<std::string>> text;
  for (const Document& doc : corpus.documents) {
    for (const Sentence& s : doc.sentences) text.push_back(s.tokens);
  }
  const EmbeddingTable table = train_skipgram(text, cfg);

  const std::string manifest_path = out + ".manifest.json";
  OutputGuard guard;
  guard.track(out);
  guard.track(manifest_path);
  save_word2vec_text(table, out);
  const json resolved = {{"corpus", corpus_path}, {"out", out},
                         {"dim", cfg.dim},        {"window", cfg.window},
                         {"negatives", cfg.negatives}, {"epochs", cfg.epochs},
                         {"lr", cfg.lr},          {"init_seed", cfg.seed}};
  write_manifest(manifest_path, "embed", resolved, {out},
                 {{"vocab_size", table.tokens.size()}});
  guard.commit();
}

void cmd_train(const json& spec) {
  check_keys(spec, with_extras({"corpus", "out", "regime", "variant",
                                "embeddings"}));
  const std::string out = require_string(spec, "out");
  const ModelVariant variant =
      parse_variant(get_or<std::string>(spec, "variant", "c-lstm-cnn"));

  LoadedData data = load_training_data(spec);
  ModelConfig mcfg = model_config_from_json(spec);
  mcfg.num_classes = data.corpus.labels.size();
  TrainConfig tcfg = train_config_from_json(spec);
  auto table = resolve_embeddings(spec, mcfg);

  std::vector<size_t> freqs(mcfg.num_classes, 0);
  for (const Instance& inst : data.instances) ++freqs[inst.label];
  const Vector weights = class_weights(freqs);

  Model model = build(variant, mcfg, table);
  model.labels = data.corpus.labels;
  const TrainResult tr = train_fold(model, data.instances, tcfg, weights);

  const std::string manifest_path = out + ".manifest.json";
  OutputGuard guard;
  guard.track(out);
  guard.track(manifest_path);
  save_checkpoint(model, out);
  json resolved = resolved_run_spec(spec, mcfg, tcfg);
  resolved["variant"] = variant_name(variant);
  resolved["out"] = out;
  write_manifest(manifest_path, "train", resolved, {out},
                 {{"epoch_losses", tr.epoch_losses},
                  {"train_seconds", tr.seconds},
                  {"labels", model.labels}});
  guard.commit();
}

void cmd_cv(const json& spec) {
  check_keys(spec, with_extras({"corpus", "out_dir", "regime", "variants",
                                "embeddings"}));
  const std::string out_dir = require_string(spec, "out_dir");

  std::vector<ModelVariant> variants;
  if (spec.contains("variants")) {
    for (const auto& name : spec["variants"]) {
      variants.push_back(parse_variant(name.get<std::string>()));
    }
  } else {
    variants = all_variants();
  }
  check(!variants.empty(), "cv: variant list must be non-empty");

  LoadedData data = load_training_data(spec);
  ModelConfig mcfg = model_config_from_json(spec);
  mcfg.num_classes = data.corpus.labels.size();
  TrainConfig tcfg = train_config_from_json(spec);
  auto table = resolve_embeddings(spec, mcfg);

  std::vector<std::pair<ModelVariant, CvResult>> results;
  for (ModelVariant v : variants) {
    results.emplace_back(
        v, cross_validate(data.instances, v, mcfg, tcfg, table));
  }

  fs::create_directories(out_dir);
  const std::string csv_path = out_dir + "/results.csv";
  const std::string summary_path = out_dir + "/summary.json";
  const std::string manifest_path = out_dir + "/manifest.json";
  OutputGuard guard;
  guard.track(csv_path);
  guard.track(summary_path);
  guard.track(manifest_path);

  {
    std::ofstream csv(csv_path);
    check(csv.good(), concat("cannot write '", csv_path, "'"));
    csv.precision(17);
    csv << "variant,fold,accuracy";
    for (const std::string& name : data.corpus.labels) csv << ",f1_" << name;
    csv << ",train_seconds\n";
    for (const auto& [v, cv] : results) {
      for (const FoldReport& r : cv.folds) {
        csv << variant_name(v) << "," << r.fold << "," << r.accuracy;
        for (double f1 : r.f1) csv << "," << f1;
        csv << "," << r.train_seconds << "\n";
      }
    }
    check(csv.good(), concat("write failed for '", csv_path, "'"));
  }

  json summary = {{"labels", data.corpus.labels},
                  {"variants", json::object()},
                  {"t_tests", json::array()}};
  for (const auto& [v, cv] : results) {
    json f1_mean = json::object(), f1_stddev = json::object();
    double seconds = 0.0;
    for (size_t c = 0; c < data.corpus.labels.size(); ++c) {
      f1_mean[data.corpus.labels[c]] = cv.f1_mean[c];
      f1_stddev[data.corpus.labels[c]] = cv.f1_stddev[c];
    }
    for (const FoldReport& r : cv.folds) seconds += r.train_seconds;
    summary["variants"][variant_name(v)] = {
        {"accuracy_mean", cv.accuracy_mean},
        {"accuracy_stddev", cv.accuracy_stddev},
        {"f1_mean", f1_mean},
        {"f1_stddev", f1_stddev},
        {"train_seconds_total", seconds},
        {"train_seconds_mean", seconds / static_cast<double>(cv.folds.size())}};
  }
  for (size_t i = 0; i < results.size(); ++i) {
    for (size_t j = i + 1; j < results.size(); ++j) {
      Vector a, b;
      for (const FoldReport& r : results[i].second.folds) a.push_back(r.accuracy);
      for (const FoldReport& r : results[j].second.folds) b.push_back(r.accuracy);
      const auto [t, p] = welch_t_test(a, b);
      summary["t_tests"].push_back({{"a", variant_name(results[i].first)},
                                    {"b", variant_name(results[j].first)},
                                    {"t", t},
                                    {"p", p}});
    }
  }
  write_json_file(summary, summary_path);

  json resolved = resolved_run_spec(spec, mcfg, tcfg);
  resolved["out_dir"] = out_dir;
  json vnames = json::array();
  for (ModelVariant v : variants) vnames.push_back(variant_name(v));
  resolved["variants"] = vnames;
  write_manifest(manifest_path, "cv", resolved,
                 {csv_path, summary_path});
  guard.commit();
}

void cmd_sweep(const json& spec) {
  check_keys(spec, with_extras({"corpus", "out", "regime", "variant",
                                "param", "grid", "embeddings"}));
  const std::string out = require_string(spec, "out");
  const std::string param = get_or<std::string>(spec, "param", "alpha_cont");
  check(param == "alpha_cont" || param == "alpha_sent",
        concat("sweep: unknown parameter '", param,
               "' (expected alpha_cont or alpha_sent)"));
  const ModelVariant variant =
      parse_variant(get_or<std::string>(spec, "variant", "c-lstm-cnn"));

  std::vector<double> grid;
  if (spec.contains("grid")) {
    grid = spec["grid"].get<std::vector<double>>();
  } else {
    for (int i = 1; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
  }
  check(!grid.empty(), "sweep: grid must be non-empty");
  for (double v : grid) {
    check(v >= 0.0 && v <= 1.0, "sweep: grid values must be in [0,1]");
  }

  LoadedData data = load_training_data(spec);
  ModelConfig mcfg = model_config_from_json(spec);
  mcfg.num_classes = data.corpus.labels.size();
  TrainConfig tcfg = train_config_from_json(spec);
  auto table = resolve_embeddings(spec, mcfg);

  std::vector<std::pair<double, CvResult>> rows;
  for (double value : grid) {
    ModelConfig cfg = mcfg;
    (param == "alpha_cont" ? cfg.fofe.alpha_cont : cfg.fofe.alpha_sent) = value;
    rows.emplace_back(value,
                      cross_validate(data.instances, variant, cfg, tcfg, table));
  }

  const std::string manifest_path = out + ".manifest.json";
  OutputGuard guard;
  guard.track(out);
  guard.track(manifest_path);
  {
    std::ofstream csv(out);
    check(csv.good(), concat("cannot write '", out, "'"));
    csv.precision(17);
    csv << "value,mean_accuracy,accuracy_stddev\n";
    for (const auto& [value, cv] : rows) {
      csv << value << "," << cv.accuracy_mean << "," << cv.accuracy_stddev
          << "\n";
    }
    check(csv.good(), concat("write failed for '", out, "'"));
  }
  json resolved = resolved_run_spec(spec, mcfg, tcfg);
  resolved["out"] = out;
  resolved["param"] = param;
  resolved["grid"] = grid;
  resolved["variant"] = variant_name(variant);
  write_manifest(manifest_path, "sweep", resolved, {out});
  guard.commit();
}

void cmd_predict(const json& spec) {
  check_keys(spec, {"checkpoint", "corpus", "out", "regime"});
  const std::string checkpoint = require_string(spec, "checkpoint");
  const std::string corpus_path = require_string(spec, "corpus");
  const std::string out = require_string(spec, "out");
  const ContextRegime regime =
      parse_regime(get_or<std::string>(spec, "regime", "adjacent"));

  const Model model = load_checkpoint(checkpoint);
  const Corpus corpus = load_corpus(corpus_path);

  const std::string manifest_path = out + ".manifest.json";
  OutputGuard guard;
  guard.track(out);
  guard.track(manifest_path);

  std::ofstream os(out);
  check(os.good(), concat("cannot write '", out, "'"));
  size_t emitted = 0;
  for (const Document& doc : corpus.documents) {
    for (size_t i = 0; i < doc.sentences.size(); ++i) {
      if (doc.sentences[i].tokens.empty()) continue;
      const Instance inst = build_focus_instance(doc, i, regime);
      ModelTape tape;
      const Vector probs = forward(model, inst, tape);
      const size_t pred = argmax_lowest(probs);
      const std::string name = pred < model.labels.size()
                                   ? model.labels[pred]
                                   : concat("class", pred);
      os << json{{"doc_id", doc.doc_id},
                 {"sentence_index", i},
                 {"predicted_label", name},
                 {"probabilities", probs}}
         << "\n";
      ++emitted;
    }
  }
  check(os.good(), concat("write failed for '", out, "'"));
  os.close();

  const json resolved = {{"checkpoint", checkpoint},
                         {"corpus", corpus_path},
                         {"out", out},
                         {"regime", get_or<std::string>(spec, "regime",
                                                        "adjacent")}};
  write_manifest(manifest_path, "predict", resolved, {out},
                 {{"predictions", emitted}, {"labels", model.labels}});
  guard.commit();
}

void run(const std::string& command, const json& spec) {
  if (command == "synth") return cmd_synth(spec);
  if (command == "embed") return cmd_embed(spec);
  if (command == "train") return cmd_train(spec);
  if (command == "cv") return cmd_cv(spec);
  if (command == "sweep") return cmd_sweep(spec);
  if (command == "predict") return cmd_predict(spec);
  fail(concat("unknown command '", command, "'"));
}

}  // namespace clcnn::commands
