// Command-line frontend. Talks to the library exclusively through the C
// API; flag values override the --config JSON file, which overrides the
// library's built-in defaults.

#include <clcnn.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

using nlohmann::json;

namespace {

struct RunOpts {
  std::string corpus, regime, embeddings;
  size_t embed_dim = 0, lstm_hidden = 0, conv_features = 0, fofe_dense_out = 0;
  std::vector<size_t> kernel_sizes;
  double alpha_sent = 0, alpha_cont = 0, dropout_rate = 0;
  uint64_t init_seed = 0, shuffle_seed = 0;
  size_t epochs = 0, batch_size = 0, folds = 0, threads = 0;
  double lr = 0, beta1 = 0, beta2 = 0, eps = 0;
};

void add_run_options(CLI::App* cmd, RunOpts& o, bool with_folds) {
  cmd->add_option("--corpus", o.corpus, "JSONL corpus path")->required();
  cmd->add_option("--regime", o.regime,
                  "context regime: adjacent or speaker (default adjacent)");
  cmd->add_option("--embeddings", o.embeddings,
                  "word2vec text file (default: frozen random table)");
  cmd->add_option("--embed-dim", o.embed_dim, "embedding dimension (50)");
  cmd->add_option("--lstm-hidden", o.lstm_hidden, "LSTM hidden units (64)");
  cmd->add_option("--kernel-sizes", o.kernel_sizes,
                  "conv kernel sizes (2,3,4,5,6)")
      ->delimiter(',');
  cmd->add_option("--conv-features", o.conv_features,
                  "features per kernel size (64)");
  cmd->add_option("--alpha-sent", o.alpha_sent,
                  "sentence-level forgetting factor (1.0)");
  cmd->add_option("--alpha-cont", o.alpha_cont,
                  "context-level forgetting factor (0.9)");
  cmd->add_option("--fofe-dense", o.fofe_dense_out,
                  "FOFE dense layer width (64)");
  cmd->add_option("--dropout", o.dropout_rate, "dropout rate (0.5)");
  cmd->add_option("--epochs", o.epochs, "training epochs (50)");
  cmd->add_option("--batch-size", o.batch_size, "minibatch size (64)");
  cmd->add_option("--lr", o.lr, "Adamax learning rate (0.002)");
  cmd->add_option("--beta1", o.beta1, "Adamax beta1 (0.9)");
  cmd->add_option("--beta2", o.beta2, "Adamax beta2 (0.999)");
  cmd->add_option("--eps", o.eps, "Adamax epsilon (1e-8)");
  if (with_folds) {
    cmd->add_option("--folds", o.folds, "cross-validation folds (5)");
    cmd->add_option("--threads", o.threads, "fold-level worker threads (1)");
  }
  cmd->add_option("--init-seed", o.init_seed, "parameter/OOV seed (1)");
  cmd->add_option("--shuffle-seed", o.shuffle_seed,
                  "shuffle/dropout/fold seed (1)");
}

json collect_run_options(CLI::App* cmd, const RunOpts& o) {
  json spec = json::object();
  auto set_if = [&](const char* flag, const char* key, const auto& value) {
    if (cmd->count(flag) > 0) spec[key] = value;
  };
  spec["corpus"] = o.corpus;
  set_if("--regime", "regime", o.regime);
  set_if("--embeddings", "embeddings", o.embeddings);
  set_if("--embed-dim", "embed_dim", o.embed_dim);
  set_if("--lstm-hidden", "lstm_hidden", o.lstm_hidden);
  set_if("--kernel-sizes", "kernel_sizes", o.kernel_sizes);
  set_if("--conv-features", "conv_features", o.conv_features);
  set_if("--alpha-sent", "alpha_sent", o.alpha_sent);
  set_if("--alpha-cont", "alpha_cont", o.alpha_cont);
  set_if("--fofe-dense", "fofe_dense_out", o.fofe_dense_out);
  set_if("--dropout", "dropout_rate", o.dropout_rate);
  set_if("--epochs", "epochs", o.epochs);
  set_if("--batch-size", "batch_size", o.batch_size);
  set_if("--lr", "lr", o.lr);
  set_if("--beta1", "beta1", o.beta1);
  set_if("--beta2", "beta2", o.beta2);
  set_if("--eps", "eps", o.eps);
  if (cmd->get_option_no_throw("--folds")) {
    set_if("--folds", "folds", o.folds);
    set_if("--threads", "threads", o.threads);
  }
  set_if("--init-seed", "init_seed", o.init_seed);
  set_if("--shuffle-seed", "shuffle_seed", o.shuffle_seed);
  return spec;
}

int execute(const std::string& command, json spec,
            const std::string& config_path) {
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f.good()) {
      std::cerr << "error: cannot open config file '" << config_path << "'\n";
      return 1;
    }
    json defaults;
    try {
      defaults = json::parse(f);
    } catch (const json::exception& e) {
      std::cerr << "error: config file is not valid JSON: " << e.what()
                << "\n";
      return 1;
    }
    if (!defaults.is_object()) {
      std::cerr << "error: config file must hold a JSON object\n";
      return 1;
    }
    for (const auto& [k, v] : spec.items()) defaults[k] = v;  // flags win
    spec = std::move(defaults);
  }
  const int rc = clcnn_run_command(command.c_str(), spec.dump().c_str());
  if (rc != CLCNN_OK) {
    std::cerr << "error: " << clcnn_last_error() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-aware sentence classifier (LSTM-CNN with FOFE "
               "context encoding)"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file of run-spec defaults; explicit flags override it");

  int exit_code = 0;

  // synth
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic context-dependent corpus");
  std::string synth_out;
  size_t num_docs = 0, sents = 0, vocab = 0, classes = 0, signal = 0;
  double noise = 0, distract = 0;
  int focus_pos = 0;
  uint64_t data_seed = 0;
  synth->add_option("--out", synth_out, "output JSONL path")->required();
  synth->add_option("--num-docs", num_docs, "documents to generate (200)");
  synth->add_option("--sentences-per-doc", sents, "sentences per document (8)");
  synth->add_option("--vocab-size", vocab, "neutral vocabulary size (50)");
  synth->add_option("--num-classes", classes, "number of classes (2)");
  synth->add_option("--signal-position", signal,
                    "cue distance left of the focus; 0 = in the focus (1)");
  synth->add_option("--noise-rate", noise, "label noise rate (0)");
  synth->add_option("--distractor-rate", distract,
                    "random cue rate in non-signal sentences (0)");
  synth->add_option("--focus-position", focus_pos,
                    "fixed focus index, -1 = random (-1)");
  synth->add_option("--data-seed", data_seed, "generator seed (1)");
  synth->callback([&] {
    json spec = {{"out", synth_out}};
    auto set_if = [&](const char* flag, const char* key, const auto& value) {
      if (synth->count(flag) > 0) spec[key] = value;
    };
    set_if("--num-docs", "num_documents", num_docs);
    set_if("--sentences-per-doc", "sentences_per_document", sents);
    set_if("--vocab-size", "vocab_size", vocab);
    set_if("--num-classes", "num_classes", classes);
    set_if("--signal-position", "signal_position", signal);
    set_if("--noise-rate", "noise_rate", noise);
    set_if("--distractor-rate", "distractor_rate", distract);
    set_if("--focus-position", "focus_position", focus_pos);
    set_if("--data-seed", "data_seed", data_seed);
    exit_code = execute("synth", spec, config_path);
  });

  // embed
  auto* embed = app.add_subcommand(
      "embed", "pre-train skip-gram embeddings on a corpus");
  std::string embed_corpus, embed_out;
  size_t e_dim = 0, e_window = 0, e_neg = 0, e_epochs = 0;
  double e_lr = 0;
  uint64_t e_seed = 0;
  embed->add_option("--corpus", embed_corpus, "JSONL corpus path")->required();
  embed->add_option("--out", embed_out, "output word2vec text path")->required();
  embed->add_option("--dim", e_dim, "embedding dimension (50)");
  embed->add_option("--window", e_window, "context window (5)");
  embed->add_option("--negatives", e_neg, "negative samples (5)");
  embed->add_option("--epochs", e_epochs, "epochs (5)");
  embed->add_option("--lr", e_lr, "learning rate (0.025)");
  embed->add_option("--init-seed", e_seed, "seed (1)");
  embed->callback([&] {
    json spec = {{"corpus", embed_corpus}, {"out", embed_out}};
    auto set_if = [&](const char* flag, const char* key, const auto& value) {
      if (embed->count(flag) > 0) spec[key] = value;
    };
    set_if("--dim", "dim", e_dim);
    set_if("--window", "window", e_window);
    set_if("--negatives", "negatives", e_neg);
    set_if("--epochs", "epochs", e_epochs);
    set_if("--lr", "lr", e_lr);
    set_if("--init-seed", "init_seed", e_seed);
    exit_code = execute("embed", spec, config_path);
  });

  // train
  auto* train = app.add_subcommand(
      "train", "train one model on the full corpus and save a checkpoint");
  RunOpts train_opts;
  std::string train_variant, train_out;
  add_run_options(train, train_opts, /*with_folds=*/false);
  train->add_option("--variant", train_variant,
                    "cnn, lstm, lstm-cnn, l-lstm-cnn or c-lstm-cnn "
                    "(default c-lstm-cnn)");
  train->add_option("--out", train_out, "checkpoint output path")->required();
  train->callback([&] {
    json spec = collect_run_options(train, train_opts);
    spec["out"] = train_out;
    if (train->count("--variant") > 0) spec["variant"] = train_variant;
    exit_code = execute("train", spec, config_path);
  });

  // cv
  auto* cv = app.add_subcommand(
      "cv", "cross-validated comparison of model variants");
  RunOpts cv_opts;
  std::vector<std::string> cv_variants;
  std::string cv_out_dir;
  add_run_options(cv, cv_opts, /*with_folds=*/true);
  cv->add_option("--variants", cv_variants,
                 "comma-separated variant list (default: all five)")
      ->delimiter(',');
  cv->add_option("--out-dir", cv_out_dir, "output directory")->required();
  cv->callback([&] {
    json spec = collect_run_options(cv, cv_opts);
    spec["out_dir"] = cv_out_dir;
    if (cv->count("--variants") > 0) spec["variants"] = cv_variants;
    exit_code = execute("cv", spec, config_path);
  });

  // sweep
  auto* sweep = app.add_subcommand(
      "sweep", "cross-validated accuracy over a forgetting-factor grid");
  RunOpts sweep_opts;
  std::string sweep_param, sweep_variant, sweep_out;
  std::vector<double> sweep_grid;
  add_run_options(sweep, sweep_opts, /*with_folds=*/true);
  sweep->add_option("--param", sweep_param,
                    "alpha_cont or alpha_sent (default alpha_cont)");
  sweep->add_option("--grid", sweep_grid,
                    "comma-separated values (default 0.1..1.0 step 0.1)")
      ->delimiter(',');
  sweep->add_option("--variant", sweep_variant, "model variant (c-lstm-cnn)");
  sweep->add_option("--out", sweep_out, "output CSV path")->required();
  sweep->callback([&] {
    json spec = collect_run_options(sweep, sweep_opts);
    spec["out"] = sweep_out;
    if (sweep->count("--param") > 0) spec["param"] = sweep_param;
    if (sweep->count("--grid") > 0) spec["grid"] = sweep_grid;
    if (sweep->count("--variant") > 0) spec["variant"] = sweep_variant;
    exit_code = execute("sweep", spec, config_path);
  });

  // predict
  auto* predict = app.add_subcommand(
      "predict", "classify every sentence of a corpus with a checkpoint");
  std::string p_checkpoint, p_corpus, p_out, p_regime;
  predict->add_option("--checkpoint", p_checkpoint, "model checkpoint")
      ->required();
  predict->add_option("--corpus", p_corpus, "JSONL corpus path")->required();
  predict->add_option("--out", p_out, "predictions JSONL path")->required();
  predict->add_option("--regime", p_regime,
                      "context regime: adjacent or speaker (adjacent)");
  predict->callback([&] {
    json spec = {{"checkpoint", p_checkpoint},
                 {"corpus", p_corpus},
                 {"out", p_out}};
    if (predict->count("--regime") > 0) spec["regime"] = p_regime;
    exit_code = execute("predict", spec, config_path);
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
