#include "serialization.hpp"

#include "common.hpp"

namespace clcnn {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
  return {{"embed_dim", cfg.embed_dim},
          {"lstm_hidden", cfg.lstm_hidden},
          {"kernel_sizes", cfg.kernel_sizes},
          {"conv_features", cfg.conv_features},
          {"alpha_sent", cfg.fofe.alpha_sent},
          {"alpha_cont", cfg.fofe.alpha_cont},
          {"fofe_dense_out", cfg.fofe_dense_out},
          {"dropout_rate", cfg.dropout_rate},
          {"num_classes", cfg.num_classes},
          {"init_seed", cfg.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  try {
    if (j.contains("embed_dim")) cfg.embed_dim = j["embed_dim"].get<size_t>();
    if (j.contains("lstm_hidden")) cfg.lstm_hidden = j["lstm_hidden"].get<size_t>();
    if (j.contains("kernel_sizes")) {
      cfg.kernel_sizes = j["kernel_sizes"].get<std::vector<size_t>>();
    }
    if (j.contains("conv_features")) {
      cfg.conv_features = j["conv_features"].get<size_t>();
    }
    if (j.contains("alpha_sent")) cfg.fofe.alpha_sent = j["alpha_sent"].get<double>();
    if (j.contains("alpha_cont")) cfg.fofe.alpha_cont = j["alpha_cont"].get<double>();
    if (j.contains("fofe_dense_out")) {
      cfg.fofe_dense_out = j["fofe_dense_out"].get<size_t>();
    }
    if (j.contains("dropout_rate")) cfg.dropout_rate = j["dropout_rate"].get<double>();
    if (j.contains("num_classes")) cfg.num_classes = j["num_classes"].get<size_t>();
    if (j.contains("init_seed")) cfg.seed = j["init_seed"].get<uint64_t>();
  } catch (const json::exception& e) {
    fail(concat("model config: ", e.what()));
  }
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},   {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},           {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},     {"eps", cfg.eps},
          {"folds", cfg.folds},     {"shuffle_seed", cfg.shuffle_seed},
          {"threads", cfg.threads}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  try {
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<size_t>();
    if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
    if (j.contains("beta1")) cfg.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) cfg.beta2 = j["beta2"].get<double>();
    if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
    if (j.contains("folds")) cfg.folds = j["folds"].get<size_t>();
    if (j.contains("shuffle_seed")) {
      cfg.shuffle_seed = j["shuffle_seed"].get<uint64_t>();
    }
    if (j.contains("threads")) cfg.threads = j["threads"].get<size_t>();
  } catch (const json::exception& e) {
    fail(concat("train config: ", e.what()));
  }
  return cfg;
}

json synth_config_to_json(const SynthConfig& cfg) {
  return {{"num_documents", cfg.num_documents},
          {"sentences_per_document", cfg.sentences_per_document},
          {"vocab_size", cfg.vocab_size},
          {"num_classes", cfg.num_classes},
          {"signal_position", cfg.signal_position},
          {"noise_rate", cfg.noise_rate},
          {"distractor_rate", cfg.distractor_rate},
          {"focus_position", cfg.focus_position},
          {"data_seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig cfg;
  try {
    if (j.contains("num_documents")) {
      cfg.num_documents = j["num_documents"].get<size_t>();
    }
    if (j.contains("sentences_per_document")) {
      cfg.sentences_per_document = j["sentences_per_document"].get<size_t>();
    }
    if (j.contains("vocab_size")) cfg.vocab_size = j["vocab_size"].get<size_t>();
    if (j.contains("num_classes")) cfg.num_classes = j["num_classes"].get<size_t>();
    if (j.contains("signal_position")) {
      cfg.signal_position = j["signal_position"].get<size_t>();
    }
    if (j.contains("noise_rate")) cfg.noise_rate = j["noise_rate"].get<double>();
    if (j.contains("distractor_rate")) {
      cfg.distractor_rate = j["distractor_rate"].get<double>();
    }
    if (j.contains("focus_position")) {
      cfg.focus_position = j["focus_position"].get<int>();
    }
    if (j.contains("data_seed")) cfg.seed = j["data_seed"].get<uint64_t>();
  } catch (const json::exception& e) {
    fail(concat("synth config: ", e.what()));
  }
  return cfg;
}

}  // namespace clcnn
