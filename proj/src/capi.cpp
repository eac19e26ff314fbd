#include "clcnn.h"

#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "data.hpp"
#include "embeddings.hpp"
#include "model.hpp"

namespace {

thread_local std::string g_last_error;

int set_error(const std::string& msg) {
  g_last_error = msg;
  return CLCNN_ERROR;
}

int bad_argument(const char* what) {
  g_last_error = clcnn::concat("bad argument: ", what);
  return CLCNN_BAD_ARGUMENT;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CLCNN_OK;
  } catch (const std::exception& e) {
    return set_error(e.what());
  } catch (...) {
    return set_error("unknown error");
  }
}

}  // namespace

struct clcnn_corpus {
  clcnn::Corpus corpus;
};

struct clcnn_embeddings {
  clcnn::EmbeddingTable table;
};

struct clcnn_model {
  clcnn::Model model;
  std::string variant;
};

extern "C" {

const char* clcnn_version(void) { return clcnn::commands::kVersion; }

const char* clcnn_last_error(void) { return g_last_error.c_str(); }

int clcnn_run_command(const char* command, const char* spec_json) {
  if (!command || !spec_json) return bad_argument("null command or spec");
  return guarded([&] {
    nlohmann::json spec;
    try {
      spec = nlohmann::json::parse(spec_json);
    } catch (const nlohmann::json::exception& e) {
      clcnn::fail(clcnn::concat("spec is not valid JSON: ", e.what()));
    }
    clcnn::commands::run(command, spec);
  });
}

int clcnn_corpus_open(const char* path, clcnn_corpus** out) {
  if (!path || !out) return bad_argument("null path or out");
  *out = nullptr;
  return guarded([&] { *out = new clcnn_corpus{clcnn::load_corpus(path)}; });
}

void clcnn_corpus_free(clcnn_corpus* corpus) { delete corpus; }

int clcnn_corpus_num_documents(const clcnn_corpus* corpus, size_t* out) {
  if (!corpus || !out) return bad_argument("null corpus or out");
  *out = corpus->corpus.documents.size();
  return CLCNN_OK;
}

int clcnn_corpus_num_labels(const clcnn_corpus* corpus, size_t* out) {
  if (!corpus || !out) return bad_argument("null corpus or out");
  *out = corpus->corpus.labels.size();
  return CLCNN_OK;
}

int clcnn_corpus_label_name(const clcnn_corpus* corpus, size_t index,
                            const char** out) {
  if (!corpus || !out) return bad_argument("null corpus or out");
  if (index >= corpus->corpus.labels.size()) {
    return bad_argument("label index out of range");
  }
  *out = corpus->corpus.labels[index].c_str();
  return CLCNN_OK;
}

int clcnn_corpus_num_instances(const clcnn_corpus* corpus, const char* regime,
                               size_t* out) {
  if (!corpus || !regime || !out) return bad_argument("null corpus or out");
  return guarded([&] {
    *out = clcnn::build_instances(corpus->corpus, clcnn::parse_regime(regime))
               .size();
  });
}

int clcnn_embeddings_open(const char* path, clcnn_embeddings** out) {
  if (!path || !out) return bad_argument("null path or out");
  *out = nullptr;
  return guarded(
      [&] { *out = new clcnn_embeddings{clcnn::load_word2vec_text(path)}; });
}

void clcnn_embeddings_free(clcnn_embeddings* table) { delete table; }

int clcnn_embeddings_dim(const clcnn_embeddings* table, size_t* out) {
  if (!table || !out) return bad_argument("null table or out");
  *out = table->table.dim;
  return CLCNN_OK;
}

int clcnn_embeddings_vocab_size(const clcnn_embeddings* table, size_t* out) {
  if (!table || !out) return bad_argument("null table or out");
  *out = table->table.tokens.size();
  return CLCNN_OK;
}

int clcnn_embeddings_lookup(const clcnn_embeddings* table, const char* token,
                            double* out, size_t out_len) {
  if (!table || !token || !out) return bad_argument("null table, token or out");
  if (out_len < table->table.dim) return bad_argument("out buffer too small");
  return guarded([&] {
    const clcnn::Vector v = table->table.lookup(token);
    std::copy(v.begin(), v.end(), out);
  });
}

int clcnn_model_open(const char* checkpoint_path, clcnn_model** out) {
  if (!checkpoint_path || !out) return bad_argument("null path or out");
  *out = nullptr;
  return guarded([&] {
    auto* m = new clcnn_model{clcnn::load_checkpoint(checkpoint_path), ""};
    m->variant = clcnn::variant_name(m->model.variant);
    *out = m;
  });
}

void clcnn_model_free(clcnn_model* model) { delete model; }

int clcnn_model_variant(const clcnn_model* model, const char** out) {
  if (!model || !out) return bad_argument("null model or out");
  *out = model->variant.c_str();
  return CLCNN_OK;
}

int clcnn_model_num_classes(const clcnn_model* model, size_t* out) {
  if (!model || !out) return bad_argument("null model or out");
  *out = model->model.config.num_classes;
  return CLCNN_OK;
}

int clcnn_model_label_name(const clcnn_model* model, size_t index,
                           const char** out) {
  if (!model || !out) return bad_argument("null model or out");
  if (index >= model->model.labels.size()) {
    return bad_argument("label index out of range");
  }
  *out = model->model.labels[index].c_str();
  return CLCNN_OK;
}

int clcnn_model_predict(const clcnn_model* model, const char* instance_json,
                        double* probs, size_t probs_len, size_t* predicted) {
  if (!model || !instance_json || !probs || !predicted) {
    return bad_argument("null model, instance or out");
  }
  if (probs_len < model->model.config.num_classes) {
    return bad_argument("probs buffer too small");
  }
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(instance_json);
    } catch (const nlohmann::json::exception& e) {
      clcnn::fail(clcnn::concat("instance is not valid JSON: ", e.what()));
    }
    clcnn::Instance inst;
    try {
      inst.focus = j.at("focus").get<std::vector<std::string>>();
      if (j.contains("left")) {
        inst.left = j["left"].get<std::vector<std::vector<std::string>>>();
      }
      if (j.contains("right")) {
        inst.right = j["right"].get<std::vector<std::vector<std::string>>>();
      }
    } catch (const nlohmann::json::exception& e) {
      clcnn::fail(clcnn::concat("bad instance JSON: ", e.what()));
    }
    clcnn::ModelTape tape;
    const clcnn::Vector p = clcnn::forward(model->model, inst, tape);
    std::copy(p.begin(), p.end(), probs);
    size_t best = 0;
    for (size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    *predicted = best;
  });
}

}  // extern "C"
