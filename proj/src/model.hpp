#ifndef CLCNN_MODEL_HPP
#define CLCNN_MODEL_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "embeddings.hpp"
#include "fofe.hpp"
#include "layers.hpp"

namespace clcnn {

// The five experiment architectures. All share the focus-sentence pipeline
// appropriate to the variant; the two context-aware ones add either an
// LSTM over the adjacent sentences or the hierarchical FOFE codes.
enum class ModelVariant { CnnOnly, LstmOnly, LstmCnn, LLstmCnn, CLstmCnn };

std::string variant_name(ModelVariant v);
ModelVariant parse_variant(const std::string& name);
const std::vector<ModelVariant>& all_variants();

struct ModelConfig {
  size_t embed_dim = 50;
  size_t lstm_hidden = 64;
  std::vector<size_t> kernel_sizes = {2, 3, 4, 5, 6};
  size_t conv_features = 64;
  FofeConfig fofe;
  size_t fofe_dense_out = 64;
  double dropout_rate = 0.5;
  size_t num_classes = 2;
  uint64_t seed = 1;

  void validate() const;
  size_t max_kernel() const { return kernel_sizes.back(); }
};

// Parameter presence tracks the variant: CnnOnly has no LSTM, only
// LLstmCnn has the context LSTM, only CLstmCnn has the FOFE dense pair.
struct ModelParams {
  std::optional<LstmParams> lstm;
  std::vector<ConvParams> convs;
  std::optional<LstmParams> ctx_lstm;
  std::optional<DenseParams> fofe_left;
  std::optional<DenseParams> fofe_right;
  DenseParams output;
};

// Visits every parameter tensor in a fixed, documented order (the order
// used by the optimizer state and the checkpoint format).
void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, size_t,
                                              size_t, std::vector<double>&)>& fn);
void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, size_t,
                                              size_t,
                                              const std::vector<double>&)>& fn);
std::vector<std::vector<double>*> tensor_list(ModelParams& p);
std::vector<const std::vector<double>*> tensor_list(const ModelParams& p);
size_t param_count(const ModelParams& p);
ModelParams zeros_like(const ModelParams& p);

struct Model {
  ModelVariant variant = ModelVariant::CLstmCnn;
  ModelConfig config;
  ModelParams params;
  std::shared_ptr<const EmbeddingTable> embeddings;
  std::vector<std::string> labels;  // class names, index-aligned; may be empty
};

Model build(ModelVariant variant, const ModelConfig& config,
            std::shared_ptr<const EmbeddingTable> embeddings);

struct ModelTape {
  Matrix embedded;    // focus tokens as rows, true length
  Matrix conv_input;  // padded conv input (embeddings or LSTM outputs)
  size_t true_len = 0;
  std::optional<BiLstmTape> lstm;
  std::vector<ConvTape> convs;
  std::vector<PoolResult> pools;
  Vector pooled;        // concatenated pooled features, pre-dropout
  Vector dropout_mask;
  Vector dropped;
  Matrix ctx_left_x, ctx_right_x;  // embedded adjacent sentences (LLstmCnn)
  std::optional<BiLstmTape> ctx_left_tape, ctx_right_tape;
  Vector fofe_left_code, fofe_right_code;  // context codes (CLstmCnn)
  Vector features;  // input to the output layer
  Vector probs;
};

// Inference forward pass: dropout is inactive, output is the class
// probability vector. Errors on an empty focus sentence.
Vector forward(const Model& model, const Instance& inst, ModelTape& tape);

// Mean over the minibatch of w_label * (-log p_label) plus gradients for
// every trainable tensor. `rng` drives the dropout masks; embeddings stay
// frozen (no gradient flows into them).
double loss_and_grads(const Model& model,
                      const std::vector<const Instance*>& batch,
                      const Vector& class_weights, Rng& rng,
                      ModelParams& grads);

// Self-describing checkpoint: JSON header (variant, config, labels,
// embedding vocabulary, tensor manifest) followed by raw little-endian
// doubles. Round-trips bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace clcnn

#endif
