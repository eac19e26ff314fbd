#ifndef CLCNN_TRAINING_HPP
#define CLCNN_TRAINING_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "model.hpp"

namespace clcnn {

struct TrainConfig {
  size_t epochs = 50;
  size_t batch_size = 64;
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  size_t folds = 5;
  uint64_t shuffle_seed = 1;
  size_t threads = 1;  // fold-level parallelism in cross_validate

  void validate() const;
};

// Per-tensor first moment and infinity norm, aligned with
// tensor_list(ModelParams) order.
struct AdamaxState {
  long t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> u;
};

// w_i = max(f)/f_i. Errors on a zero frequency.
Vector class_weights(const std::vector<size_t>& label_frequencies);

// One Adamax update on a single tensor:
//   m <- beta1*m + (1-beta1)*g;  u <- max(beta2*u, |g|);
//   theta <- theta - lr/(1-beta1^t) * m/(u+eps)
void adamax_update(std::span<double> param, std::span<const double> grad,
                   std::span<double> m, std::span<double> u, long t,
                   const TrainConfig& cfg);

void adamax_step(ModelParams& params, const ModelParams& grads,
                 AdamaxState& state, const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> epoch_losses;  // mean per-instance loss per epoch
  double seconds = 0.0;
};

// Epoch loop: seeded shuffle, minibatches of <= batch_size, loss_and_grads,
// adamax_step. Deterministic under (model seed, shuffle_seed).
TrainResult train_fold(Model& model, const std::vector<Instance>& train_set,
                       const TrainConfig& cfg, const Vector& weights);

struct FoldReport {
  size_t fold = 0;
  double accuracy = 0.0;
  std::vector<double> precision, recall, f1;
  Matrix confusion;  // row = true class, col = predicted class
  double train_seconds = 0.0;
};

// Prediction is the argmax probability, ties to the lowest class index.
// F1 is 0 whenever P+R = 0.
FoldReport evaluate(const Model& model, const std::vector<Instance>& test_set);

// Per-class round-robin assignment after a seeded shuffle; returns
// fold -> instance indices. Errors if any class has fewer instances than
// folds. Depends only on the labels and the seed, so every variant run on
// the same data shares the same partition.
std::vector<std::vector<size_t>> stratified_folds(
    const std::vector<Instance>& data, size_t num_classes, size_t folds,
    uint64_t seed);

struct CvResult {
  std::vector<FoldReport> folds;
  double accuracy_mean = 0.0;
  double accuracy_stddev = 0.0;
  std::vector<double> f1_mean, f1_stddev;
};

// Stratified k-fold cross-validation; class weights are recomputed from
// each fold's training portion. Fold seeds derive deterministically from
// the config seeds and the fold index.
CvResult cross_validate(const std::vector<Instance>& data,
                        ModelVariant variant, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg,
                        std::shared_ptr<const EmbeddingTable> embeddings);

double mean(const Vector& v);
double sample_stddev(const Vector& v);

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom; returns (t, two-sided p). Zero variance in both samples gives
// p = 1 for equal means and p = 0 otherwise.
std::pair<double, double> welch_t_test(const Vector& a, const Vector& b);

uint64_t fold_seed(uint64_t base, size_t fold, uint64_t tag);

}  // namespace clcnn

#endif
