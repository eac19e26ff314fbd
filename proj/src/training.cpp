#include "training.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

namespace clcnn {

void TrainConfig::validate() const {
  check(epochs >= 1, "train config: epochs must be >= 1");
  check(batch_size >= 1, "train config: batch_size must be >= 1");
  check(lr > 0.0, "train config: lr must be positive");
  check(beta1 >= 0.0 && beta1 < 1.0, "train config: beta1 must be in [0,1)");
  check(beta2 >= 0.0 && beta2 < 1.0, "train config: beta2 must be in [0,1)");
  check(eps > 0.0, "train config: eps must be positive");
  check(folds >= 1, "train config: folds must be >= 1");
  check(threads >= 1, "train config: threads must be >= 1");
}

Vector class_weights(const std::vector<size_t>& label_frequencies) {
  check(!label_frequencies.empty(), "class_weights: no classes");
  size_t max_f = 0;
  for (size_t f : label_frequencies) max_f = std::max(max_f, f);
  Vector w(label_frequencies.size());
  for (size_t i = 0; i < label_frequencies.size(); ++i) {
    if (label_frequencies[i] == 0) {
      fail(concat("class_weights: class ", i,
                  " has zero frequency in the training fold"));
    }
    w[i] = static_cast<double>(max_f) / static_cast<double>(label_frequencies[i]);
  }
  return w;
}

void adamax_update(std::span<double> param, std::span<const double> grad,
                   std::span<double> m, std::span<double> u, long t,
                   const TrainConfig& cfg) {
  if (param.size() != grad.size() || param.size() != m.size() ||
      param.size() != u.size()) {
    fail(concat("adamax: shape mismatch, param has ", param.size(),
                " entries, grad ", grad.size()));
  }
  const double correction = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double step = cfg.lr / correction;
  for (size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    u[i] = std::max(cfg.beta2 * u[i], std::abs(grad[i]));
    param[i] -= step * m[i] / (u[i] + cfg.eps);
  }
}

void adamax_step(ModelParams& params, const ModelParams& grads,
                 AdamaxState& state, const TrainConfig& cfg) {
  auto ptensors = tensor_list(params);
  auto gtensors = tensor_list(grads);
  check(ptensors.size() == gtensors.size(),
        "adamax: gradient structure does not match parameters");
  if (state.m.empty()) {
    state.m.resize(ptensors.size());
    state.u.resize(ptensors.size());
    for (size_t i = 0; i < ptensors.size(); ++i) {
      state.m[i].assign(ptensors[i]->size(), 0.0);
      state.u[i].assign(ptensors[i]->size(), 0.0);
    }
  }
  ++state.t;
  for (size_t i = 0; i < ptensors.size(); ++i) {
    adamax_update(*ptensors[i], *gtensors[i], state.m[i], state.u[i], state.t,
                  cfg);
  }
}

TrainResult train_fold(Model& model, const std::vector<Instance>& train_set,
                       const TrainConfig& cfg, const Vector& weights) {
  cfg.validate();
  check(!train_set.empty(), "train_fold: empty training set");

  TrainResult result;
  Rng shuffle_rng(cfg.shuffle_seed);
  Rng dropout_rng(mix64(cfg.shuffle_seed ^ 0x9e3779b97f4a7c15ull));
  AdamaxState state;

  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const auto start = std::chrono::steady_clock::now();
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<const Instance*> batch;
      batch.reserve(end - begin);
      for (size_t k = begin; k < end; ++k) batch.push_back(&train_set[order[k]]);
      ModelParams grads = zeros_like(model.params);
      const double loss =
          loss_and_grads(model, batch, weights, dropout_rng, grads);
      adamax_step(model.params, grads, state, cfg);
      epoch_loss += loss * static_cast<double>(batch.size());
    }
    result.epoch_losses.push_back(epoch_loss /
                                  static_cast<double>(train_set.size()));
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

FoldReport evaluate(const Model& model, const std::vector<Instance>& test_set) {
  check(!test_set.empty(), "evaluate: empty test set");
  const size_t k = model.config.num_classes;
  FoldReport report;
  report.confusion = Matrix(k, k);
  for (const Instance& inst : test_set) {
    ModelTape tape;
    const Vector probs = forward(model, inst, tape);
    size_t pred = 0;
    for (size_t j = 1; j < probs.size(); ++j) {
      if (probs[j] > probs[pred]) pred = j;  // ties keep the lowest index
    }
    report.confusion(inst.label, pred) += 1.0;
  }
  double correct = 0.0, total = 0.0;
  for (size_t i = 0; i < k; ++i) {
    correct += report.confusion(i, i);
    for (size_t j = 0; j < k; ++j) total += report.confusion(i, j);
  }
  report.accuracy = correct / total;
  report.precision.assign(k, 0.0);
  report.recall.assign(k, 0.0);
  report.f1.assign(k, 0.0);
  for (size_t i = 0; i < k; ++i) {
    double row_sum = 0.0, col_sum = 0.0;
    for (size_t j = 0; j < k; ++j) {
      row_sum += report.confusion(i, j);
      col_sum += report.confusion(j, i);
    }
    const double tp = report.confusion(i, i);
    report.precision[i] = col_sum > 0.0 ? tp / col_sum : 0.0;
    report.recall[i] = row_sum > 0.0 ? tp / row_sum : 0.0;
    const double pr = report.precision[i] + report.recall[i];
    report.f1[i] = pr > 0.0 ? 2.0 * report.precision[i] * report.recall[i] / pr
                            : 0.0;
  }
  return report;
}

std::vector<std::vector<size_t>> stratified_folds(
    const std::vector<Instance>& data, size_t num_classes, size_t folds,
    uint64_t seed) {
  check(folds >= 1, "stratified_folds: folds must be >= 1");
  std::vector<std::vector<size_t>> by_class(num_classes);
  for (size_t i = 0; i < data.size(); ++i) {
    check(data[i].label < num_classes, "stratified_folds: label out of range");
    by_class[data[i].label].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::vector<size_t>> fold_indices(folds);
  for (size_t c = 0; c < num_classes; ++c) {
    if (by_class[c].size() < folds) {
      fail(concat("stratified_folds: class ", c, " has ", by_class[c].size(),
                  " instances, fewer than ", folds, " folds"));
    }
    rng.shuffle(by_class[c]);
    for (size_t i = 0; i < by_class[c].size(); ++i) {
      fold_indices[i % folds].push_back(by_class[c][i]);
    }
  }
  return fold_indices;
}

uint64_t fold_seed(uint64_t base, size_t fold, uint64_t tag) {
  return mix64(base ^ mix64(tag + 0x100) ^
               (0x9e3779b97f4a7c15ull * (fold + 1)));
}

CvResult cross_validate(const std::vector<Instance>& data,
                        ModelVariant variant, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg,
                        std::shared_ptr<const EmbeddingTable> embeddings) {
  model_cfg.validate();
  train_cfg.validate();
  const uint64_t table_checksum = embeddings->checksum();

  const auto folds = stratified_folds(data, model_cfg.num_classes,
                                      train_cfg.folds, train_cfg.shuffle_seed);

  auto run_fold = [&](size_t f) {
    std::vector<Instance> train_set, test_set;
    for (size_t other = 0; other < folds.size(); ++other) {
      for (size_t idx : folds[other]) {
        (other == f ? test_set : train_set).push_back(data[idx]);
      }
    }
    std::vector<size_t> freqs(model_cfg.num_classes, 0);
    for (const Instance& inst : train_set) ++freqs[inst.label];
    const Vector weights = class_weights(freqs);

    ModelConfig cfg = model_cfg;
    cfg.seed = fold_seed(model_cfg.seed, f, 1);
    TrainConfig tcfg = train_cfg;
    tcfg.shuffle_seed = fold_seed(train_cfg.shuffle_seed, f, 2);

    Model model = build(variant, cfg, embeddings);
    const TrainResult tr = train_fold(model, train_set, tcfg, weights);
    FoldReport report = evaluate(model, test_set);
    report.fold = f;
    report.train_seconds = tr.seconds;
    return report;
  };

  CvResult result;
  result.folds.resize(folds.size());
  if (train_cfg.threads > 1) {
    std::vector<std::future<FoldReport>> futures;
    for (size_t f = 0; f < folds.size(); ++f) {
      futures.push_back(std::async(std::launch::async, run_fold, f));
    }
    for (size_t f = 0; f < folds.size(); ++f) result.folds[f] = futures[f].get();
  } else {
    for (size_t f = 0; f < folds.size(); ++f) result.folds[f] = run_fold(f);
  }

  check(embeddings->checksum() == table_checksum,
        "cross_validate: embedding table mutated during training");

  Vector accs;
  for (const FoldReport& r : result.folds) accs.push_back(r.accuracy);
  result.accuracy_mean = mean(accs);
  result.accuracy_stddev = sample_stddev(accs);
  result.f1_mean.assign(model_cfg.num_classes, 0.0);
  result.f1_stddev.assign(model_cfg.num_classes, 0.0);
  for (size_t c = 0; c < model_cfg.num_classes; ++c) {
    Vector f1s;
    for (const FoldReport& r : result.folds) f1s.push_back(r.f1[c]);
    result.f1_mean[c] = mean(f1s);
    result.f1_stddev[c] = sample_stddev(f1s);
  }
  return result;
}

double mean(const Vector& v) {
  check(!v.empty(), "mean: empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double sample_stddev(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

namespace {

// Regularized incomplete beta via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

std::pair<double, double> welch_t_test(const Vector& a, const Vector& b) {
  check(a.size() >= 2 && b.size() >= 2,
        "welch_t_test: both samples need at least 2 observations");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double sa = sample_stddev(a), sb = sample_stddev(b);
  const double va = sa * sa / na, vb = sb * sb / nb;

  if (va + vb == 0.0) {
    // Degenerate: no variance anywhere.
    if (ma == mb) return {0.0, 1.0};
    return {ma > mb ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity(),
            0.0};
  }
  const double t = (ma - mb) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  // Two-sided p from the t CDF: P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
  const double p = betai(df / 2.0, 0.5, df / (df + t * t));
  return {t, p};
}

}  // namespace clcnn
