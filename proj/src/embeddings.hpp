#ifndef CLCNN_EMBEDDINGS_HPP
#define CLCNN_EMBEDDINGS_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace clcnn {

// Vocabulary plus word vectors. Immutable once classifier training starts;
// the training harness asserts checksum() before and after a run.
struct EmbeddingTable {
  size_t dim = 0;
  std::vector<std::string> tokens;  // index -> token
  std::unordered_map<std::string, size_t> vocab;
  Matrix vectors;  // |vocab| x dim
  uint64_t oov_seed = 0;

  // Known token: its stored row. Unknown token: a deterministic
  // pseudo-random vector seeded by hash(token, oov_seed), components
  // uniform in [-0.5/dim, 0.5/dim].
  Vector lookup(const std::string& token) const;

  uint64_t checksum() const;

  // Empty-vocabulary table: every lookup goes through the OOV path, which
  // yields a frozen random table without any pre-training.
  static EmbeddingTable random(size_t dim, uint64_t oov_seed);
};

// word2vec text format: header "vocab_size dim", then one
// "token v1 ... v_dim" line per entry.
EmbeddingTable load_word2vec_text(const std::string& path,
                                  uint64_t oov_seed = 0);
void save_word2vec_text(const EmbeddingTable& table, const std::string& path);

struct SkipgramConfig {
  size_t dim = 50;
  size_t window = 5;
  size_t negatives = 5;
  size_t epochs = 5;
  double lr = 0.025;
  uint64_t seed = 1;
};

// Skip-gram with negative sampling, unigram^0.75 noise distribution,
// deterministic under the seed. A utility path; classifiers may equally
// run on frozen random tables.
EmbeddingTable train_skipgram(
    const std::vector<std::vector<std::string>>& corpus,
    const SkipgramConfig& cfg);

}  // namespace clcnn

#endif
