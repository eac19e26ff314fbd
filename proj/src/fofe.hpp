#ifndef CLCNN_FOFE_HPP
#define CLCNN_FOFE_HPP

#include "tensor.hpp"

namespace clcnn {

// Forgetting factors for the two-level context encoding. alpha_sent weighs
// words inside one sentence, alpha_cont weighs whole sentences by their
// distance from the focus.
struct FofeConfig {
  double alpha_sent = 1.0;
  double alpha_cont = 0.9;

  void validate() const;
};

enum class ContextSide { Left, Right };

// z_1 = x_1, z_u = alpha * z_{u-1} + x_u; returns z_U. Equivalent to the
// closed form sum_u alpha^(U-u) x_u. alpha = 1 is a plain sum, alpha = 0
// keeps only the last word.
Vector fofe_sentence(const std::vector<Vector>& words, double alpha);

// Sentence-level recursion over per-sentence codes. For the left context
// the ADJACENT sentence is last in `codes`; for the right context it is
// first. Either way the adjacent sentence ends up with weight 1 and a
// sentence m steps away with weight alpha_cont^m. An empty context encodes
// to the zero vector of length `dim`.
Vector fofe_left_context(const std::vector<Vector>& codes, double alpha_cont,
                         size_t dim);
Vector fofe_right_context(const std::vector<Vector>& codes, double alpha_cont,
                          size_t dim);

// Two-level hierarchical encoding of one context side: each sentence is
// encoded with alpha_sent, the resulting codes with alpha_cont.
// Zero-length sentences are skipped.
Vector encode_context(const std::vector<std::vector<Vector>>& sentences,
                      const FofeConfig& cfg, ContextSide side, size_t dim);

}  // namespace clcnn

#endif
