#include "fofe.hpp"

#include "common.hpp"

namespace clcnn {

void FofeConfig::validate() const {
  check(alpha_sent >= 0.0 && alpha_sent <= 1.0,
        "fofe: alpha_sent must be in [0,1]");
  check(alpha_cont >= 0.0 && alpha_cont <= 1.0,
        "fofe: alpha_cont must be in [0,1]");
}

namespace {

// Accumulates codes[order[0]], ..., codes[order[n-1]] with the FOFE
// recursion; the last visited element carries weight 1.
template <typename IndexFn>
Vector fofe_accumulate(const std::vector<Vector>& codes, double alpha,
                       size_t dim, IndexFn index_of) {
  Vector z(dim, 0.0);
  for (size_t k = 0; k < codes.size(); ++k) {
    const Vector& x = codes[index_of(k)];
    if (x.size() != dim) {
      fail(concat("fofe: dimension mismatch, expected ", dim, ", got ",
                  x.size()));
    }
    for (size_t j = 0; j < dim; ++j) z[j] = alpha * z[j] + x[j];
  }
  return z;
}

}  // namespace

Vector fofe_sentence(const std::vector<Vector>& words, double alpha) {
  check(!words.empty(), "fofe_sentence: empty word sequence");
  const size_t dim = words[0].size();
  return fofe_accumulate(words, alpha, dim, [](size_t k) { return k; });
}

Vector fofe_left_context(const std::vector<Vector>& codes, double alpha_cont,
                         size_t dim) {
  return fofe_accumulate(codes, alpha_cont, dim, [](size_t k) { return k; });
}

Vector fofe_right_context(const std::vector<Vector>& codes, double alpha_cont,
                          size_t dim) {
  const size_t n = codes.size();
  return fofe_accumulate(codes, alpha_cont, dim,
                         [n](size_t k) { return n - 1 - k; });
}

Vector encode_context(const std::vector<std::vector<Vector>>& sentences,
                      const FofeConfig& cfg, ContextSide side, size_t dim) {
  cfg.validate();
  std::vector<Vector> codes;
  codes.reserve(sentences.size());
  for (const auto& sent : sentences) {
    if (sent.empty()) continue;
    codes.push_back(fofe_sentence(sent, cfg.alpha_sent));
  }
  return side == ContextSide::Left
             ? fofe_left_context(codes, cfg.alpha_cont, dim)
             : fofe_right_context(codes, cfg.alpha_cont, dim);
}

}  // namespace clcnn
