#include "embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "common.hpp"

namespace clcnn {

Vector EmbeddingTable::lookup(const std::string& token) const {
  check(dim > 0, "embedding table has dimension 0");
  auto it = vocab.find(token);
  if (it != vocab.end()) {
    auto row = vectors.row(it->second);
    return Vector(row.begin(), row.end());
  }
  Rng rng(mix64(fnv1a64(token) ^ mix64(oov_seed)));
  Vector v(dim);
  const double half = 0.5 / static_cast<double>(dim);
  for (double& x : v) x = rng.uniform(-half, half);
  return v;
}

uint64_t EmbeddingTable::checksum() const {
  uint64_t h = fnv1a64("embeddings");
  h = mix64(h ^ dim);
  h = mix64(h ^ oov_seed);
  for (const std::string& t : tokens) h = mix64(h ^ fnv1a64(t));
  for (double x : vectors.data) {
    uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    h = mix64(h ^ bits);
  }
  return h;
}

EmbeddingTable EmbeddingTable::random(size_t dim, uint64_t oov_seed) {
  check(dim > 0, "embedding dimension must be positive");
  EmbeddingTable t;
  t.dim = dim;
  t.oov_seed = oov_seed;
  t.vectors = Matrix(0, dim);
  return t;
}

namespace {

double parse_real(std::string_view field, size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail(concat("embeddings line ", line_no, ": unparsable real '", field,
                "'"));
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

EmbeddingTable load_word2vec_text(const std::string& path, uint64_t oov_seed) {
  std::ifstream in(path);
  check(in.good(), concat("cannot open embeddings file '", path, "'"));

  std::string line;
  check(static_cast<bool>(std::getline(in, line)),
        concat("embeddings file '", path, "' is empty"));
  auto header = split_ws(line);
  if (header.size() != 2) {
    fail(concat("embeddings line 1: header must be 'vocab_size dim', got '",
                line, "'"));
  }
  const auto declared = static_cast<size_t>(parse_real(header[0], 1));
  const auto dim = static_cast<size_t>(parse_real(header[1], 1));
  check(dim > 0, "embeddings line 1: dim must be positive");

  EmbeddingTable table;
  table.dim = dim;
  table.oov_seed = oov_seed;
  table.vectors = Matrix(declared, dim);

  size_t line_no = 1;
  size_t loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_ws(line);
    if (fields.size() != dim + 1) {
      fail(concat("embeddings line ", line_no, ": expected ", dim + 1,
                  " fields, got ", fields.size()));
    }
    if (loaded == declared) {
      fail(concat("embeddings line ", line_no, ": header declared ", declared,
                  " entries but more follow"));
    }
    std::string token(fields[0]);
    size_t row;
    auto it = table.vocab.find(token);
    if (it != table.vocab.end()) {
      std::cerr << "warning: duplicate token '" << token << "' at line "
                << line_no << ", last occurrence wins\n";
      row = it->second;
    } else {
      row = table.tokens.size();
      table.vocab.emplace(token, row);
      table.tokens.push_back(std::move(token));
      ++loaded;
    }
    for (size_t j = 0; j < dim; ++j) {
      table.vectors(row, j) = parse_real(fields[j + 1], line_no);
    }
  }
  if (loaded != declared) {
    fail(concat("embeddings file '", path, "': header declared ", declared,
                " entries but only ", loaded, " found"));
  }
  table.vectors.rows = loaded;
  return table;
}

void save_word2vec_text(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), concat("cannot write embeddings file '", path, "'"));
  out.precision(17);
  out << table.tokens.size() << " " << table.dim << "\n";
  for (size_t i = 0; i < table.tokens.size(); ++i) {
    out << table.tokens[i];
    for (size_t j = 0; j < table.dim; ++j) out << " " << table.vectors(i, j);
    out << "\n";
  }
  check(out.good(), concat("write failed for embeddings file '", path, "'"));
}

EmbeddingTable train_skipgram(
    const std::vector<std::vector<std::string>>& corpus,
    const SkipgramConfig& cfg) {
  check(!corpus.empty(), "skipgram: corpus must be non-empty");
  check(cfg.dim >= 1, "skipgram: dim must be >= 1");
  check(cfg.window >= 1, "skipgram: window must be >= 1");
  check(cfg.negatives >= 1, "skipgram: negatives must be >= 1");
  check(cfg.epochs >= 1, "skipgram: epochs must be >= 1");
  check(cfg.lr > 0.0, "skipgram: lr must be positive");

  EmbeddingTable table;
  table.dim = cfg.dim;
  table.oov_seed = cfg.seed;

  std::vector<size_t> counts;
  std::vector<std::vector<size_t>> ids(corpus.size());
  for (size_t s = 0; s < corpus.size(); ++s) {
    for (const std::string& tok : corpus[s]) {
      auto it = table.vocab.find(tok);
      size_t id;
      if (it == table.vocab.end()) {
        id = table.tokens.size();
        table.vocab.emplace(tok, id);
        table.tokens.push_back(tok);
        counts.push_back(0);
      } else {
        id = it->second;
      }
      ++counts[id];
      ids[s].push_back(id);
    }
  }
  const size_t v = table.tokens.size();
  check(v >= cfg.negatives + 1,
        concat("skipgram: vocabulary of ", v, " is smaller than negatives+1 (",
               cfg.negatives + 1, ")"));

  // Unigram^0.75 noise distribution as a cumulative table.
  std::vector<double> cdf(v);
  double total = 0.0;
  for (size_t i = 0; i < v; ++i) {
    total += std::pow(static_cast<double>(counts[i]), 0.75);
    cdf[i] = total;
  }
  for (double& x : cdf) x /= total;

  Rng rng(cfg.seed);
  Matrix w_in(v, cfg.dim);
  Matrix w_out(v, cfg.dim);
  const double half = 0.5 / static_cast<double>(cfg.dim);
  for (double& x : w_in.data) x = rng.uniform(-half, half);

  auto sample_noise = [&](size_t exclude) {
    for (;;) {
      const double r = rng.next_double();
      const size_t id = static_cast<size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
      if (id != exclude && id < v) return id;
    }
  };

  Vector accum(cfg.dim);
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& sent : ids) {
      for (size_t t = 0; t < sent.size(); ++t) {
        const size_t center = sent[t];
        const size_t lo = t >= cfg.window ? t - cfg.window : 0;
        const size_t hi = std::min(sent.size(), t + cfg.window + 1);
        for (size_t u = lo; u < hi; ++u) {
          if (u == t) continue;
          const size_t target = sent[u];
          std::fill(accum.begin(), accum.end(), 0.0);
          auto h = w_in.row(center);
          for (size_t k = 0; k <= cfg.negatives; ++k) {
            const size_t out = k == 0 ? target : sample_noise(target);
            const double label = k == 0 ? 1.0 : 0.0;
            auto o = w_out.row(out);
            const double g = cfg.lr * (label - sigmoid(dot(h, o)));
            axpy(g, o, accum);
            axpy(g, h, o);
          }
          axpy(1.0, accum, w_in.row(center));
        }
      }
    }
  }
  table.vectors = std::move(w_in);
  return table;
}

}  // namespace clcnn
