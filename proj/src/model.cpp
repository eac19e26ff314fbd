#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "serialization.hpp"

namespace clcnn {

using nlohmann::json;

std::string variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::CnnOnly:
      return "cnn";
    case ModelVariant::LstmOnly:
      return "lstm";
    case ModelVariant::LstmCnn:
      return "lstm-cnn";
    case ModelVariant::LLstmCnn:
      return "l-lstm-cnn";
    case ModelVariant::CLstmCnn:
      return "c-lstm-cnn";
  }
  fail("unknown variant");
}

ModelVariant parse_variant(const std::string& name) {
  for (ModelVariant v : all_variants()) {
    if (variant_name(v) == name) return v;
  }
  fail(concat("unknown model variant '", name,
              "' (expected cnn, lstm, lstm-cnn, l-lstm-cnn or c-lstm-cnn)"));
}

const std::vector<ModelVariant>& all_variants() {
  static const std::vector<ModelVariant> v = {
      ModelVariant::CnnOnly, ModelVariant::LstmOnly, ModelVariant::LstmCnn,
      ModelVariant::LLstmCnn, ModelVariant::CLstmCnn};
  return v;
}

void ModelConfig::validate() const {
  check(embed_dim >= 1, "config: embed_dim must be >= 1");
  check(lstm_hidden >= 1, "config: lstm_hidden must be >= 1");
  check(!kernel_sizes.empty(), "config: kernel_sizes must be non-empty");
  check(std::is_sorted(kernel_sizes.begin(), kernel_sizes.end()) &&
            std::adjacent_find(kernel_sizes.begin(), kernel_sizes.end()) ==
                kernel_sizes.end(),
        "config: kernel_sizes must be strictly ascending");
  check(kernel_sizes.front() >= 1, "config: kernel sizes must be >= 1");
  check(conv_features >= 1, "config: conv_features must be >= 1");
  fofe.validate();
  check(fofe_dense_out >= 1, "config: fofe_dense_out must be >= 1");
  check(dropout_rate >= 0.0 && dropout_rate < 1.0,
        "config: dropout_rate must be in [0,1)");
  check(num_classes >= 1, "config: num_classes must be >= 1");
}

namespace {

bool has_lstm(ModelVariant v) { return v != ModelVariant::CnnOnly; }
bool has_cnn(ModelVariant v) { return v != ModelVariant::LstmOnly; }

size_t feature_width(ModelVariant v, const ModelConfig& c) {
  size_t width = 0;
  if (has_cnn(v)) {
    width += c.kernel_sizes.size() * c.conv_features;
  } else {
    width += 2 * c.lstm_hidden;
  }
  if (v == ModelVariant::LLstmCnn) width += 4 * c.lstm_hidden;
  if (v == ModelVariant::CLstmCnn) width += 2 * c.fofe_dense_out;
  return width;
}

void visit_lstm(const std::string& prefix, LstmParams& p,
                const std::function<void(const std::string&, size_t, size_t,
                                         std::vector<double>&)>& fn) {
  const std::pair<const char*, LstmDirParams*> dirs[] = {{"fwd", &p.fwd},
                                                         {"bwd", &p.bwd}};
  for (auto [dname, dir] : dirs) {
    const std::pair<const char*, Matrix*> mats[] = {
        {"Wi", &dir->Wi}, {"Wf", &dir->Wf}, {"Wo", &dir->Wo}, {"Wg", &dir->Wg},
        {"Ui", &dir->Ui}, {"Uf", &dir->Uf}, {"Uo", &dir->Uo}, {"Ug", &dir->Ug}};
    for (auto [mname, m] : mats) {
      fn(concat(prefix, ".", dname, ".", mname), m->rows, m->cols, m->data);
    }
    const std::pair<const char*, Vector*> vecs[] = {
        {"bi", &dir->bi}, {"bf", &dir->bf}, {"bo", &dir->bo}, {"bg", &dir->bg}};
    for (auto [vname, v] : vecs) {
      fn(concat(prefix, ".", dname, ".", vname), 1, v->size(), *v);
    }
  }
}

}  // namespace

void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, size_t,
                                              size_t, std::vector<double>&)>& fn) {
  if (p.lstm) visit_lstm("lstm", *p.lstm, fn);
  for (ConvParams& c : p.convs) {
    fn(concat("conv", c.ksize, ".kernel"), c.kernel.rows, c.kernel.cols,
       c.kernel.data);
    fn(concat("conv", c.ksize, ".bias"), 1, c.bias.size(), c.bias);
  }
  if (p.ctx_lstm) visit_lstm("ctx_lstm", *p.ctx_lstm, fn);
  if (p.fofe_left) {
    fn("fofe_left.W", p.fofe_left->W.rows, p.fofe_left->W.cols,
       p.fofe_left->W.data);
    fn("fofe_left.b", 1, p.fofe_left->b.size(), p.fofe_left->b);
  }
  if (p.fofe_right) {
    fn("fofe_right.W", p.fofe_right->W.rows, p.fofe_right->W.cols,
       p.fofe_right->W.data);
    fn("fofe_right.b", 1, p.fofe_right->b.size(), p.fofe_right->b);
  }
  fn("output.W", p.output.W.rows, p.output.W.cols, p.output.W.data);
  fn("output.b", 1, p.output.b.size(), p.output.b);
}

void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, size_t,
                                              size_t,
                                              const std::vector<double>&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(p),
                  [&fn](const std::string& name, size_t r, size_t c,
                        std::vector<double>& data) { fn(name, r, c, data); });
}

std::vector<std::vector<double>*> tensor_list(ModelParams& p) {
  std::vector<std::vector<double>*> out;
  for_each_tensor(p, [&out](const std::string&, size_t, size_t,
                            std::vector<double>& d) { out.push_back(&d); });
  return out;
}

std::vector<const std::vector<double>*> tensor_list(const ModelParams& p) {
  std::vector<const std::vector<double>*> out;
  for_each_tensor(p, [&out](const std::string&, size_t, size_t,
                            const std::vector<double>& d) { out.push_back(&d); });
  return out;
}

size_t param_count(const ModelParams& p) {
  size_t n = 0;
  for_each_tensor(p, [&n](const std::string&, size_t, size_t,
                          const std::vector<double>& d) { n += d.size(); });
  return n;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  if (p.lstm) z.lstm = zeros_like(*p.lstm);
  for (const ConvParams& c : p.convs) z.convs.push_back(zeros_like(c));
  if (p.ctx_lstm) z.ctx_lstm = zeros_like(*p.ctx_lstm);
  if (p.fofe_left) z.fofe_left = zeros_like(*p.fofe_left);
  if (p.fofe_right) z.fofe_right = zeros_like(*p.fofe_right);
  z.output = zeros_like(p.output);
  return z;
}

Model build(ModelVariant variant, const ModelConfig& config,
            std::shared_ptr<const EmbeddingTable> embeddings) {
  config.validate();
  check(embeddings != nullptr, "build: embedding table required");
  check(embeddings->dim == config.embed_dim,
        concat("build: embedding table dim ", embeddings->dim,
               " does not match config embed_dim ", config.embed_dim));

  Model m;
  m.variant = variant;
  m.config = config;
  m.embeddings = std::move(embeddings);

  Rng rng(config.seed);
  if (has_lstm(variant)) {
    m.params.lstm = init_lstm(config.embed_dim, config.lstm_hidden, rng);
  }
  if (has_cnn(variant)) {
    const size_t conv_in =
        has_lstm(variant) ? 2 * config.lstm_hidden : config.embed_dim;
    for (size_t k : config.kernel_sizes) {
      m.params.convs.push_back(init_conv(k, config.conv_features, conv_in, rng));
    }
  }
  if (variant == ModelVariant::LLstmCnn) {
    m.params.ctx_lstm = init_lstm(config.embed_dim, config.lstm_hidden, rng);
  }
  if (variant == ModelVariant::CLstmCnn) {
    m.params.fofe_left = init_dense(config.fofe_dense_out, config.embed_dim, rng);
    m.params.fofe_right = init_dense(config.fofe_dense_out, config.embed_dim, rng);
  }
  m.params.output =
      init_dense(config.num_classes, feature_width(variant, config), rng);
  return m;
}

namespace {

Matrix embed_tokens(const EmbeddingTable& table,
                    const std::vector<std::string>& tokens) {
  Matrix m(tokens.size(), table.dim);
  for (size_t t = 0; t < tokens.size(); ++t) {
    const Vector v = table.lookup(tokens[t]);
    std::copy(v.begin(), v.end(), m.row(t).begin());
  }
  return m;
}

Matrix pad_rows(Matrix m, size_t min_rows) {
  if (m.rows >= min_rows) return m;
  Matrix out(min_rows, m.cols);
  std::copy(m.data.begin(), m.data.end(), out.data.begin());
  return out;
}

std::vector<std::vector<Vector>> embed_side(
    const EmbeddingTable& table,
    const std::vector<std::vector<std::string>>& side) {
  std::vector<std::vector<Vector>> out;
  out.reserve(side.size());
  for (const auto& sent : side) {
    std::vector<Vector> vecs;
    vecs.reserve(sent.size());
    for (const std::string& tok : sent) vecs.push_back(table.lookup(tok));
    out.push_back(std::move(vecs));
  }
  return out;
}

Vector final_state(const BiLstmTape& tape, size_t hidden) {
  const size_t T = tape.fwd.h.rows;
  Vector out(2 * hidden);
  const auto hf = tape.fwd.h.row(T - 1);
  const auto hb = tape.bwd.h.row(T - 1);
  std::copy(hf.begin(), hf.end(), out.begin());
  std::copy(hb.begin(), hb.end(), out.begin() + hidden);
  return out;
}

// Gradient of final_state expressed against the input-aligned dH layout
// consumed by bilstm_backward: the forward block of the last row and the
// backward block of the first row.
Matrix final_state_grad(size_t T, size_t hidden, std::span<const double> d) {
  Matrix dH(T, 2 * hidden);
  for (size_t j = 0; j < hidden; ++j) {
    dH(T - 1, j) = d[j];
    dH(0, hidden + j) = d[hidden + j];
  }
  return dH;
}

void append(Vector& dst, const Vector& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

Vector forward_impl(const Model& model, const Instance& inst, Rng* train_rng,
                    ModelTape& tape) {
  check(!inst.focus.empty(), "forward: empty focus sentence");
  const ModelConfig& cfg = model.config;
  const EmbeddingTable& emb = *model.embeddings;
  const ModelVariant v = model.variant;

  tape.embedded = embed_tokens(emb, inst.focus);
  tape.true_len = tape.embedded.rows;

  Vector features;
  if (has_cnn(v)) {
    Matrix conv_in;
    if (has_lstm(v)) {
      tape.lstm.emplace();
      conv_in = bilstm_forward(tape.embedded, *model.params.lstm, *tape.lstm);
    } else {
      conv_in = tape.embedded;
    }
    tape.true_len = conv_in.rows;
    tape.conv_input = pad_rows(std::move(conv_in), cfg.max_kernel());
    tape.convs.resize(model.params.convs.size());
    tape.pooled.clear();
    for (size_t i = 0; i < model.params.convs.size(); ++i) {
      const Matrix c =
          conv1d_forward(tape.conv_input, model.params.convs[i], tape.convs[i]);
      tape.pools.push_back(max_over_time(c));
      append(tape.pooled, tape.pools.back().values);
    }
    Rng unused(0);
    tape.dropped = dropout(tape.pooled, cfg.dropout_rate,
                           train_rng ? *train_rng : unused,
                           train_rng != nullptr, tape.dropout_mask);
    features = tape.dropped;
  } else {
    tape.lstm.emplace();
    bilstm_forward(tape.embedded, *model.params.lstm, *tape.lstm);
    features = final_state(*tape.lstm, cfg.lstm_hidden);
  }

  if (v == ModelVariant::LLstmCnn) {
    const std::vector<std::string>* left_adj =
        inst.left.empty() ? nullptr : &inst.left.back();
    const std::vector<std::string>* right_adj =
        inst.right.empty() ? nullptr : &inst.right.front();
    auto encode_adjacent = [&](const std::vector<std::string>* sent, Matrix& x,
                               std::optional<BiLstmTape>& t) {
      if (sent == nullptr || sent->empty()) {
        return Vector(2 * cfg.lstm_hidden, 0.0);
      }
      x = embed_tokens(emb, *sent);
      t.emplace();
      bilstm_forward(x, *model.params.ctx_lstm, *t);
      return final_state(*t, cfg.lstm_hidden);
    };
    append(features, encode_adjacent(left_adj, tape.ctx_left_x, tape.ctx_left_tape));
    append(features,
           encode_adjacent(right_adj, tape.ctx_right_x, tape.ctx_right_tape));
  }

  if (v == ModelVariant::CLstmCnn) {
    tape.fofe_left_code = encode_context(embed_side(emb, inst.left), cfg.fofe,
                                         ContextSide::Left, cfg.embed_dim);
    tape.fofe_right_code = encode_context(embed_side(emb, inst.right), cfg.fofe,
                                          ContextSide::Right, cfg.embed_dim);
    append(features, dense_forward(tape.fofe_left_code, *model.params.fofe_left));
    append(features,
           dense_forward(tape.fofe_right_code, *model.params.fofe_right));
  }

  tape.features = std::move(features);
  const Vector logits = dense_forward(tape.features, model.params.output);
  tape.probs = softmax(logits);
  return tape.probs;
}

void backward_impl(const Model& model, const ModelTape& tape,
                   const Vector& dlogits, ModelParams& grads) {
  const ModelConfig& cfg = model.config;
  const ModelVariant v = model.variant;
  const size_t hidden = cfg.lstm_hidden;

  const Vector dfeat =
      dense_backward(tape.features, model.params.output, dlogits, grads.output);
  size_t offset = 0;

  if (has_cnn(v)) {
    const size_t base = tape.pooled.size();
    const Vector dbase(dfeat.begin(), dfeat.begin() + base);
    const Vector dpooled = dropout_backward(tape.dropout_mask, dbase);
    Matrix dconv_input(tape.conv_input.rows, tape.conv_input.cols);
    size_t feat_off = 0;
    for (size_t i = 0; i < model.params.convs.size(); ++i) {
      const ConvParams& cp = model.params.convs[i];
      const Vector dv(dpooled.begin() + feat_off,
                      dpooled.begin() + feat_off + cp.features);
      feat_off += cp.features;
      const size_t positions = tape.conv_input.rows - cp.ksize + 1;
      const Matrix dC = max_over_time_backward(positions, tape.pools[i].argmax, dv);
      const Matrix dIn =
          conv1d_backward(tape.conv_input, cp, tape.convs[i], dC, grads.convs[i]);
      for (size_t k = 0; k < dconv_input.data.size(); ++k) {
        dconv_input.data[k] += dIn.data[k];
      }
    }
    if (has_lstm(v)) {
      Matrix dH(tape.true_len, 2 * hidden);
      std::copy(dconv_input.data.begin(),
                dconv_input.data.begin() + tape.true_len * 2 * hidden,
                dH.data.begin());
      bilstm_backward(tape.embedded, *model.params.lstm, *tape.lstm, dH,
                      *grads.lstm);
    }
    offset = base;
  } else {
    const size_t T = tape.embedded.rows;
    const Matrix dH = final_state_grad(
        T, hidden, std::span<const double>(dfeat.data(), 2 * hidden));
    bilstm_backward(tape.embedded, *model.params.lstm, *tape.lstm, dH,
                    *grads.lstm);
    offset = 2 * hidden;
  }

  if (v == ModelVariant::LLstmCnn) {
    auto back_adjacent = [&](const Matrix& x,
                             const std::optional<BiLstmTape>& t) {
      if (t) {
        const Matrix dH = final_state_grad(
            x.rows, hidden,
            std::span<const double>(dfeat.data() + offset, 2 * hidden));
        bilstm_backward(x, *model.params.ctx_lstm, *t, dH, *grads.ctx_lstm);
      }
      offset += 2 * hidden;
    };
    back_adjacent(tape.ctx_left_x, tape.ctx_left_tape);
    back_adjacent(tape.ctx_right_x, tape.ctx_right_tape);
  }

  if (v == ModelVariant::CLstmCnn) {
    const size_t fd = cfg.fofe_dense_out;
    const Vector dul(dfeat.begin() + offset, dfeat.begin() + offset + fd);
    dense_backward(tape.fofe_left_code, *model.params.fofe_left, dul,
                   *grads.fofe_left);
    const Vector dur(dfeat.begin() + offset + fd,
                     dfeat.begin() + offset + 2 * fd);
    dense_backward(tape.fofe_right_code, *model.params.fofe_right, dur,
                   *grads.fofe_right);
  }
}

}  // namespace

Vector forward(const Model& model, const Instance& inst, ModelTape& tape) {
  return forward_impl(model, inst, nullptr, tape);
}

double loss_and_grads(const Model& model,
                      const std::vector<const Instance*>& batch,
                      const Vector& class_weights, Rng& rng,
                      ModelParams& grads) {
  check(!batch.empty(), "loss_and_grads: empty minibatch");
  check(class_weights.size() == model.config.num_classes,
        "loss_and_grads: class weight count does not match num_classes");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Instance* inst : batch) {
    check(inst->label < model.config.num_classes,
          concat("loss_and_grads: label ", inst->label, " out of range for ",
                 model.config.num_classes, " classes"));
    ModelTape tape;
    const Vector probs = forward_impl(model, *inst, &rng, tape);
    const double w = class_weights[inst->label];
    const double p = probs[inst->label];
    loss += w * -std::log(p) * inv_b;

    Vector dlogits(probs.size());
    for (size_t j = 0; j < probs.size(); ++j) {
      dlogits[j] = w * inv_b * (probs[j] - (j == inst->label ? 1.0 : 0.0));
    }
    backward_impl(model, tape, dlogits, grads);
  }
  check(std::isfinite(loss), "loss_and_grads: non-finite loss");
  return loss;
}

namespace {
constexpr char kCheckpointMagic[] = "CLCNNCKPT1\n";
}

void save_checkpoint(const Model& model, const std::string& path) {
  json tensors = json::array();
  for_each_tensor(model.params, [&tensors](const std::string& name, size_t r,
                                           size_t c, const std::vector<double>&) {
    tensors.push_back({{"name", name}, {"rows", r}, {"cols", c}});
  });
  tensors.push_back({{"name", "embeddings.vectors"},
                     {"rows", model.embeddings->vectors.rows},
                     {"cols", model.embeddings->vectors.cols}});

  const json header = {
      {"variant", variant_name(model.variant)},
      {"config", model_config_to_json(model.config)},
      {"labels", model.labels},
      {"embeddings",
       {{"dim", model.embeddings->dim},
        {"oov_seed", model.embeddings->oov_seed},
        {"tokens", model.embeddings->tokens}}},
      {"tensors", tensors}};
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  check(out.good(), concat("cannot write checkpoint '", path, "'"));
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  const uint64_t hlen = header_str.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_str.data(), static_cast<std::streamsize>(hlen));
  for_each_tensor(model.params, [&out](const std::string&, size_t, size_t,
                                       const std::vector<double>& data) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  });
  const auto& ev = model.embeddings->vectors.data;
  out.write(reinterpret_cast<const char*>(ev.data()),
            static_cast<std::streamsize>(ev.size() * sizeof(double)));
  check(out.good(), concat("write failed for checkpoint '", path, "'"));
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), concat("cannot open checkpoint '", path, "'"));

  char magic[sizeof(kCheckpointMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in.good() ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    fail(concat("'", path, "' is not a checkpoint file (bad magic)"));
  }
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  check(in.good() && hlen > 0 && hlen < (1ull << 31),
        concat("checkpoint '", path, "': corrupt header length"));
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  check(in.good(), concat("checkpoint '", path, "': truncated header"));

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    fail(concat("checkpoint '", path, "': corrupt header: ", e.what()));
  }

  Model model;
  try {
    model.variant = parse_variant(header.at("variant").get<std::string>());
    model.config = model_config_from_json(header.at("config"));
    model.labels = header.at("labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(concat("checkpoint '", path, "': corrupt header: ", e.what()));
  }
  model.config.validate();

  auto table = std::make_shared<EmbeddingTable>();
  const json& ej = header.at("embeddings");
  table->dim = ej.at("dim").get<size_t>();
  table->oov_seed = ej.at("oov_seed").get<uint64_t>();
  table->tokens = ej.at("tokens").get<std::vector<std::string>>();
  for (size_t i = 0; i < table->tokens.size(); ++i) {
    table->vocab.emplace(table->tokens[i], i);
  }

  // Rebuild the parameter structure from the config, then overwrite every
  // tensor from the stream, validating against the manifest.
  Model skeleton = build(model.variant, model.config,
                         std::make_shared<EmbeddingTable>(
                             EmbeddingTable::random(model.config.embed_dim, 0)));
  model.params = std::move(skeleton.params);

  const json& manifest = header.at("tensors");
  size_t idx = 0;
  auto read_tensor = [&](const std::string& name, size_t rows, size_t cols,
                         std::vector<double>& data) {
    check(idx < manifest.size(),
          concat("checkpoint '", path, "': manifest too short"));
    const json& entry = manifest[idx++];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("rows").get<size_t>() != rows ||
        entry.at("cols").get<size_t>() != cols) {
      fail(concat("checkpoint '", path, "': tensor mismatch at '", name,
                  "' (expected ", rows, "x", cols, ")"));
    }
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    check(in.good(), concat("checkpoint '", path, "': truncated tensor data"));
  };
  for_each_tensor(model.params, read_tensor);

  check(idx < manifest.size(),
        concat("checkpoint '", path, "': missing embedding tensor"));
  const json& last = manifest[idx];
  table->vectors = Matrix(last.at("rows").get<size_t>(),
                          last.at("cols").get<size_t>());
  read_tensor("embeddings.vectors", table->vectors.rows, table->vectors.cols,
              table->vectors.data);
  check(table->vectors.rows == table->tokens.size(),
        concat("checkpoint '", path, "': embedding vocab/vector mismatch"));
  model.embeddings = std::move(table);
  return model;
}

}  // namespace clcnn
