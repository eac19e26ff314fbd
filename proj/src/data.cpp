#include "data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "common.hpp"

namespace clcnn {

using nlohmann::json;

size_t Corpus::label_index(const std::string& name) const {
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == name) return i;
  }
  fail(concat("unknown label '", name, "'"));
}

ContextRegime parse_regime(const std::string& name) {
  if (name == "adjacent") return ContextRegime::Adjacent;
  if (name == "speaker") return ContextRegime::Speaker;
  fail(concat("unknown context regime '", name,
              "' (expected 'adjacent' or 'speaker')"));
}

void SynthConfig::validate() const {
  check(num_documents >= 1, "synth: num_documents must be >= 1");
  check(sentences_per_document >= 1, "synth: sentences_per_document must be >= 1");
  check(vocab_size >= 1, "synth: vocab_size must be >= 1");
  check(num_classes >= 2, "synth: num_classes must be >= 2");
  check(signal_position < sentences_per_document,
        "synth: signal_position must be < sentences_per_document");
  check(noise_rate >= 0.0 && noise_rate <= 1.0, "synth: noise_rate must be in [0,1]");
  check(distractor_rate >= 0.0 && distractor_rate <= 1.0,
        "synth: distractor_rate must be in [0,1]");
  if (focus_position >= 0) {
    check(static_cast<size_t>(focus_position) < sentences_per_document,
          "synth: focus_position out of range");
    check(static_cast<size_t>(focus_position) >= signal_position,
          "synth: focus_position must be >= signal_position");
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

namespace {

Sentence make_sentence(std::string text, std::optional<std::string> label,
                       std::optional<std::string> speaker) {
  Sentence s;
  s.tokens = tokenize(text);
  s.text = std::move(text);
  s.label = std::move(label);
  s.speaker = std::move(speaker);
  return s;
}

std::optional<std::string> opt_string_field(const json& obj, const char* key,
                                            size_t line_no) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string()) {
    fail(concat("corpus line ", line_no, ": field '", key,
                "' must be a string"));
  }
  return obj[key].get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), concat("cannot open corpus file '", path, "'"));

  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  std::unordered_set<std::string> seen_labels;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(concat("corpus line ", line_no, ": invalid JSON: ", e.what()));
    }
    if (!obj.is_object() || !obj.contains("doc_id") ||
        !obj["doc_id"].is_string()) {
      fail(concat("corpus line ", line_no, ": missing string field 'doc_id'"));
    }
    if (!obj.contains("sentences") || !obj["sentences"].is_array()) {
      fail(concat("corpus line ", line_no, ": missing array field 'sentences'"));
    }

    Document doc;
    doc.doc_id = obj["doc_id"].get<std::string>();
    if (!seen_ids.insert(doc.doc_id).second) {
      fail(concat("corpus line ", line_no, ": duplicate doc_id '", doc.doc_id,
                  "'"));
    }
    for (const json& s : obj["sentences"]) {
      if (!s.is_object() || !s.contains("text") || !s["text"].is_string()) {
        fail(concat("corpus line ", line_no,
                    ": sentence missing string field 'text'"));
      }
      auto label = opt_string_field(s, "label", line_no);
      if (label && seen_labels.insert(*label).second) {
        corpus.labels.push_back(*label);
      }
      doc.sentences.push_back(make_sentence(s["text"].get<std::string>(),
                                            std::move(label),
                                            opt_string_field(s, "speaker", line_no)));
    }
    if (doc.sentences.empty()) {
      fail(concat("corpus line ", line_no, ": document '", doc.doc_id,
                  "' has no sentences"));
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), concat("cannot write corpus file '", path, "'"));
  for (const Document& doc : docs) {
    json sentences = json::array();
    for (const Sentence& s : doc.sentences) {
      json obj = {{"text", s.text}};
      if (s.label) obj["label"] = *s.label;
      if (s.speaker) obj["speaker"] = *s.speaker;
      sentences.push_back(std::move(obj));
    }
    out << json{{"doc_id", doc.doc_id}, {"sentences", std::move(sentences)}}
        << "\n";
  }
  check(out.good(), concat("write failed for corpus file '", path, "'"));
}

namespace {

void adjacent_contexts(const Document& doc, size_t i, Instance& inst) {
  for (size_t j = 0; j < i; ++j) inst.left.push_back(doc.sentences[j].tokens);
  for (size_t j = i + 1; j < doc.sentences.size(); ++j) {
    inst.right.push_back(doc.sentences[j].tokens);
  }
}

void validate_speakers(const Document& doc) {
  std::set<std::string> speakers;
  for (const Sentence& s : doc.sentences) {
    check(s.speaker.has_value(),
          concat("document '", doc.doc_id,
                 "': speaker regime requires a speaker on every sentence"));
    speakers.insert(*s.speaker);
  }
  check(speakers.size() == 2,
        concat("document '", doc.doc_id, "': expected exactly 2 speakers, got ",
               speakers.size()));
}

void speaker_contexts(const Document& doc, size_t i, Instance& inst) {
  // Equal distances resolve toward the earlier turn, i.e. the earlier of
  // the two is treated as nearer to the focus.
  auto nearer = [](size_t focus, size_t a, size_t b) {
    const size_t da = a < focus ? focus - a : a - focus;
    const size_t db = b < focus ? focus - b : b - focus;
    if (da != db) return da < db;
    return a < b;
  };

  std::vector<size_t> same, other;
  for (size_t j = 0; j < doc.sentences.size(); ++j) {
    if (j == i) continue;  // the focus never appears in its own context
    if (*doc.sentences[j].speaker == *doc.sentences[i].speaker) {
      same.push_back(j);
    } else {
      other.push_back(j);
    }
  }
  // Left slot convention is adjacent-last, right slot adjacent-first.
  std::sort(same.begin(), same.end(),
            [&](size_t a, size_t b) { return nearer(i, b, a); });
  std::sort(other.begin(), other.end(),
            [&](size_t a, size_t b) { return nearer(i, a, b); });
  for (size_t j : same) inst.left.push_back(doc.sentences[j].tokens);
  for (size_t j : other) inst.right.push_back(doc.sentences[j].tokens);
}

size_t lookup_label(const std::vector<std::string>& labels,
                    const std::string& name) {
  auto it = std::find(labels.begin(), labels.end(), name);
  check(it != labels.end(), concat("label '", name, "' not in label table"));
  return static_cast<size_t>(it - labels.begin());
}

}  // namespace

std::vector<Instance> build_adjacent_instances(
    const Document& doc, const std::vector<std::string>& labels) {
  std::vector<Instance> out;
  for (size_t i = 0; i < doc.sentences.size(); ++i) {
    const Sentence& focus = doc.sentences[i];
    if (!focus.label) continue;
    Instance inst;
    inst.focus = focus.tokens;
    adjacent_contexts(doc, i, inst);
    inst.label = lookup_label(labels, *focus.label);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Instance> build_speaker_instances(
    const Document& doc, const std::vector<std::string>& labels) {
  validate_speakers(doc);
  std::vector<Instance> out;
  for (size_t i = 0; i < doc.sentences.size(); ++i) {
    const Sentence& focus = doc.sentences[i];
    if (!focus.label) continue;
    Instance inst;
    inst.focus = focus.tokens;
    speaker_contexts(doc, i, inst);
    inst.label = lookup_label(labels, *focus.label);
    out.push_back(std::move(inst));
  }
  return out;
}

Instance build_focus_instance(const Document& doc, size_t focus_idx,
                              ContextRegime regime) {
  check(focus_idx < doc.sentences.size(),
        concat("document '", doc.doc_id, "': focus index ", focus_idx,
               " out of range"));
  Instance inst;
  inst.focus = doc.sentences[focus_idx].tokens;
  if (regime == ContextRegime::Adjacent) {
    adjacent_contexts(doc, focus_idx, inst);
  } else {
    validate_speakers(doc);
    speaker_contexts(doc, focus_idx, inst);
  }
  return inst;
}

std::vector<Instance> build_instances(const Corpus& corpus,
                                      ContextRegime regime) {
  std::vector<Instance> out;
  for (const Document& doc : corpus.documents) {
    auto insts = regime == ContextRegime::Adjacent
                     ? build_adjacent_instances(doc, corpus.labels)
                     : build_speaker_instances(doc, corpus.labels);
    for (Instance& inst : insts) out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Document> generate_synthetic(const SynthConfig& cfg,
                                         SynthStats* stats) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthStats local;

  auto neutral_sentence = [&] {
    const size_t len = 3 + rng.next_index(5);
    std::string text;
    for (size_t i = 0; i < len; ++i) {
      if (!text.empty()) text += ' ';
      text += concat("w", rng.next_index(cfg.vocab_size));
    }
    return text;
  };

  std::vector<Document> docs;
  docs.reserve(cfg.num_documents);
  for (size_t d = 0; d < cfg.num_documents; ++d) {
    const size_t span = cfg.sentences_per_document - cfg.signal_position;
    const size_t focus =
        cfg.focus_position >= 0
            ? static_cast<size_t>(cfg.focus_position)
            : cfg.signal_position + rng.next_index(span);
    const size_t signal = focus - cfg.signal_position;

    const size_t cue_class = rng.next_index(cfg.num_classes);
    size_t label = cue_class;
    if (cfg.noise_rate > 0.0 && rng.next_double() < cfg.noise_rate) {
      label = rng.next_index(cfg.num_classes);
      ++local.label_flips;
    }

    Document doc;
    doc.doc_id = concat("doc", d);
    for (size_t s = 0; s < cfg.sentences_per_document; ++s) {
      std::string text = neutral_sentence();
      if (s == signal) {
        text = concat("cue", cue_class, " ", text);
      } else if (s != focus && cfg.distractor_rate > 0.0 &&
                 rng.next_double() < cfg.distractor_rate) {
        text = concat("cue", rng.next_index(cfg.num_classes), " ", text);
      }
      Sentence sent = make_sentence(std::move(text), std::nullopt, std::nullopt);
      if (s == focus) sent.label = concat("class", label);
      doc.sentences.push_back(std::move(sent));
    }
    docs.push_back(std::move(doc));
    ++local.instances;
  }
  if (stats) *stats = local;
  return docs;
}

}  // namespace clcnn
