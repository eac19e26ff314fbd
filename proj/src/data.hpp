#ifndef CLCNN_DATA_HPP
#define CLCNN_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clcnn {

struct Sentence {
  std::string text;
  std::vector<std::string> tokens;  // derived from text by tokenize()
  std::optional<std::string> label;
  std::optional<std::string> speaker;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;  // never empty
};

// Documents plus the label-name table, indices assigned by first
// appearance in the corpus stream.
struct Corpus {
  std::vector<Document> documents;
  std::vector<std::string> labels;

  size_t label_index(const std::string& name) const;
};

// One classification instance. Context ordering conventions are what the
// FOFE encoders consume: in `left` the adjacent sentence is LAST, in
// `right` the adjacent sentence is FIRST.
struct Instance {
  std::vector<std::string> focus;
  std::vector<std::vector<std::string>> left;
  std::vector<std::vector<std::string>> right;
  size_t label = 0;
};

enum class ContextRegime { Adjacent, Speaker };

ContextRegime parse_regime(const std::string& name);

struct SynthConfig {
  size_t num_documents = 200;
  size_t sentences_per_document = 8;
  size_t vocab_size = 50;
  size_t num_classes = 2;
  // Distance of the cue-bearing sentence to the left of the focus.
  // 0 puts the cue inside the focus sentence itself.
  size_t signal_position = 1;
  double noise_rate = 0.0;
  // Chance that a non-signal context sentence carries a random class cue.
  double distractor_rate = 0.0;
  // Fixed focus index within each document, or -1 for a seeded random
  // position (always >= signal_position so the cue sentence exists).
  int focus_position = -1;
  uint64_t seed = 1;

  void validate() const;
};

struct SynthStats {
  size_t instances = 0;
  size_t label_flips = 0;  // noise events (label resampled uniformly)
};

// Lowercase, split punctuation into separate tokens, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);

// JSONL, one {"doc_id":..., "sentences":[{"text":..,"label":?,"speaker":?}]}
// object per line. Malformed lines are reported with their line number.
Corpus load_corpus(const std::string& path);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

// One instance per labeled sentence; left context = all earlier sentences,
// right context = all later ones. Unlabeled sentences contribute context
// only.
std::vector<Instance> build_adjacent_instances(
    const Document& doc, const std::vector<std::string>& labels);

// Dialog regime: requires exactly two speakers. The focus speaker's other
// sentences form the "left" context, the other speaker's sentences the
// "right" one, each ordered so the sentence nearest the focus sits in the
// adjacent slot (ties between equal distances go to the earlier turn).
std::vector<Instance> build_speaker_instances(
    const Document& doc, const std::vector<std::string>& labels);

std::vector<Instance> build_instances(const Corpus& corpus,
                                      ContextRegime regime);

// Instance for an arbitrary focus sentence (prediction does not require a
// label; the label field is left at 0).
Instance build_focus_instance(const Document& doc, size_t focus_idx,
                              ContextRegime regime);

// Context-dependent synthetic corpus: the focus sentence is class-neutral;
// the sentence at signal_position carries a cue token ("cueK") that
// determines the label ("classK") up to noise.
std::vector<Document> generate_synthetic(const SynthConfig& cfg,
                                         SynthStats* stats = nullptr);

}  // namespace clcnn

#endif
