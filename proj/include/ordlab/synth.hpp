#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ordlab/bigram.hpp"

namespace ordlab {

/// Topic-Markov text with one planted collocate per topic.
///
/// Every sentence belongs to a topic. It contains that topic's collocate at a
/// random position, `fillers_per_sentence` words drawn from the topic's filler
/// window, and ends with a context word. The context word picks the topic of
/// the next sentence, so the collocate of a sentence is determined by the last
/// word of the sentence before it. Filler windows of neighbouring topics
/// overlap when filler_window > filler_pool / n_topics.
struct CollocateCorpusSpec {
  int n_documents = 200;
  int sentences_per_doc = 8;
  int n_topics = 10;
  int contexts_per_topic = 5;
  int fillers_per_sentence = 6;
  int filler_pool = 200;
  int filler_window = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const CollocateCorpusSpec& spec);
CollocateCorpusSpec collocate_spec_from_json(const nlohmann::json& j);

struct CollocateCorpus {
  std::vector<std::string> documents;
  std::vector<std::string> collocates;                // by topic
  std::vector<std::vector<std::string>> contexts;     // by topic
  std::vector<std::string> fillers;

  /// Documents joined with blank lines, the on-disk corpus format.
  std::string text() const;
};

CollocateCorpus make_collocate_corpus(const CollocateCorpusSpec& spec);

/// Pronounceable words ending in a vowel, so the lemmatizer leaves them alone.
std::string synthetic_word(std::size_t index);

struct PlantedSelectionReport {
  std::size_t sentences_with_collocate = 0;
  std::size_t hits = 0;
  double hit_rate() const {
    return sentences_with_collocate ? static_cast<double>(hits) / static_cast<double>(sentences_with_collocate) : 0.0;
  }
};

/// Trains a bigram model on the corpus and counts how often select_word picks
/// the planted collocate among sentences that contain one.
PlantedSelectionReport planted_selection(const CollocateCorpus& corpus, const BigramTrainOptions& opts);

}  // namespace ordlab
