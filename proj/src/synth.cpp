#include "ordlab/synth.hpp"

#include <algorithm>
#include <string_view>

#include "ordlab/error.hpp"
#include "ordlab/rng.hpp"

namespace ordlab {

namespace {

constexpr std::string_view kConsonants = "bdfgkmnprtvz";
constexpr std::string_view kVowels = "aiou";

std::string syllable(std::size_t k) {
  return {kConsonants[k % kConsonants.size()], kVowels[(k / kConsonants.size()) % kVowels.size()]};
}

}  // namespace

std::string synthetic_word(std::size_t index) {
  const std::size_t base = kConsonants.size() * kVowels.size();
  std::string w = syllable(index % base);
  index /= base;
  w += syllable(index % base);
  index /= base;
  while (index > 0) {
    w += syllable(index % base);
    index /= base;
  }
  return w;
}

void CollocateCorpusSpec::validate() const {
  if (n_documents < 1 || sentences_per_doc < 1 || n_topics < 1 || contexts_per_topic < 1 ||
      fillers_per_sentence < 0 || filler_pool < 1) {
    throw ValidationError("collocate corpus: counts must be positive");
  }
  if (filler_window < 1 || filler_window > filler_pool) {
    throw ValidationError("collocate corpus: filler_window must lie in [1, filler_pool]");
  }
}

nlohmann::json to_json(const CollocateCorpusSpec& s) {
  return {{"n_documents", s.n_documents},
          {"sentences_per_doc", s.sentences_per_doc},
          {"n_topics", s.n_topics},
          {"contexts_per_topic", s.contexts_per_topic},
          {"fillers_per_sentence", s.fillers_per_sentence},
          {"filler_pool", s.filler_pool},
          {"filler_window", s.filler_window},
          {"seed", s.seed}};
}

CollocateCorpusSpec collocate_spec_from_json(const nlohmann::json& j) {
  CollocateCorpusSpec s;
  s.n_documents = j.value("n_documents", s.n_documents);
  s.sentences_per_doc = j.value("sentences_per_doc", s.sentences_per_doc);
  s.n_topics = j.value("n_topics", s.n_topics);
  s.contexts_per_topic = j.value("contexts_per_topic", s.contexts_per_topic);
  s.fillers_per_sentence = j.value("fillers_per_sentence", s.fillers_per_sentence);
  s.filler_pool = j.value("filler_pool", s.filler_pool);
  s.filler_window = j.value("filler_window", s.filler_window);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

std::string CollocateCorpus::text() const {
  std::string out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (i > 0) {
      out += "\n\n";
    }
    out += documents[i];
  }
  out += '\n';
  return out;
}

CollocateCorpus make_collocate_corpus(const CollocateCorpusSpec& spec) {
  spec.validate();
  CollocateCorpus c;
  std::size_t next = 0;
  for (int k = 0; k < spec.n_topics; ++k) {
    c.collocates.push_back(synthetic_word(next++));
  }
  c.contexts.resize(static_cast<std::size_t>(spec.n_topics));
  for (auto& ctx : c.contexts) {
    for (int r = 0; r < spec.contexts_per_topic; ++r) {
      ctx.push_back(synthetic_word(next++));
    }
  }
  for (int f = 0; f < spec.filler_pool; ++f) {
    c.fillers.push_back(synthetic_word(next++));
  }

  Rng rng(spec.seed);
  const auto topics = static_cast<std::size_t>(spec.n_topics);
  const std::size_t pool = c.fillers.size();
  const std::size_t stride = pool / topics;
  for (int d = 0; d < spec.n_documents; ++d) {
    std::string doc;
    std::size_t topic = rng.index(topics);
    for (int s = 0; s < spec.sentences_per_doc; ++s) {
      std::vector<std::string> words;
      for (int f = 0; f < spec.fillers_per_sentence; ++f) {
        const std::size_t offset = rng.index(static_cast<std::size_t>(spec.filler_window));
        words.push_back(c.fillers[(topic * stride + offset) % pool]);
      }
      const std::size_t at = rng.index(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), c.collocates[topic]);
      const std::size_t next_topic = rng.index(topics);
      words.push_back(c.contexts[next_topic][rng.index(c.contexts[next_topic].size())]);
      topic = next_topic;

      if (!doc.empty()) {
        doc += ' ';
      }
      for (std::size_t w = 0; w < words.size(); ++w) {
        doc += (w == 0 ? "" : " ") + words[w];
      }
      doc += '.';
    }
    c.documents.push_back(std::move(doc));
  }
  return c;
}

PlantedSelectionReport planted_selection(const CollocateCorpus& corpus, const BigramTrainOptions& opts) {
  const Preprocessed pre = preprocess(corpus.documents);
  const BigramModel model = train_bigram(pre, opts);
  std::vector<TokenId> collocate_ids;
  for (const auto& w : corpus.collocates) {
    collocate_ids.push_back(pre.vocab.id_of(lemmatize(w)));
  }
  const TokenId doc = pre.vocab.id_of(kDocMarker);

  PlantedSelectionReport rep;
  for (std::size_t i = 0; i < pre.sentences.size(); ++i) {
    const auto& s = pre.sentences[i];
    TokenId planted = -1;
    for (TokenId t : s.lemmas) {
      if (std::find(collocate_ids.begin(), collocate_ids.end(), t) != collocate_ids.end()) {
        planted = t;
        break;
      }
    }
    if (planted < 0) {
      continue;
    }
    const bool first = i == 0 || pre.sentences[i - 1].document != s.document;
    const TokenId context = first ? doc : pre.sentences[i - 1].lemmas.back();
    ++rep.sentences_with_collocate;
    if (select_word(model, context, s.lemmas) == planted) {
      ++rep.hits;
    }
  }
  return rep;
}

}  // namespace ordlab
