#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ordlab/dataio.hpp"
#include "ordlab/sequence.hpp"

namespace ordlab {

inline constexpr std::string_view kStartMarker = "[START]";
inline constexpr std::string_view kEndMarker = "[END]";
inline constexpr std::string_view kDocMarker = "[DOC]";

/// Rule-based lemmatizer: irregular-form table, then s/es/ies/ed/ing/ly
/// suffix rules with undoubling of final consonants.
std::string lemmatize(std::string_view word);

struct Sentence {
  std::size_t document = 0;
  TokenSeq lemmas;                   // ids in Preprocessed::vocab
  std::vector<std::string> surface;  // lowercased surface forms, aligned with lemmas
};

struct LemmaMap {
  /// First surface form seen anywhere in the corpus, per lemma.
  std::map<std::string, std::string> first_surface;
  /// Surface form of `lemma` inside a given sentence (first occurrence there),
  /// falling back to the corpus-wide first surface form.
  std::string unlemmatize(const std::string& lemma, const Sentence& sentence, const Vocab& vocab) const;
};

struct Preprocessed {
  std::vector<Sentence> sentences;
  std::size_t n_documents = 0;
  /// Lemma vocabulary; ids 0..2 are [START], [END], [DOC].
  Vocab vocab;
  LemmaMap lemma_map;
};

/// Splits documents into sentences on , . : ; lowercases and lemmatizes.
Preprocessed preprocess(std::span<const std::string> documents);

/// Splits on blank lines; each paragraph is one document.
std::vector<std::string> split_documents(std::string_view text);

/// Two-layer logistic bigram scorer:
///   P(s, t) = sigmoid(w2 (w1 [e_s; e_t] + b1) + b2)
struct BigramModel {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::VectorXd;

  int d = 32;
  int h = 64;
  Mat embed;  // |V| x d
  Mat w1;     // h x 2d
  Vec b1;     // h
  Vec w2;     // h
  double b2 = 0.0;
  bool trained = false;
  /// Normalized marginals P(t), filled by compute_marginals().
  std::vector<double> marginals;

  std::size_t vocab_size() const { return static_cast<std::size_t>(embed.rows()); }
};

BigramModel make_bigram_model(std::size_t vocab_size, int d, int h, std::uint64_t seed);

struct BigramTrainOptions {
  int d = 32;
  int h = 64;
  int negatives_per_positive = 5;
  int epochs = 300;
  double lr = 2.0;
  std::uint64_t seed = 1;
};

struct BigramTrainReport {
  std::vector<double> loss_per_epoch;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

/// Adjacent pairs within each document ([DOC] precedes the first token) are
/// positives; each gets k negatives (s, t') with t' uniform over word ids,
/// drawn once. Full-batch gradient descent on the mean logistic loss.
BigramModel train_bigram(const Preprocessed& corpus, const BigramTrainOptions& opts,
                         BigramTrainReport* report = nullptr);
BigramModel train_bigram(std::span<const TokenSeq> sentences, std::size_t vocab_size,
                         const BigramTrainOptions& opts, BigramTrainReport* report = nullptr,
                         std::span<const TokenId> word_ids = {});

/// Direct forward pass of the scorer. Throws on out-of-vocab ids.
double joint_prob(const BigramModel& model, TokenId s, TokenId t);

/// Caches P(t) = sum_s P(s,t) / sum_{s,t'} P(s,t') over `contexts` (all ids
/// when empty). O(V*d*h + V^2).
void compute_marginals(BigramModel& model, std::span<const TokenId> contexts = {});
double marginal_prob(const BigramModel& model, TokenId t);

/// P(s,t) log(P(s,t) / P(t)).
double mi_score(const BigramModel& model, TokenId s_last, TokenId t);

enum class Selector { MaxMI, TfIdf, PCond };
std::string_view to_string(Selector s);
Selector parse_selector(std::string_view name);

/// argmax of mi_score over the sentence; ties go to the earliest position.
TokenId select_word(const BigramModel& model, TokenId context_last, std::span<const TokenId> sentence);
/// argmax of P(s,t) normalized over the sentence's candidates.
TokenId select_word_pcond(const BigramModel& model, TokenId context_last, std::span<const TokenId> sentence);

/// Document-level TF-IDF over lemma ids with idf = log(N_docs / df).
class TfIdf {
 public:
  explicit TfIdf(const Preprocessed& corpus);
  double score(TokenId t, std::size_t document) const;
  TokenId select(std::span<const TokenId> sentence, std::size_t document) const;

 private:
  std::vector<std::map<TokenId, std::size_t>> tf_;
  std::vector<std::size_t> doc_len_;
  std::vector<double> idf_;
};

struct AugmentResult {
  std::vector<AugmentedSentence> sentences;
  /// Surface vocabulary (ids 0..2 are [START], [END], [DOC]).
  Vocab vocab;
};

/// One augmented sentence per input sentence: [START] w [END] sentence, where
/// w is the selected lemma unlemmatized to its surface form in that sentence.
/// The context of a document's first sentence is [DOC].
AugmentResult augment_corpus(const BigramModel& model, const Preprocessed& corpus,
                             Selector selector = Selector::MaxMI);

/// The plain counterpart of augment_corpus: same surface vocab, no insertion.
std::vector<LmSequence> plain_corpus(const AugmentResult& augmented);

/// Drops the three inserted tokens.
TokenSeq strip_augmentation(const AugmentedSentence& sentence);

/// JSONL: header {format, vocab}, then one {"tokens", "loss_mask", "selected"} per line.
std::string augmented_to_jsonl(const AugmentResult& result);
AugmentResult augmented_from_jsonl(std::string_view text);

}  // namespace ordlab
