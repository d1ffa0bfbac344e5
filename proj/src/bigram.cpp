#include "ordlab/bigram.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include "ordlab/error.hpp"
#include "ordlab/rng.hpp"

namespace ordlab {

namespace {

constexpr std::string_view kAugFormatTag = "ordlab-aug";

bool is_sentence_break(char c) { return c == ',' || c == '.' || c == ':' || c == ';'; }

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '\'' || u >= 0x80;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// -log sigmoid(z) for y = 1 and -log(1 - sigmoid(z)) for y = 0, stably.
double logistic_loss(double z, bool positive) {
  const double m = positive ? -z : z;
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

void check_id(const BigramModel& model, TokenId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= model.vocab_size()) {
    throw ValidationError("token id out of vocab range: " + std::to_string(id));
  }
}

std::vector<TokenId> default_contexts(const BigramModel& model) {
  std::vector<TokenId> all(model.vocab_size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = static_cast<TokenId>(i);
  }
  return all;
}

}  // namespace

std::string LemmaMap::unlemmatize(const std::string& lemma, const Sentence& sentence, const Vocab& vocab) const {
  for (std::size_t i = 0; i < sentence.lemmas.size(); ++i) {
    if (vocab.symbol(sentence.lemmas[i]) == lemma) {
      return sentence.surface[i];
    }
  }
  auto it = first_surface.find(lemma);
  return it == first_surface.end() ? lemma : it->second;
}

std::vector<std::string> split_documents(std::string_view text) {
  std::vector<std::string> docs;
  std::string current;
  std::size_t pos = 0;
  bool blank_run = false;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (blank) {
      if (!current.empty() && !blank_run) {
        docs.push_back(std::move(current));
        current.clear();
      }
      blank_run = true;
    } else {
      if (!current.empty()) {
        current += ' ';
      }
      current += line;
      blank_run = false;
    }
    if (nl == std::string_view::npos) {
      break;
    }
    pos = nl + 1;
  }
  if (!current.empty()) {
    docs.push_back(std::move(current));
  }
  return docs;
}

Preprocessed preprocess(std::span<const std::string> documents) {
  if (documents.empty()) {
    throw ValidationError("empty corpus");
  }
  Preprocessed out;
  out.vocab = Vocab({std::string(kStartMarker), std::string(kEndMarker), std::string(kDocMarker)});
  for (std::size_t doc = 0; doc < documents.size(); ++doc) {
    Sentence current;
    current.document = doc;
    std::string word;
    auto flush_word = [&] {
      if (word.empty()) {
        return;
      }
      const std::string lemma = lemmatize(word);
      current.lemmas.push_back(out.vocab.add(lemma));
      current.surface.push_back(word);
      out.lemma_map.first_surface.emplace(lemma, word);
      word.clear();
    };
    auto flush_sentence = [&] {
      flush_word();
      if (!current.lemmas.empty()) {
        out.sentences.push_back(std::move(current));
      }
      current = Sentence{};
      current.document = doc;
    };
    for (char c : documents[doc]) {
      if (is_sentence_break(c)) {
        flush_sentence();
      } else if (is_word_char(c)) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else {
        flush_word();
      }
    }
    flush_sentence();
  }
  out.n_documents = documents.size();
  if (out.sentences.empty()) {
    throw ValidationError("empty corpus");
  }
  return out;
}

BigramModel make_bigram_model(std::size_t vocab_size, int d, int h, std::uint64_t seed) {
  if (vocab_size == 0 || d < 1 || h < 1) {
    throw ValidationError("bigram model needs a nonempty vocab and positive d, h");
  }
  BigramModel m;
  m.d = d;
  m.h = h;
  Rng rng(seed);
  constexpr double kInitScale = 0.1;
  m.embed.resize(static_cast<Eigen::Index>(vocab_size), d);
  m.w1.resize(h, 2 * d);
  m.b1 = BigramModel::Vec::Zero(h);
  m.w2.resize(h);
  for (Eigen::Index i = 0; i < m.embed.size(); ++i) {
    m.embed.data()[i] = kInitScale * rng.normal();
  }
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) {
    m.w1.data()[i] = kInitScale * rng.normal();
  }
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) {
    m.w2[i] = kInitScale * rng.normal();
  }
  m.b2 = 0.0;
  return m;
}

double joint_prob(const BigramModel& model, TokenId s, TokenId t) {
  check_id(model, s);
  check_id(model, t);
  BigramModel::Vec x(2 * model.d);
  x.head(model.d) = model.embed.row(s).transpose();
  x.tail(model.d) = model.embed.row(t).transpose();
  const BigramModel::Vec hidden = model.w1 * x + model.b1;
  return sigmoid(model.w2.dot(hidden) + model.b2);
}

namespace {

/// P(s,t) = sigmoid(alpha_s + beta_t + c): the scorer is linear up to the
/// sigmoid, so it splits into per-token terms.
struct Decomposed {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  double c = 0.0;
};

Decomposed decompose(const BigramModel& m) {
  Decomposed dec;
  const Eigen::VectorXd wa = m.w1.leftCols(m.d).transpose() * m.w2;
  const Eigen::VectorXd wb = m.w1.rightCols(m.d).transpose() * m.w2;
  dec.alpha = m.embed * wa;
  dec.beta = m.embed * wb;
  dec.c = m.w2.dot(m.b1) + m.b2;
  return dec;
}

}  // namespace

void compute_marginals(BigramModel& model, std::span<const TokenId> contexts) {
  std::vector<TokenId> ctx(contexts.begin(), contexts.end());
  if (ctx.empty()) {
    ctx = default_contexts(model);
  }
  for (TokenId id : ctx) {
    check_id(model, id);
  }
  const auto dec = decompose(model);
  const std::size_t v = model.vocab_size();
  std::vector<double> column(v, 0.0);
  for (std::size_t t = 0; t < v; ++t) {
    double acc = 0.0;
    for (TokenId s : ctx) {
      acc += sigmoid(dec.alpha[s] + dec.beta[static_cast<Eigen::Index>(t)] + dec.c);
    }
    column[t] = acc;
  }
  double total = 0.0;
  for (TokenId t : ctx) {
    total += column[static_cast<std::size_t>(t)];
  }
  model.marginals.resize(v);
  for (std::size_t t = 0; t < v; ++t) {
    model.marginals[t] = column[t] / total;
  }
}

double marginal_prob(const BigramModel& model, TokenId t) {
  check_id(model, t);
  if (model.marginals.size() == model.vocab_size()) {
    return model.marginals[static_cast<std::size_t>(t)];
  }
  BigramModel copy = model;
  compute_marginals(copy);
  return copy.marginals[static_cast<std::size_t>(t)];
}

double mi_score(const BigramModel& model, TokenId s_last, TokenId t) {
  const double joint = joint_prob(model, s_last, t);
  const double marginal = marginal_prob(model, t);
  return joint * std::log(joint / marginal);
}

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::MaxMI: return "maxmi";
    case Selector::TfIdf: return "tfidf";
    case Selector::PCond: return "pcond";
  }
  return "?";
}

Selector parse_selector(std::string_view name) {
  if (name == "maxmi") return Selector::MaxMI;
  if (name == "tfidf") return Selector::TfIdf;
  if (name == "pcond") return Selector::PCond;
  throw ValidationError("unknown selector '" + std::string(name) + "'");
}

TokenId select_word(const BigramModel& model, TokenId context_last, std::span<const TokenId> sentence) {
  if (sentence.empty()) {
    throw ValidationError("select_word: empty sentence");
  }
  if (model.marginals.size() != model.vocab_size()) {
    BigramModel copy = model;
    compute_marginals(copy);
    return select_word(copy, context_last, sentence);
  }
  TokenId best = sentence.front();
  double best_score = mi_score(model, context_last, best);
  for (std::size_t i = 1; i < sentence.size(); ++i) {
    const double s = mi_score(model, context_last, sentence[i]);
    if (s > best_score) {
      best_score = s;
      best = sentence[i];
    }
  }
  return best;
}

TokenId select_word_pcond(const BigramModel& model, TokenId context_last, std::span<const TokenId> sentence) {
  if (sentence.empty()) {
    throw ValidationError("select_word: empty sentence");
  }
  // Normalizing over the candidates does not change the argmax.
  TokenId best = sentence.front();
  double best_p = joint_prob(model, context_last, best);
  for (std::size_t i = 1; i < sentence.size(); ++i) {
    const double p = joint_prob(model, context_last, sentence[i]);
    if (p > best_p) {
      best_p = p;
      best = sentence[i];
    }
  }
  return best;
}

TfIdf::TfIdf(const Preprocessed& corpus)
    : tf_(corpus.n_documents), doc_len_(corpus.n_documents, 0), idf_(corpus.vocab.size(), 0.0) {
  for (const auto& s : corpus.sentences) {
    for (TokenId t : s.lemmas) {
      ++tf_[s.document][t];
      ++doc_len_[s.document];
    }
  }
  std::vector<std::size_t> df(corpus.vocab.size(), 0);
  for (const auto& doc : tf_) {
    for (const auto& [t, n] : doc) {
      ++df[static_cast<std::size_t>(t)];
    }
  }
  for (std::size_t t = 0; t < df.size(); ++t) {
    idf_[t] = df[t] ? std::log(static_cast<double>(corpus.n_documents) / static_cast<double>(df[t])) : 0.0;
  }
}

double TfIdf::score(TokenId t, std::size_t document) const {
  const auto& doc = tf_.at(document);
  auto it = doc.find(t);
  if (it == doc.end()) {
    return 0.0;
  }
  return static_cast<double>(it->second) / static_cast<double>(doc_len_[document]) *
         idf_.at(static_cast<std::size_t>(t));
}

TokenId TfIdf::select(std::span<const TokenId> sentence, std::size_t document) const {
  if (sentence.empty()) {
    throw ValidationError("select_word: empty sentence");
  }
  TokenId best = sentence.front();
  double best_s = score(best, document);
  for (std::size_t i = 1; i < sentence.size(); ++i) {
    const double s = score(sentence[i], document);
    if (s > best_s) {
      best_s = s;
      best = sentence[i];
    }
  }
  return best;
}

BigramModel train_bigram(std::span<const TokenSeq> sentences, std::size_t vocab_size,
                         const BigramTrainOptions& opts, BigramTrainReport* report,
                         std::span<const TokenId> word_ids) {
  if (opts.negatives_per_positive < 1) {
    throw ValidationError("needs negatives: negatives_per_positive must be >= 1");
  }
  if (opts.epochs < 1 || !(opts.lr > 0.0)) {
    throw ValidationError("bigram training needs epochs >= 1 and lr > 0");
  }
  std::vector<TokenId> words(word_ids.begin(), word_ids.end());
  if (words.empty()) {
    for (std::size_t i = 0; i < vocab_size; ++i) {
      words.push_back(static_cast<TokenId>(i));
    }
  }

  std::vector<TokenId> src;
  std::vector<TokenId> dst;
  std::vector<double> label;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (s[i] < 0 || s[i + 1] < 0 || static_cast<std::size_t>(std::max(s[i], s[i + 1])) >= vocab_size) {
        throw ValidationError("bigram corpus id out of vocab range");
      }
      src.push_back(s[i]);
      dst.push_back(s[i + 1]);
      label.push_back(1.0);
    }
  }
  const std::size_t n_pos = src.size();
  if (n_pos == 0) {
    throw ValidationError("degenerate corpus: no bigrams");
  }
  Rng rng(opts.seed);
  BigramModel m = make_bigram_model(vocab_size, opts.d, opts.h, rng.next_u64());
  for (std::size_t i = 0; i < n_pos; ++i) {
    for (int k = 0; k < opts.negatives_per_positive; ++k) {
      src.push_back(src[i]);
      dst.push_back(words[rng.index(words.size())]);
      label.push_back(0.0);
    }
  }
  const std::size_t n = src.size();
  if (report) {
    report->n_positive = n_pos;
    report->n_negative = n - n_pos;
    report->loss_per_epoch.clear();
  }

  const int d = m.d;
  Eigen::VectorXd gs(static_cast<Eigen::Index>(vocab_size));
  Eigen::VectorXd gt(static_cast<Eigen::Index>(vocab_size));
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto dec = decompose(m);
    gs.setZero();
    gt.setZero();
    double loss = 0.0;
    double g_total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec.alpha[src[i]] + dec.beta[dst[i]] + dec.c;
      loss += logistic_loss(z, label[i] > 0.5);
      const double g = (sigmoid(z) - label[i]) * inv_n;
      gs[src[i]] += g;
      gt[dst[i]] += g;
      g_total += g;
    }
    if (report) {
      report->loss_per_epoch.push_back(loss * inv_n);
    }

    const auto w1a = m.w1.leftCols(d);
    const auto w1b = m.w1.rightCols(d);
    const Eigen::MatrixXd u = m.embed * w1a.transpose();  // V x h
    const Eigen::MatrixXd v = m.embed * w1b.transpose();
    const Eigen::VectorXd es = m.embed.transpose() * gs;  // d
    const Eigen::VectorXd et = m.embed.transpose() * gt;

    const Eigen::VectorXd d_w2 = u.transpose() * gs + v.transpose() * gt + g_total * m.b1;
    const Eigen::VectorXd d_b1 = g_total * m.w2;
    const double d_b2 = g_total;
    BigramModel::Mat d_w1(m.h, 2 * d);
    d_w1.leftCols(d) = m.w2 * es.transpose();
    d_w1.rightCols(d) = m.w2 * et.transpose();
    const Eigen::VectorXd pa = w1a.transpose() * m.w2;  // d
    const Eigen::VectorXd pb = w1b.transpose() * m.w2;
    const BigramModel::Mat d_embed = gs * pa.transpose() + gt * pb.transpose();

    m.embed -= opts.lr * d_embed;
    m.w1 -= opts.lr * d_w1;
    m.b1 -= opts.lr * d_b1;
    m.w2 -= opts.lr * d_w2;
    m.b2 -= opts.lr * d_b2;
  }
  m.trained = true;
  compute_marginals(m, words);
  return m;
}

BigramModel train_bigram(const Preprocessed& corpus, const BigramTrainOptions& opts, BigramTrainReport* report) {
  // Each document is one token stream: [DOC] s1 s2 ... with sentences adjacent.
  std::vector<TokenSeq> streams(corpus.n_documents);
  const TokenId doc = corpus.vocab.id_of(kDocMarker);
  for (auto& s : streams) {
    s.push_back(doc);
  }
  for (const auto& s : corpus.sentences) {
    auto& stream = streams[s.document];
    stream.insert(stream.end(), s.lemmas.begin(), s.lemmas.end());
  }
  std::vector<TokenId> words;
  for (std::size_t i = 0; i < corpus.vocab.size(); ++i) {
    const auto& sym = corpus.vocab.symbols()[i];
    if (sym != kStartMarker && sym != kEndMarker && sym != kDocMarker) {
      words.push_back(static_cast<TokenId>(i));
    }
  }
  BigramModel m = train_bigram(streams, corpus.vocab.size(), opts, report, words);
  // Contexts for the marginal: every token that can precede a word.
  words.push_back(doc);
  std::sort(words.begin(), words.end());
  compute_marginals(m, words);
  return m;
}

AugmentResult augment_corpus(const BigramModel& model, const Preprocessed& corpus, Selector selector) {
  if (!model.trained) {
    throw ValidationError("augment_corpus: model is untrained");
  }
  if (model.vocab_size() != corpus.vocab.size()) {
    throw ValidationError("augment_corpus: model vocab does not match the corpus");
  }
  std::optional<TfIdf> tfidf;
  if (selector == Selector::TfIdf) {
    tfidf.emplace(corpus);
  }
  AugmentResult out;
  out.vocab = Vocab({std::string(kStartMarker), std::string(kEndMarker), std::string(kDocMarker)});
  const TokenId start = out.vocab.id_of(kStartMarker);
  const TokenId end = out.vocab.id_of(kEndMarker);
  const TokenId doc = corpus.vocab.id_of(kDocMarker);

  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    const bool first_in_doc = i == 0 || corpus.sentences[i - 1].document != s.document;
    const TokenId context = first_in_doc ? doc : corpus.sentences[i - 1].lemmas.back();
    TokenId chosen = 0;
    switch (selector) {
      case Selector::MaxMI: chosen = select_word(model, context, s.lemmas); break;
      case Selector::PCond: chosen = select_word_pcond(model, context, s.lemmas); break;
      case Selector::TfIdf: chosen = tfidf->select(s.lemmas, s.document); break;
    }
    AugmentedSentence a;
    a.selected = corpus.lemma_map.unlemmatize(corpus.vocab.symbol(chosen), s, corpus.vocab);
    a.start_marker = start;
    a.end_marker = end;
    for (const auto& w : s.surface) {
      a.original.push_back(out.vocab.add(w));
    }
    a.augmented = {start, out.vocab.id_of(a.selected), end};
    a.augmented.insert(a.augmented.end(), a.original.begin(), a.original.end());
    a.loss_mask.assign(a.augmented.size(), 1);
    std::fill_n(a.loss_mask.begin(), std::min<std::size_t>(4, a.loss_mask.size()), 0);
    out.sentences.push_back(std::move(a));
  }
  return out;
}

std::vector<LmSequence> plain_corpus(const AugmentResult& augmented) {
  std::vector<LmSequence> out;
  out.reserve(augmented.sentences.size());
  for (const auto& s : augmented.sentences) {
    out.push_back(plain_lm_sequence(s.original));
  }
  return out;
}

TokenSeq strip_augmentation(const AugmentedSentence& sentence) {
  if (sentence.augmented.size() < 3 || sentence.augmented[0] != sentence.start_marker ||
      sentence.augmented[2] != sentence.end_marker) {
    throw ValidationError("sentence does not carry the [START] w [END] prefix");
  }
  return TokenSeq(sentence.augmented.begin() + 3, sentence.augmented.end());
}

std::string augmented_to_jsonl(const AugmentResult& result) {
  nlohmann::json header = {{"format", kAugFormatTag}, {"version", 1}, {"vocab", result.vocab.symbols()}};
  std::string out = header.dump() + "\n";
  for (const auto& s : result.sentences) {
    nlohmann::json row = {{"tokens", decode(s.augmented, result.vocab)},
                          {"loss_mask", s.loss_mask},
                          {"selected", s.selected}};
    out += row.dump() + "\n";
  }
  return out;
}

AugmentResult augmented_from_jsonl(std::string_view text) {
  AugmentResult out;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      nl = text.size();
    }
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("malformed augmented JSONL: ") + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("format", std::string{}) != kAugFormatTag) {
          throw ValidationError("missing header");
        }
        out.vocab = Vocab(j.at("vocab").get<std::vector<std::string>>());
        have_header = true;
        continue;
      }
      AugmentedSentence s;
      s.start_marker = out.vocab.id_of(kStartMarker);
      s.end_marker = out.vocab.id_of(kEndMarker);
      for (const auto& tok : j.at("tokens")) {
        s.augmented.push_back(out.vocab.id_of(tok.get<std::string>()));
      }
      s.loss_mask = j.at("loss_mask").get<std::vector<std::uint8_t>>();
      s.selected = j.value("selected", std::string{});
      if (s.loss_mask.size() != s.augmented.size()) {
        throw ValidationError("mask/length mismatch in augmented JSONL");
      }
      s.original = strip_augmentation(s);
      out.sentences.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed augmented JSONL: ") + e.what());
    }
  }
  if (!have_header) {
    throw ValidationError("missing header");
  }
  return out;
}

}  // namespace ordlab
