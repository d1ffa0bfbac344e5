#include <string>
#include <unordered_map>
#include <unordered_set>

#include "ordlab/bigram.hpp"

namespace ordlab {

namespace {

const std::unordered_map<std::string_view, std::string_view>& irregular() {
  static const std::unordered_map<std::string_view, std::string_view> table = {
      {"am", "be"},         {"is", "be"},         {"are", "be"},        {"was", "be"},
      {"were", "be"},       {"been", "be"},       {"has", "have"},      {"had", "have"},
      {"does", "do"},       {"did", "do"},        {"done", "do"},       {"went", "go"},
      {"gone", "go"},       {"ran", "run"},       {"sat", "sit"},       {"ate", "eat"},
      {"saw", "see"},       {"seen", "see"},      {"took", "take"},     {"taken", "take"},
      {"made", "make"},     {"said", "say"},      {"came", "come"},     {"got", "get"},
      {"found", "find"},    {"thought", "think"}, {"told", "tell"},     {"became", "become"},
      {"left", "leave"},    {"felt", "feel"},     {"brought", "bring"}, {"began", "begin"},
      {"kept", "keep"},     {"held", "hold"},     {"wrote", "write"},   {"written", "write"},
      {"stood", "stand"},   {"heard", "hear"},    {"met", "meet"},      {"paid", "pay"},
      {"knew", "know"},     {"known", "know"},    {"grew", "grow"},     {"drew", "draw"},
      {"flew", "fly"},      {"threw", "throw"},   {"gave", "give"},     {"given", "give"},
      {"men", "man"},       {"women", "woman"},   {"children", "child"}, {"mice", "mouse"},
      {"feet", "foot"},     {"teeth", "tooth"},   {"geese", "goose"},   {"people", "person"},
      {"better", "good"},   {"best", "good"},     {"worse", "bad"},     {"worst", "bad"},
  };
  return table;
}

/// Words whose suffix looks inflectional but is not.
const std::unordered_set<std::string_view>& keep_as_is() {
  static const std::unordered_set<std::string_view> words = {
      "this",   "his",    "its",    "us",      "as",      "yes",     "bus",     "gas",
      "news",   "always", "perhaps", "thus",   "less",    "across",  "series",  "species",
      "during", "thing",  "nothing", "something", "anything", "everything", "king", "ring",
      "sing",   "string", "spring", "morning", "evening", "ceiling", "bed",     "red",
      "need",   "seed",   "speed",  "feed",    "only",    "early",   "family",  "july",
      "reply",  "apply",  "supply", "italy",   "fly",     "holy",    "ugly",    "lily",
  };
  return words;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

/// "runn" -> "run", "stopp" -> "stop"; keeps ll, ss, zz.
std::string undouble(std::string stem) {
  const auto n = stem.size();
  if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 'l' &&
      stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
  }
  return stem;
}

}  // namespace

std::string lemmatize(std::string_view word) {
  if (auto it = irregular().find(word); it != irregular().end()) {
    return std::string(it->second);
  }
  if (keep_as_is().contains(word)) {
    return std::string(word);
  }
  const std::string w(word);
  const auto n = w.size();
  if (n >= 5 && ends_with(w, "ies")) {
    return w.substr(0, n - 3) + "y";
  }
  if (ends_with(w, "sses")) {
    return w.substr(0, n - 2);
  }
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) {
    return w;
  }
  if (n >= 5 && (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") || ends_with(w, "zes"))) {
    return w.substr(0, n - 2);
  }
  if (n >= 4 && ends_with(w, "s")) {
    return w.substr(0, n - 1);
  }
  if (n >= 6 && ends_with(w, "ing")) {
    return undouble(w.substr(0, n - 3));
  }
  if (n >= 5 && ends_with(w, "ied")) {
    return w.substr(0, n - 3) + "y";
  }
  if (n >= 5 && ends_with(w, "ed")) {
    return undouble(w.substr(0, n - 2));
  }
  if (n >= 6 && ends_with(w, "ly")) {
    return w.substr(0, n - 2);
  }
  return w;
}

}  // namespace ordlab
