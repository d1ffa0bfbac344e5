#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ordlab/dataio.hpp"

namespace ordlab {

/// A token sequence for language-model training. label_mask[i] marks
/// tokens[i] as a prediction target (predicted from tokens[0..i-1]), so
/// label_mask[0] is never set.
struct LmSequence {
  TokenSeq tokens;
  std::vector<std::uint8_t> label_mask;

  bool operator==(const LmSequence&) const = default;
};

/// A sentence with one information-rich word copied in front of it:
/// augmented = [START] selected [END] original...
/// loss_mask is false on [START], the selected word, [END] and the first
/// original token; true elsewhere.
struct AugmentedSentence {
  TokenSeq original;
  std::string selected;
  TokenId start_marker = 0;
  TokenId end_marker = 0;
  TokenSeq augmented;
  std::vector<std::uint8_t> loss_mask;

  bool operator==(const AugmentedSentence&) const = default;
};

/// The augmented sequence as LM training data: labels follow loss_mask.
LmSequence to_lm_sequence(const AugmentedSentence& sentence);
/// The plain sentence as LM data: every token but the first is a label.
LmSequence plain_lm_sequence(const TokenSeq& original);

}  // namespace ordlab
