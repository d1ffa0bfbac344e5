#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace ordlab {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// Ordered symbol table. Ids are contiguous 0..size()-1.
class Vocab {
 public:
  Vocab() = default;
  /// Throws ValidationError on duplicate symbols.
  explicit Vocab(std::vector<std::string> symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& symbol(TokenId id) const;
  TokenId id_of(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  bool valid(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < symbols_.size(); }

  /// Appends a symbol if absent and returns its id.
  TokenId add(std::string_view symbol);

  bool operator==(const Vocab& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct SeqExample {
  TokenSeq source;
  TokenSeq target;

  bool operator==(const SeqExample&) const = default;
};

/// N aligned (source, target) rows over a shared vocabulary. All rows share
/// the same source and target lengths.
struct SeqDataset {
  std::string task_name;
  std::vector<SeqExample> examples;
  Vocab vocab;
  std::vector<std::string> target_labels;
  nlohmann::json field_meta = nlohmann::json::object();

  std::size_t size() const { return examples.size(); }
  std::size_t source_len() const { return examples.empty() ? 0 : examples.front().source.size(); }
  std::size_t target_len() const { return examples.empty() ? 0 : examples.front().target.size(); }

  /// Column j of the target block.
  TokenSeq target_column(std::size_t j) const;
  TokenSeq source_column(std::size_t j) const;

  /// Throws ValidationError describing the first broken invariant.
  void validate() const;

  bool operator==(const SeqDataset&) const = default;
};

/// Rows [begin, end) as a new dataset sharing vocab, labels and metadata.
SeqDataset slice(const SeqDataset& dataset, std::size_t begin, std::size_t end);

std::string to_jsonl(const SeqDataset& dataset);
SeqDataset from_jsonl(std::string_view text);

void save_jsonl(const SeqDataset& dataset, const std::filesystem::path& path);
SeqDataset load_jsonl(const std::filesystem::path& path);

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocab& vocab);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ordlab
