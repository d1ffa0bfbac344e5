#include "ordlab/dataio.hpp"

#include <fstream>
#include <sstream>

#include "ordlab/error.hpp"

namespace ordlab {

namespace {

constexpr std::string_view kFormatTag = "ordlab-seq";
constexpr int kFormatVersion = 1;

TokenSeq ids_from_json(const nlohmann::json& j, std::size_t line_no) {
  if (!j.is_array()) {
    throw ValidationError("line " + std::to_string(line_no) + ": expected an id array");
  }
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer()) {
      throw ValidationError("line " + std::to_string(line_no) + ": non-integer token id");
    }
    out.push_back(v.get<TokenId>());
  }
  return out;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  ids_.reserve(symbols_.size());
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(symbols_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw ValidationError("duplicate vocab symbol '" + symbols_[i] + "'");
    }
  }
}

const std::string& Vocab::symbol(TokenId id) const {
  if (!valid(id)) {
    throw ValidationError("id out of vocab range: " + std::to_string(id));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

TokenId Vocab::id_of(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) {
    throw ValidationError("symbol not in vocab: '" + std::string(symbol) + "'");
  }
  return it->second;
}

bool Vocab::contains(std::string_view symbol) const { return ids_.contains(std::string(symbol)); }

TokenId Vocab::add(std::string_view symbol) {
  auto [it, inserted] = ids_.emplace(std::string(symbol), static_cast<TokenId>(symbols_.size()));
  if (inserted) {
    symbols_.emplace_back(symbol);
  }
  return it->second;
}

TokenSeq SeqDataset::target_column(std::size_t j) const {
  TokenSeq col;
  col.reserve(examples.size());
  for (const auto& ex : examples) {
    col.push_back(ex.target.at(j));
  }
  return col;
}

TokenSeq SeqDataset::source_column(std::size_t j) const {
  TokenSeq col;
  col.reserve(examples.size());
  for (const auto& ex : examples) {
    col.push_back(ex.source.at(j));
  }
  return col;
}

void SeqDataset::validate() const {
  if (examples.empty()) {
    throw ValidationError("empty dataset");
  }
  const std::size_t l1 = source_len();
  const std::size_t l2 = target_len();
  if (l2 == 0) {
    throw ValidationError("target length must be positive");
  }
  if (target_labels.size() != l2) {
    throw ValidationError("target_labels has " + std::to_string(target_labels.size()) +
                          " entries, target length is " + std::to_string(l2));
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.source.size() != l1 || ex.target.size() != l2) {
      throw ValidationError("inconsistent example shape at row " + std::to_string(i));
    }
    for (const auto* seq : {&ex.source, &ex.target}) {
      for (TokenId id : *seq) {
        if (!vocab.valid(id)) {
          throw ValidationError("id out of vocab range at row " + std::to_string(i) + ": " +
                                std::to_string(id));
        }
      }
    }
  }
}

SeqDataset slice(const SeqDataset& dataset, std::size_t begin, std::size_t end) {
  if (begin > end || end > dataset.size()) {
    throw ValidationError("slice out of range");
  }
  SeqDataset out;
  out.task_name = dataset.task_name;
  out.vocab = dataset.vocab;
  out.target_labels = dataset.target_labels;
  out.field_meta = dataset.field_meta;
  out.examples.assign(dataset.examples.begin() + static_cast<std::ptrdiff_t>(begin),
                      dataset.examples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::string to_jsonl(const SeqDataset& dataset) {
  dataset.validate();
  nlohmann::json header = {
      {"format", kFormatTag},
      {"version", kFormatVersion},
      {"task_name", dataset.task_name},
      {"vocab", dataset.vocab.symbols()},
      {"target_labels", dataset.target_labels},
      {"field_meta", dataset.field_meta.is_null() ? nlohmann::json::object() : dataset.field_meta},
  };
  std::string out = header.dump();
  out += '\n';
  for (const auto& ex : dataset.examples) {
    nlohmann::json row = {{"source", ex.source}, {"target", ex.target}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

SeqDataset from_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  SeqDataset ds;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("vocab") || !j.contains("target_labels")) {
        throw ValidationError("missing header");
      }
      if (j.value("format", std::string(kFormatTag)) != kFormatTag) {
        throw ValidationError("unrecognised format tag");
      }
      ds.task_name = j.value("task_name", std::string{});
      ds.vocab = Vocab(j.at("vocab").get<std::vector<std::string>>());
      ds.target_labels = j.at("target_labels").get<std::vector<std::string>>();
      ds.field_meta = j.value("field_meta", nlohmann::json::object());
      have_header = true;
      continue;
    }
    if (!j.is_object() || !j.contains("source") || !j.contains("target")) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected {source, target}");
    }
    ds.examples.push_back({ids_from_json(j.at("source"), line_no), ids_from_json(j.at("target"), line_no)});
  }
  if (!have_header) {
    throw ValidationError("missing header");
  }
  ds.validate();
  return ds;
}

void save_jsonl(const SeqDataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, to_jsonl(dataset));
}

SeqDataset load_jsonl(const std::filesystem::path& path) { return from_jsonl(read_text_file(path)); }

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    out.push_back(vocab.symbol(id));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failed: " + path.string());
  }
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::error_code stat_ec;
  const auto status = std::filesystem::status(path, stat_ec);
  if (std::filesystem::exists(status) && !std::filesystem::is_regular_file(status)) {
    // Devices and pipes cannot be replaced by a rename.
    std::ofstream out(path, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw IoError("write failed: " + path.string());
    }
    return;
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw IoError("write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot write " + path.string() + ": " + ec.message());
  }
}

}  // namespace ordlab
