#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cloze::lm {

/// GPT-2 style byte-level BPE. Pre-tokenization follows the GPT-2 split
/// pattern; non-ASCII bytes are treated as letters.
class BpeTokenizer {
 public:
  /// vocab.json + merges.txt, or tokenizer.json when those are absent.
  static BpeTokenizer from_directory(const std::filesystem::path& dir);
  static BpeTokenizer from_files(const std::filesystem::path& vocab_json,
                                 const std::filesystem::path& merges_txt);

  std::vector<int> encode(std::string_view text) const;
  std::optional<int> token_id(std::string_view token) const;
  std::size_t vocab_size() const { return vocab_.size(); }

  /// Pre-tokenizer pieces (exposed for tests).
  static std::vector<std::string> split(std::string_view text);

 private:
  std::vector<int> encode_piece(const std::string& piece) const;

  std::unordered_map<std::string, int> vocab_;
  std::map<std::pair<std::string, std::string>, int> merge_ranks_;
};

/// BERT WordPiece with the basic tokenizer's whitespace/punctuation split.
class WordPieceTokenizer {
 public:
  static WordPieceTokenizer from_directory(const std::filesystem::path& dir);
  static WordPieceTokenizer from_vocab(const std::filesystem::path& vocab_txt, bool lowercase);

  std::vector<int> encode(std::string_view text) const;
  std::optional<int> token_id(std::string_view token) const;
  bool lowercase() const { return lowercase_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  static std::vector<std::string> basic_split(std::string_view text, bool lowercase);

 private:
  std::unordered_map<std::string, int> vocab_;
  bool lowercase_ = true;
  int unk_id_ = 0;
};

}  // namespace cloze::lm
