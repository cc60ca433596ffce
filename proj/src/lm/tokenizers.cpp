#include "cloze/lm/tokenizers.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cloze/error.hpp"

namespace cloze::lm {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw BackendUnavailable("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// GPT-2's reversible byte -> printable code point table.
const std::array<std::string, 256>& byte_symbols() {
  static const auto table = [] {
    std::array<std::string, 256> t;
    auto printable = [](int b) {
      return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
    };
    int extra = 0;
    for (int b = 0; b < 256; ++b) {
      const char32_t cp = printable(b) ? static_cast<char32_t>(b) : static_cast<char32_t>(256 + extra++);
      append_utf8(t[b], cp);
    }
    return t;
  }();
  return table;
}

bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }
bool is_letter(unsigned char c) { return std::isalpha(c) || c >= 0x80; }
bool is_digit(unsigned char c) { return std::isdigit(c); }

}  // namespace

std::vector<std::string> BpeTokenizer::split(std::string_view text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  std::size_t i = 0;
  while (i < n) {
    if (text[i] == '\'') {
      const auto rest = text.substr(i + 1);
      std::size_t len = 0;
      for (std::string_view c : {"re", "ve", "ll", "s", "t", "m", "d"}) {
        if (rest.substr(0, c.size()) == c) {
          len = c.size() + 1;
          break;
        }
      }
      if (len > 0) {
        out.emplace_back(text.substr(i, len));
        i += len;
        continue;
      }
    }
    if (is_space(at(i))) {
      std::size_t k = i;
      while (k < n && is_space(at(k))) ++k;
      if (k == n) {
        out.emplace_back(text.substr(i));
        break;
      }
      if (k - i > 1) {
        out.emplace_back(text.substr(i, k - i - 1));
        i = k - 1;
        continue;
      }
      if (text[i] != ' ') {
        out.emplace_back(text.substr(i, 1));
        ++i;
        continue;
      }
    }
    // Optional leading space followed by one character class.
    std::size_t j = i;
    if (text[j] == ' ') ++j;
    const unsigned char c = at(j);
    if (is_letter(c)) {
      while (j < n && is_letter(at(j))) ++j;
    } else if (is_digit(c)) {
      while (j < n && is_digit(at(j))) ++j;
    } else {
      while (j < n && !is_space(at(j)) && !is_letter(at(j)) && !is_digit(at(j))) ++j;
    }
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

BpeTokenizer BpeTokenizer::from_files(const std::filesystem::path& vocab_json,
                                      const std::filesystem::path& merges_txt) {
  BpeTokenizer tok;
  try {
    const auto vocab = nlohmann::json::parse(read_file(vocab_json));
    for (const auto& [token, id] : vocab.items()) tok.vocab_.emplace(token, id.get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("vocab.json: " + std::string(e.what()));
  }
  std::istringstream merges(read_file(merges_txt));
  std::string line;
  int rank = 0;
  while (std::getline(merges, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("#version", 0) == 0) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ParseError("merges.txt: malformed line '" + line + "'");
    tok.merge_ranks_.emplace(std::make_pair(line.substr(0, space), line.substr(space + 1)), rank++);
  }
  return tok;
}

BpeTokenizer BpeTokenizer::from_directory(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / "vocab.json") && std::filesystem::exists(dir / "merges.txt")) {
    return from_files(dir / "vocab.json", dir / "merges.txt");
  }
  if (!std::filesystem::exists(dir / "tokenizer.json")) {
    throw BackendUnavailable("no BPE vocabulary in " + dir.string());
  }
  BpeTokenizer tok;
  try {
    const auto doc = nlohmann::json::parse(read_file(dir / "tokenizer.json"));
    const auto& model = doc.at("model");
    for (const auto& [token, id] : model.at("vocab").items()) tok.vocab_.emplace(token, id.get<int>());
    int rank = 0;
    for (const auto& m : model.at("merges")) {
      std::pair<std::string, std::string> pair;
      if (m.is_string()) {
        const auto s = m.get<std::string>();
        const auto space = s.find(' ');
        pair = {s.substr(0, space), s.substr(space + 1)};
      } else {
        pair = {m.at(0).get<std::string>(), m.at(1).get<std::string>()};
      }
      tok.merge_ranks_.emplace(std::move(pair), rank++);
    }
    if (doc.contains("added_tokens")) {
      for (const auto& t : doc.at("added_tokens")) {
        tok.vocab_.emplace(t.at("content").get<std::string>(), t.at("id").get<int>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("tokenizer.json: " + std::string(e.what()));
  }
  return tok;
}

std::optional<int> BpeTokenizer::token_id(std::string_view token) const {
  const auto it = vocab_.find(std::string(token));
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> BpeTokenizer::encode_piece(const std::string& piece) const {
  const auto& symbols = byte_symbols();
  std::vector<std::string> word;
  word.reserve(piece.size());
  for (unsigned char b : piece) word.push_back(symbols[b]);

  while (word.size() > 1) {
    int best_rank = std::numeric_limits<int>::max();
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      const auto it = merge_ranks_.find({word[i], word[i + 1]});
      if (it != merge_ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = i;
      }
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    const std::string left = word[best], right = word[best + 1];
    std::vector<std::string> merged;
    merged.reserve(word.size());
    for (std::size_t i = 0; i < word.size();) {
      if (i + 1 < word.size() && word[i] == left && word[i + 1] == right) {
        merged.push_back(left + right);
        i += 2;
      } else {
        merged.push_back(word[i++]);
      }
    }
    word = std::move(merged);
  }

  std::vector<int> ids;
  ids.reserve(word.size());
  for (const auto& s : word) {
    const auto it = vocab_.find(s);
    if (it == vocab_.end()) throw ScorerError("BPE symbol missing from vocabulary");
    ids.push_back(it->second);
  }
  return ids;
}

std::vector<int> BpeTokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& piece : split(text)) {
    const auto p = encode_piece(piece);
    ids.insert(ids.end(), p.begin(), p.end());
  }
  return ids;
}

namespace {

// Latin-1 supplement letters (U+00C0..U+00FF) without their accents; '\0' for
// characters that are not accented letters.
constexpr std::string_view kLatin1Base =
    "AAAAAAACEEEEIIII"
    "DNOOOOO\0OUUUUY\0s"
    "aaaaaaaceeeeiiii"
    "dnooooo\0ouuuuy\0y";

bool is_bert_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

}  // namespace

std::vector<std::string> WordPieceTokenizer::basic_split(std::string_view text, bool lowercase) {
  // Normalize: drop control characters, map whitespace to ' ', lowercase and
  // strip accents from Latin-1 letters.
  std::string norm;
  norm.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == 0xC3 && i + 1 < text.size() && lowercase) {
      const auto c2 = static_cast<unsigned char>(text[i + 1]);
      const char base = (c2 >= 0x80 && c2 <= 0xBF) ? kLatin1Base[c2 - 0x80] : '\0';
      if (base != '\0') {
        norm += static_cast<char>(std::tolower(static_cast<unsigned char>(base)));
        ++i;
        continue;
      }
    }
    if (is_space(c)) {
      norm += ' ';
    } else if (c < 0x20 || c == 0x7F) {
      continue;
    } else {
      norm += lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    }
  }
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (unsigned char c : norm) {
    if (c == ' ') {
      flush();
    } else if (is_bert_punct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur += static_cast<char>(c);
    }
  }
  flush();
  return out;
}

WordPieceTokenizer WordPieceTokenizer::from_vocab(const std::filesystem::path& vocab_txt,
                                                  bool lowercase) {
  WordPieceTokenizer tok;
  tok.lowercase_ = lowercase;
  std::istringstream in(read_file(vocab_txt));
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tok.vocab_.emplace(line, id++);
  }
  const auto unk = tok.token_id("[UNK]");
  if (!unk) throw ParseError("vocab.txt has no [UNK] token");
  tok.unk_id_ = *unk;
  return tok;
}

WordPieceTokenizer WordPieceTokenizer::from_directory(const std::filesystem::path& dir) {
  bool lowercase = true;
  if (std::filesystem::exists(dir / "tokenizer_config.json")) {
    try {
      const auto cfg = nlohmann::json::parse(read_file(dir / "tokenizer_config.json"));
      lowercase = cfg.value("do_lower_case", true);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("tokenizer_config.json: " + std::string(e.what()));
    }
  }
  if (!std::filesystem::exists(dir / "vocab.txt")) {
    throw BackendUnavailable("no vocab.txt in " + dir.string());
  }
  return from_vocab(dir / "vocab.txt", lowercase);
}

std::optional<int> WordPieceTokenizer::token_id(std::string_view token) const {
  const auto it = vocab_.find(std::string(token));
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> WordPieceTokenizer::encode(std::string_view text) const {
  constexpr std::size_t kMaxWordChars = 100;
  std::vector<int> ids;
  for (const auto& word : basic_split(text, lowercase_)) {
    if (word.size() > kMaxWordChars) {
      ids.push_back(unk_id_);
      continue;
    }
    std::vector<int> pieces;
    std::size_t start = 0;
    bool bad = false;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::optional<int> found;
      while (end > start) {
        std::string sub = word.substr(start, end - start);
        if (start > 0) sub = "##" + sub;
        if ((found = token_id(sub))) break;
        --end;
      }
      if (!found) {
        bad = true;
        break;
      }
      pieces.push_back(*found);
      start = end;
    }
    if (bad) {
      ids.push_back(unk_id_);
    } else {
      ids.insert(ids.end(), pieces.begin(), pieces.end());
    }
  }
  return ids;
}

}  // namespace cloze::lm
