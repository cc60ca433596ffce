#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cloze/condition.hpp"
#include "cloze/generator.hpp"
#include "cloze/scoring.hpp"

// JSON forms of the records exchanged between pipeline stages. Object keys
// serialize in sorted order, so equal records always produce equal bytes.
// An impossible log-probability is written as null.

namespace cloze {

void to_json(nlohmann::json& j, const Condition& c);
void from_json(const nlohmann::json& j, Condition& c);
void to_json(nlohmann::json& j, const ProbeItem& item);
void from_json(const nlohmann::json& j, ProbeItem& item);
void to_json(nlohmann::json& j, const ScorerSpec& spec);
void from_json(const nlohmann::json& j, ScorerSpec& spec);
void to_json(nlohmann::json& j, const CandidateScore& s);
void from_json(const nlohmann::json& j, CandidateScore& s);
void to_json(nlohmann::json& j, const ScoredItem& s);
void from_json(const nlohmann::json& j, ScoredItem& s);

/// Writes `contents` to a temporary sibling and renames it over `path`, so a
/// failed write never leaves a truncated file behind. Throws std::runtime_error
/// naming the path and cause.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// One compact JSON document per line.
template <typename T>
std::string to_jsonl(const std::vector<T>& records) {
  std::string out;
  for (const auto& r : records) {
    out += nlohmann::json(r).dump();
    out += '\n';
  }
  return out;
}

/// Parses a JSON-lines file; ParseError carries the path and line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

[[noreturn]] void throw_record_error(const std::filesystem::path& path, std::size_t line,
                                     std::string_view what);

template <typename T>
std::vector<T> read_records(const std::filesystem::path& path) {
  std::vector<T> out;
  const auto docs = read_jsonl(path);
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    try {
      out.push_back(docs[i].get<T>());
    } catch (const std::exception& e) {
      throw_record_error(path, i + 1, e.what());
    }
  }
  return out;
}

}  // namespace cloze
