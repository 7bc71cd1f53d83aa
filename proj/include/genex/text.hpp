// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "genex/error.hpp"

namespace genex::text {

inline std::string toLower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> splitWhitespace(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline bool isPunct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

// Word tokenizer shared by parsing, constraint matching and the language-model
// adapters: whitespace split, with sentence punctuation detached as its own
// token. Case is preserved; callers lowercase where matching requires it.
inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& raw : splitWhitespace(s)) {
    std::size_t b = 0, e = raw.size();
    std::vector<std::string> trailing;
    while (b < e && isPunct(raw[b])) out.emplace_back(1, raw[b++]);
    while (e > b && isPunct(raw[e - 1])) trailing.emplace_back(1, raw[--e]);
    if (e > b) out.push_back(raw.substr(b, e - b));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

inline std::vector<std::string> lowerWords(std::string_view s) {
  auto w = words(s);
  for (auto& t : w) t = toLower(t);
  return w;
}

// Inverse of words(): punctuation tokens attach to the preceding word.
inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.empty()) continue;
    bool attach = t.size() == 1 && isPunct(t[0]);
    if (!out.empty() && !attach) out += ' ';
    out += t;
  }
  return out;
}

inline std::string capitalizeFirst(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string lowerFirst(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

// Uniqueness key for generated text: lowercase, collapse whitespace, strip
// terminal punctuation.
inline std::string normalizeForUniqueness(std::string_view s) {
  std::string out = join(splitWhitespace(toLower(s)), " ");
  while (!out.empty() && (isPunct(out.back()) || out.back() == ' ')) out.pop_back();
  return out;
}

inline bool startsWith(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline bool endsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Stable 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return out;
}

inline std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Non-empty lines with '#' comments and surrounding whitespace removed.
inline std::vector<std::string> readDataLines(const std::filesystem::path& path) {
  std::istringstream in(readFile(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// "key = value" lines; later keys overwrite earlier ones.
inline std::map<std::string, std::string> parseKeyValue(std::string_view content) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = trim(std::string_view(line).substr(0, eq));
    if (!key.empty()) out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

// Case- and separator-insensitive key for parsing enum names from config.
inline std::string enumKey(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '-' && c != '_' && c != ' ') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline std::string camelCase(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty() || (p.size() == 1 && isPunct(p[0]))) continue;
    out += capitalizeFirst(toLower(p));
  }
  return out;
}

}  // namespace genex::text
