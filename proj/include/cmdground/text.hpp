#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cmdground::text {

inline std::string to_lower(std::string_view s) {
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

inline bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '\'';
}

/// A lowercase word together with its byte range in the source string.
struct WordSpan {
  std::string word;
  std::size_t begin;
  std::size_t end;
};

/// Splits on anything that is not a word character; punctuation is dropped.
inline std::vector<WordSpan> word_spans(std::string_view s, std::size_t offset = 0) {
  std::vector<WordSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_char(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back({to_lower(s.substr(i, j - i)), offset + i, offset + j});
    i = j;
  }
  return out;
}

inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : word_spans(s)) out.push_back(std::move(w.word));
  return out;
}

/// Function words that are never rephrased.
inline const std::set<std::string>& stopwords() {
  static const std::set<std::string> kStopwords = {
      "the", "a", "an", "to", "of", "at", "on", "with", "and", "as", "by"};
  return kStopwords;
}

inline bool is_stopword(const std::string& w) { return stopwords().count(w) > 0; }

inline bool is_determiner(const std::string& w) {
  return w == "the" || w == "a" || w == "an";
}

}  // namespace cmdground::text
