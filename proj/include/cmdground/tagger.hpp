#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "cmdground/errors.hpp"
#include "cmdground/spec_model.hpp"
#include "cmdground/text.hpp"

namespace cmdground {

/// A typed variable inside a command. `uid` identifies the variable across
/// renamings; `name` is its current X/O label.
struct Variable {
  std::string name;
  std::string type;
  std::string value;    // canonical literal; empty for buffered outputs
  std::string surface;  // text as it appeared in the command
  int uid = 0;
  bool buffered = false;

  bool operator==(const Variable&) const = default;
};

struct TaggedToken {
  bool is_var = false;
  std::string word;
  Variable var;

  static TaggedToken make_word(std::string w) { return {false, std::move(w), {}}; }
  static TaggedToken make_var(Variable v) { return {true, {}, std::move(v)}; }
  bool operator==(const TaggedToken&) const = default;

  std::string render() const { return is_var ? var.type + "/" + var.name : word; }
};

struct TaggedCommand {
  std::vector<TaggedToken> tokens;
  std::string raw;

  std::string render() const {
    std::vector<std::string> parts;
    for (const auto& t : tokens) parts.push_back(t.render());
    return text::join(parts, " ");
  }
  std::size_t variable_count() const {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const auto& t) { return t.is_var; }));
  }
  std::vector<const Variable*> variables() const {
    std::vector<const Variable*> out;
    for (const auto& t : tokens)
      if (t.is_var) out.push_back(&t.var);
    return out;
  }
  std::vector<std::string> words() const {
    std::vector<std::string> out;
    for (const auto& t : tokens)
      if (!t.is_var) out.push_back(t.word);
    return out;
  }
  std::multiset<std::string> type_multiset() const {
    std::multiset<std::string> out;
    for (const auto& t : tokens)
      if (t.is_var) out.insert(t.var.type);
    return out;
  }
  bool operator==(const TaggedCommand& o) const { return tokens == o.tokens; }
};

using Vocabulary = std::set<std::string>;

inline Vocabulary build_vocabulary(const AppSpec& spec) {
  Vocabulary v;
  for (const auto& a : spec.ascs)
    for (const auto& t : a.templates)
      for (const auto& w : t.words()) v.insert(w);
  return v;
}

/// Word or phrase -> candidate synonyms, tried in order.
struct SynonymLexicon {
  std::map<std::string, std::vector<std::string>> entries;

  static SynonymLexicon parse(std::string_view src) {
    SynonymLexicon lex;
    std::size_t lineno = 0;
    for (const auto& raw_line : text::split(src, '\n')) {
      ++lineno;
      auto line = text::trim(raw_line);
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw SyntaxError("lexicon entry lacks a tab separator", lineno);
      auto key = text::join(text::words(line.substr(0, tab)), " ");
      std::vector<std::string> syns;
      for (const auto& s : text::split(line.substr(tab + 1), ',')) {
        auto norm = text::join(text::words(s), " ");
        if (!norm.empty()) syns.push_back(norm);
      }
      if (key.empty()) throw SyntaxError("empty lexicon key", lineno);
      auto& slot = lex.entries[key];
      slot.insert(slot.end(), syns.begin(), syns.end());
    }
    return lex;
  }

  static SynonymLexicon load(const std::filesystem::path& path) { return parse(read_file(path)); }

  std::size_t longest_key_words() const {
    std::size_t n = 1;
    for (const auto& [k, _] : entries)
      n = std::max(n, static_cast<std::size_t>(std::count(k.begin(), k.end(), ' ')) + 1);
    return n;
  }
};

inline SynonymLexicon load_lexicon_for(const AppSpec& spec) {
  if (!spec.synonym_lexicon_path) return {};
  return SynonymLexicon::load(*spec.synonym_lexicon_path);
}

namespace detail {

struct TagMatch {
  std::size_t begin;
  std::size_t end;
  std::size_t domain_rank;  // declaration order; the built-in number type ranks last
  std::string type;
  std::string value;
};

inline std::string rewrite_row_column(const std::string& s) {
  static const std::regex row_first(
      R"(\brow\s+(\d+)\s*(?:,\s*)?(?:and\s+)?(?:in\s+)?column\s+(\d+)\b)", std::regex::icase);
  static const std::regex col_first(
      R"(\bcolumn\s+(\d+)\s*(?:,\s*)?(?:and\s+)?(?:in\s+)?row\s+(\d+)\b)", std::regex::icase);
  auto out = std::regex_replace(s, row_first, "($1, $2)");
  return std::regex_replace(out, col_first, "($2, $1)");
}

}  // namespace detail

/// Dictionary lookup for enumerated domains, regex for pattern domains and the
/// built-in number type. Overlaps resolve earliest-start first, then longest,
/// then domain declaration order.
inline TaggedCommand tag_command(const std::string& command, const AppSpec& spec) {
  if (text::trim(command).empty()) throw EmptyCommand();
  const std::string s = detail::rewrite_row_column(command);

  std::vector<detail::TagMatch> matches;
  const auto spans = text::word_spans(s);
  for (std::size_t rank = 0; rank < spec.domains.size(); ++rank) {
    const auto& d = spec.domains[rank];
    if (d.kind == DomainKind::pattern) {
      const auto re = d.compiled();
      for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        if (it->length(0) == 0) continue;
        auto b = static_cast<std::size_t>(it->position(0));
        auto e = b + static_cast<std::size_t>(it->length(0));
        matches.push_back({b, e, rank, d.name, it->str(0)});
      }
      continue;
    }
    std::vector<std::pair<std::vector<std::string>, std::string>> forms;
    for (const auto& v : d.values) forms.emplace_back(text::words(v), v);
    for (const auto& [alias, v] : d.aliases) forms.emplace_back(text::words(alias), v);
    for (std::size_t k = 0; k < spans.size(); ++k) {
      for (const auto& [ws, value] : forms) {
        if (ws.empty() || k + ws.size() > spans.size()) continue;
        bool ok = true;
        for (std::size_t i = 0; i < ws.size() && ok; ++i) ok = spans[k + i].word == ws[i];
        if (ok) matches.push_back({spans[k].begin, spans[k + ws.size() - 1].end, rank, d.name, value});
      }
    }
  }
  static const std::regex number_re(R"(\b\d+\b)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_re); it != std::sregex_iterator(); ++it) {
    auto b = static_cast<std::size_t>(it->position(0));
    matches.push_back({b, b + static_cast<std::size_t>(it->length(0)), spec.domains.size(),
                       std::string(kNumberType), it->str(0)});
  }
  std::sort(matches.begin(), matches.end(), [](const auto& x, const auto& y) {
    if (x.begin != y.begin) return x.begin < y.begin;
    if (x.end - x.begin != y.end - y.begin) return x.end - x.begin > y.end - y.begin;
    return x.domain_rank < y.domain_rank;
  });

  TaggedCommand out;
  out.raw = command;
  std::size_t cursor = 0;
  int next = 1;
  auto emit_words = [&](std::size_t b, std::size_t e) {
    for (auto& w : text::word_spans(std::string_view(s).substr(b, e - b)))
      out.tokens.push_back(TaggedToken::make_word(std::move(w.word)));
  };
  for (const auto& m : matches) {
    if (m.begin < cursor) continue;
    emit_words(cursor, m.begin);
    Variable v;
    v.name = "X" + std::to_string(next);
    v.uid = next++;
    v.type = m.type;
    v.surface = s.substr(m.begin, m.end - m.begin);
    v.value = m.value;
    out.tokens.push_back(TaggedToken::make_var(std::move(v)));
    cursor = m.end;
  }
  emit_words(cursor, s.size());
  return out;
}

/// Replaces out-of-vocabulary words (and lexicon phrases containing one) by the
/// first lexicon synonym whose words are all in `vocab`. Stopwords and
/// variables are left alone.
inline TaggedCommand rephrase_command(const TaggedCommand& tagged, const Vocabulary& vocab,
                                      const SynonymLexicon& lexicon) {
  auto oov = [&](const std::string& w) { return !text::is_stopword(w) && !vocab.count(w); };
  auto pick = [&](const std::string& key) -> const std::string* {
    auto it = lexicon.entries.find(key);
    if (it == lexicon.entries.end()) return nullptr;
    for (const auto& syn : it->second) {
      auto ws = text::words(syn);
      if (!ws.empty() && std::all_of(ws.begin(), ws.end(), [&](const auto& w) { return vocab.count(w) > 0; }))
        return &syn;
    }
    return nullptr;
  };

  TaggedCommand out;
  out.raw = tagged.raw;
  const auto& in = tagged.tokens;
  const std::size_t max_len = lexicon.longest_key_words();
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i].is_var) {
      out.tokens.push_back(in[i++]);
      continue;
    }
    bool replaced = false;
    for (std::size_t len = std::min(max_len, in.size() - i); len >= 1 && !replaced; --len) {
      std::vector<std::string> ws;
      bool any_oov = false;
      for (std::size_t k = i; k < i + len; ++k) {
        if (in[k].is_var) break;
        ws.push_back(in[k].word);
        any_oov = any_oov || oov(in[k].word);
      }
      if (ws.size() != len || !any_oov) continue;
      if (const auto* syn = pick(text::join(ws, " "))) {
        for (auto& w : text::words(*syn)) out.tokens.push_back(TaggedToken::make_word(std::move(w)));
        i += len;
        replaced = true;
      }
    }
    if (!replaced) out.tokens.push_back(in[i++]);
  }
  return out;
}

}  // namespace cmdground
