#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmdground/errors.hpp"
#include "cmdground/spec_model.hpp"
#include "cmdground/tagger.hpp"

namespace cmdground {

enum class Backend { jaccard, vsm, embedding };

inline std::string to_string(Backend b) {
  switch (b) {
    case Backend::jaccard: return "jaccard";
    case Backend::vsm: return "vsm";
    case Backend::embedding: return "emb";
  }
  return "?";
}

inline Backend backend_from_string(const std::string& s) {
  if (s == "jaccard") return Backend::jaccard;
  if (s == "vsm") return Backend::vsm;
  if (s == "emb" || s == "embedding") return Backend::embedding;
  throw Error("unknown matcher backend '" + s + "'");
}

struct MatchScore {
  int asc_aid = 0;
  std::size_t template_index = 0;
  double score = 0.0;
};

// ---------------------------------------------------------------------------
// Scorers

/// |A n B| / |A u B| over token sets; 0 when both are empty.
inline double score_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

/// tf-idf cosine of `query` against every document. tf is the raw count,
/// idf = ln(N / df); query terms that occur in no document weigh nothing.
inline std::map<int, double> score_vsm(const std::vector<std::string>& query,
                                       const std::map<int, std::vector<std::string>>& api_documents) {
  std::map<int, double> out;
  if (api_documents.empty()) return out;
  const double n = static_cast<double>(api_documents.size());
  std::map<std::string, int> df;
  std::map<int, std::map<std::string, int>> tf;
  for (const auto& [aid, doc] : api_documents) {
    auto& counts = tf[aid];
    for (const auto& t : doc) ++counts[t];
    for (const auto& [t, _] : counts) ++df[t];
  }
  auto idf = [&](const std::string& t) { return std::log(n / df.at(t)); };

  std::map<std::string, double> q;
  for (const auto& t : query)
    if (df.count(t)) q[t] += 1.0;
  double qnorm = 0.0;
  for (auto& [t, w] : q) {
    w *= idf(t);
    qnorm += w * w;
  }
  qnorm = std::sqrt(qnorm);

  for (const auto& [aid, counts] : tf) {
    double dot = 0.0, dnorm = 0.0;
    for (const auto& [t, c] : counts) {
      const double w = c * idf(t);
      dnorm += w * w;
      if (auto it = q.find(t); it != q.end()) dot += w * it->second;
    }
    dnorm = std::sqrt(dnorm);
    out[aid] = (qnorm > 0.0 && dnorm > 0.0) ? dot / (qnorm * dnorm) : 0.0;
  }
  return out;
}

/// Word vectors in the common whitespace text layout: `token v1 ... vD` per line.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  static EmbeddingTable parse(std::istream& in) {
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string token;
      if (!(ls >> token)) continue;
      std::vector<double> v;
      double x;
      while (ls >> x) v.push_back(x);
      if (table.dimension_ == 0) {
        if (v.empty()) throw SyntaxError("embedding line has no components", lineno);
        table.dimension_ = v.size();
      }
      if (v.size() != table.dimension_)
        throw SyntaxError("embedding for '" + token + "' has " + std::to_string(v.size()) +
                              " components, expected " + std::to_string(table.dimension_),
                          lineno);
      table.vectors_[token] = std::move(v);
    }
    return table;
  }

  static EmbeddingTable load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return parse(in);
  }

  void set(const std::string& token, std::vector<double> v) {
    if (dimension_ == 0) dimension_ = v.size();
    if (v.size() != dimension_) throw Error("embedding dimension mismatch for '" + token + "'");
    vectors_[token] = std::move(v);
  }

  const std::vector<double>* find(const std::string& token) const {
    auto it = vectors_.find(token);
    return it == vectors_.end() ? nullptr : &it->second;
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }

  /// Copy with every vector multiplied by `c`.
  EmbeddingTable scaled(double c) const {
    EmbeddingTable out(dimension_);
    for (const auto& [k, v] : vectors_) {
      auto w = v;
      for (auto& x : w) x *= c;
      out.vectors_[k] = std::move(w);
    }
    return out;
  }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

namespace detail {

inline bool mean_vector(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                        std::vector<double>& out) {
  out.assign(table.dimension(), 0.0);
  std::size_t n = 0;
  for (const auto& t : tokens) {
    const auto* v = table.find(t);
    if (!v) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
    ++n;
  }
  if (n == 0) return false;
  for (auto& x : out) x /= static_cast<double>(n);
  return true;
}

}  // namespace detail

/// Cosine of the mean in-vocabulary word vectors; 0 when either side has none.
inline double score_embedding(const std::vector<std::string>& command,
                              const std::vector<std::string>& tpl, const EmbeddingTable& table) {
  std::vector<double> a, b;
  if (!detail::mean_vector(command, table, a) || !detail::mean_vector(tpl, table, b)) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// Ranking

struct MatchOptions {
  Backend backend = Backend::vsm;
  /// A top action scoring <= tau is treated as no match.
  double tau = 0.0;
  /// Add each variable's type name to the scored bag. Off by default: scoring
  /// runs on words only, so shared argument types alone never make a match.
  bool variable_tokens = false;
};

inline std::vector<std::string> scoring_tokens(const TaggedCommand& cmd, bool variable_tokens) {
  std::vector<std::string> out;
  for (const auto& t : cmd.tokens) {
    if (!t.is_var) out.push_back(t.word);
    else if (variable_tokens) out.push_back(t.var.type);
  }
  return out;
}

inline std::vector<std::string> scoring_tokens(const Asc& asc, const AscTemplate& tpl,
                                               bool variable_tokens) {
  std::vector<std::string> out;
  for (const auto& t : tpl.tokens) {
    if (!t.is_slot) out.push_back(t.text);
    else if (variable_tokens)
      if (const auto* s = asc.input(t.text)) out.push_back(s->type);
  }
  return out;
}

inline void sort_scores(std::vector<MatchScore>& scores) {
  constexpr double kTieEps = 1e-12;
  std::sort(scores.begin(), scores.end(), [](const MatchScore& x, const MatchScore& y) {
    if (std::abs(x.score - y.score) > kTieEps) return x.score > y.score;
    if (x.asc_aid != y.asc_aid) return x.asc_aid < y.asc_aid;
    return x.template_index < y.template_index;
  });
}

/// Ranks `candidates` against `query`, one entry per API. Jaccard and
/// embedding take the per-API max over templates; vsm scores each API as a
/// single document drawn from `pool` (idf is computed over the whole pool).
inline std::vector<MatchScore> rank(const std::vector<const Asc*>& candidates, const TaggedCommand& query,
                                    const std::vector<const Asc*>& pool, const MatchOptions& opts,
                                    const EmbeddingTable* table = nullptr) {
  std::vector<MatchScore> out;
  const auto q = scoring_tokens(query, opts.variable_tokens);
  if (opts.backend == Backend::vsm) {
    std::map<int, std::vector<std::string>> docs;
    for (const auto* set : {&pool, &candidates})
      for (const auto* a : *set) {
        if (docs.count(a->aid)) continue;
        auto& d = docs[a->aid];
        for (const auto& t : a->templates) {
          auto toks = scoring_tokens(*a, t, opts.variable_tokens);
          d.insert(d.end(), toks.begin(), toks.end());
        }
      }
    const auto scores = score_vsm(q, docs);
    for (const auto* a : candidates) out.push_back({a->aid, 0, scores.at(a->aid)});
  } else {
    if (opts.backend == Backend::embedding && !table)
      throw Error("embedding backend needs an embedding table");
    for (const auto* a : candidates) {
      MatchScore best{a->aid, 0, -1.0};
      for (std::size_t i = 0; i < a->templates.size(); ++i) {
        const auto t = scoring_tokens(*a, a->templates[i], opts.variable_tokens);
        const double s = opts.backend == Backend::jaccard ? score_jaccard(q, t)
                                                          : score_embedding(q, t, *table);
        if (s > best.score) best = {a->aid, i, s};
      }
      out.push_back(best);
    }
  }
  sort_scores(out);
  return out;
}

/// Ranking bound to one AppSpec snapshot.
class Matcher {
 public:
  Matcher(const AppSpec& spec, MatchOptions opts, std::shared_ptr<const EmbeddingTable> table = nullptr)
      : spec_(&spec), opts_(opts), table_(std::move(table)) {
    if (opts_.backend == Backend::embedding && !table_)
      throw Error("embedding backend needs an embedding table");
  }

  const MatchOptions& options() const { return opts_; }
  const AppSpec& spec() const { return *spec_; }

  std::vector<MatchScore> rank(const std::vector<const Asc*>& candidates, const TaggedCommand& query) const {
    if (candidates.empty()) return {};
    const auto kind = candidates.front()->kind;
    return cmdground::rank(candidates, query, spec_->of_kind(kind), opts_, table_.get());
  }

  std::vector<MatchScore> rank_actions(const TaggedCommand& query) const {
    return rank(spec_->actions(), query);
  }

 private:
  const AppSpec* spec_;
  MatchOptions opts_;
  std::shared_ptr<const EmbeddingTable> table_;
};

}  // namespace cmdground
