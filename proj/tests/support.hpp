#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cmdground/environments.hpp"
#include "cmdground/grounder.hpp"
#include "cmdground/learner.hpp"
#include "cmdground/spec_model.hpp"

namespace testsupport {

namespace cg = cmdground;

inline std::filesystem::path data_dir() { return CMDGROUND_DATA_DIR; }
inline std::filesystem::path spec_path(const std::string& app) { return data_dir() / "specs" / (app + ".json"); }

inline const cg::AppSpec& blocks_spec() {
  static const cg::AppSpec spec = cg::load_spec_file(spec_path("blocksworld"));
  return spec;
}
inline const cg::AppSpec& page_spec() {
  static const cg::AppSpec spec = cg::load_spec_file(spec_path("webpage"));
  return spec;
}

inline cg::Grounder grounder(const cg::AppSpec& spec, cg::Backend backend = cg::Backend::vsm) {
  cg::MatchOptions opts;
  opts.backend = backend;
  std::shared_ptr<const cg::EmbeddingTable> table;
  if (backend == cg::Backend::embedding)
    table = std::make_shared<const cg::EmbeddingTable>(cg::EmbeddingTable::load(*spec.embedding_path));
  return cg::Grounder(spec, opts, cg::load_lexicon_for(spec), table);
}

/// A blue block plus block D, the canonical relocation example.
inline cg::BlocksWorld figure_world() {
  cg::BlocksWorld w;
  w.place("blue", "square", {5, 5});
  w.place("red", "cube", {3, 4}, "D");
  return w;
}

// ---------------------------------------------------------------------------
// Independent oracles

/// Longest common subsequence length by trying every subsequence of `u`.
inline std::size_t brute_lcs_length(const std::vector<std::string>& u, const std::vector<std::string>& a) {
  std::size_t best = 0;
  const std::size_t n = u.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) sub.push_back(u[i]);
    std::size_t k = 0;
    for (std::size_t j = 0; j < a.size() && k < sub.size(); ++j)
      if (a[j] == sub[k]) ++k;
    if (k == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

/// Textbook tf-idf cosine over an explicit term list.
inline std::map<int, double> brute_tfidf(const std::vector<std::string>& query,
                                         const std::map<int, std::vector<std::string>>& docs) {
  std::set<std::string> terms;
  for (const auto& [_, d] : docs) terms.insert(d.begin(), d.end());
  const double n = static_cast<double>(docs.size());
  std::map<std::string, double> idf;
  for (const auto& t : terms) {
    double df = 0;
    for (const auto& [_, d] : docs) df += std::find(d.begin(), d.end(), t) != d.end() ? 1 : 0;
    idf[t] = std::log(n / df);
  }
  auto vec = [&](const std::vector<std::string>& toks) {
    std::vector<double> v;
    for (const auto& t : terms) v.push_back(static_cast<double>(std::count(toks.begin(), toks.end(), t)) * idf[t]);
    return v;
  };
  const auto q = vec(query);
  std::map<int, double> out;
  for (const auto& [aid, d] : docs) {
    const auto v = vec(d);
    double dot = 0, nq = 0, nv = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      dot += q[i] * v[i];
      nq += q[i] * q[i];
      nv += v[i] * v[i];
    }
    out[aid] = (nq == 0 || nv == 0) ? 0.0 : dot / std::sqrt(nq * nv);
  }
  return out;
}

/// Number of (start, end) variable pairs, excluding the single full span.
inline std::size_t brute_subexpression_count(const cg::TaggedCommand& cmd) {
  std::vector<std::size_t> vars;
  for (std::size_t i = 0; i < cmd.tokens.size(); ++i)
    if (cmd.tokens[i].is_var) vars.push_back(i);
  std::size_t count = 0;
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i; j < vars.size(); ++j)
      if (!(i == 0 && j + 1 == vars.size())) ++count;
  return count;
}

/// Walks a position one cell at a time.
inline cg::Location walk(cg::Location l, const std::string& dir, int steps) {
  for (int i = 0; i < steps; ++i) {
    if (dir == "left") --l.x;
    else if (dir == "right") ++l.x;
    else if (dir == "above") --l.y;
    else if (dir == "below") ++l.y;
  }
  return l;
}

}  // namespace testsupport
