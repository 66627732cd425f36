#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace cmdground;
using testsupport::blocks_spec;

namespace {

std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len, std::size_t vocab) {
  std::vector<std::string> out(rng() % (max_len + 1));
  for (auto& t : out) t = "t" + std::to_string(rng() % vocab);
  return out;
}

Asc word_asc(int aid, const std::vector<std::string>& words) {
  Asc a;
  a.aid = aid;
  a.api_name = "Api" + std::to_string(aid);
  AscTemplate t;
  for (const auto& w : words) t.tokens.push_back(TemplateToken::word(w));
  a.templates.push_back(t);
  return a;
}

TaggedCommand words_command(const std::vector<std::string>& words) {
  TaggedCommand c;
  for (const auto& w : words) c.tokens.push_back(TaggedToken::make_word(w));
  return c;
}

double set_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::vector<std::string> inter, uni;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

}  // namespace

TEST(Jaccard, Examples) {
  EXPECT_DOUBLE_EQ(score_jaccard({"a", "b"}, {"b", "c"}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(score_jaccard({"a", "a", "b"}, {"b", "a"}), 1.0);
  EXPECT_DOUBLE_EQ(score_jaccard({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(score_jaccard({"x"}, {}), 0.0);
}

TEST(Jaccard, RandomPairsMatchSetOracle) {
  std::mt19937 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_tokens(rng, 8, 10), b = random_tokens(rng, 8, 10);
    const double s = score_jaccard(a, b);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
    ASSERT_DOUBLE_EQ(s, score_jaccard(b, a));
    ASSERT_NEAR(s, set_jaccard(a, b), 1e-12);
  }
}

TEST(Vsm, HandComputedCorpus) {
  const std::map<int, std::vector<std::string>> docs = {
      {1, {"move", "block"}}, {2, {"remove", "block"}}, {3, {"add", "block", "at"}}};
  // "block" is in every document, so idf(block) = ln(3/3) = 0 and only "move" counts
  const auto s = score_vsm({"move", "the", "block"}, docs);
  EXPECT_NEAR(s.at(1), 1.0, 1e-12);
  EXPECT_NEAR(s.at(2), 0.0, 1e-12);
  EXPECT_NEAR(s.at(3), 0.0, 1e-12);

  const std::map<int, std::vector<std::string>> two = {{1, {"move", "block"}}, {2, {"move", "remove", "remove"}}};
  const auto t = score_vsm({"remove", "block"}, two);
  // q = (block ln2, remove ln2); d1 = (block ln2); d2 = (remove 2 ln2)
  EXPECT_NEAR(t.at(1), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(t.at(2), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Vsm, RandomCorporaMatchOracle) {
  std::mt19937 rng(2);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t ndocs = 1 + rng() % 5;
    std::map<int, std::vector<std::string>> docs;
    std::vector<Asc> ascs;
    for (std::size_t d = 0; d < ndocs; ++d) {
      auto toks = random_tokens(rng, 6, 8);
      if (toks.empty()) toks.push_back("t0");
      docs[static_cast<int>(d) + 1] = toks;
      ascs.push_back(word_asc(static_cast<int>(d) + 1, toks));
    }
    const auto query = random_tokens(rng, 6, 9);
    const auto want = testsupport::brute_tfidf(query, docs);
    const auto got = score_vsm(query, docs);
    for (const auto& [aid, s] : want) ASSERT_NEAR(got.at(aid), s, 1e-9) << "iteration " << iter;

    std::vector<const Asc*> pool;
    for (const auto& a : ascs) pool.push_back(&a);
    const auto ranked = rank(pool, words_command(query), pool, MatchOptions{});
    ASSERT_EQ(ranked.size(), ndocs);
    for (std::size_t k = 1; k < ranked.size(); ++k) {
      const double prev = want.at(ranked[k - 1].asc_aid), cur = want.at(ranked[k].asc_aid);
      ASSERT_GE(prev, cur - 1e-9);
      if (std::abs(prev - cur) < 1e-15) ASSERT_LT(ranked[k - 1].asc_aid, ranked[k].asc_aid);
    }
  }
}

TEST(Embedding, HandComputedToyTable) {
  EmbeddingTable table;
  table.set("move", {1, 0, 0});
  table.set("shift", {0.8, 0.6, 0});
  table.set("remove", {0, 0, 1});
  table.set("block", {0, 1, 0});
  // mean(move, block) = (0.5, 0.5, 0); cos with (0.8, 0.6, 0) = 0.7 / sqrt(0.5)
  EXPECT_NEAR(score_embedding({"move", "block"}, {"shift"}, table), 0.7 / std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(score_embedding({"move", "block"}, {"remove"}, table), 0.0, 1e-12);
  EXPECT_NEAR(score_embedding({"unknown"}, {"remove"}, table), 0.0, 1e-12);
  EXPECT_NEAR(score_embedding({"move", "unknown"}, {"move"}, table), 1.0, 1e-12);
}

TEST(Embedding, RankingInvariantToPositiveScaling) {
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss;
  for (int iter = 0; iter < 200; ++iter) {
    EmbeddingTable table;
    for (int w = 0; w < 10; ++w) table.set("t" + std::to_string(w), {gauss(rng), gauss(rng), gauss(rng), gauss(rng)});
    std::vector<Asc> ascs;
    for (int d = 1; d <= 5; ++d) ascs.push_back(word_asc(d, random_tokens(rng, 5, 10)));
    std::vector<const Asc*> pool;
    for (const auto& a : ascs) pool.push_back(&a);
    const auto query = words_command(random_tokens(rng, 5, 10));
    MatchOptions opts;
    opts.backend = Backend::embedding;
    const auto base = rank(pool, query, pool, opts, &table);
    for (double c : {0.01, 0.5, 3.0, 1000.0}) {
      const auto scaled_table = table.scaled(c);
      const auto other = rank(pool, query, pool, opts, &scaled_table);
      ASSERT_EQ(base.size(), other.size());
      for (std::size_t k = 0; k < base.size(); ++k) {
        ASSERT_NEAR(base[k].score, other[k].score, 1e-9);
        if (k == 0 || std::abs(base[k].score - base[k - 1].score) > 1e-9)
          ASSERT_EQ(base[k].asc_aid, other[k].asc_aid);
      }
    }
  }
}

TEST(Embedding, ParseErrors) {
  std::istringstream ok("a 1 2\nb 3 4\n");
  const auto t = EmbeddingTable::parse(ok);
  EXPECT_EQ(t.dimension(), 2u);
  EXPECT_EQ(t.size(), 2u);
  std::istringstream bad("a 1 2\nb 3\n");
  try {
    EmbeddingTable::parse(bad);
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Ranking, TiesBreakByAid) {
  const auto a = word_asc(7, {"x"}), b = word_asc(3, {"x"}), c = word_asc(5, {"y"});
  std::vector<const Asc*> pool = {&a, &b, &c};
  MatchOptions opts;
  opts.backend = Backend::jaccard;
  const auto r = rank(pool, words_command({"x"}), pool, opts);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].asc_aid, 3);
  EXPECT_EQ(r[1].asc_aid, 7);
  EXPECT_EQ(r[2].asc_aid, 5);
}

TEST(Ranking, ReducedRelocationMatchesMove) {
  const auto& spec = blocks_spec();
  const Matcher m(spec, MatchOptions{});
  auto cmd = tag_command("move the block to (1, 1)", spec);
  const auto ranked = m.rank_actions(cmd);
  EXPECT_EQ(ranked.front().asc_aid, 3);
  EXPECT_GT(ranked.front().score, 0.0);
}

TEST(Ranking, EmbeddingNeedsTable) {
  MatchOptions opts;
  opts.backend = Backend::embedding;
  EXPECT_THROW(Matcher(blocks_spec(), opts), Error);
  EXPECT_EQ(backend_from_string("emb"), Backend::embedding);
  EXPECT_THROW(backend_from_string("bm25"), Error);
}
