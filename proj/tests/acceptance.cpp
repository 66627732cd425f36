// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cmdground/eval.hpp"
#include "example_suite.hpp"
#include "support.hpp"

using namespace cmdground;
namespace ts = testsupport;

namespace {

struct Failure {
  std::string why;
};

void check(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

const AppSpec& spec_for(const std::string& app) { return app == "blocksworld" ? ts::blocks_spec() : ts::page_spec(); }

EvalReport run_eval(const AppSpec& spec, const std::string& variant, AscStore& store, bool learner) {
  const auto v = Variant::parse(variant);
  std::shared_ptr<const EmbeddingTable> table;
  if (v.backend == Backend::embedding)
    table = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(*spec.embedding_path));
  const auto data = load_dataset(ts::data_dir() / "datasets" / (spec.app_name + ".jsonl"), spec);
  std::vector<LearnerScriptEntry> script;
  if (learner)
    script = parse_learner_script(read_file(ts::data_dir() / "datasets" / (spec.app_name + ".learner.jsonl")), spec);
  return evaluate(data, store, v, load_lexicon_for(spec), table, learner ? &script : nullptr);
}

std::string pct(double x) {
  std::ostringstream os;
  os.precision(4);
  os << 100.0 * x;
  return os.str();
}

std::string golden_trace() {
  const auto g = ts::grounder(ts::blocks_spec());
  const auto world = ts::figure_world();
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = g.ground("relocate the blue block to the left of D", world);
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  check(r.aid_sequence == std::vector<int>{8, 10, 12, 3}, "aid_sequence " + nlohmann::json(r.aid_sequence).dump());
  const std::vector<std::string> want = {"move the color/X1 block to the direction/X2 of name/X3",
                                         "move block_set/X1 to the direction/X2 of name/X3",
                                         "move block_set/X1 to the direction/X2 of block_set/X3",
                                         "move block_set/X1 to location/X2"};
  check(r.commands == want, "commands " + nlohmann::json(r.commands).dump());
  check(ms < 1000.0, "took " + std::to_string(ms) + " ms");
  return "[8, 10, 12, 3], 4 intermediate commands, " + std::to_string(ms) + " ms";
}

std::string marker_equality() {
  const std::vector<std::string> bw = {"1:X1", "3:X2", "5:X2", "6:X2", "7:X2"};
  const std::vector<std::string> wp = {"1:X1", "1:X2", "2:X1",  "4:X2", "6:X2",  "7:X2",
                                       "8:X1", "8:X3", "9:X1", "9:X3", "10:X1", "10:X3"};
  check(starred_slots(ts::blocks_spec()) == bw, "blocksworld " + nlohmann::json(starred_slots(ts::blocks_spec())).dump());
  check(starred_slots(ts::page_spec()) == wp, "webpage " + nlohmann::json(starred_slots(ts::page_spec())).dump());
  return std::to_string(bw.size()) + " + " + std::to_string(wp.size()) + " starred slots, no extras";
}

std::string example_suite() {
  std::size_t ok = 0;
  std::vector<std::string> missed;
  for (const auto& e : ts::example_commands()) {
    const auto env = environment_from_json(ts::example_world(e.app));
    bool hit = false;
    for (auto backend : {Backend::vsm, Backend::jaccard})
      hit = hit || ts::example_satisfied(e, ts::grounder(spec_for(e.app), backend).ground(e.command, *env).aid_sequence);
    if (hit) ++ok;
    else missed.push_back(e.command);
  }
  check(missed.empty(), "missed: " + text::join(missed, "; "));
  return std::to_string(ok) + "/" + std::to_string(ts::example_commands().size()) + " examples";
}

std::string subexpression_counting() {
  for (std::size_t n = 1; n <= 6; ++n) {
    TaggedCommand c;
    for (std::size_t i = 0; i < n; ++i) {
      Variable v;
      v.name = "X" + std::to_string(i + 1);
      v.uid = static_cast<int>(i + 1);
      v.type = "color";
      c.tokens.push_back(TaggedToken::make_word("w"));
      c.tokens.push_back(TaggedToken::make_var(v));
    }
    const auto got = enumerate_subexpressions(c).size();
    check(got == n * (n + 1) / 2 - 1 && got == ts::brute_subexpression_count(c),
          "n=" + std::to_string(n) + " gave " + std::to_string(got));
  }
  const auto fig = tag_command("relocate the blue block to the left of D", ts::blocks_spec());
  check(enumerate_subexpressions(fig).size() == 5, "relocation command");
  return "n = 1..6 match the brute-force count; relocation command gives 5";
}

std::string matcher_oracles() {
  std::mt19937 rng(77);
  auto tokens = [&](std::size_t max_len, std::size_t vocab) {
    std::vector<std::string> out(rng() % (max_len + 1));
    for (auto& t : out) t = "t" + std::to_string(rng() % vocab);
    return out;
  };
  for (int i = 0; i < 1000; ++i) {
    std::map<int, std::vector<std::string>> docs;
    const std::size_t nd = 1 + rng() % 5;
    for (std::size_t d = 0; d < nd; ++d) {
      auto t = tokens(6, 8);
      if (t.empty()) t.push_back("t1");
      docs[static_cast<int>(d) + 1] = t;
    }
    const auto q = tokens(6, 9);
    const auto want = ts::brute_tfidf(q, docs);
    const auto got = score_vsm(q, docs);
    for (const auto& [aid, s] : want) check(std::abs(got.at(aid) - s) < 1e-9, "vsm case " + std::to_string(i));
  }
  for (int i = 0; i < 1000; ++i) {
    const auto a = tokens(8, 10), b = tokens(8, 10);
    const double s = score_jaccard(a, b);
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end()), un = sa;
    un.insert(sb.begin(), sb.end());
    std::size_t inter = 0;
    for (const auto& x : sa) inter += sb.count(x);
    const double want = un.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(un.size());
    check(s >= 0 && s <= 1 && s == score_jaccard(b, a) && std::abs(s - want) < 1e-12, "jaccard case " + std::to_string(i));
  }
  const auto table = EmbeddingTable::load(*ts::blocks_spec().embedding_path);
  MatchOptions opts;
  opts.backend = Backend::embedding;
  const auto data = load_dataset(ts::data_dir() / "datasets" / "blocksworld.jsonl", ts::blocks_spec());
  for (double c : {0.001, 0.5, 7.0, 1e4}) {
    const auto scaled = table.scaled(c);
    for (const auto& d : data) {
      const auto cmd = tag_command(d.text, ts::blocks_spec());
      const auto pool = ts::blocks_spec().actions();
      const auto a = rank(pool, cmd, pool, opts, &table);
      const auto b = rank(pool, cmd, pool, opts, &scaled);
      std::map<int, double> sa, sb;
      for (const auto& m : a) sa[m.asc_aid] = m.score;
      for (const auto& m : b) sb[m.asc_aid] = m.score;
      check(a.front().asc_aid == b.front().asc_aid, "embedding top action changed under scale " + std::to_string(c));
      for (const auto& [aid, x] : sa)
        check(std::abs(x - sb.at(aid)) < 1e-9, "embedding score changed under scale " + std::to_string(c));
    }
  }
  return "vsm 1000/1000, jaccard 1000/1000, embedding scale invariant";
}

std::string ablation_direction() {
  std::vector<std::string> out;
  for (const auto* spec : {&ts::blocks_spec(), &ts::page_spec()}) {
    AscStore a(*spec), b(*spec), c(*spec);
    const auto full = run_eval(*spec, "vsm", a, false);
    const auto no_u = run_eval(*spec, "vsm-U", b, false);
    const auto no_r = run_eval(*spec, "vsm-R", c, false);
    check(full.total >= 50, spec->app_name + " has only " + std::to_string(full.total) + " commands");
    check(full.per_category.size() == 5, spec->app_name + " lacks a category");
    check(full.overall_accuracy > no_u.overall_accuracy, spec->app_name + ": full <= -U");
    check(full.overall_accuracy >= no_r.overall_accuracy, spec->app_name + ": full < -R");
    out.push_back(spec->app_name + " vsm " + pct(full.overall_accuracy) + " / -R " + pct(no_r.overall_accuracy) +
                  " / -U " + pct(no_u.overall_accuracy));
  }
  return text::join(out, "; ");
}

std::string learner_closed_loop() {
  AscStore store(ts::blocks_spec());
  BlocksWorld world;
  world.place("green", "cube", {3, 3}, "A");
  const std::string cmd = "plant one to the left of A";
  const auto before = store.snapshot()->find(1)->templates.size();
  {
    const auto snap = store.snapshot();
    const Grounder g(*snap, MatchOptions{}, load_lexicon_for(*snap));
    auto s = start_session(cmd, g.ground(cmd, world));
    answer_verification(s, Answer::no, g, world);
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < s.options.size(); ++i)
      if (s.options[i].aid == 1) pick = i;
    check(pick.has_value(), "Add is not among the options");
    choose_option(s, *pick);
    confirm_arguments(s, true, store);
    check(s.state == LearnerState::done_learned, "session ended " + to_string(s.state));
  }
  check(store.snapshot()->find(1)->templates.size() == before + 1, "Add did not gain exactly one template");
  const auto snap = store.snapshot();
  const Grounder g(*snap, MatchOptions{}, load_lexicon_for(*snap));
  const auto again = g.ground(cmd, world);
  check(again.action_aid() == 1, "re-grounding gave " + nlohmann::json(again.aid_sequence).dump());
  std::vector<std::string> out = {"re-grounds to " + nlohmann::json(again.aid_sequence).dump()};
  for (const auto* spec : {&ts::blocks_spec(), &ts::page_spec()}) {
    AscStore base_store(*spec), learn_store(*spec);
    const auto base = run_eval(*spec, "vsm", base_store, false);
    const auto learned = run_eval(*spec, "vsm", learn_store, true);
    check(learned.overall_accuracy >= base.overall_accuracy, spec->app_name + ": learner lowered accuracy");
    out.push_back(spec->app_name + " " + pct(base.overall_accuracy) + " -> " + pct(learned.overall_accuracy));
  }
  return text::join(out, "; ");
}

std::string termination_determinism() {
  const auto& spec = ts::blocks_spec();
  const auto g = ts::grounder(spec);
  BlocksWorld world;
  world.place("blue", "square", {5, 5});
  world.place("red", "cube", {3, 4}, "D");
  world.place("green", "circular", {2, 6}, "B");
  world.place("blue", "cube", {8, 8});
  const auto vocab = build_vocabulary(spec);
  std::vector<std::string> words(vocab.begin(), vocab.end());
  for (const auto* w : {"the", "a", "block", "of", "please", "relocate", "take", "away", "xyzzy"}) words.push_back(w);
  const std::vector<std::string> values = {"red", "green", "blue", "yellow", "cube", "square", "(3, 4)", "(9, 9)",
                                           "D",   "B",     "Q",    "left",   "up",   "below",  "2",      "row 1 and column 2"};
  std::mt19937 rng(31337);
  std::size_t grounded = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::string> parts;
    const int len = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < len; ++k) parts.push_back(rng() % 2 ? values[rng() % values.size()] : words[rng() % words.size()]);
    const auto cmd = text::join(parts, " ");
    const auto a = g.ground(cmd, world);
    const auto n = static_cast<int>(tag_command(cmd, spec).variable_count());
    check(a.iterations <= 4 * (n + 1), "cap exceeded on '" + cmd + "'");
    const auto b = g.ground(cmd, world);
    check(to_json(a).dump() == to_json(b).dump(), "non-deterministic trace on '" + cmd + "'");
    grounded += a.grounded();
  }
  return "10000 fuzzed commands halted, traces identical (" + std::to_string(grounded) + " grounded)";
}

std::string non_groundable() {
  std::size_t nog = 0;
  for (const auto* spec : {&ts::blocks_spec(), &ts::page_spec()})
    for (const auto* variant : {"vsm", "jaccard", "emb", "vsm-R", "vsm-U"}) {
      AscStore store(*spec);
      const auto rep = run_eval(*spec, variant, store, false);
      for (const auto& r : rep.records) {
        if (r.category == Category::nog) {
          check(r.predicted.empty(), std::string(variant) + " grounded NOG command '" + r.command + "'");
          ++nog;
        }
        check(r.predicted.empty() || r.score > 0.0,
              std::string(variant) + " fabricated an action for '" + r.command + "'");
      }
    }
  return std::to_string(nog) + " NOG evaluations empty; no action at or below the threshold";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"golden relocation trace", golden_trace},
      {"constraint marker equality", marker_equality},
      {"example-command suite", example_suite},
      {"sub-expression counting", subexpression_counting},
      {"matcher oracles", matcher_oracles},
      {"ablation direction", ablation_direction},
      {"learner closed loop", learner_closed_loop},
      {"termination and determinism", termination_determinism},
      {"non-groundable handling", non_groundable},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    try {
      std::cout << "PASS  " << name << ": " << fn() << std::endl;
    } catch (const Failure& f) {
      ++failed;
      std::cout << "FAIL  " << name << ": " << f.why << std::endl;
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "FAIL  " << name << ": exception: " << e.what() << std::endl;
    }
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
