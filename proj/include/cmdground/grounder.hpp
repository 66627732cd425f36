#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmdground/environment.hpp"
#include "cmdground/errors.hpp"
#include "cmdground/matcher.hpp"
#include "cmdground/spec_model.hpp"
#include "cmdground/tagger.hpp"
#include "cmdground/value.hpp"

namespace cmdground {

/// Contiguous token range [begin, end] of a command that starts and ends at a
/// variable. `vars` holds the token indices of its variables.
struct SubExpression {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<std::size_t> vars;

  std::size_t length() const { return vars.size(); }
  bool contains_token(std::size_t i) const { return i >= begin && i <= end; }
  bool operator==(const SubExpression&) const = default;
};

inline std::vector<std::size_t> variable_positions(const TaggedCommand& cmd) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cmd.tokens.size(); ++i)
    if (cmd.tokens[i].is_var) out.push_back(i);
  return out;
}

/// All spans of m consecutive variables for 1 <= m <= n-1, shortest first and
/// left to right within a length. The full-length span is not included.
inline std::vector<SubExpression> enumerate_subexpressions(const TaggedCommand& cmd) {
  const auto pos = variable_positions(cmd);
  std::vector<SubExpression> out;
  const std::size_t n = pos.size();
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t s = 0; s + m <= n; ++s)
      out.push_back({pos[s], pos[s + m - 1], std::vector<std::size_t>(pos.begin() + s, pos.begin() + s + m)});
  return out;
}

inline SubExpression full_span(const TaggedCommand& cmd) {
  const auto pos = variable_positions(cmd);
  if (pos.empty()) return {};
  return {pos.front(), pos.back(), pos};
}

inline TaggedCommand slice(const TaggedCommand& cmd, const SubExpression& sp) {
  TaggedCommand out;
  out.raw = cmd.raw;
  out.tokens.assign(cmd.tokens.begin() + static_cast<std::ptrdiff_t>(sp.begin),
                    cmd.tokens.begin() + static_cast<std::ptrdiff_t>(sp.end + 1));
  return out;
}

/// Renumbers variables X1..Xk left to right. The alias record maps each new
/// name to the name it replaced.
inline std::pair<TaggedCommand, std::map<std::string, std::string>> rename_for_match(TaggedCommand query) {
  std::map<std::string, std::string> alias;
  int k = 0;
  for (auto& t : query.tokens) {
    if (!t.is_var) continue;
    auto fresh = "X" + std::to_string(++k);
    alias[fresh] = t.var.name;
    t.var.name = fresh;
  }
  return {std::move(query), std::move(alias)};
}

/// Token indices of command variables that align with starred slots of
/// `action`. Slots and variables are paired by type from the right.
inline std::set<std::size_t> starred_positions(const TaggedCommand& cmd, const Asc& action) {
  std::set<std::size_t> out;
  std::map<std::string, std::vector<const VariableSlot*>> slots_by_type;
  for (const auto& s : action.inputs) slots_by_type[s.type].push_back(&s);
  std::map<std::string, std::vector<std::size_t>> vars_by_type;
  for (auto i : variable_positions(cmd)) vars_by_type[cmd.tokens[i].var.type].push_back(i);
  for (const auto& [type, slots] : slots_by_type) {
    auto it = vars_by_type.find(type);
    if (it == vars_by_type.end()) continue;
    const auto& vars = it->second;
    for (std::size_t k = 0; k < slots.size() && k < vars.size(); ++k)
      if (slots[slots.size() - 1 - k]->starred) out.insert(vars[vars.size() - 1 - k]);
  }
  return out;
}

/// Drops every sub-expression that contains a variable aligned to a starred
/// slot of `top_action`.
inline std::vector<SubExpression> filter_subexpressions(const std::vector<SubExpression>& sp,
                                                        const TaggedCommand& cmd, const Asc& top_action) {
  const auto starred = starred_positions(cmd, top_action);
  std::vector<SubExpression> out;
  for (const auto& s : sp) {
    bool keep = true;
    for (auto v : s.vars) keep = keep && !starred.count(v);
    if (keep) out.push_back(s);
  }
  return out;
}

inline std::vector<std::string> type_sequence(const TaggedCommand& cmd, const SubExpression& sp) {
  std::vector<std::string> out;
  for (auto v : sp.vars) out.push_back(cmd.tokens[v].var.type);
  return out;
}

/// Action ASCs whose input type multiset equals the command's.
inline std::vector<const Asc*> get_candidate_actions(const TaggedCommand& cmd, const AppSpec& spec) {
  std::vector<const Asc*> out;
  const auto ms = cmd.type_multiset();
  for (const auto* a : spec.actions())
    if (a->input_type_multiset() == ms) out.push_back(a);
  return out;
}

/// Utility ASCs with a template whose ordered input types equal the
/// sub-expression's.
inline std::vector<const Asc*> get_candidate_utilities(const TaggedCommand& cmd, const SubExpression& sp,
                                                       const AppSpec& spec) {
  std::vector<const Asc*> out;
  const auto seq = type_sequence(cmd, sp);
  for (const auto* u : spec.utilities())
    for (const auto& t : u->templates)
      if (type_sequence(*u, t) == seq) {
        out.push_back(u);
        break;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Results

struct TraceStep {
  std::string kind;  // tag, rephrase, reduce, merge, skip, action, fail
  std::string command;
  int aid = 0;
  double score = 0.0;
  std::string sub_expression;
  std::map<std::string, std::string> bindings;
  std::string reason;
};

struct ActionCall {
  int aid = 0;
  std::string api;
  std::vector<std::string> slots;
  std::vector<Value> args;
};

struct GroundingResult {
  std::vector<int> aid_sequence;
  std::optional<ActionCall> action_call;
  double score = 0.0;
  /// C'_0, C'_1, ... as rendered after tagging and after each reduction.
  std::vector<std::string> commands;
  std::vector<TraceStep> trace;
  std::string reason;
  int iterations = 0;

  /// Final working command and the runtime value of each of its variables
  /// (keyed by uid), for rendering options.
  TaggedCommand final_command;
  std::map<int, Value> values;
  std::map<int, std::vector<std::string>> alias_map;

  bool grounded() const { return !aid_sequence.empty(); }
  int action_aid() const { return grounded() ? aid_sequence.back() : 0; }
};

inline nlohmann::json to_json(const TraceStep& s) {
  nlohmann::json j = {{"kind", s.kind}, {"command", s.command}};
  if (s.aid) j["aid"] = s.aid;
  if (s.kind == "reduce" || s.kind == "action") j["score"] = s.score;
  if (!s.sub_expression.empty()) j["sub_expression"] = s.sub_expression;
  if (!s.bindings.empty()) j["bindings"] = s.bindings;
  if (!s.reason.empty()) j["reason"] = s.reason;
  return j;
}

inline nlohmann::json to_json(const GroundingResult& r) {
  nlohmann::json j;
  j["aid_sequence"] = r.aid_sequence;
  j["grounded"] = r.grounded();
  j["commands"] = r.commands;
  j["iterations"] = r.iterations;
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (r.action_call) {
    nlohmann::json args = nlohmann::json::object();
    for (std::size_t i = 0; i < r.action_call->slots.size(); ++i)
      args[r.action_call->slots[i]] = to_json(r.action_call->args[i]);
    j["action_call"] = {{"aid", r.action_call->aid}, {"api", r.action_call->api}, {"args", args},
                        {"score", r.score}};
  } else {
    j["action_call"] = nullptr;
  }
  j["trace"] = nlohmann::json::array();
  for (const auto& s : r.trace) j["trace"].push_back(to_json(s));
  return j;
}

// ---------------------------------------------------------------------------
// Grounding

struct GroundOptions {
  bool rephrase = true;
  bool utilities = true;
  /// Consider only this action, and let it drive the constraint filter.
  std::optional<int> restrict_action;
  /// When false, a matching action is returned whatever its score.
  bool apply_threshold = true;
};

namespace detail {

struct WorkState {
  TaggedCommand cmd;
  std::map<int, Value> buffer;  // uid -> runtime value of buffered variables
  std::map<int, std::vector<std::string>> names;  // uid -> names held so far
  std::set<std::pair<std::set<int>, int>> fired_pairs;
  int next_uid = 0;
};

inline Value value_of(const WorkState& st, const Variable& v) {
  if (v.buffered) return st.buffer.at(v.uid);
  return literal_value(v.type, v.value);
}

inline std::string span_text(const std::vector<TaggedToken>& tokens, std::size_t b, std::size_t e) {
  std::vector<std::string> parts;
  for (std::size_t i = b; i <= e; ++i)
    parts.push_back(tokens[i].is_var ? tokens[i].var.surface : tokens[i].word);
  return text::join(parts, " ");
}

inline void renumber(WorkState& st) {
  int k = 0;
  for (auto& t : st.cmd.tokens) {
    if (!t.is_var) continue;
    auto fresh = "X" + std::to_string(++k);
    auto& hist = st.names[t.var.uid];
    if (hist.empty() || hist.back() != fresh) hist.push_back(fresh);
    t.var.name = fresh;
  }
}

/// Merges runs of adjacent buffered set variables by intersecting their ids.
/// Returns false if an intersection is empty.
inline bool coalesce(WorkState& st, const AppSpec& spec, std::vector<TraceStep>& trace) {
  auto& toks = st.cmd.tokens;
  for (std::size_t i = 0; i + 1 < toks.size();) {
    auto& a = toks[i];
    auto& b = toks[i + 1];
    if (a.is_var && b.is_var && a.var.buffered && b.var.buffered && a.var.type == b.var.type &&
        spec.is_set_type(a.var.type)) {
      const auto& sa = std::get<IdSet>(st.buffer.at(a.var.uid));
      const auto& sb = std::get<IdSet>(st.buffer.at(b.var.uid));
      IdSet both;
      std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(both, both.end()));
      if (both.empty()) return false;
      Variable v = a.var;
      v.uid = st.next_uid++;
      v.surface = a.var.surface + " " + b.var.surface;
      st.buffer[v.uid] = both;
      st.names[v.uid] = {};
      toks[i] = TaggedToken::make_var(v);
      toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      trace.push_back({"merge", {}, 0, 0.0, v.surface, {{"ids", to_display(Value(both))}}, {}});
      continue;
    }
    ++i;
  }
  return true;
}

}  // namespace detail

/// Iterative command grounding: tag and rephrase, then alternate between
/// action matching and utility reductions until an action matches or no
/// sub-expression can be reduced.
class Grounder {
 public:
  Grounder(const AppSpec& spec, MatchOptions opts, SynonymLexicon lexicon = {},
           std::shared_ptr<const EmbeddingTable> table = nullptr)
      : spec_(&spec),
        matcher_(spec, opts, std::move(table)),
        vocab_(build_vocabulary(spec)),
        lexicon_(std::move(lexicon)) {}

  const AppSpec& spec() const { return *spec_; }
  const Matcher& matcher() const { return matcher_; }
  const SynonymLexicon& lexicon() const { return lexicon_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  TaggedCommand prepare(const std::string& command, bool rephrase) const {
    auto tagged = tag_command(command, *spec_);
    return rephrase ? rephrase_command(tagged, vocab_, lexicon_) : tagged;
  }

  GroundingResult ground(const std::string& command, const Environment& env,
                         const GroundOptions& opts = {}) const {
    GroundingResult res;
    detail::WorkState st;
    try {
      st.cmd = prepare(command, opts.rephrase);
    } catch (const EmptyCommand& e) {
      res.reason = e.what();
      res.trace.push_back({"fail", {}, 0, 0.0, {}, {}, res.reason});
      return res;
    }
    const std::size_t n = st.cmd.variable_count();
    for (const auto* v : st.cmd.variables()) {
      st.names[v->uid] = {v->name};
      st.next_uid = std::max(st.next_uid, v->uid + 1);
    }
    const int cap = 4 * static_cast<int>(n + 1);
    res.commands.push_back(st.cmd.render());
    res.trace.push_back({"tag", st.cmd.render(), 0, 0.0, {}, {}, {}});

    std::vector<int> fired;
    auto finish_empty = [&](std::string why) {
      res.reason = std::move(why);
      res.trace.push_back({"fail", st.cmd.render(), 0, 0.0, {}, {}, res.reason});
      res.final_command = st.cmd;
      res.values = st.buffer;
      res.alias_map = st.names;
      return res;
    };

    while (true) {
      auto actions = get_candidate_actions(st.cmd, *spec_);
      if (opts.restrict_action)
        std::erase_if(actions, [&](const Asc* a) { return a->aid != *opts.restrict_action; });
      if (!actions.empty()) {
        const auto ranked = matcher_.rank(actions, st.cmd);
        const auto& top = ranked.front();
        if (opts.apply_threshold && top.score <= matcher_.options().tau)
          return finish_empty("best action " + std::to_string(top.asc_aid) + " scores " +
                              std::to_string(top.score) + ", not above threshold");
        return finish_action(res, st, fired, top);
      }
      if (!opts.utilities) return finish_empty("no action matches and reductions are disabled");

      const auto sp = candidate_spans(st.cmd, opts);
      bool reduced = false;
      for (std::size_t j = 0; j < sp.size() && !reduced; ++j) {
        const auto utils = get_candidate_utilities(st.cmd, sp[j], *spec_);
        if (utils.empty()) continue;
        auto [query, alias] = rename_for_match(slice(st.cmd, sp[j]));
        const auto ranked = matcher_.rank(utils, query);
        const auto& top = ranked.front();
        const Asc& u = *spec_->find(top.asc_aid);

        std::set<int> consumed;
        for (auto v : sp[j].vars) consumed.insert(st.cmd.tokens[v].var.uid);
        if (st.fired_pairs.count({consumed, u.aid})) continue;
        st.fired_pairs.insert({consumed, u.aid});

        const auto sp_text = query.render();
        try {
          reduce(st, sp[j], u, env, res.trace, top.score);
        } catch (const Error& e) {
          res.trace.push_back({"skip", st.cmd.render(), u.aid, top.score, sp_text, {}, e.what()});
          continue;
        }
        fired.push_back(u.aid);
        res.commands.push_back(st.cmd.render());
        reduced = true;
        if (++res.iterations > cap) return finish_empty("iteration cap reached");
      }
      if (!reduced) return finish_empty("no sub-expression could be reduced");
    }
  }

  /// Sub-expressions in walk order after constraint filtering, with the full
  /// span appended as a last resort.
  std::vector<SubExpression> candidate_spans(const TaggedCommand& cmd, const GroundOptions& opts = {}) const {
    auto sp = enumerate_subexpressions(cmd);
    if (cmd.variable_count() > 0) sp.push_back(full_span(cmd));
    const Asc* top = nullptr;
    if (opts.restrict_action) {
      top = spec_->find(*opts.restrict_action);
    } else {
      const auto ranked = matcher_.rank_actions(cmd);
      if (!ranked.empty() && ranked.front().score > matcher_.options().tau) top = spec_->find(ranked.front().asc_aid);
    }
    return top ? filter_subexpressions(sp, cmd, *top) : sp;
  }

 private:
  /// Executes `u` on the sub-expression's values and splices its output
  /// variable into the command in place of the span.
  void reduce(detail::WorkState& st, const SubExpression& sp, const Asc& u, const Environment& env,
              std::vector<TraceStep>& trace, double score) const {
    const auto seq = type_sequence(st.cmd, sp);
    const AscTemplate* tpl = nullptr;
    for (const auto& t : u.templates)
      if (cmdground::type_sequence(u, t) == seq) {
        tpl = &t;
        break;
      }
    std::vector<std::string> slot_order;
    for (const auto& t : tpl->tokens)
      if (t.is_slot) slot_order.push_back(t.text);

    std::map<std::string, Value> by_slot;
    TraceStep step{"reduce", {}, u.aid, score, {}, {}, {}};
    for (std::size_t k = 0; k < sp.vars.size(); ++k) {
      const auto& var = st.cmd.tokens[sp.vars[k]].var;
      by_slot[slot_order[k]] = detail::value_of(st, var);
      step.bindings[slot_order[k]] = to_display(by_slot[slot_order[k]]);
    }
    std::vector<Value> args;
    for (const auto& s : u.inputs) args.push_back(by_slot.at(s.name));

    Value out;
    try {
      out = env.execute_utility(u.api_name, args);
    } catch (const EnvironmentError&) {
      throw;
    } catch (const std::exception& e) {
      throw UtilityExecutionError(e.what());
    }
    if (const auto* ids = std::get_if<IdSet>(&out); ids && ids->empty()) throw EmptyResult();

    auto next = st;
    auto& toks = next.cmd.tokens;
    std::size_t b = sp.begin, e = sp.end;
    while (b > 0 && !toks[b - 1].is_var &&
           (text::is_determiner(toks[b - 1].word) || spec_->is_object_noun(toks[b - 1].word)))
      --b;
    while (e + 1 < toks.size() && !toks[e + 1].is_var && spec_->is_object_noun(toks[e + 1].word)) ++e;

    Variable v;
    v.type = u.outputs.front().type;
    v.buffered = true;
    v.uid = next.next_uid++;
    v.surface = detail::span_text(toks, b, e);
    v.name = u.outputs.front().name;
    next.buffer[v.uid] = out;
    next.names[v.uid] = {v.name};
    step.sub_expression = v.surface;
    step.bindings[u.outputs.front().name] = to_display(out);

    toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(b), toks.begin() + static_cast<std::ptrdiff_t>(e + 1));
    toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(b), TaggedToken::make_var(v));
    std::vector<TraceStep> steps{step};
    if (!detail::coalesce(next, *spec_, steps)) throw EmptyResult();
    detail::renumber(next);
    for (auto& s : steps) s.command = next.cmd.render();
    trace.insert(trace.end(), steps.begin(), steps.end());
    st = std::move(next);
  }

  GroundingResult finish_action(GroundingResult& res, detail::WorkState& st, std::vector<int>& fired,
                                const MatchScore& top) const {
    const Asc& a = *spec_->find(top.asc_aid);
    ActionCall call;
    call.aid = a.aid;
    call.api = a.api_name;
    std::map<std::string, std::size_t> used;
    const auto vars = st.cmd.variables();
    TraceStep step{"action", st.cmd.render(), a.aid, top.score, {}, {}, {}};
    for (const auto& slot : a.inputs) {
      std::size_t seen = 0;
      for (const auto* v : vars) {
        if (v->type != slot.type) continue;
        if (seen++ == used[slot.type]) {
          ++used[slot.type];
          call.slots.push_back(slot.name);
          call.args.push_back(detail::value_of(st, *v));
          step.bindings[slot.name] = to_display(call.args.back());
          break;
        }
      }
    }
    fired.push_back(a.aid);
    res.aid_sequence = fired;
    res.action_call = std::move(call);
    res.score = top.score;
    res.trace.push_back(step);
    res.final_command = st.cmd;
    res.values = st.buffer;
    res.alias_map = st.names;
    return res;
  }

  const AppSpec* spec_;
  Matcher matcher_;
  Vocabulary vocab_;
  SynonymLexicon lexicon_;
};

}  // namespace cmdground
