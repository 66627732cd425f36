#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdground/environment.hpp"
#include "cmdground/errors.hpp"
#include "cmdground/grounder.hpp"
#include "cmdground/matcher.hpp"
#include "cmdground/spec_model.hpp"
#include "cmdground/tagger.hpp"

namespace cmdground {

/// Holds the live AppSpec. Readers take immutable snapshots; writers append
/// learned templates, re-run the constraint marker and publish a new snapshot.
class AscStore {
 public:
  explicit AscStore(AppSpec spec, std::optional<std::filesystem::path> sidecar = std::nullopt)
      : spec_(std::make_shared<const AppSpec>(std::move(spec))), sidecar_(std::move(sidecar)) {
    if (sidecar_ && std::filesystem::exists(*sidecar_)) replay(*sidecar_);
  }

  static std::filesystem::path sidecar_for(const std::filesystem::path& spec_path) {
    return spec_path.string() + ".learned.json";
  }

  /// Loads a spec file together with its learned-template sidecar.
  static std::unique_ptr<AscStore> open(const std::filesystem::path& spec_path) {
    return std::make_unique<AscStore>(load_spec_file(spec_path), sidecar_for(spec_path));
  }

  std::shared_ptr<const AppSpec> snapshot() const {
    std::shared_lock lock(mu_);
    return spec_;
  }

  /// Appends `tpl` to action `aid`. Returns false when an identical template
  /// already exists.
  bool add_template(int aid, AscTemplate tpl) {
    std::unique_lock lock(mu_);
    auto next = *spec_;
    auto* asc = next.find(aid);
    if (!asc || !asc->is_action()) throw ValidationError("learned templates attach to action ASCs only", aid);
    for (const auto& t : asc->templates)
      if (t.same_tokens(tpl)) return false;
    tpl.learned = true;
    validate_template(next, *asc, tpl);
    asc->templates.push_back(std::move(tpl));
    validate(next);
    spec_ = std::make_shared<const AppSpec>(mark_utility_constraints(std::move(next)));
    if (sidecar_) write_sidecar(*spec_, *sidecar_);
    return true;
  }

  std::size_t learned_count() const {
    std::shared_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& a : spec_->ascs)
      for (const auto& t : a.templates) n += t.learned;
    return n;
  }

  const std::optional<std::filesystem::path>& sidecar() const { return sidecar_; }

 private:
  void replay(const std::filesystem::path& path) {
    const auto doc = json::parse(read_file(path));
    auto next = *spec_;
    for (const auto& e : doc.value("action_ascs", json::array())) {
      const auto entry = parse_asc_entry(e, AscKind::action);
      auto* asc = next.find(entry.aid);
      if (!asc || !asc->is_action() || asc->api_name != entry.api_name || !same_signature(*asc, entry))
        throw ValidationError("learned entry does not match the loaded API signature", entry.aid);
      for (auto t : entry.templates) {
        bool dup = false;
        for (const auto& have : asc->templates) dup = dup || have.same_tokens(t);
        if (dup) continue;
        t.learned = true;
        asc->templates.push_back(std::move(t));
      }
    }
    validate(next);
    spec_ = std::make_shared<const AppSpec>(mark_utility_constraints(std::move(next)));
  }

  static bool same_signature(const Asc& a, const Asc& b) {
    if (a.inputs.size() != b.inputs.size()) return false;
    for (std::size_t i = 0; i < a.inputs.size(); ++i)
      if (a.inputs[i].name != b.inputs[i].name || a.inputs[i].type != b.inputs[i].type) return false;
    return true;
  }

  static void write_sidecar(const AppSpec& spec, const std::filesystem::path& path) {
    json entries = json::array();
    for (const auto& a : spec.ascs) {
      std::vector<AscTemplate> learned;
      for (const auto& t : a.templates)
        if (t.learned) learned.push_back(t);
      if (learned.empty()) continue;
      auto e = asc_entry_to_json(a, learned);
      e["learned"] = true;
      entries.push_back(e);
    }
    const json doc = {{"app", spec.app_name}, {"action_ascs", entries}};
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error("cannot write " + tmp);
      out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
  }

  mutable std::shared_mutex mu_;
  std::shared_ptr<const AppSpec> spec_;
  std::optional<std::filesystem::path> sidecar_;
};

// ---------------------------------------------------------------------------
// Sessions

enum class LearnerState {
  awaiting_verification,
  awaiting_choice,
  awaiting_arg_confirm,
  done_learned,
  done_confirmed,
  done_failed
};

inline std::string to_string(LearnerState s) {
  switch (s) {
    case LearnerState::awaiting_verification: return "awaiting_verification";
    case LearnerState::awaiting_choice: return "awaiting_choice";
    case LearnerState::awaiting_arg_confirm: return "awaiting_arg_confirm";
    case LearnerState::done_learned: return "done_learned";
    case LearnerState::done_confirmed: return "done_confirmed";
    case LearnerState::done_failed: return "done_failed";
  }
  return "?";
}

inline bool is_done(LearnerState s) {
  return s == LearnerState::done_learned || s == LearnerState::done_confirmed || s == LearnerState::done_failed;
}

enum class Answer { yes, no, silence };

inline Answer answer_from_string(const std::string& s) {
  const auto a = text::to_lower(text::trim(s));
  if (a == "yes" || a == "y") return Answer::yes;
  if (a == "no" || a == "n") return Answer::no;
  if (a == "silence" || a.empty()) return Answer::silence;
  throw Error("answer must be yes, no or silence");
}

struct RankedOption {
  int aid = 0;
  std::string api;
  std::string nl_text;
  double score = 0.0;
  std::map<std::string, std::string> bindings;
  /// Reduced command this option was rendered from, with variable slots.
  TaggedCommand reduced;
};

struct LearnerSession {
  std::string session_id;
  std::string original_command;
  std::string current_command;
  LearnerState state = LearnerState::awaiting_verification;
  std::string prompt;
  std::vector<RankedOption> options;
  std::optional<std::size_t> chosen;
  int attempt = 1;
  int max_attempts = 3;
  std::optional<int> grounded_aid;
  std::optional<Asc> learned_asc;
};

/// Renders a reduced command as text: captured values keep their surface form,
/// buffered locations print as coordinates, buffered sets as the phrase they
/// replaced.
inline std::string render_with_values(const TaggedCommand& cmd, const std::map<int, Value>& values) {
  std::vector<std::string> parts;
  for (const auto& t : cmd.tokens) {
    if (!t.is_var) {
      parts.push_back(t.word);
    } else if (!t.var.buffered) {
      parts.push_back(t.var.surface);
    } else {
      const auto& v = values.at(t.var.uid);
      parts.push_back(std::holds_alternative<IdSet>(v) ? t.var.surface : to_display(v));
    }
  }
  return text::join(parts, " ");
}

/// One option per action API whose argument types the command can be reduced
/// to, ranked by match score.
inline std::vector<RankedOption> generate_options(const std::string& command, const Grounder& grounder,
                                                  const Environment& env) {
  std::vector<RankedOption> out;
  GroundOptions opts;
  opts.apply_threshold = false;
  for (const auto* a : grounder.spec().actions()) {
    opts.restrict_action = a->aid;
    const auto r = grounder.ground(command, env, opts);
    if (!r.grounded()) continue;
    RankedOption o;
    o.aid = a->aid;
    o.api = a->api_name;
    o.score = r.score;
    o.nl_text = render_with_values(r.final_command, r.values);
    for (std::size_t i = 0; i < r.action_call->slots.size(); ++i)
      o.bindings[r.action_call->slots[i]] = to_display(r.action_call->args[i]);
    o.reduced = r.final_command;
    out.push_back(std::move(o));
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedOption& x, const RankedOption& y) {
    if (std::abs(x.score - y.score) > 1e-12) return x.score > y.score;
    return x.aid < y.aid;
  });
  return out;
}

inline LearnerSession start_session(const std::string& command, const GroundingResult& result,
                                    int max_attempts = 3) {
  LearnerSession s;
  s.original_command = s.current_command = command;
  s.max_attempts = max_attempts;
  if (result.grounded()) {
    s.grounded_aid = result.action_aid();
    std::vector<std::string> args;
    for (std::size_t i = 0; i < result.action_call->slots.size(); ++i)
      args.push_back(result.action_call->slots[i] + "=" + to_display(result.action_call->args[i]));
    s.prompt = "I will run " + result.action_call->api + "(" + text::join(args, ", ") + "). Am I correct? [yes/No]";
  } else {
    s.prompt = "I could not ground this command. Am I correct? [yes/No]";
  }
  return s;
}

namespace detail {

inline void require_state(const LearnerSession& s, LearnerState want) {
  if (s.state != want)
    throw InvalidState("session is " + to_string(s.state) + ", expected " + to_string(want));
}

inline void show_options(LearnerSession& s) {
  s.state = LearnerState::awaiting_choice;
  s.chosen.reset();
  s.prompt = s.options.empty() ? "No action matches. Please rephrase the command."
                               : "Which of these did you mean? Pick one or rephrase.";
}

}  // namespace detail

inline void answer_verification(LearnerSession& s, Answer answer, const Grounder& grounder,
                                const Environment& env) {
  detail::require_state(s, LearnerState::awaiting_verification);
  if (answer != Answer::no) {
    s.state = LearnerState::done_confirmed;
    s.prompt = "Done.";
    return;
  }
  s.options = generate_options(s.current_command, grounder, env);
  detail::show_options(s);
}

inline void choose_option(LearnerSession& s, std::size_t index) {
  detail::require_state(s, LearnerState::awaiting_choice);
  if (index >= s.options.size())
    throw IndexOutOfRange("option " + std::to_string(index) + " of " + std::to_string(s.options.size()));
  s.chosen = index;
  s.state = LearnerState::awaiting_arg_confirm;
  std::vector<std::string> args;
  for (const auto& [k, v] : s.options[index].bindings) args.push_back(k + "=" + v);
  s.prompt = "Are these argument values right: " + text::join(args, ", ") + "? [yes/No]";
}

/// Rejects every option. With a rephrasing, options are regenerated from it
/// unless the attempt budget is spent.
inline void reject_options(LearnerSession& s, const std::optional<std::string>& rephrased, const Grounder& grounder,
                           const Environment& env) {
  detail::require_state(s, LearnerState::awaiting_choice);
  if (!rephrased || text::trim(*rephrased).empty() || s.attempt >= s.max_attempts) {
    s.state = LearnerState::done_failed;
    s.options.clear();
    s.prompt = "Sorry, I could not learn this command.";
    return;
  }
  ++s.attempt;
  s.current_command = *rephrased;
  s.options = generate_options(s.current_command, grounder, env);
  detail::show_options(s);
}

/// Builds the template for option `o`: its reduced command with each variable
/// replaced by the action slot it binds to.
inline AscTemplate learned_template(const RankedOption& o, const Asc& action) {
  std::map<std::string, std::vector<std::string>> slots_by_type;
  for (const auto& s : action.inputs) slots_by_type[s.type].push_back(s.name);
  std::map<std::string, std::size_t> used;
  AscTemplate tpl;
  for (const auto& t : o.reduced.tokens) {
    if (!t.is_var) {
      tpl.tokens.push_back(TemplateToken::word(t.word));
      continue;
    }
    auto& names = slots_by_type[t.var.type];
    auto& k = used[t.var.type];
    if (k >= names.size()) throw ValidationError("reduced command has more " + t.var.type + " values than slots", action.aid);
    tpl.tokens.push_back(TemplateToken::slot(names[k++]));
  }
  return tpl;
}

inline void confirm_arguments(LearnerSession& s, bool confirmed, AscStore& store) {
  detail::require_state(s, LearnerState::awaiting_arg_confirm);
  if (!confirmed) {
    detail::show_options(s);
    return;
  }
  const auto& o = s.options.at(*s.chosen);
  const auto spec = store.snapshot();
  const Asc& action = *spec->find(o.aid);
  auto tpl = learned_template(o, action);
  store.add_template(o.aid, tpl);
  Asc learned = action;
  learned.templates = {tpl};
  learned.templates.front().learned = true;
  s.learned_asc = std::move(learned);
  s.state = LearnerState::done_learned;
  s.prompt = "Learned: " + render_template(*s.learned_asc, s.learned_asc->templates.front());
}

inline nlohmann::json to_json(const RankedOption& o) {
  return {{"aid", o.aid}, {"api", o.api}, {"nl_text", o.nl_text}, {"score", o.score}, {"bindings", o.bindings}};
}

inline nlohmann::json to_json(const LearnerSession& s) {
  nlohmann::json opts = nlohmann::json::array();
  for (const auto& o : s.options) opts.push_back(to_json(o));
  nlohmann::json j = {{"session_id", s.session_id},
                      {"original_command", s.original_command},
                      {"current_command", s.current_command},
                      {"state", to_string(s.state)},
                      {"prompt", s.prompt},
                      {"options", opts},
                      {"attempt", s.attempt},
                      {"max_attempts", s.max_attempts}};
  j["chosen"] = s.chosen ? nlohmann::json(*s.chosen) : nlohmann::json(nullptr);
  j["grounded_aid"] = s.grounded_aid ? nlohmann::json(*s.grounded_aid) : nlohmann::json(nullptr);
  if (s.learned_asc)
    j["learned_asc"] = {{"aid", s.learned_asc->aid},
                        {"api", s.learned_asc->api_name},
                        {"template", render_template(*s.learned_asc, s.learned_asc->templates.front())}};
  else
    j["learned_asc"] = nullptr;
  return j;
}

}  // namespace cmdground
