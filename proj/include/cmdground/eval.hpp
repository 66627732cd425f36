#pragma once

#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdground/environments.hpp"
#include "cmdground/errors.hpp"
#include "cmdground/grounder.hpp"
#include "cmdground/learner.hpp"
#include "cmdground/matcher.hpp"
#include "cmdground/spec_model.hpp"

namespace cmdground {

enum class Category { uc0, uc1, uc2, uc_many, nog };

inline std::string to_string(Category c) {
  switch (c) {
    case Category::uc0: return "0-UC";
    case Category::uc1: return "1-UC";
    case Category::uc2: return "2-UC";
    case Category::uc_many: return ">2-UC";
    case Category::nog: return "NOG";
  }
  return "?";
}

inline Category category_from_string(const std::string& s) {
  for (auto c : {Category::uc0, Category::uc1, Category::uc2, Category::uc_many, Category::nog})
    if (to_string(c) == s) return c;
  throw DatasetError("unknown category '" + s + "'");
}

/// Empty -> NOG; otherwise the number of utility AIDs before the final action.
inline Category categorize(const std::vector<int>& gold_aids) {
  if (gold_aids.empty()) return Category::nog;
  switch (gold_aids.size() - 1) {
    case 0: return Category::uc0;
    case 1: return Category::uc1;
    case 2: return Category::uc2;
    default: return Category::uc_many;
  }
}

struct LabeledCommand {
  std::string text;
  std::vector<int> gold_aids;
  Category category = Category::nog;
  nlohmann::json initial_world;
};

/// Reads one JSON object per line: {text, gold_aids, category, world}.
/// Blank lines and lines starting with '#' are skipped.
inline std::vector<LabeledCommand> parse_dataset(std::string_view src, const AppSpec& spec) {
  std::vector<LabeledCommand> out;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(src, '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(std::string("malformed record: ") + e.what() + where);
    }
    LabeledCommand c;
    try {
      c.text = j.at("text").get<std::string>();
      c.gold_aids = j.at("gold_aids").get<std::vector<int>>();
      c.initial_world = j.value("world", nlohmann::json{{"app", spec.app_name}});
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(std::string("bad record: ") + e.what() + where);
    }
    c.category = categorize(c.gold_aids);
    if (j.contains("category") && category_from_string(j.at("category").get<std::string>()) != c.category)
      throw DatasetError("category does not match gold_aids" + where);
    for (std::size_t i = 0; i < c.gold_aids.size(); ++i) {
      const auto* a = spec.find(c.gold_aids[i]);
      const bool last = i + 1 == c.gold_aids.size();
      if (!a || a->is_action() != last) throw DatasetError("gold_aids must be utilities then one action" + where);
    }
    if (c.initial_world.value("app", spec.app_name) != spec.app_name)
      throw DatasetError("world belongs to another application" + where);
    c.initial_world["app"] = spec.app_name;
    try {
      (void)environment_from_json(c.initial_world);
    } catch (const std::exception& e) {
      throw DatasetError(std::string("unloadable world: ") + e.what() + where);
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<LabeledCommand> load_dataset(const std::filesystem::path& path, const AppSpec& spec) {
  return parse_dataset(read_file(path), spec);
}

/// Matcher backend plus ablation switches, named like "vsm", "vsm-R", "jaccard-U".
struct Variant {
  Backend backend = Backend::vsm;
  bool rephrase = true;
  bool utilities = true;

  std::string label() const {
    return to_string(backend) + (rephrase ? "" : "-R") + (utilities ? "" : "-U");
  }

  static Variant parse(const std::string& name) {
    Variant v;
    auto parts = text::split(name, '-');
    v.backend = backend_from_string(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
      if (parts[i] == "R") v.rephrase = false;
      else if (parts[i] == "U") v.utilities = false;
      else throw Error("unknown variant suffix '-" + parts[i] + "'");
    }
    return v;
  }
};

/// A scripted learner interaction. The simulated user knows the gold action:
/// they confirm a correct grounding, otherwise pick the gold option, and fall
/// back to the next rephrasing when it is absent.
struct LearnerScriptEntry {
  std::string command;
  int gold_aid = 0;
  std::vector<std::string> rephrasings;
  nlohmann::json world;
};

inline std::vector<LearnerScriptEntry> parse_learner_script(std::string_view src, const AppSpec& spec) {
  std::vector<LearnerScriptEntry> out;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(src, '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LearnerScriptEntry e;
      e.command = j.at("command").get<std::string>();
      e.gold_aid = j.at("gold_aid").get<int>();
      e.rephrasings = j.value("rephrasings", std::vector<std::string>{});
      e.world = j.value("world", nlohmann::json{{"app", spec.app_name}});
      e.world["app"] = spec.app_name;
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DatasetError(std::string("bad learner script record: ") + ex.what() + " (line " +
                         std::to_string(lineno) + ")");
    }
  }
  return out;
}

/// Runs one scripted session against `store` and returns its final state.
inline LearnerSession replay_session(const LearnerScriptEntry& e, AscStore& store, const MatchOptions& mopts,
                                     const SynonymLexicon& lexicon,
                                     std::shared_ptr<const EmbeddingTable> table = nullptr) {
  const auto env = environment_from_json(e.world);
  auto spec = store.snapshot();
  Grounder g(*spec, mopts, lexicon, table);
  auto s = start_session(e.command, g.ground(e.command, *env));
  if (s.grounded_aid == e.gold_aid) {
    answer_verification(s, Answer::yes, g, *env);
    return s;
  }
  answer_verification(s, Answer::no, g, *env);
  std::size_t next = 0;
  while (s.state == LearnerState::awaiting_choice) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < s.options.size() && !pick; ++i)
      if (s.options[i].aid == e.gold_aid) pick = i;
    if (pick) {
      choose_option(s, *pick);
      confirm_arguments(s, true, store);
      break;
    }
    std::optional<std::string> rephrased;
    if (next < e.rephrasings.size()) rephrased = e.rephrasings[next++];
    reject_options(s, rephrased, g, *env);
  }
  return s;
}

struct EvalRecord {
  std::string command;
  Category category = Category::nog;
  std::vector<int> predicted;
  std::vector<int> gold;
  bool correct = false;
  bool sequence_match = false;
  double score = 0.0;
};

struct EvalReport {
  std::string variant;
  bool learner = false;
  std::size_t total = 0;
  std::size_t correct = 0;
  double overall_accuracy = 0.0;
  double sequence_accuracy = 0.0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_category;  // correct, total
  std::vector<EvalRecord> records;
  std::vector<std::string> learner_outcomes;

  double accuracy(const std::string& category) const {
    auto it = per_category.find(category);
    if (it == per_category.end() || it->second.second == 0) return 0.0;
    return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  }
};

/// Headline correctness: the predicted action matches the gold action, or
/// both are empty for non-groundable commands.
inline bool is_correct(const std::vector<int>& predicted, const std::vector<int>& gold) {
  if (gold.empty()) return predicted.empty();
  return !predicted.empty() && predicted.back() == gold.back();
}

inline EvalReport evaluate(const std::vector<LabeledCommand>& dataset, AscStore& store, const Variant& variant,
                           const SynonymLexicon& lexicon, std::shared_ptr<const EmbeddingTable> table = nullptr,
                           const std::vector<LearnerScriptEntry>* learner_script = nullptr, double tau = 0.0) {
  MatchOptions mopts;
  mopts.backend = variant.backend;
  mopts.tau = tau;
  EvalReport rep;
  rep.variant = variant.label();
  if (learner_script) {
    rep.learner = true;
    for (const auto& e : *learner_script) {
      const auto s = replay_session(e, store, mopts, lexicon, table);
      rep.learner_outcomes.push_back(e.command + " -> " + to_string(s.state));
    }
  }
  const auto spec = store.snapshot();
  Grounder g(*spec, mopts, lexicon, table);
  GroundOptions gopts;
  gopts.rephrase = variant.rephrase;
  gopts.utilities = variant.utilities;
  std::size_t seq_ok = 0;
  for (const auto& c : dataset) {
    const auto env = environment_from_json(c.initial_world);
    const auto r = g.ground(c.text, *env, gopts);
    EvalRecord rec{c.text, c.category, r.aid_sequence, c.gold_aids, false, false, r.score};
    rec.correct = is_correct(r.aid_sequence, c.gold_aids);
    rec.sequence_match = r.aid_sequence == c.gold_aids;
    auto& cat = rep.per_category[to_string(c.category)];
    ++cat.second;
    if (rec.correct) {
      ++cat.first;
      ++rep.correct;
    }
    seq_ok += rec.sequence_match;
    rep.records.push_back(std::move(rec));
  }
  rep.total = dataset.size();
  if (rep.total) {
    rep.overall_accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.total);
    rep.sequence_accuracy = static_cast<double>(seq_ok) / static_cast<double>(rep.total);
  }
  return rep;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [k, v] : r.per_category)
    cats[k] = {{"correct", v.first}, {"total", v.second}, {"accuracy", r.accuracy(k)}};
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& rec : r.records)
    confusion.push_back({{"command", rec.command},
                         {"category", to_string(rec.category)},
                         {"predicted", rec.predicted},
                         {"gold", rec.gold},
                         {"correct", rec.correct},
                         {"sequence_match", rec.sequence_match}});
  return {{"variant", r.variant},
          {"learner", r.learner},
          {"total", r.total},
          {"correct", r.correct},
          {"overall_accuracy", r.overall_accuracy},
          {"sequence_accuracy", r.sequence_accuracy},
          {"per_category", cats},
          {"learner_outcomes", r.learner_outcomes},
          {"confusion", confusion}};
}

inline std::string format_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "variant " << r.variant << (r.learner ? " + learner" : "") << "\n";
  os << std::left << std::setw(8) << "category" << std::right << std::setw(8) << "n" << std::setw(10) << "acc %"
     << "\n";
  for (const auto* cat : {"0-UC", "1-UC", "2-UC", ">2-UC", "NOG"}) {
    auto it = r.per_category.find(cat);
    if (it == r.per_category.end()) continue;
    os << std::left << std::setw(8) << cat << std::right << std::setw(8) << it->second.second << std::setw(10)
       << 100.0 * r.accuracy(cat) << "\n";
  }
  os << std::left << std::setw(8) << "all" << std::right << std::setw(8) << r.total << std::setw(10)
     << 100.0 * r.overall_accuracy << "\n";
  os << "full AID-sequence match: " << 100.0 * r.sequence_accuracy << " %\n";
  return os.str();
}

}  // namespace cmdground
