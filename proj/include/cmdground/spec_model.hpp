#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cmdground/errors.hpp"
#include "cmdground/text.hpp"

namespace cmdground {

using json = nlohmann::json;

/// Built-in argument type for plain integers.
inline constexpr std::string_view kNumberType = "number";

enum class Scope { object, action };
enum class DomainKind { enumerated, pattern };
enum class AscKind { action, utility };
enum class SlotDirection { input, output };

struct PropertyDomain {
  std::string name;
  Scope scope = Scope::object;
  DomainKind kind = DomainKind::enumerated;
  std::vector<std::string> values;
  // Surface forms that tag as one of `values` ("down" -> "below").
  std::map<std::string, std::string> aliases;
  std::string pattern;
  bool case_sensitive = false;

  std::regex compiled() const {
    auto flags = std::regex::ECMAScript;
    if (!case_sensitive) flags |= std::regex::icase;
    return std::regex(pattern, flags);
  }
};

struct VariableSlot {
  std::string name;
  std::string type;
  bool starred = false;
  SlotDirection direction = SlotDirection::input;

  bool operator==(const VariableSlot&) const = default;
};

/// One template element: a lowercase word, or a reference to an input slot by name.
struct TemplateToken {
  bool is_slot = false;
  std::string text;

  static TemplateToken word(std::string w) { return {false, std::move(w)}; }
  static TemplateToken slot(std::string n) { return {true, std::move(n)}; }
  bool operator==(const TemplateToken&) const = default;
};

struct AscTemplate {
  std::vector<TemplateToken> tokens;
  bool learned = false;

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    for (const auto& t : tokens)
      if (!t.is_slot) out.push_back(t.text);
    return out;
  }
  bool same_tokens(const AscTemplate& o) const { return tokens == o.tokens; }
};

struct Asc {
  int aid = 0;
  AscKind kind = AscKind::action;
  std::string api_name;
  std::vector<AscTemplate> templates;
  std::vector<VariableSlot> inputs;
  std::vector<VariableSlot> outputs;

  bool is_action() const { return kind == AscKind::action; }

  const VariableSlot* input(std::string_view name) const {
    for (const auto& s : inputs)
      if (s.name == name) return &s;
    return nullptr;
  }
  VariableSlot* input(std::string_view name) {
    for (auto& s : inputs)
      if (s.name == name) return &s;
    return nullptr;
  }

  std::multiset<std::string> input_type_multiset() const {
    std::multiset<std::string> out;
    for (const auto& s : inputs) out.insert(s.type);
    return out;
  }
};

struct AppSpec {
  std::string app_name;
  std::vector<PropertyDomain> domains;
  std::vector<std::string> set_types;
  std::vector<std::string> object_nouns;
  std::vector<Asc> ascs;  // ascending AID
  std::optional<std::filesystem::path> synonym_lexicon_path;
  std::optional<std::filesystem::path> embedding_path;

  const Asc* find(int aid) const {
    for (const auto& a : ascs)
      if (a.aid == aid) return &a;
    return nullptr;
  }
  Asc* find(int aid) {
    for (auto& a : ascs)
      if (a.aid == aid) return &a;
    return nullptr;
  }
  const PropertyDomain* domain(std::string_view name) const {
    for (const auto& d : domains)
      if (d.name == name) return &d;
    return nullptr;
  }
  bool is_set_type(std::string_view t) const {
    return std::find(set_types.begin(), set_types.end(), t) != set_types.end();
  }
  bool is_known_type(std::string_view t) const {
    return t == kNumberType || domain(t) != nullptr || is_set_type(t);
  }
  bool is_object_noun(std::string_view w) const {
    return std::find(object_nouns.begin(), object_nouns.end(), w) != object_nouns.end();
  }
  std::vector<const Asc*> of_kind(AscKind k) const {
    std::vector<const Asc*> out;
    for (const auto& a : ascs)
      if (a.kind == k) out.push_back(&a);
    return out;
  }
  std::vector<const Asc*> actions() const { return of_kind(AscKind::action); }
  std::vector<const Asc*> utilities() const { return of_kind(AscKind::utility); }
};

// ---------------------------------------------------------------------------
// Templates

/// Parses "move {X1:block_set} to {X2:location}". A trailing '*' on a slot
/// type is accepted and dropped; stars are always recomputed by the marker.
inline AscTemplate parse_template(std::string_view src,
                                  std::vector<std::pair<std::string, std::string>>* slot_types = nullptr,
                                  int aid = 0) {
  AscTemplate tpl;
  std::size_t i = 0;
  while (i < src.size()) {
    auto open = src.find('{', i);
    auto chunk = src.substr(i, open == std::string_view::npos ? std::string_view::npos : open - i);
    for (auto& w : text::words(chunk)) tpl.tokens.push_back(TemplateToken::word(std::move(w)));
    if (open == std::string_view::npos) break;
    auto close = src.find('}', open);
    if (close == std::string_view::npos)
      throw ValidationError("unterminated slot in template '" + std::string(src) + "'", aid);
    std::string body(src.substr(open + 1, close - open - 1));
    auto colon = body.find(':');
    if (colon == std::string::npos)
      throw ValidationError("slot '" + body + "' lacks a type", aid);
    std::string name = text::trim(body.substr(0, colon));
    std::string type = text::trim(body.substr(colon + 1));
    if (!type.empty() && type.back() == '*') type = text::trim(type.substr(0, type.size() - 1));
    if (name.empty() || type.empty())
      throw ValidationError("malformed slot '{" + body + "}'", aid);
    tpl.tokens.push_back(TemplateToken::slot(name));
    if (slot_types) slot_types->emplace_back(name, type);
    i = close + 1;
  }
  return tpl;
}

/// Inverse of parse_template, using the owning ASC for slot types.
inline std::string render_template(const Asc& asc, const AscTemplate& tpl) {
  std::vector<std::string> parts;
  for (const auto& t : tpl.tokens) {
    if (!t.is_slot) {
      parts.push_back(t.text);
      continue;
    }
    const auto* s = asc.input(t.text);
    parts.push_back("{" + t.text + ":" + (s ? s->type : std::string("?")) + "}");
  }
  return text::join(parts, " ");
}

/// Input-slot types of `tpl` in left-to-right template order.
inline std::vector<std::string> type_sequence(const Asc& asc, const AscTemplate& tpl) {
  std::vector<std::string> out;
  for (const auto& t : tpl.tokens) {
    if (!t.is_slot) continue;
    if (const auto* s = asc.input(t.text)) out.push_back(s->type);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_template(const AppSpec& spec, const Asc& asc, const AscTemplate& tpl) {
  (void)spec;
  if (tpl.tokens.empty()) throw ValidationError("empty template", asc.aid);
  std::map<std::string, int> seen;
  for (const auto& t : tpl.tokens) {
    if (!t.is_slot) continue;
    if (!asc.input(t.text))
      throw ValidationError("template uses undeclared slot " + t.text, asc.aid);
    if (++seen[t.text] > 1)
      throw ValidationError("slot " + t.text + " appears twice in a template", asc.aid);
  }
  for (const auto& s : asc.inputs)
    if (!seen.count(s.name))
      throw ValidationError("template omits declared slot " + s.name, asc.aid);
}

inline void validate(const AppSpec& spec) {
  if (spec.app_name.empty()) throw ValidationError("missing app name");
  std::set<std::string> domain_names;
  for (const auto& d : spec.domains) {
    if (!domain_names.insert(d.name).second)
      throw ValidationError("duplicate domain '" + d.name + "'");
    if (d.name == kNumberType) throw ValidationError("'number' is built in");
    if (d.kind == DomainKind::enumerated) {
      if (d.values.empty()) throw ValidationError("domain '" + d.name + "' has no values");
      std::set<std::string> uniq(d.values.begin(), d.values.end());
      if (uniq.size() != d.values.size())
        throw ValidationError("domain '" + d.name + "' has duplicate values");
      for (const auto& [alias, target] : d.aliases)
        if (!uniq.count(target))
          throw ValidationError("alias '" + alias + "' of domain '" + d.name +
                                "' targets unknown value '" + target + "'");
    } else {
      try {
        (void)d.compiled();
      } catch (const std::regex_error& e) {
        throw ValidationError("domain '" + d.name + "' pattern does not compile: " + e.what());
      }
    }
  }
  std::set<int> aids;
  bool any_action = false;
  for (const auto& a : spec.ascs) {
    if (a.aid <= 0) throw ValidationError("AID must be positive", a.aid);
    if (!aids.insert(a.aid).second) throw ValidationError("duplicate AID", a.aid);
    if (a.api_name.empty()) throw ValidationError("missing api name", a.aid);
    if (a.templates.empty()) throw ValidationError("no templates", a.aid);
    std::set<std::string> names;
    for (const auto& s : a.inputs) {
      if (!names.insert(s.name).second) throw ValidationError("duplicate slot " + s.name, a.aid);
      if (!spec.is_known_type(s.type))
        throw ValidationError("undeclared type '" + s.type + "'", a.aid);
      if (s.starred && !a.is_action())
        throw ValidationError("utility slots cannot carry constraints", a.aid);
    }
    for (const auto& s : a.outputs) {
      if (!names.insert(s.name).second) throw ValidationError("duplicate slot " + s.name, a.aid);
      if (!spec.is_known_type(s.type))
        throw ValidationError("undeclared type '" + s.type + "'", a.aid);
    }
    if (a.is_action()) {
      any_action = true;
      if (!a.outputs.empty()) throw ValidationError("action ASCs have no outputs", a.aid);
    } else if (a.outputs.empty()) {
      throw ValidationError("utility ASC needs an output", a.aid);
    }
    for (const auto& t : a.templates) validate_template(spec, a, t);
  }
  if (!any_action) throw ValidationError("spec defines no action ASC");
}

// ---------------------------------------------------------------------------
// Utility constraint marking

/// Positions in `a` of a longest common subsequence of `u` and `a`. When several
/// alignments exist, each element of `u` takes the earliest feasible position.
inline std::vector<std::size_t> lcs_alignment(const std::vector<std::string>& u,
                                              const std::vector<std::string>& a) {
  const std::size_t n = u.size(), m = a.size();
  // suffix[i][j] = |LCS(u[i..], a[j..])|
  std::vector<std::vector<std::size_t>> suffix(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      suffix[i][j] = u[i] == a[j] ? suffix[i + 1][j + 1] + 1
                                  : std::max(suffix[i + 1][j], suffix[i][j + 1]);
  std::vector<std::size_t> out;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (u[i] == a[j] && suffix[i][j] == suffix[i + 1][j + 1] + 1) {
      out.push_back(j);
      ++i;
      ++j;
    } else if (suffix[i + 1][j] == suffix[i][j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

/// Recomputes every `starred` flag: an action slot is starred when some utility
/// template's full type sequence embeds (as an LCS) in one of the action's
/// template type sequences at that slot's position.
inline AppSpec mark_utility_constraints(AppSpec spec) {
  for (auto& a : spec.ascs)
    for (auto& s : a.inputs) s.starred = false;
  const auto utilities = spec.utilities();
  std::vector<std::vector<std::string>> useqs;
  for (const auto* u : utilities)
    for (const auto& t : u->templates) useqs.push_back(type_sequence(*u, t));

  for (auto& a : spec.ascs) {
    if (!a.is_action()) continue;
    for (const auto& tpl : a.templates) {
      const auto aseq = type_sequence(a, tpl);
      std::vector<std::string> slot_at;  // slot name at each aseq position
      for (const auto& t : tpl.tokens)
        if (t.is_slot) slot_at.push_back(t.text);
      for (const auto& useq : useqs) {
        if (useq.empty()) continue;
        const auto pos = lcs_alignment(useq, aseq);
        if (pos.size() != useq.size()) continue;
        for (auto p : pos) a.input(slot_at[p])->starred = true;
      }
    }
  }
  return spec;
}

/// Starred slots as "AID:Xi" strings, sorted by AID then slot name.
inline std::vector<std::string> starred_slots(const AppSpec& spec) {
  std::vector<std::string> out;
  for (const auto& a : spec.ascs)
    for (const auto& s : a.inputs)
      if (s.starred) out.push_back(std::to_string(a.aid) + ":" + s.name);
  return out;
}

// ---------------------------------------------------------------------------
// Spec document

namespace detail {

inline std::size_t line_of(std::string_view src, std::size_t byte) {
  byte = std::min(byte, src.size());
  return 1 + static_cast<std::size_t>(std::count(src.begin(), src.begin() + byte, '\n'));
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw SyntaxError("missing key '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw SyntaxError("'" + std::string(key) + "' must be a string in " + where);
  return v.get<std::string>();
}

inline int slot_order(const std::string& name) {
  std::size_t i = 0;
  while (i < name.size() && !std::isdigit(static_cast<unsigned char>(name[i]))) ++i;
  return i < name.size() ? std::atoi(name.c_str() + i) : 0;
}

inline std::vector<VariableSlot> parse_slots(const json& obj, SlotDirection dir,
                                             const std::string& where) {
  if (!obj.is_object()) throw SyntaxError("slot map must be an object in " + where);
  std::vector<VariableSlot> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!it.value().is_string()) throw SyntaxError("slot type must be a string in " + where);
    std::string type = it.value().get<std::string>();
    if (!type.empty() && type.back() == '*') type.pop_back();
    out.push_back({it.key(), type, false, dir});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return slot_order(x.name) < slot_order(y.name);
  });
  return out;
}

}  // namespace detail

/// Reads one ASC entry ({aid, api, templates, args[, outputs]}).
inline Asc parse_asc_entry(const json& e, AscKind kind) {
  const std::string where = "ASC entry";
  if (!e.is_object()) throw SyntaxError("ASC entry must be an object");
  Asc asc;
  asc.kind = kind;
  const auto& aid = detail::require(e, "aid", where);
  if (!aid.is_number_integer()) throw SyntaxError("'aid' must be an integer");
  asc.aid = aid.get<int>();
  asc.api_name = detail::require_string(e, "api", where);
  asc.inputs = detail::parse_slots(detail::require(e, "args", where), SlotDirection::input, where);
  if (e.contains("outputs"))
    asc.outputs = detail::parse_slots(e.at("outputs"), SlotDirection::output, where);
  const auto& tpls = detail::require(e, "templates", where);
  if (!tpls.is_array()) throw SyntaxError("'templates' must be a list");
  for (const auto& t : tpls) {
    if (!t.is_string()) throw SyntaxError("template must be a string");
    std::vector<std::pair<std::string, std::string>> slot_types;
    auto tpl = parse_template(t.get<std::string>(), &slot_types, asc.aid);
    for (const auto& [name, type] : slot_types) {
      const auto* s = asc.input(name);
      if (s && s->type != type)
        throw ValidationError("slot " + name + " typed '" + type + "' but declared '" +
                                  s->type + "'",
                              asc.aid);
    }
    if (e.value("learned", false)) tpl.learned = true;
    asc.templates.push_back(std::move(tpl));
  }
  return asc;
}

inline json asc_entry_to_json(const Asc& asc, const std::vector<AscTemplate>& templates) {
  json args = json::object();
  for (const auto& s : asc.inputs) args[s.name] = s.type;
  json tpls = json::array();
  for (const auto& t : templates) tpls.push_back(render_template(asc, t));
  json e = {{"aid", asc.aid}, {"api", asc.api_name}, {"templates", tpls}, {"args", args}};
  if (!asc.outputs.empty()) {
    json outs = json::object();
    for (const auto& s : asc.outputs) outs[s.name] = s.type;
    e["outputs"] = outs;
  }
  return e;
}

/// Parses and validates a spec document, then runs the constraint marker.
/// Relative lexicon/embedding paths resolve against `base_dir`.
inline AppSpec parse_spec(std::string_view source, const std::filesystem::path& base_dir = {}) {
  if (text::trim(source).empty()) throw SyntaxError("empty spec document", 1);
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("malformed spec document: ") + e.what(),
                      detail::line_of(source, e.byte ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw SyntaxError("spec document must be an object", 1);

  AppSpec spec;
  spec.app_name = detail::require_string(doc, "app", "spec");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (doc.contains("synonym_lexicon"))
    spec.synonym_lexicon_path = resolve(doc.at("synonym_lexicon").get<std::string>());
  if (doc.contains("embeddings")) spec.embedding_path = resolve(doc.at("embeddings").get<std::string>());
  if (doc.contains("set_types")) spec.set_types = doc.at("set_types").get<std::vector<std::string>>();
  if (doc.contains("object_nouns"))
    spec.object_nouns = doc.at("object_nouns").get<std::vector<std::string>>();

  const auto& domains = detail::require(doc, "domains", "spec");
  if (!domains.is_array()) throw SyntaxError("'domains' must be a list");
  for (const auto& d : domains) {
    PropertyDomain pd;
    pd.name = detail::require_string(d, "name", "domain");
    const auto scope = d.value("scope", std::string("object"));
    if (scope != "object" && scope != "action")
      throw SyntaxError("domain '" + pd.name + "' has unknown scope '" + scope + "'");
    pd.scope = scope == "action" ? Scope::action : Scope::object;
    if (d.contains("values")) {
      pd.kind = DomainKind::enumerated;
      for (const auto& v : d.at("values")) pd.values.push_back(text::to_lower(v.get<std::string>()));
      if (d.contains("aliases"))
        for (auto it = d.at("aliases").begin(); it != d.at("aliases").end(); ++it)
          pd.aliases[text::to_lower(it.key())] = text::to_lower(it.value().get<std::string>());
    } else if (d.contains("pattern")) {
      pd.kind = DomainKind::pattern;
      pd.pattern = d.at("pattern").get<std::string>();
      pd.case_sensitive = d.value("case_sensitive", false);
    } else {
      throw SyntaxError("domain '" + pd.name + "' needs 'values' or 'pattern'");
    }
    spec.domains.push_back(std::move(pd));
  }

  for (auto [key, kind] : {std::pair{"action_ascs", AscKind::action},
                           std::pair{"utility_ascs", AscKind::utility}}) {
    if (!doc.contains(key)) continue;
    if (!doc.at(key).is_array()) throw SyntaxError("'" + std::string(key) + "' must be a list");
    for (const auto& e : doc.at(key)) spec.ascs.push_back(parse_asc_entry(e, kind));
  }
  std::stable_sort(spec.ascs.begin(), spec.ascs.end(),
                   [](const Asc& x, const Asc& y) { return x.aid < y.aid; });
  validate(spec);
  return mark_utility_constraints(std::move(spec));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline AppSpec load_spec_file(const std::filesystem::path& path) {
  return parse_spec(read_file(path), path.parent_path());
}

}  // namespace cmdground
