#pragma once

#include <compare>
#include <regex>
#include <set>
#include <string>
#include <variant>

#include <json.hpp>

#include "cmdground/errors.hpp"
#include "cmdground/spec_model.hpp"

namespace cmdground {

struct Location {
  int x = 0;
  int y = 0;
  auto operator<=>(const Location&) const = default;
};

using IdSet = std::set<int>;

/// Runtime argument or utility result.
using Value = std::variant<std::string, long long, Location, IdSet>;

inline std::string to_display(const Location& l) {
  return "(" + std::to_string(l.x) + ", " + std::to_string(l.y) + ")";
}

inline std::string to_display(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) return x;
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, Location>) return to_display(x);
        else {
          std::string s = "{";
          bool first = true;
          for (int id : x) {
            s += (first ? "" : ", ") + std::to_string(id);
            first = false;
          }
          return s + "}";
        }
      },
      v);
}

inline nlohmann::json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Location>) return nlohmann::json::array({x.x, x.y});
        else if constexpr (std::is_same_v<T, IdSet>) return nlohmann::json(std::vector<int>(x.begin(), x.end()));
        else return nlohmann::json(x);
      },
      v);
}

inline Location parse_location(const std::string& s) {
  static const std::regex re(R"(\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\))");
  std::smatch m;
  if (!std::regex_search(s, m, re)) throw BadArgument("not a location: '" + s + "'");
  return {std::stoi(m[1]), std::stoi(m[2])};
}

/// Converts a captured literal to the runtime value its argument type expects.
inline Value literal_value(const std::string& type, const std::string& literal) {
  if (type == "location") return parse_location(literal);
  if (type == kNumberType) {
    try {
      return static_cast<long long>(std::stoll(literal));
    } catch (const std::exception&) {
      throw BadArgument("not a number: '" + literal + "'");
    }
  }
  if (type == "text" && literal.size() >= 2 && literal.front() == '"' && literal.back() == '"')
    return literal.substr(1, literal.size() - 2);
  return literal;
}

template <typename T>
const T& expect(const Value& v, const char* what) {
  if (const auto* p = std::get_if<T>(&v)) return *p;
  throw BadArgument(std::string("argument is not a ") + what + ": " + to_display(v));
}

}  // namespace cmdground
