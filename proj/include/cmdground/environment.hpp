#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdground/value.hpp"

namespace cmdground {

/// Side notes from an action that succeeded only in part.
struct ActionReport {
  std::vector<std::string> notes;
};

/// An application state machine exposing action and utility APIs by name.
/// Arguments are positional in declared slot order (X1, X2, ...).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string app() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  /// Mutates state. Throws an EnvironmentError and leaves state untouched on failure.
  virtual ActionReport execute_action(const std::string& api, const std::vector<Value>& args) = 0;

  /// Read-only query.
  virtual Value execute_utility(const std::string& api, const std::vector<Value>& args) const = 0;

  virtual nlohmann::json snapshot() const = 0;

  virtual bool empty() const = 0;
};

enum class Direction { left, right, above, below };

inline Direction parse_direction(const std::string& s) {
  if (s == "left") return Direction::left;
  if (s == "right") return Direction::right;
  if (s == "above") return Direction::above;
  if (s == "below") return Direction::below;
  throw BadArgument("unknown direction '" + s + "'");
}

/// Screen-style grid, origin top-left: left = -x, right = +x, above = -y, below = +y.
inline Location offset(Location l, Direction d, long long units) {
  const int n = static_cast<int>(units);
  switch (d) {
    case Direction::left: return {l.x - n, l.y};
    case Direction::right: return {l.x + n, l.y};
    case Direction::above: return {l.x, l.y - n};
    case Direction::below: return {l.x, l.y + n};
  }
  return l;
}

namespace detail {

inline void expect_arity(const std::string& api, const std::vector<Value>& args, std::size_t n) {
  if (args.size() != n)
    throw BadArgument(api + " takes " + std::to_string(n) + " argument(s), got " +
                      std::to_string(args.size()));
}

}  // namespace detail

}  // namespace cmdground
