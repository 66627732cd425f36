#pragma once

#include <memory>
#include <string>

#include "cmdground/blocks_world.hpp"
#include "cmdground/webpage.hpp"

namespace cmdground {

/// Builds the environment named by a snapshot's "app" field.
inline std::unique_ptr<Environment> environment_from_json(const nlohmann::json& j) {
  const auto app = j.value("app", std::string{});
  if (app == "webpage") return std::make_unique<Page>(Page::from_json(j));
  if (app == "blocksworld") return std::make_unique<BlocksWorld>(BlocksWorld::from_json(j));
  throw BadArgument("unknown application '" + app + "'");
}

inline std::unique_ptr<Environment> make_environment(const std::string& app) {
  return environment_from_json(nlohmann::json{{"app", app}});
}

}  // namespace cmdground
