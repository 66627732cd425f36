#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmdground/environment.hpp"

namespace cmdground {

struct Block {
  int id = 0;
  std::string color;
  std::string shape;
  std::string name;  // empty or one letter A-Z
  Location location;

  bool operator==(const Block&) const = default;
};

class BlocksWorld final : public Environment {
 public:
  static inline const std::vector<std::string> kColors = {"red", "green", "orange", "blue", "yellow"};
  static inline const std::vector<std::string> kShapes = {"triangular", "circular", "cube", "square",
                                                          "rectangular"};

  explicit BlocksWorld(int width = 10, int height = 10) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw BadArgument("grid dimensions must be positive");
  }

  std::string app() const override { return "blocksworld"; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<BlocksWorld>(*this); }
  bool empty() const override { return blocks_.empty(); }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::map<int, Block>& blocks() const { return blocks_; }

  /// Inserts a fully specified block; used for seeding worlds.
  int place(std::string color, std::string shape, Location loc, std::string name = {}) {
    check_bounds(loc);
    check_free(blocks_, loc, -1);
    check_member(color, kColors, "color");
    check_member(shape, kShapes, "shape");
    if (!name.empty()) check_name(blocks_, name, -1);
    const int id = next_id_++;
    blocks_[id] = {id, std::move(color), std::move(shape), std::move(name), loc};
    return id;
  }

  ActionReport execute_action(const std::string& api, const std::vector<Value>& args) override {
    ActionReport report;
    auto next = blocks_;
    if (api == "Add") {
      detail::expect_arity(api, args, 1);
      const auto& loc = expect<Location>(args[0], "location");
      check_bounds(loc);
      check_free(next, loc, -1);
      const int id = next_id_;
      next[id] = {id, kColors.front(), kShapes[3], {}, loc};
      blocks_ = std::move(next);
      ++next_id_;
      return report;
    }
    if (api == "Remove") {
      detail::expect_arity(api, args, 1);
      for (int id : expect<IdSet>(args[0], "block_set")) {
        lookup(next, id);
        next.erase(id);
      }
    } else if (api == "Move") {
      detail::expect_arity(api, args, 2);
      const auto& ids = expect<IdSet>(args[0], "block_set");
      const auto& loc = expect<Location>(args[1], "location");
      if (ids.empty()) return report;
      check_bounds(loc);
      const int first = *ids.begin();
      lookup(next, first);
      check_free(next, loc, first);
      next[first].location = loc;
      for (auto it = std::next(ids.begin()); it != ids.end(); ++it)
        report.notes.push_back("block " + std::to_string(*it) + " not moved: cell " + to_display(loc) +
                               " occupied");
    } else if (api == "MoveByUnits") {
      detail::expect_arity(api, args, 3);
      const auto& ids = expect<IdSet>(args[0], "block_set");
      const auto dir = parse_direction(expect<std::string>(args[1], "direction"));
      const auto units = expect<long long>(args[2], "number");
      for (int id : ids) next[id] = lookup(next, id);
      for (int id : ids) {
        next[id].location = offset(next[id].location, dir, units);
        check_bounds(next[id].location);
      }
      for (int id : ids) {
        for (const auto& [other, b] : next)
          if (other != id && b.location == next[id].location)
            throw CellOccupied("cell " + to_display(b.location) + " is occupied");
      }
    } else if (api == "UpdateColor" || api == "UpdateShape") {
      detail::expect_arity(api, args, 2);
      const auto& ids = expect<IdSet>(args[0], "block_set");
      const auto& v = expect<std::string>(args[1], api == "UpdateColor" ? "color" : "shape");
      check_member(v, api == "UpdateColor" ? kColors : kShapes, api == "UpdateColor" ? "color" : "shape");
      for (int id : ids) {
        lookup(next, id);
        (api == "UpdateColor" ? next[id].color : next[id].shape) = v;
      }
    } else if (api == "Rename") {
      detail::expect_arity(api, args, 2);
      const auto& ids = expect<IdSet>(args[0], "block_set");
      const auto& name = expect<std::string>(args[1], "name");
      if (ids.size() > 1) throw DuplicateName("cannot give name " + name + " to several blocks");
      for (int id : ids) {
        lookup(next, id);
        check_name(next, name, id);
        next[id].name = name;
      }
    } else {
      throw UnknownApi("blocksworld has no action API '" + api + "'");
    }
    blocks_ = std::move(next);
    return report;
  }

  Value execute_utility(const std::string& api, const std::vector<Value>& args) const override {
    if (api == "GetLocation") {
      detail::expect_arity(api, args, 2);
      const auto dir = parse_direction(expect<std::string>(args[0], "direction"));
      const auto& ids = expect<IdSet>(args[1], "block_set");
      if (ids.size() != 1)
        throw AmbiguousReference("GetLocation needs exactly one block, got " + std::to_string(ids.size()));
      const auto loc = offset(lookup(blocks_, *ids.begin()).location, dir, 1);
      check_bounds(loc);
      return loc;
    }
    detail::expect_arity(api, args, 1);
    IdSet out;
    auto collect = [&](auto pred) {
      for (const auto& [id, b] : blocks_)
        if (pred(b)) out.insert(id);
    };
    if (api == "GetBlocksbyColor") {
      const auto& c = expect<std::string>(args[0], "color");
      collect([&](const Block& b) { return b.color == c; });
    } else if (api == "GetBlocksbyShape") {
      const auto& s = expect<std::string>(args[0], "shape");
      collect([&](const Block& b) { return b.shape == s; });
    } else if (api == "GetBlocksbyName") {
      const auto& n = expect<std::string>(args[0], "name");
      collect([&](const Block& b) { return !b.name.empty() && b.name == n; });
    } else if (api == "GetBlocksbyLocation") {
      const auto& l = expect<Location>(args[0], "location");
      collect([&](const Block& b) { return b.location == l; });
    } else {
      throw UnknownApi("blocksworld has no utility API '" + api + "'");
    }
    return out;
  }

  nlohmann::json snapshot() const override {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& [id, b] : blocks_) {
      nlohmann::json jb = {{"id", id}, {"color", b.color}, {"shape", b.shape},
                           {"location", {b.location.x, b.location.y}}};
      if (!b.name.empty()) jb["name"] = b.name;
      blocks.push_back(jb);
    }
    return {{"app", app()}, {"grid", {{"width", width_}, {"height", height_}}},
            {"blocks", blocks}, {"next_id", next_id_}};
  }

  static BlocksWorld from_json(const nlohmann::json& j) {
    int w = 10, h = 10;
    if (j.contains("grid")) {
      w = j.at("grid").value("width", 10);
      h = j.at("grid").value("height", 10);
    }
    BlocksWorld world(w, h);
    for (const auto& jb : j.value("blocks", nlohmann::json::array())) {
      const int id = jb.value("id", world.next_id_);
      Location loc{jb.at("location").at(0).get<int>(), jb.at("location").at(1).get<int>()};
      world.next_id_ = id;
      world.place(jb.value("color", kColors.front()), jb.value("shape", kShapes[3]), loc,
                  jb.value("name", std::string{}));
      world.next_id_ = std::max(world.next_id_, id + 1);
    }
    world.next_id_ = std::max(world.next_id_, j.value("next_id", 1));
    return world;
  }

 private:
  void check_bounds(Location l) const {
    if (l.x < 0 || l.y < 0 || l.x >= width_ || l.y >= height_)
      throw OutOfBounds("cell " + to_display(l) + " is off the grid");
  }
  static void check_free(const std::map<int, Block>& blocks, Location l, int except) {
    for (const auto& [id, b] : blocks)
      if (id != except && b.location == l) throw CellOccupied("cell " + to_display(l) + " is occupied");
  }
  static void check_name(const std::map<int, Block>& blocks, const std::string& name, int except) {
    if (name.size() != 1 || name[0] < 'A' || name[0] > 'Z')
      throw BadArgument("block names are single letters A-Z, got '" + name + "'");
    for (const auto& [id, b] : blocks)
      if (id != except && b.name == name) throw DuplicateName("name " + name + " is taken");
  }
  static void check_member(const std::string& v, const std::vector<std::string>& domain, const char* what) {
    if (std::find(domain.begin(), domain.end(), v) == domain.end())
      throw BadArgument(std::string("unknown ") + what + " '" + v + "'");
  }
  static const Block& lookup(const std::map<int, Block>& blocks, int id) {
    auto it = blocks.find(id);
    if (it == blocks.end()) throw UnknownId("no block with id " + std::to_string(id));
    return it->second;
  }

  int width_;
  int height_;
  std::map<int, Block> blocks_;
  int next_id_ = 1;
};

}  // namespace cmdground
