#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cmdground/environment.hpp"
#include "cmdground/text.hpp"

namespace cmdground {

struct PageElement {
  int id = 0;
  std::string type;
  Location location;
  std::string color = "black";
  std::string text;
  std::string font_size = "medium";
  long long height = 10;
  long long width = 10;
  std::string name;      // "title 1"
  std::string filename;  // images only, may be empty

  bool operator==(const PageElement&) const = default;
};

class Page final : public Environment {
 public:
  static inline const std::vector<std::string> kTypes = {"image", "button", "title", "paragraph"};
  static inline const std::vector<std::string> kColors = {"red", "green", "brown", "blue", "black"};
  static inline const std::vector<std::string> kFontSizes = {"small", "medium", "large"};

  explicit Page(int width = 100, int height = 100) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw BadArgument("canvas dimensions must be positive");
  }

  std::string app() const override { return "webpage"; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<Page>(*this); }
  bool empty() const override { return elements_.empty(); }
  const std::map<int, PageElement>& elements() const { return elements_; }

  /// Adds an element and returns its id; used for seeding pages.
  int place(PageElement e) {
    check_member(e.type, kTypes, "type");
    check_member(e.color, kColors, "color");
    check_member(e.font_size, kFontSizes, "font size");
    check_bounds(e.location);
    e.id = next_id_++;
    if (e.name.empty()) e.name = next_name(elements_, e.type);
    elements_[e.id] = e;
    return e.id;
  }

  ActionReport execute_action(const std::string& api, const std::vector<Value>& args) override {
    auto next = elements_;
    auto each = [&](const Value& v, auto fn) {
      for (int id : expect<IdSet>(v, "element_set")) fn(lookup(next, id));
    };
    if (api == "Add") {
      detail::expect_arity(api, args, 2);
      PageElement e;
      e.type = expect<std::string>(args[0], "type");
      e.location = expect<Location>(args[1], "location");
      place(std::move(e));
      return {};
    }
    if (api == "Write") {
      detail::expect_arity(api, args, 2);
      const auto& t = expect<std::string>(args[0], "text");
      each(args[1], [&](PageElement& e) { e.text = t; });
    } else if (api == "Remove") {
      detail::expect_arity(api, args, 1);
      for (int id : expect<IdSet>(args[0], "element_set")) {
        lookup(next, id);
        next.erase(id);
      }
    } else if (api == "Move") {
      detail::expect_arity(api, args, 2);
      const auto& loc = expect<Location>(args[1], "location");
      check_bounds(loc);
      each(args[0], [&](PageElement& e) { e.location = loc; });
    } else if (api == "MoveByUnits") {
      detail::expect_arity(api, args, 3);
      const auto dir = parse_direction(expect<std::string>(args[1], "direction"));
      const auto units = expect<long long>(args[2], "number");
      each(args[0], [&](PageElement& e) {
        e.location = offset(e.location, dir, units);
        check_bounds(e.location);
      });
    } else if (api == "UpdateColor") {
      detail::expect_arity(api, args, 2);
      const auto& c = expect<std::string>(args[1], "color");
      check_member(c, kColors, "color");
      each(args[0], [&](PageElement& e) { e.color = c; });
    } else if (api == "UpdateFont") {
      detail::expect_arity(api, args, 2);
      const auto& f = expect<std::string>(args[1], "font_size");
      check_member(f, kFontSizes, "font size");
      each(args[0], [&](PageElement& e) { e.font_size = f; });
    } else if (api == "SetGraphicsSize" || api == "IncreaseSize" || api == "DecreaseSize") {
      detail::expect_arity(api, args, 3);
      const auto& dim = expect<std::string>(args[0], "graphics_size");
      if (dim != "height" && dim != "width") throw BadArgument("unknown graphics size '" + dim + "'");
      const auto n = expect<long long>(args[2], "number");
      each(args[1], [&](PageElement& e) {
        auto& field = dim == "height" ? e.height : e.width;
        const long long v = api == "SetGraphicsSize" ? n : api == "IncreaseSize" ? field + n : field - n;
        if (v < 0) throw OutOfBounds(dim + " of " + e.name + " would become negative");
        field = v;
      });
    } else {
      throw UnknownApi("webpage has no action API '" + api + "'");
    }
    elements_ = std::move(next);
    return {};
  }

  Value execute_utility(const std::string& api, const std::vector<Value>& args) const override {
    if (api == "GetLocation") {
      detail::expect_arity(api, args, 2);
      const auto dir = parse_direction(expect<std::string>(args[0], "direction"));
      const auto& ids = expect<IdSet>(args[1], "element_set");
      if (ids.size() != 1)
        throw AmbiguousReference("GetLocation needs exactly one element, got " + std::to_string(ids.size()));
      auto copy = elements_;
      const auto loc = offset(lookup(copy, *ids.begin()).location, dir, 1);
      check_bounds(loc);
      return loc;
    }
    IdSet out;
    auto collect = [&](auto pred) {
      for (const auto& [id, e] : elements_)
        if (pred(e)) out.insert(id);
    };
    if (api == "GetElementbyGraphicsSize") {
      detail::expect_arity(api, args, 2);
      const auto& dim = expect<std::string>(args[0], "graphics_size");
      const auto n = expect<long long>(args[1], "number");
      collect([&](const PageElement& e) { return (dim == "height" ? e.height : e.width) == n; });
      return out;
    }
    detail::expect_arity(api, args, 1);
    if (api == "GetElementbyLocation") {
      const auto& l = expect<Location>(args[0], "location");
      collect([&](const PageElement& e) { return e.location == l; });
    } else if (api == "GetElementbyType") {
      const auto& t = expect<std::string>(args[0], "type");
      collect([&](const PageElement& e) { return e.type == t; });
    } else if (api == "GetElementbyFont") {
      const auto& f = expect<std::string>(args[0], "font_size");
      collect([&](const PageElement& e) { return e.font_size == f; });
    } else if (api == "GetElementbyColor") {
      const auto& c = expect<std::string>(args[0], "color");
      collect([&](const PageElement& e) { return e.color == c; });
    } else if (api == "GetElementbyText") {
      const auto t = text::to_lower(expect<std::string>(args[0], "text"));
      collect([&](const PageElement& e) { return text::to_lower(e.text) == t; });
    } else if (api == "GetElementbyName") {
      const auto n = normalize_name(expect<std::string>(args[0], "name"));
      collect([&](const PageElement& e) {
        return normalize_name(e.name) == n || (!e.filename.empty() && text::to_lower(e.filename) == n);
      });
    } else {
      throw UnknownApi("webpage has no utility API '" + api + "'");
    }
    return out;
  }

  nlohmann::json snapshot() const override {
    nlohmann::json els = nlohmann::json::array();
    for (const auto& [id, e] : elements_) {
      nlohmann::json je = {{"id", id},
                           {"type", e.type},
                           {"name", e.name},
                           {"location", {e.location.x, e.location.y}},
                           {"color", e.color},
                           {"text", e.text},
                           {"font_size", e.font_size},
                           {"height", e.height},
                           {"width", e.width}};
      if (!e.filename.empty()) je["filename"] = e.filename;
      els.push_back(je);
    }
    return {{"app", app()}, {"canvas", {{"width", width_}, {"height", height_}}},
            {"elements", els}, {"next_id", next_id_}};
  }

  static Page from_json(const nlohmann::json& j) {
    int w = 100, h = 100;
    if (j.contains("canvas")) {
      w = j.at("canvas").value("width", 100);
      h = j.at("canvas").value("height", 100);
    }
    Page page(w, h);
    for (const auto& je : j.value("elements", nlohmann::json::array())) {
      PageElement e;
      e.type = je.at("type").get<std::string>();
      e.location = {je.at("location").at(0).get<int>(), je.at("location").at(1).get<int>()};
      e.color = je.value("color", e.color);
      e.text = je.value("text", e.text);
      e.font_size = je.value("font_size", e.font_size);
      e.height = je.value("height", e.height);
      e.width = je.value("width", e.width);
      e.name = je.value("name", std::string{});
      e.filename = je.value("filename", std::string{});
      const int id = je.value("id", page.next_id_);
      page.next_id_ = id;
      page.place(std::move(e));
      page.next_id_ = std::max(page.next_id_, id + 1);
    }
    page.next_id_ = std::max(page.next_id_, j.value("next_id", 1));
    return page;
  }

 private:
  static std::string normalize_name(const std::string& s) { return text::join(text::split(text::to_lower(text::trim(s)), ' '), " "); }

  static std::string next_name(const std::map<int, PageElement>& els, const std::string& type) {
    int n = 0;
    for (const auto& [_, e] : els) {
      if (e.type != type) continue;
      auto pos = e.name.rfind(' ');
      if (pos != std::string::npos) n = std::max(n, std::atoi(e.name.c_str() + pos + 1));
    }
    return type + " " + std::to_string(n + 1);
  }
  void check_bounds(Location l) const {
    if (l.x < 0 || l.y < 0 || l.x >= width_ || l.y >= height_)
      throw OutOfBounds("location " + to_display(l) + " is off the canvas");
  }
  static void check_member(const std::string& v, const std::vector<std::string>& domain, const char* what) {
    if (std::find(domain.begin(), domain.end(), v) == domain.end())
      throw BadArgument(std::string("unknown ") + what + " '" + v + "'");
  }
  static PageElement& lookup(std::map<int, PageElement>& els, int id) {
    auto it = els.find(id);
    if (it == els.end()) throw UnknownId("no element with id " + std::to_string(id));
    return it->second;
  }

  int width_;
  int height_;
  std::map<int, PageElement> elements_;
  int next_id_ = 1;
};

}  // namespace cmdground
