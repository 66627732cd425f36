#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
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

inline constexpr int kSchemaVersion = 1;

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

/// One loaded application: its ASC store and the resources grounding needs.
struct SpecEntry {
  std::string name;
  std::unique_ptr<AscStore> store;
  SynonymLexicon lexicon;
  std::shared_ptr<const EmbeddingTable> embeddings;
};

struct ServiceOptions {
  std::chrono::seconds idle_expiry{30 * 60};
  int max_attempts = 3;
  MatchOptions match;
};

/// Request router independent of any HTTP library. Bodies are JSON; every
/// response carries "schema_version".
class Service {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit Service(ServiceOptions opts = {}, Clock clock = [] { return std::chrono::steady_clock::now(); })
      : opts_(opts), clock_(std::move(clock)) {}

  void add_spec(const std::string& name, std::unique_ptr<AscStore> store) {
    auto e = std::make_unique<SpecEntry>();
    e->name = name;
    const auto spec = store->snapshot();
    e->lexicon = load_lexicon_for(*spec);
    if (spec->embedding_path && std::filesystem::exists(*spec->embedding_path))
      e->embeddings = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(*spec->embedding_path));
    e->store = std::move(store);
    std::lock_guard lock(mu_);
    specs_[name] = std::move(e);
  }

  /// Registers every "*.json" spec in `dir` under its file stem.
  void load_spec_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
      const auto p = f.path();
      if (p.extension() == ".json" && p.stem().extension().empty()) files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) add_spec(p.stem().string(), AscStore::open(p));
  }

  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body) {
    try {
      nlohmann::json req = body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
      if (!req.is_object()) throw BadRequest("request body must be an object");
      auto res = route(method, path, req);
      res.body["schema_version"] = kSchemaVersion;
      return res;
    } catch (const nlohmann::json::exception& e) {
      return error(400, "BadRequest", e.what());
    } catch (const BadRequest& e) {
      return error(400, "BadRequest", e.what());
    } catch (const NotFound& e) {
      return error(404, "NotFound", e.what());
    } catch (const UnknownSession& e) {
      return error(404, "UnknownSession", e.what());
    } catch (const UnknownSpec& e) {
      return error(404, "UnknownSpec", e.what());
    } catch (const InvalidState& e) {
      return error(409, "InvalidState", e.what());
    } catch (const IndexOutOfRange& e) {
      return error(400, "IndexOutOfRange", e.what());
    } catch (const EmptyCommand& e) {
      return error(400, "EmptyCommand", e.what());
    } catch (const Error& e) {
      return error(400, "Error", e.what());
    }
  }

  std::size_t session_count() {
    std::lock_guard lock(mu_);
    expire_locked();
    return sessions_.size();
  }

 private:
  class BadRequest : public Error {
   public:
    using Error::Error;
  };
  class NotFound : public Error {
   public:
    using Error::Error;
  };

  struct Session {
    std::string id;
    SpecEntry* spec = nullptr;
    std::unique_ptr<Environment> env;
    std::uint64_t version = 0;
    std::optional<LearnerSession> learner;
    std::chrono::steady_clock::time_point last_used;
    std::mutex mu;
  };

  static HttpResponse error(int status, const std::string& type, const std::string& message) {
    return {status, {{"schema_version", kSchemaVersion}, {"error", {{"type", type}, {"message", message}}}}};
  }

  HttpResponse route(const std::string& method, const std::string& path, const nlohmann::json& req) {
    static const std::regex session_re(R"(^/sessions/([A-Za-z0-9_-]+)(/.*)?$)");
    if (path == "/specs" && method == "GET") return list_specs();
    if (path == "/sessions" && method == "POST") return create_session(req);
    std::smatch m;
    if (std::regex_match(path, m, session_re)) {
      auto session = find_session(m[1]);
      std::lock_guard lock(session->mu);
      const std::string rest = m[2];
      if (rest == "/ground" && method == "POST") return ground(*session, req);
      if (rest == "/state" && method == "GET") return state(*session);
      if (rest.rfind("/learner/", 0) == 0 && (method == "POST" || method == "GET"))
        return learner(*session, rest.substr(9), req);
    }
    throw NotFound(method + " " + path);
  }

  HttpResponse list_specs() {
    std::lock_guard lock(mu_);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [name, e] : specs_) {
      const auto spec = e->store->snapshot();
      list.push_back({{"name", name},
                      {"app", spec->app_name},
                      {"actions", spec->actions().size()},
                      {"utilities", spec->utilities().size()},
                      {"learned_templates", e->store->learned_count()}});
    }
    return {200, {{"specs", list}}};
  }

  HttpResponse create_session(const nlohmann::json& req) {
    const auto name = req.value("spec", std::string{});
    std::lock_guard lock(mu_);
    expire_locked();
    auto it = specs_.find(name);
    if (it == specs_.end()) throw UnknownSpec("no spec named '" + name + "'");
    auto s = std::make_shared<Session>();
    s->id = "s" + std::to_string(++next_id_);
    s->spec = it->second.get();
    const auto app = s->spec->store->snapshot()->app_name;
    if (req.contains("world")) {
      auto w = req.at("world");
      w["app"] = app;
      s->env = environment_from_json(w);
    } else {
      s->env = make_environment(app);
    }
    s->last_used = clock_();
    sessions_[s->id] = s;
    return {201, {{"session_id", s->id}, {"app", app}, {"version", s->version}, {"state", s->env->snapshot()}}};
  }

  std::shared_ptr<Session> find_session(const std::string& id) {
    std::lock_guard lock(mu_);
    expire_locked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSession("no session '" + id + "'");
    it->second->last_used = clock_();
    return it->second;
  }

  void expire_locked() {
    const auto now = clock_();
    std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > opts_.idle_expiry; });
  }

  Grounder make_grounder(const Session& s, const nlohmann::json& req, std::shared_ptr<const AppSpec>& keep) const {
    keep = s.spec->store->snapshot();
    auto mopts = opts_.match;
    if (req.contains("backend")) mopts.backend = backend_from_string(req.at("backend").get<std::string>());
    if (mopts.backend == Backend::embedding && !s.spec->embeddings)
      throw Error("no embedding table is configured for this spec");
    return Grounder(*keep, mopts, s.spec->lexicon, s.spec->embeddings);
  }

  HttpResponse ground(Session& s, const nlohmann::json& req) {
    const auto command = req.at("command").get<std::string>();
    std::shared_ptr<const AppSpec> spec;
    const auto g = make_grounder(s, req, spec);
    GroundOptions gopts;
    gopts.rephrase = req.value("rephrase", true);
    gopts.utilities = req.value("utilities", true);
    const auto r = g.ground(command, *s.env, gopts);
    nlohmann::json out = {{"result", to_json(r)}, {"executed", false}};
    if (req.value("execute", false) && r.grounded()) {
      try {
        const auto report = s.env->execute_action(r.action_call->api, r.action_call->args);
        ++s.version;
        out["executed"] = true;
        out["notes"] = report.notes;
      } catch (const EnvironmentError& e) {
        out["execution_error"] = e.what();
      }
    }
    out["version"] = s.version;
    out["state"] = s.env->snapshot();
    return {200, out};
  }

  HttpResponse state(Session& s) { return {200, {{"version", s.version}, {"state", s.env->snapshot()}}}; }

  HttpResponse learner(Session& s, const std::string& op, const nlohmann::json& req) {
    std::shared_ptr<const AppSpec> spec;
    const auto g = make_grounder(s, req, spec);
    if (op == "start") {
      const auto command = req.at("command").get<std::string>();
      auto ls = start_session(command, g.ground(command, *s.env), opts_.max_attempts);
      ls.session_id = s.id;
      s.learner = std::move(ls);
    } else {
      if (!s.learner) throw InvalidState("no learner session has been started");
      auto& ls = *s.learner;
      if (op == "verify") {
        answer_verification(ls, answer_from_string(req.value("answer", std::string("silence"))), g, *s.env);
      } else if (op == "options") {
        // read-only view of the current options
      } else if (op == "choose") {
        if (req.value("reject", false)) {
          std::optional<std::string> rephrased;
          if (req.contains("rephrased") && req.at("rephrased").is_string())
            rephrased = req.at("rephrased").get<std::string>();
          reject_options(ls, rephrased, g, *s.env);
        } else {
          const auto idx = req.at("index").get<long long>();
          if (idx < 0) throw IndexOutOfRange("negative option index");
          choose_option(ls, static_cast<std::size_t>(idx));
        }
      } else if (op == "confirm") {
        confirm_arguments(ls, req.value("confirmed", true), *s.spec->store);
      } else {
        throw NotFound("learner operation '" + op + "'");
      }
    }
    return {200, {{"learner", to_json(*s.learner)}}};
  }

  ServiceOptions opts_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<SpecEntry>> specs_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 0;
};

}  // namespace cmdground
