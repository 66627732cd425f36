// Command-line front end: serve, ground, eval, mark.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmdground/environments.hpp"
#include "cmdground/eval.hpp"
#include "cmdground/grounder.hpp"
#include "cmdground/http_server.hpp"
#include "cmdground/learner.hpp"
#include "cmdground/service.hpp"
#include "cmdground/spec_model.hpp"

namespace cg = cmdground;

namespace {

std::shared_ptr<const cg::EmbeddingTable> embeddings_for(const cg::AppSpec& spec, cg::Backend backend) {
  if (backend != cg::Backend::embedding) return nullptr;
  if (!spec.embedding_path) throw cg::Error("spec declares no embedding file");
  return std::make_shared<const cg::EmbeddingTable>(cg::EmbeddingTable::load(*spec.embedding_path));
}

int run_ground(const std::string& spec_path, const std::string& world_path, const std::string& command,
               const std::string& variant_name, bool execute) {
  auto store = cg::AscStore::open(spec_path);
  const auto spec = store->snapshot();
  const auto variant = cg::Variant::parse(variant_name);
  cg::MatchOptions mopts;
  mopts.backend = variant.backend;
  cg::Grounder g(*spec, mopts, cg::load_lexicon_for(*spec), embeddings_for(*spec, variant.backend));
  auto env = world_path.empty() ? cg::make_environment(spec->app_name)
                                : cg::environment_from_json(nlohmann::json::parse(cg::read_file(world_path)));
  cg::GroundOptions gopts;
  gopts.rephrase = variant.rephrase;
  gopts.utilities = variant.utilities;
  const auto r = g.ground(command, *env, gopts);
  auto out = cg::to_json(r);
  if (execute && r.grounded()) {
    const auto report = env->execute_action(r.action_call->api, r.action_call->args);
    out["notes"] = report.notes;
    out["state"] = env->snapshot();
  }
  std::cout << out.dump(2) << "\n";
  return r.grounded() ? 0 : 2;
}

int run_eval(const std::string& spec_path, const std::string& dataset_path, const std::string& variant_name,
             const std::string& script_path, const std::string& report_path) {
  auto spec = cg::load_spec_file(spec_path);
  cg::AscStore store(spec);
  const auto variant = cg::Variant::parse(variant_name);
  const auto lexicon = cg::load_lexicon_for(spec);
  const auto dataset = cg::load_dataset(dataset_path, spec);
  std::vector<cg::LearnerScriptEntry> script;
  if (!script_path.empty()) script = cg::parse_learner_script(cg::read_file(script_path), spec);
  const auto report = cg::evaluate(dataset, store, variant, lexicon, embeddings_for(spec, variant.backend),
                                   script_path.empty() ? nullptr : &script);
  std::cout << cg::format_table(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw cg::Error("cannot write " + report_path);
    out << cg::to_json(report).dump(2) << "\n";
  }
  return 0;
}

int run_mark(const std::string& spec_path) {
  const auto spec = cg::load_spec_file(spec_path);
  for (const auto& a : spec.ascs) {
    if (!a.is_action()) continue;
    std::cout << a.aid << " " << a.api_name << ":";
    for (const auto& s : a.inputs) std::cout << " " << s.name << ":" << s.type << (s.starred ? "(*)" : "");
    std::cout << "\n";
  }
  return 0;
}

int run_serve(int port, const std::string& specs_dir, const std::string& host) {
  cg::Service service;
  service.load_spec_dir(specs_dir);
  httplib::Server server;
  cg::bind_routes(server, service);
  std::cerr << "listening on " << host << ":" << port << "\n";
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grounds natural-language commands to application API calls"};
  app.require_subcommand(1);

  std::string spec_path, world_path, command, variant = "vsm", dataset_path, script_path, report_path;
  std::string specs_dir = "data/specs", host = "127.0.0.1";
  int port = 8080;
  bool execute = false;

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port, "TCP port")->default_val(8080);
  serve->add_option("--specs", specs_dir, "Directory of spec files")->check(CLI::ExistingDirectory);
  serve->add_option("--host", host, "Bind address");

  auto* ground = app.add_subcommand("ground", "Ground one command and print the trace");
  ground->add_option("--spec", spec_path, "Spec file")->required()->check(CLI::ExistingFile);
  ground->add_option("--world", world_path, "World/page state file")->check(CLI::ExistingFile);
  ground->add_option("--command", command, "Command text")->required();
  ground->add_option("--variant", variant, "vsm, jaccard or emb, optionally with -R / -U");
  ground->add_flag("--execute", execute, "Run the grounded action and print the new state");

  auto* eval = app.add_subcommand("eval", "Score a labeled dataset");
  eval->add_option("--spec", spec_path, "Spec file")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset_path, "JSONL dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--variant", variant, "vsm, jaccard or emb, optionally with -R / -U");
  eval->add_option("--learner-script", script_path, "Scripted learner sessions to replay first")
      ->check(CLI::ExistingFile);
  eval->add_option("--report", report_path, "Write the JSON report here");

  auto* mark = app.add_subcommand("mark", "Print utility constraint marking");
  mark->add_option("--spec", spec_path, "Spec file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*serve) return run_serve(port, specs_dir, host);
    if (*ground) return run_ground(spec_path, world_path, command, variant, execute);
    if (*eval) return run_eval(spec_path, dataset_path, variant, script_path, report_path);
    if (*mark) return run_mark(spec_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
