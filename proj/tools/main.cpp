#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "krw/parallel.hpp"
#include "krw/ratio.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kBadConfig = 2, kNumerical = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace krwlab;

  std::vector<std::string> args(argv + 1, argv + argc);
  // "krwlab run <experiment> ..." is accepted as well.
  if (!args.empty() && args.front() == "run") args.erase(args.begin());
  std::reverse(args.begin(), args.end());

  CLI::App app{"krwlab: experiments on killed random walks, snakes and killed Brownian motion"};
  app.set_version_flag("--version", KRW_VERSION_STRING);
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, std::string> config_files;
  for (const auto& schema : schemas()) {
    auto* sub = app.add_subcommand(schema.name, schema.summary);
    sub->add_option("--config", config_files[schema.name], "JSON configuration (or a previous manifest.json)");
    for (const auto& f : schema.all_fields()) {
      std::string help = f.help;
      if (!f.fallback.is_null()) help += " [" + (f.fallback.is_string() ? f.fallback.get<std::string>() : f.fallback.dump()) + "]";
      sub->add_option(flag_name(f.name), flags[schema.name][f.name], help);
    }
  }

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const Schema* schema = nullptr;
  for (const auto* sub : app.get_subcommands()) schema = find_schema(sub->get_name());
  auto* sub = app.get_subcommand(schema->name);

  std::map<std::string, std::string> overrides;
  for (const auto& f : schema->all_fields())
    if (sub->get_option(flag_name(f.name))->count() > 0) overrides[f.name] = flags[schema->name][f.name];

  std::string config_text;
  json document;
  std::unique_ptr<Resolved> cfg;
  try {
    const std::string& file = config_files[schema->name];
    if (!file.empty()) {
      try {
        config_text = krw::read_file(file);
      } catch (const std::exception& e) {
        throw ConfigError("", 0, "cannot read " + file + ": " + e.what());
      }
      document = parse_document(config_text);
    }
    cfg = std::make_unique<Resolved>(*schema, document, config_text, overrides);
    krw::set_worker_threads(static_cast<unsigned>(cfg->integer("workers", 0, 4096)));
  } catch (const ConfigError& e) {
    const std::string& file = config_files[schema->name];
    std::cerr << "krwlab: invalid configuration" << (file.empty() ? "" : " in " + file) << ": " << e.what() << "\n";
    return kBadConfig;
  }

  try {
    Context ctx(*cfg, std::cout);
    run_experiment(ctx);
    std::cout << "wrote " << cfg->text("out") << "/manifest.json\n";
  } catch (const ConfigError& e) {
    const std::string& file = config_files[schema->name];
    std::cerr << "krwlab: invalid configuration" << (file.empty() ? "" : " in " + file) << ": " << e.what() << "\n";
    return kBadConfig;
  } catch (const krw::UnderflowError& e) {
    std::cerr << "krwlab: " << schema->name << ": ratio: " << e.what() << "\n";
    return kNumerical;
  } catch (const krw::DegenerateExperiment& e) {
    std::cerr << "krwlab: " << schema->name << ": ratio: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "krwlab: " << schema->name << ": " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
