#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <sstream>

#include "anderson/error.hpp"
#include "anderson/harness.hpp"

namespace {

using namespace anderson;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

void add_flags(CLI::App* cmd, Flags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "configuration file (key = value)");
  if (config_required) c->required();
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::Range(1u, 1024u));
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--format", f.format, "table format")->check(CLI::IsMember({"csv", "json"}));
}

harness::Config load_with_overrides(const Flags& f, const std::string& diagnostic) {
  auto c = f.config.empty() ? harness::Config{} : harness::Config::load(f.config);
  if (!diagnostic.empty()) c.set("diagnostic.name", diagnostic);
  if (f.seed) c.set("disorder.seed", std::to_string(*f.seed));
  if (f.workers) c.set("execution.workers", std::to_string(*f.workers));
  if (f.out) c.set("execution.output", *f.out);
  if (f.format) c.set("execution.format", *f.format);
  return c;
}

void print_manifest(const harness::RunManifest& m) {
  std::cout << "diagnostic " << m.config.diagnostic << " -> " << m.config.output.string() << '\n';
  for (const auto& f : m.outputs) std::cout << "  " << f.path << '\n';
  std::cout << m.headline.dump() << '\n';
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Anderson model experiments"};
  app.require_subcommand(1);

  std::map<std::string, Flags> flags;
  for (const auto& name : harness::available_diagnostics()) {
    add_flags(app.add_subcommand(name, "run the " + name + " diagnostic"), flags[name], false);
  }
  auto* sweep = app.add_subcommand("sweep", "run a diagnostic once per value of sweep.path (sweep.values)");
  add_flags(sweep, flags["sweep"], true);
  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare outputs byte for byte");
  add_flags(replay, flags["replay"], true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const auto* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  const Flags& f = flags[name];

  if (name == "replay") {
    const auto report = harness::replay(f.config, f.out.value_or("replay"), f.workers);
    if (report.identical()) {
      std::cout << "replay identical: " << report.manifest.outputs.size() << " outputs\n";
      return 0;
    }
    for (const auto& m : report.mismatched) std::cerr << "differs: " << m << '\n';
    throw NumericalError("replay: outputs differ from the manifest");
  }

  if (name == "sweep") {
    auto c = load_with_overrides(f, "");
    const std::string path = c.get("sweep.path");
    std::vector<std::string> values;
    std::string item;
    std::istringstream in(c.has("sweep.values") ? c.get("sweep.values") : std::string{});
    while (std::getline(in, item, ',')) {
      const auto a = item.find_first_not_of(" \t");
      if (a != std::string::npos) values.push_back(item.substr(a, item.find_last_not_of(" \t") - a + 1));
    }
    c.erase("sweep.path");
    c.erase("sweep.values");
    const auto result = harness::sweep(harness::ExperimentConfig::from(c), path, values);
    for (const auto& m : result.runs) print_manifest(m);
    std::cout << "summary " << result.summary_path.string() << '\n';
    return 0;
  }

  print_manifest(harness::run(harness::ExperimentConfig::from(load_with_overrides(f, name))));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const anderson::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case anderson::ErrorKind::validation: return 2;
      case anderson::ErrorKind::numerical: return 3;
      case anderson::ErrorKind::budget: return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
