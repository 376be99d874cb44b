// Command-line front end: one experiment per invocation.
//
//   sopbound run --config exp.ini [--seed N] [--out DIR]
//   sopbound <kind> [--config exp.ini] [--seed N] [--out DIR] [--print-defaults]
//
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sopbound/config.hpp"
#include "sopbound/error.hpp"
#include "sopbound/experiments.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool print_defaults = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Override the config seed");
  cmd->add_option("--out", f.out, "Override the output directory");
}

int execute(const std::optional<std::string>& kind, const Flags& f) {
  if (f.print_defaults) {
    std::cout << sopbound::config::schema_text(*kind);
    return 0;
  }
  const sopbound::config::Entries entries =
      f.config.empty() ? sopbound::config::Entries{} : sopbound::config::parse_file(f.config);
  const auto cfg = sopbound::config::resolve(entries, kind, f.seed, f.out);
  const auto manifest = sopbound::experiments::run(cfg);
  std::cout << fmt::format("{} seed={} -> {}\n", manifest.kind, manifest.seed, cfg.out());
  for (const auto& o : manifest.outputs) std::cout << fmt::format("  {} {}\n", o.sha256, o.name);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secrecy-outage bound toolkit"};
  app.set_version_flag("--version", sopbound::experiments::kToolVersion);
  app.require_subcommand(1);

  Flags run_flags;
  auto* run = app.add_subcommand("run", "Run the experiment named by the config's kind");
  run->add_option("--config", run_flags.config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(run, run_flags);

  std::vector<std::pair<std::string, Flags>> kinds;
  for (const auto& k : sopbound::config::experiment_kinds()) kinds.emplace_back(k, Flags{});
  std::vector<CLI::App*> kind_cmds;
  for (auto& [name, flags] : kinds) {
    auto* cmd = app.add_subcommand(name, fmt::format("Run a {} experiment", name));
    cmd->add_option("--config", flags.config, "Config file (defaults when omitted)")->check(CLI::ExistingFile);
    add_common(cmd, flags);
    cmd->add_flag("--print-defaults", flags.print_defaults, "Print the default config and exit");
    kind_cmds.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (run->parsed()) return execute(std::nullopt, run_flags);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kind_cmds[i]->parsed()) return execute(kinds[i].first, kinds[i].second);
    }
  } catch (const sopbound::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalExit;
  } catch (const sopbound::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  }
  return kConfigExit;
}
