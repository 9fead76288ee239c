// okd: scene generation, data collection, training and evaluation from the command line.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "okd/cli/commands.hpp"
#include "okd/cli/config.hpp"
#include "okd/errors.hpp"

namespace {
constexpr int kUsage = 1;
constexpr int kRuntime = 2;
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Omni-view depth teacher to single-view rgb student distillation"};
  std::string command;
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool no_distill = false;
  bool list_keys = false;

  app.add_option("command", command,
                 "gen-scenes | collect | train-teacher | train-student | eval | embed-sim | pipeline");
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "override, key=value (repeatable)");
  auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
  auto* out_opt = app.add_option("--out", out_dir, "overrides out_dir");
  app.add_flag("--no-distill", no_distill, "train-student: action-only baseline");
  app.add_flag("--list-keys", list_keys, "print every config key with its meaning");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  if (list_keys) {
    for (const auto& k : okd::cli::config_keys()) std::cout << k.name << "\t" << k.doc << "\n";
    return 0;
  }
  const auto cmd = okd::cli::parse_command(command);
  if (!cmd) {
    std::cerr << "unknown or missing command '" << command << "'\n" << app.help();
    return kUsage;
  }

  okd::cli::ExperimentConfig cfg;
  try {
    if (*seed_opt) sets.push_back("seed=" + std::to_string(seed));
    if (*out_opt) sets.push_back("out_dir=" + out_dir);
    cfg = config_path.empty() ? okd::cli::parse_config("", sets) : okd::cli::load_config(config_path, sets);
  } catch (const okd::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    okd::cli::run_command(*cmd, cfg, {no_distill}, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}
