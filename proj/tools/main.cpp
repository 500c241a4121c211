#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cmcnoid/error.hpp"
#include "config.hpp"
#include "pipeline.hpp"

int main(int argc, char** argv) {
  using namespace cmcnoid;
  using namespace cmcnoid::cli;

  CLI::App app{"Simultaneous unitarization and CMC n-noid surfaces"};
  app.require_subcommand(1);
  CLI::App* run_cmd = app.add_subcommand("run", "Run the pipeline described by a config file");
  std::string config_path, stage, out;
  unsigned threads = 0;
  run_cmd->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--stage", stage, "Last stage to run")
      ->check(CLI::IsMember({"checks-only", "unitarize", "full-surface"}));
  run_cmd->add_option("--threads", threads, "Worker cap, 0 for all cores");
  run_cmd->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kComputeError;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!stage.empty()) cfg.stage = stage_from_string(stage);
    if (!out.empty()) cfg.out = out;
    if (run_cmd->count("--threads")) cfg.threads = threads;
    apply_environment(cfg);
    validate(cfg);
  } catch (const Error& e) {
    std::cerr << "cmcnoid: " << e.what() << '\n';
    return kComputeError;
  }

  RunOutcome result;
  try {
    result = run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "cmcnoid: " << e.what() << '\n';
    return kComputeError;
  }
  for (const auto& c : result.checks) {
    std::cout << (c.holds ? "ok   " : "FAIL ") << c.stage << ' ' << c.name << " value=" << c.value
              << " threshold=" << c.threshold << '\n';
  }
  if (result.error) std::cerr << "cmcnoid: " << *result.error << '\n';
  if (result.first_failure) std::cerr << "cmcnoid: first failed check " << result.first_failure->name << '\n';
  std::cout << "exit " << result.exit_code << ", outputs in " << cfg.out.string() << '\n';
  return result.exit_code;
}
