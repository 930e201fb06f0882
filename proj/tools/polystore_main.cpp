// Command-line front end: global flags, then one command or the shell.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "polystore/cli/session.hpp"
#include "polystore/common/error.hpp"

int main(int argc, char** argv) {
  using namespace polystore;
  // Diagnostics share stderr with errors; stdout carries only results.
  spdlog::set_default_logger(spdlog::stderr_color_mt("polystore"));
  CLI::App app("desk-scale polystore: relational, array and key-value engines behind islands", "polystore");
  cli::CliConfig config;
  std::string on_miss = "random";
  std::string format = "table";
  std::uint64_t seed = 0;
  bool training = false;
  std::vector<std::string> loads;
  app.add_option("--monitor-store", config.monitor_store, "append-only JSONL performance history");
  auto* seed_opt = app.add_option("--seed", seed, "pins every randomized choice");
  app.add_option("--on-miss", on_miss, "production miss policy")->check(CLI::IsMember({"random", "train"}));
  app.add_option("--stale-threshold", config.stale_threshold, "usage divergence that marks a plan stale");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"table", "csv", "json"}));
  app.add_flag("--training", training, "run the query command in the training phase");
  app.add_option("--load", loads, "kind:path[:name], repeatable; loaded before the command")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.prefix_command();
  app.footer("commands: load, query, idle, monitor-dump, bench, run, shell, help");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*seed_opt) config.seed = seed;
    config.on_miss = on_miss == "train" ? mw::OnMiss::train : mw::OnMiss::random;
    config.format = cli::parse_format(format);
    cli::Session session(config, std::cout, std::cerr);
    for (const auto& l : loads) session.load_spec(l);
    auto words = app.remaining();
    if (words.empty()) return session.shell(std::cin, isatty(0) != 0);
    if (training && words[0] == "query") words.insert(words.begin() + 1, "--training");
    return session.execute(words);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
