// hjmm_lab COMMAND [--config FILE] [--seed N] [--threads N] [--out DIR] [--set section.key=value]...

#include <CLI11.hpp>

#include <iostream>

#include "hjmm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"HJMM forward-rate lab"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string("hjmm_lab ") + HJMM_VERSION);

  std::string config, out = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  bool no_timestamp = false;
  std::vector<std::string> sets;

  for (const auto& name : hjmm::cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "scenario file; defaults apply when omitted")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "overrides [mc] seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "report directory");
    sub->add_option("--set", sets, "section.key=value override")->take_all();
    sub->add_flag("--no-timestamp", no_timestamp, "omit the timestamp line");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  hjmm::cli::RunOptions opt;
  opt.out_dir = out;
  opt.threads = threads;
  opt.timestamp = !no_timestamp;
  std::string command = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed")) opt.seed = seed;
  return hjmm::cli::run(command, config, sets, opt);
}
