#include <iostream>

#include "common.hpp"
#include "evver/error.hpp"
#include "evver/log.hpp"

namespace {

evver::log::Level parse_level(const std::string& s) {
  if (s == "debug") return evver::log::Level::debug;
  if (s == "warn") return evver::log::Level::warn;
  if (s == "error") return evver::log::Level::error;
  return evver::log::Level::info;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace evver;
  CLI::App app{"Evidence credibility toolkit: corpus building, EVVER-Net training and evidence filtering"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  cli::GlobalOptions g;
  app.add_option("--workers", g.workers, "Worker threads (default: number of processors)");
  app.add_option("--seed", g.seed, "Random seed for every stage")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--log-level", g.log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
  app.parse_complete_callback([&] { log::set_level(parse_level(g.log_level)); });

  cli::register_corpus_commands(app, g);
  cli::register_feature_commands(app, g);
  cli::register_model_commands(app, g);
  cli::register_evidence_commands(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return 0;
    for (const auto* sub : app.get_subcommands()) std::cerr << sub->help();
    return 1;
  } catch (const evver::Error& e) {
    log::error(e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    log::error(std::string("malformed JSON input: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log::error(e.what());
    return 2;
  }
  return 0;
}
