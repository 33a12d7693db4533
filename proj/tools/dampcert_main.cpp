#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dampcert/commands.hpp"
#include "dampcert/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov certificates and simulations for nonlinearly damped systems"};
  app.set_version_flag("--version", std::string(dampcert::tool_version()));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  const std::map<std::string, std::string> help{
      {"simulate", "integrate the closed loop and write trajectory.csv"},
      {"certify", "build the configured Lyapunov certificate"},
      {"check-damping", "sample the damping definition items"},
      {"fit-decay", "fit decay models to a simulated trajectory"},
      {"sweep", "fit exponential rates over initial radii"},
      {"verify", "check the Lyapunov decrease along trajectory.csv"},
      {"report", "collate outputs into summary.txt and plot.gp"},
  };
  for (const auto& name : dampcert::subcommand_names()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "experiment config (INI)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides DAMPCERT_OUT_DIR)");
    sub->add_option("--seed", seed, "seed for randomized probes");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;
    std::cerr << "error: InvalidArgument" << std::endl;
    return dampcert::exit_status(dampcert::ErrorCode::InvalidArgument);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const std::optional<std::string> out =
      out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
  return dampcert::run_cli(name, config_path, out, seed, std::cout, std::cerr);
}
