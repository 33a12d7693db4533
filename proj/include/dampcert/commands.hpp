#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dampcert/config.hpp"
#include "dampcert/lyapunov.hpp"

namespace dampcert {

std::string_view tool_version();

const std::vector<std::string>& subcommand_names();

struct RunContext {
  /// Output directory after applying --out and DAMPCERT_OUT_DIR.
  std::string out_dir;
  std::uint64_t seed = 1;
  /// Directory used to resolve relative paths in the config.
  std::string config_dir = ".";
};

/// --out wins over DAMPCERT_OUT_DIR, which wins over [output] directory.
std::string resolve_out_dir(const ExperimentConfig& config,
                            const std::optional<std::string>& cli_out);

std::uint64_t fnv1a(std::string_view data);

/// Certificate requested by [analysis] (or the default for the norm choice).
LyapunovCertificate build_configured_certificate(const ExperimentConfig& config,
                                                 const SemiDiscreteSystem& system,
                                                 std::uint64_t seed);

/// Runs one subcommand and writes its files plus manifest_<name>.txt.
/// Returns the written file names (relative to out_dir). Throws Error.
std::vector<std::string> run_subcommand(std::string_view name, const ExperimentConfig& config,
                                        const RunContext& ctx);

/// Full CLI path: reads the config, runs, prints progress to `out`. On
/// failure the last line written to `err` is `error: <Code>`. Returns the
/// process exit status.
int run_cli(std::string_view name, const std::string& config_path,
            const std::optional<std::string>& cli_out, std::optional<std::uint64_t> seed,
            std::ostream& out, std::ostream& err);

}  // namespace dampcert
