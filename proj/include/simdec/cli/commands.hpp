#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "simdec/cli/config.hpp"

namespace simdec::cli {

/// Options shared by every subcommand; set flags override the config file.
struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::filesystem::path out;
  std::filesystem::path dataset;
  std::filesystem::path schema;
};

/// Extra inputs of the `simulate` and `decide` subcommands.
struct InferenceOptions {
  std::filesystem::path input;  // encoded CSV; defaults to the prepared test rows
  std::optional<int> mode;      // simulate only: force every order onto this mode
};

// Each command writes into <out>/<command name>/, which must not exist yet,
// and returns the directory it wrote. Missing prerequisites raise
// DependencyError naming the command that produces them.
std::filesystem::path cmd_synth(const CommonOptions& opts);
std::filesystem::path cmd_prepare(const CommonOptions& opts);
std::filesystem::path cmd_train_sim(const CommonOptions& opts);
std::filesystem::path cmd_train_policy(const CommonOptions& opts);
std::filesystem::path cmd_evaluate(const CommonOptions& opts);
std::filesystem::path cmd_shift(const CommonOptions& opts);
std::filesystem::path cmd_ablate(const CommonOptions& opts);
std::filesystem::path cmd_simulate(const CommonOptions& opts, const InferenceOptions& inference);
std::filesystem::path cmd_decide(const CommonOptions& opts, const InferenceOptions& inference);

/// Parses arguments and dispatches. Returns the process exit code: 0 on
/// success, 2 for a missing prerequisite, 1 for any other failure. Failures
/// print a one-line JSON error record on stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace simdec::cli
