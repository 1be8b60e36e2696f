#pragma once

#include "rcgs_cli/config.hpp"

#include <rcgs/common.hpp>

#include <filesystem>
#include <iosfwd>

namespace rcgs::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitIo = 3,
    kExitPrerequisite = 4,
    kExitNumerical = 5,
    /// A sweep finished but some cells recorded errors.
    kExitPartial = 6,
};

int exit_code_for(ErrorKind kind);

/// Each command writes into <out>/<command name>/ and reads only from sibling
/// directories written by earlier commands.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_gs_test(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_train(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_forecast(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_lyapunov(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// Returns false when any cell recorded an error.
bool cmd_sweep(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rcgs::cli
