#pragma once

#include <string>

#include "ctxprior/config.hpp"

namespace ctxprior {

// Exit codes: 0 success, 2 config error, 3 data validation error,
// 4 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(ErrorCode code);

// Commands return kExitOk or throw; main() maps Error to exit codes.
void cmd_synth(const RunConfig& config);
void cmd_fit(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_augment(const RunConfig& config);
void cmd_report(const RunConfig& config);

// Shared driver so tests can run commands in-process. Returns the exit code
// and writes human-readable errors to `err`.
int run_command(const std::string& command, const RunConfig& config, std::string& err);

}  // namespace ctxprior
