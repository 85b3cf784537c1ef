#pragma once

#include "mtrack/config.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

// Writes to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path); // throws ValidationError

// Each command reads its inputs from files, writes outputs plus a
// manifest_<command>.json into config.out_dir, and logs to `log`.
void cmd_synth(const RunConfig& config, std::ostream& log);
void cmd_extract(const RunConfig& config, std::ostream& log);
void cmd_personalize(const RunConfig& config, std::ostream& log);
// Returns false when at least one cell failed; the others are still reported.
bool cmd_evaluate(const RunConfig& config, std::ostream& log);
bool cmd_importance(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& out);

std::vector<std::string> command_names();
// Dispatches and maps failures to exit codes: ValidationError -> 1, other errors -> 2.
int run_command(std::string_view name, const RunConfig& config, std::ostream& out, std::ostream& err);

} // namespace mtrack
