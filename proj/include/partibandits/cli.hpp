#pragma once

#include <iosfwd>

namespace pb {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

/// Entry point of the `partibandits` tool: subcommands run, presets, validate
/// and replay. Reads PARTIBANDITS_SEED from the environment.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pb
