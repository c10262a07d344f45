#pragma once

namespace tddsim {

// Full command-line front end: parses argv, dispatches run/compare/codebook.
// Returns the process exit code (0 ok, 2 configuration error, 3 runtime abort).
int run_cli(int argc, const char* const* argv);

}  // namespace tddsim
