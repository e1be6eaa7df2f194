#pragma once

namespace latflow {

// Parses argv, runs one subcommand, writes results and manifest.json into
// the output directory. Returns 0 on success, 1 on configuration or input
// errors, 2 when a solver did not converge (results are still written).
int run_cli(int argc, const char *const *argv);

} // namespace latflow
