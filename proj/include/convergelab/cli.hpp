// cli.hpp -- command-line entry point shared by the binary and the tests.

#pragma once

namespace convergelab {

// Fixed default seed so tutorial runs reproduce; override with --seed.
inline constexpr unsigned long long kDefaultSeed = 42;

// Dispatches the subcommands (ingest, generate, score, analyze, stepwise,
// report). Returns 0 on success, nonzero with a diagnostic on stderr naming
// the failing stage.
int run(int argc, const char* const* argv);

}  // namespace convergelab
