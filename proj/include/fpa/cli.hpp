#pragma once

#include <iosfwd>

namespace fpa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal failure
inline constexpr int kExitConfig = 2;   // usage, flags, config file
inline constexpr int kExitData = 3;     // input data rejected

// Entry point of the `fpa` tool. Subcommands: metrics, fault-proneness,
// clean, localize, evaluate, synth, pipeline.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fpa::cli
