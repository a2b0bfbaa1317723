#pragma once

#include <iosfwd>

namespace photonlab {

// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitAnalysis = 1, kExitConfig = 2, kExitIo = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace photonlab
