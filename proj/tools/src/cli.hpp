#pragma once

#include <ostream>

namespace liwuda::cli {

// Parses arguments, runs the chosen subcommand and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liwuda::cli
