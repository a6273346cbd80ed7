#pragma once

#include <iosfwd>

namespace lresp {

// Command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lresp
