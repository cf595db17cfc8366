#pragma once

#include <iosfwd>

namespace icomp::cli {

/// Exit codes: 0 success, 1 usage error, 2 data error.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace icomp::cli
