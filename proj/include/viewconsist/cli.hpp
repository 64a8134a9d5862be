#pragma once

#include <iosfwd>

namespace viewconsist {

// Exit codes: 0 success, 1 invalid config or runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace viewconsist
