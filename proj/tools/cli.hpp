#pragma once

#include <iosfwd>

namespace logsad {

// Exit codes: 0 success, 1 validation error or bad usage, 2 runtime error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace logsad
