#pragma once

#include <iosfwd>

namespace causalsynth::cli {

// Exit codes: 0 success, 1 failure (one "error: <kind>: <message>" line on
// err), 2 usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace causalsynth::cli
