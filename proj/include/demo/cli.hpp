#pragma once

namespace demo::cli {

// Entry point for the `demo` tool. Exit codes: 0 success, 1 runtime
// failure, 2 input/usage error.
int run(int argc, const char* const* argv);

}  // namespace demo::cli
