// Command-line front end. Split from main() so tests can drive it directly.
#pragma once

namespace plada::cli {

// Exit codes: 0 success, 1 usage error, 2 data error.
int dispatch(int argc, const char* const* argv);

}  // namespace plada::cli
