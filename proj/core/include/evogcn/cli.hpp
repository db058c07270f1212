#pragma once

namespace evogcn {

// Entry point behind the evogcn binary; returns the process exit code
// (0 ok, 2 config error, 3 data error, 4 numeric failure).
int run_cli(int argc, const char* const* argv);

}  // namespace evogcn
