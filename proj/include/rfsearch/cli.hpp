#pragma once

namespace rfsearch {

/// Entry point of the `rfsearch` tool. Returns 0 on success, 1 on usage or
/// config errors and 2 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace rfsearch
