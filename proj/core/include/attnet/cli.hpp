#pragma once

#include <string>
#include <vector>

namespace attnet {

// Entry point behind the `attractor` binary. args excludes the program name.
// Returns 0 on success, 1 on runtime/config errors (after printing a
// machine-readable JSON error line to stderr), 2 on usage errors.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace attnet
