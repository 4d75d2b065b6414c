#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace psbell::cli {

/// Runs one psbell invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on runtime or I/O failure, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psbell::cli
