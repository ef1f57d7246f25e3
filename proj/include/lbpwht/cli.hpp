#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lbpwht::cli {

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 on success, 2 on usage/configuration errors, 3 on runtime failures
// (corrupt inputs, divergence).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lbpwht::cli
