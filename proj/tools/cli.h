#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lexspec::cli {

// Runs the lexspec command line. `args` excludes the program name.
// Returns 0 on success, 1 on I/O failure and 2 on invalid input.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lexspec::cli
