#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coldrec {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 ok, 1 usage or config, 2 data, 3 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coldrec
