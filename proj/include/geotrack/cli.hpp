#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geotrack::cli {

// Runs one subcommand; args exclude the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geotrack::cli
