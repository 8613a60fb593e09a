#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ntl::cli {

/// Runs one command line (without the program name). Returns the process
/// exit status; failures print a single "error: <kind>: <message>" line
/// to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ntl::cli
