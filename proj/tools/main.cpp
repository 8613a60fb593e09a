#include <iostream>
#include <string>
#include <vector>

#include "ntl/cli.hpp"

int main(int argc, char** argv) {
    return ntl::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
