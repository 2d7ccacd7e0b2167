#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace minflip {

// Runs one CLI invocation (gen-data / train-surrogate / attack / evaluate /
// report). Returns the process exit code: 0 success, 1 validation error,
// 2 runtime abort.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace minflip
