#pragma once

#include <string>
#include <vector>

#include "lampp/error.hpp"

namespace lampp::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kProvider = 3;
inline constexpr int kInternal = 4;

int exit_code(Errc code);

// Parses and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv);
// Arguments without the program name.
int run(const std::vector<std::string>& args);

}  // namespace lampp::cli
