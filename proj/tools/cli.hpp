#pragma once

#include <string>
#include <vector>

namespace vcnet::cli {

// Dispatches to one of: datagen, train, eval, predict, stats, curves.
// Exit codes: 0 success, 1 usage error, 2 runtime error.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

// Full help text for a subcommand ("" for the top-level app); used by tests
// to verify that every flag is listed with its default.
std::string help_text(const std::string& subcommand);

} // namespace vcnet::cli
