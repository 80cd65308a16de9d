#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qfeat {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitArgument = 2;
inline constexpr int kExitNumeric = 3;

// Entry point for `qfeat <fit|predict|experiment|rates> ...`; args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qfeat
