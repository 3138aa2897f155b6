#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace complaints {

// Runs one subcommand. args[0] is the program name. Returns 0 on success,
// 1 on user or data errors, 2 on an internal invariant failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `key = value` lines; '#' starts a comment. Throws ConfigError on malformed
// lines or repeated keys.
std::map<std::string, std::string> read_config_file(std::istream& in);

}  // namespace complaints
