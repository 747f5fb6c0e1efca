#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tbill/serialize.hpp"

namespace tbill {

/// Flat key=value config. Blank lines and lines starting with '#' are
/// skipped. Keys may carry a "params." prefix, which is dropped.
std::map<std::string, std::string> parse_config(const std::string& text);

/// The one-line summary a command prints, rebuilt from its report.json.
std::string summary_line(const Json& report);

/// Runs the command line. Exit status 0 on success, 1 on usage errors, 2 when
/// a hypothesis of the underlying theorem fails for the given input.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tbill
