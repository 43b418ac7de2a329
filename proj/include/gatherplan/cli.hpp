#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gatherplan {

// Exit codes: 0 success, 1 runtime/validation failure, 2 usage error.
// Subcommands: segment, plan, run, report. All artifacts land in --out.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gatherplan
