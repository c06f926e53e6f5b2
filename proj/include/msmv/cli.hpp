#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msmv::cli {

/// Subcommands: prep, ingest, gen-synthetic, train, eval, report.
/// Returns 0 on success, 1 on a domain error, 2 on a usage error. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msmv::cli
