#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqslice::cli {

/// Runs the command line; returns the exit code (0 ok, 1 internal error,
/// 2 bad input). Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqslice::cli
