#pragma once

#include <iosfwd>

namespace dkf {

/// Entry point of the `dkf` command line tool.
///
///   simulate --config <path> [--out <dir>] [--seed <u64>] [--workers <k>]
///   reproduce-fig1 [--runs M] [--horizon K] [--out <dir>]
///   diagnose --config <path> [--h <int>] [--mc <int>]
///   verify [--instances N]
///
/// Output goes to --out, else $DKF_OUT_DIR, else ./out. Exit status: 0 on
/// success, 1 when a property suite fails or on an internal error, otherwise the ErrorCategory value
/// (2 usage, 3 validation, 4 numerical, 5 I/O).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dkf
