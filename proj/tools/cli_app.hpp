#pragma once

namespace nesteq::cli {

/// Subcommand dispatcher behind the `nesteq` binary. Exit codes: 0 success,
/// 1 validation or parse failure (diagnostics on stderr), 2 solver budget
/// exhausted (partial certificate still written).
int run(int argc, const char* const* argv);

} // namespace nesteq::cli
