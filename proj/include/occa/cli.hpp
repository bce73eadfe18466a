#ifndef OCCA_CLI_HPP_
#define OCCA_CLI_HPP_

#include <iosfwd>

namespace occa {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitMaxIter = 3,
  kExitDomain = 4,
};

/// Entry point of `occa_cli`: subcommands gen, occa, omcca, cca-baseline, eval.
/// Diagnostics go to `err`, help and summaries to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace occa

#endif  // OCCA_CLI_HPP_
