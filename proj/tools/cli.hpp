#ifndef FSO_RELAY_TOOLS_CLI_HPP
#define FSO_RELAY_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace fso_relay::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDomainError = 3,
    kNumericError = 4,
};

/// Runs the command line `args` (args[0] is the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 9 significant digits in scientific notation, the CSV number format.
std::string format_number(double v);

} // namespace fso_relay::cli

#endif
