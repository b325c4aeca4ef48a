#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace rcb::cli {

enum ExitCode : int { Ok = 0, ValidationFailure = 1, NumericalFailure = 2, VerificationFailed = 3 };

/// Flat key=value pairs. Lines may carry a leading "# " (the metadata block of a
/// CSV output); a JSON output is read through its "meta.config" object.
std::map<std::string, std::string> read_config(const std::string& path);

/// Entry point shared by the executable and the tests. Output files named by
/// --out go to disk; without --out the result is written to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rcb::cli
