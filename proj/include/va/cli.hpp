#pragma once

// Command-line front end. Subcommands: interva, insilico, simulate,
// compare, oracle, validate-p, replay. Every run writes manifest.json into
// its output directory.
//
// Exit codes: 0 success, 1 validation findings, 2 input errors, 3 dimension
// errors, 4 runtime/numeric errors.

#include <iosfwd>
#include <span>
#include <string>

namespace va::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFindings = 1,
    kExitInput = 2,
    kExitDimension = 3,
    kExitRuntime = 4,
};

inline constexpr const char* kToolVersion = "1.0.0";

// args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a file's bytes. Throws va::ParseError if unreadable.
std::string file_sha256(const std::string& path);

}  // namespace va::cli
