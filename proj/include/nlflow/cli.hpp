// Descriptor-driven commands with reproducible CSV / JSON artifacts.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nlflow::cli {

enum ExitCode : int { ok = 0, internal_error = 1, config_error = 2, numerical_error = 3, audit_failure = 4 };

struct Options {
    std::string command;
    std::string config;
    std::string out;                    ///< overrides the descriptor's output_dir when non-empty
    std::optional<std::uint64_t> seed;  ///< overrides the descriptor's seed
    bool quiet = false;
};

const std::vector<std::string>& commands();

/// Runs one command; diagnostics go to `err`, progress (unless quiet) to `log`.
int run(const Options& opt, std::ostream& log, std::ostream& err);

} // namespace nlflow::cli
