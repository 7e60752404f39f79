// SPDX-License-Identifier: Apache-2.0
//
// Command-line parsing for the nomafb tool.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nomafb/harness.hpp"

namespace nomafb::cli {

struct Invocation {
    ExperimentConfig config;
    /// Unset means NOMAFB_WORKERS or all cores.
    std::optional<unsigned> workers;
    /// CSV destination; empty writes to standard output.
    std::string out;
    /// Optional JSON destination ("-" for standard output).
    std::string json;
    bool help = false;
    std::string help_text;
};

/// Parses `nomafb <experiment> [flags]`. args[0] is the program name.
/// A --config file supplies defaults that explicit flags override.
/// Throws ConfigError naming the offending flag.
Invocation parse_config(const std::vector<std::string>& args);

/// Flags that reproduce `cfg` exactly through parse_config (program name excluded).
std::vector<std::string> render_args(const ExperimentConfig& cfg);

/// "a:b:s" (inclusive) or a comma list.
std::vector<double> parse_sweep(const std::string& text, const std::string& flag);

/// Locale-independent shortest round-trip formatting.
std::string format_number(double value);

} // namespace nomafb::cli
