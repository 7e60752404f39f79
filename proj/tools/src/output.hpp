// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>

#include "nomafb/harness.hpp"

namespace nomafb::cli {

inline constexpr const char* kCsvHeader = "experiment,sweep_var,sweep_value,series,metric,value,stderr,samples,seed";

/// Long-format CSV, one metric per row. Rows follow the sweep order with
/// metrics sorted by name; slope rows come last.
void write_csv(const RunStats& stats, std::ostream& os);
/// Same rows as a flat JSON array of objects.
void write_json(const RunStats& stats, std::ostream& os);

/// Writes to `path`, or standard output when the path is empty or "-".
/// Throws std::runtime_error with the path on I/O failure.
void emit_csv(const RunStats& stats, const std::string& path);
void emit_json(const RunStats& stats, const std::string& path);

} // namespace nomafb::cli
