// SPDX-License-Identifier: Apache-2.0

#include "output.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <vector>

#include "cli.hpp"

namespace nomafb::cli {

namespace {

struct Row {
    std::string sweep_var;
    double sweep_value;
    std::string series;
    std::string metric;
    double value;
    double std_error;
    std::uint64_t samples;
};

bool sweeps_power(const RunStats& stats) {
    if (stats.points.empty())
        return true;
    for (const SweepPoint& p : stats.points)
        if (p.p_db != stats.points.front().p_db)
            return true;
    return false;
}

std::vector<Row> rows_of(const RunStats& stats) {
    std::vector<Row> rows;
    const bool by_power = sweeps_power(stats);
    for (const SweepPoint& p : stats.points) {
        const std::string var = by_power ? "p_db" : "delta";
        const double x = by_power ? p.p_db : p.delta;
        const std::string series = p.rule.label();
        // a point cut short by the trial cap is flagged in-band
        std::map<std::string, Stat> metrics = p.metrics;
        if (!p.target_reached)
            metrics["target_reached"] = {0.0, 0.0, p.trials};
        for (const auto& [name, stat] : metrics)
            rows.push_back({var, x, series, name, stat.value, stat.std_error, stat.samples});
    }
    for (const SlopeEstimate& s : stats.slopes)
        rows.push_back({"window_lo_db", s.window_lo_db, s.series, s.metric, s.slope, s.std_error, s.points});
    return rows;
}

template <typename Fn>
void with_stream(const std::string& path, Fn&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        if (!std::cout)
            throw std::runtime_error("failed writing to standard output");
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write(file);
    file.close();
    if (!file)
        throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace

void write_csv(const RunStats& stats, std::ostream& os) {
    const std::string experiment(to_string(stats.kind));
    const std::string seed = std::to_string(stats.seed);
    os << kCsvHeader << '\n';
    for (const Row& r : rows_of(stats)) {
        os << experiment << ',' << r.sweep_var << ',' << format_number(r.sweep_value) << ',' << r.series << ','
           << r.metric << ',' << format_number(r.value) << ',' << format_number(r.std_error) << ',' << r.samples
           << ',' << seed << '\n';
    }
}

void write_json(const RunStats& stats, std::ostream& os) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    const std::string experiment(to_string(stats.kind));
    for (const Row& r : rows_of(stats)) {
        nlohmann::ordered_json row;
        row["experiment"] = experiment;
        row["sweep_var"] = r.sweep_var;
        row["sweep_value"] = r.sweep_value;
        row["series"] = r.series;
        row["metric"] = r.metric;
        row["value"] = r.value;
        row["stderr"] = r.std_error;
        row["samples"] = r.samples;
        row["seed"] = stats.seed;
        out.push_back(std::move(row));
    }
    os << out.dump(2) << '\n';
}

void emit_csv(const RunStats& stats, const std::string& path) {
    with_stream(path, [&](std::ostream& os) { write_csv(stats, os); });
}

void emit_json(const RunStats& stats, const std::string& path) {
    with_stream(path, [&](std::ostream& os) { write_json(stats, os); });
}

} // namespace nomafb::cli
