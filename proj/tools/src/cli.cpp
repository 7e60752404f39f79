// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <string_view>

namespace nomafb::cli {

namespace {

constexpr std::size_t kMaxSweepPoints = 100'000;

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& flag, const std::string& message) {
    throw ConfigError(flag, "--" + flag + ": " + message);
}

double parse_double(const std::string& raw, const std::string& flag) {
    const std::string text = trim(raw);
    // from_chars rejects a leading '+', accept it for convenience
    const std::string_view body = !text.empty() && text[0] == '+' ? std::string_view(text).substr(1) : text;
    double value = 0.0;
    const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (body.empty() || ec != std::errc() || end != body.data() + body.size() || !std::isfinite(value))
        fail(flag, "'" + raw + "' is not a finite number");
    return value;
}

// Accepts plain integers and exact scientific forms such as 1e6.
std::uint64_t parse_count(const std::string& raw, const std::string& flag) {
    const std::string text = trim(raw);
    std::uint64_t n = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (!text.empty() && ec == std::errc() && end == text.data() + text.size())
        return n;
    const double v = parse_double(text, flag);
    if (v < 0.0 || v != std::floor(v) || v >= 18446744073709551616.0)
        fail(flag, "'" + raw + "' is not a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

std::vector<DeltaRule> parse_delta_list(const std::string& text, const std::string& flag, bool policies_only) {
    std::vector<DeltaRule> rules;
    for (const std::string& raw : split(text, ',')) {
        const std::string item = trim(raw);
        if (item.empty())
            fail(flag, "empty entry in '" + text + "'");
        if (const auto policy = DeltaRule::parse_policy(item)) {
            rules.push_back(*policy);
            continue;
        }
        if (policies_only)
            fail(flag, "unknown policy '" + item + "' (expected pcube or min02-pcube)");
        rules.push_back(DeltaRule::fixed(parse_double(item, flag)));
    }
    return rules;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ',';
        out += format_number(values[i]);
    }
    return out;
}

struct KindDefaults {
    const char* p_db;
    const char* deltas;
    std::uint64_t trials;
    std::size_t users;
};

KindDefaults defaults_for(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::MinRate:
        return {"0:30:5", "0.05,0.1,0.2", 100'000, 2};
    case ExperimentKind::RateLoss:
        return {"10", "0.2,0.1,0.05,0.02,0.01,0.005", 100'000, 2};
    case ExperimentKind::Outage:
        return {"0:30:5", "0.2,min02-pcube", 100'000, 2};
    case ExperimentKind::OutageLoss:
        return {"-10:40:5", "0.2", 100'000, 2};
    case ExperimentKind::FeedbackRate:
        return {"10", "0.01,0.05", 1'000'000, 2};
    case ExperimentKind::Diversity:
        return {"0:30:2.5", "0.2,min02-pcube", 100'000, 2};
    case ExperimentKind::KUser:
        return {"10", "0.2,0.1,0.05,0.02,0.01", 20'000, 4};
    }
    return {"10", "0.1", 100'000, 2};
}

} // namespace

std::string format_number(double value) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::vector<double> parse_sweep(const std::string& text, const std::string& flag) {
    if (trim(text).empty())
        fail(flag, "empty sweep");
    if (text.find(':') == std::string::npos) {
        std::vector<double> values;
        for (const std::string& item : split(text, ','))
            values.push_back(parse_double(item, flag));
        return values;
    }
    const auto parts = split(text, ':');
    if (parts.size() != 3)
        fail(flag, "'" + text + "' is not of the form start:stop:step");
    const double start = parse_double(parts[0], flag);
    const double stop = parse_double(parts[1], flag);
    const double step = parse_double(parts[2], flag);
    if (step == 0.0 || (stop - start) * step < 0.0)
        fail(flag, "step in '" + text + "' does not move from start towards stop");
    const double span = (stop - start) / step;
    if (span + 1.0 > static_cast<double>(kMaxSweepPoints))
        fail(flag, "'" + text + "' has more than " + std::to_string(kMaxSweepPoints) + " points");
    // small slack so that 0:1:0.1 keeps its endpoint
    const auto last = static_cast<std::size_t>(std::floor(span + 1e-9));
    std::vector<double> values;
    for (std::size_t i = 0; i <= last; ++i)
        values.push_back(start + static_cast<double>(i) * step);
    return values;
}

Invocation parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Monte Carlo experiments for two-receiver and K-receiver NOMA with quantized feedback", "nomafb"};
    app.set_config("--config", "", "TOML or INI file with flag values; explicit flags take precedence");
    app.get_formatter()->column_width(34);

    std::string kind_s, p_s, delta_s, policy_s, trials_s, events_s, cap_s, rth_s, eps_s, seed_s, lambda_s, k_s,
        window_s, workers_s;
    Invocation inv;

    app.add_option("experiment", kind_s, "minrate, rateloss, outage, outageloss, feedback, diversity or kuser")
        ->required();
    app.add_option("--p-db", p_s, "Transmit power sweep in dB, start:stop:step or a comma list");
    app.add_option("--delta", delta_s, "Bin sizes in (0,1), comma list; pcube and min02-pcube also accepted");
    app.add_option("--delta-policy", policy_s, "Power-dependent bin size: pcube or min02-pcube (comma list)");
    app.add_option("--trials", trials_s, "Trials per power point (ignored with --min-outage-events)");
    app.add_option("--min-outage-events", events_s, "Run until every outage curve has this many events");
    app.add_option("--trial-cap", cap_s, "Trial limit per power point under adaptive stopping");
    app.add_option("--r-th", rth_s, "Outage target rate in bits/s/Hz (default 1)");
    app.add_option("--eps", eps_s, "Bisection accuracy of the K-receiver solver (default 1e-4)");
    app.add_option("--seed", seed_s, "Master seed (default 0)");
    app.add_option("--lambda", lambda_s, "Channel variances, comma list, receiver 1 first");
    app.add_option("--k", k_s, "Number of receivers; variances default to 1/k");
    app.add_option("--window-db", window_s, "Diversity slope window below the highest power (default 10)");
    app.add_option("--workers", workers_s, "Worker threads (default NOMAFB_WORKERS or all cores)");
    app.add_option("--out", inv.out, "CSV output file (default standard output)");
    app.add_option("--json", inv.json, "Also write the rows as a JSON array to this file ('-' for standard output)");

    std::vector<const char*> argv;
    for (const std::string& a : args)
        argv.push_back(a.c_str());
    if (argv.empty())
        argv.push_back("nomafb");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        inv.help = true;
        inv.help_text = app.help();
        return inv;
    } catch (const CLI::ParseError& e) {
        throw ConfigError("arguments", e.what());
    }

    const auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };

    const auto kind = parse_experiment_kind(trim(kind_s));
    if (!kind)
        fail("experiment", "unknown experiment '" + kind_s +
                               "' (expected minrate, rateloss, outage, outageloss, feedback, diversity or kuser)");
    ExperimentConfig& cfg = inv.config;
    cfg.kind = *kind;
    const KindDefaults d = defaults_for(cfg.kind);

    cfg.p_db = parse_sweep(given("--p-db") ? p_s : d.p_db, "p-db");

    cfg.deltas.clear();
    if (given("--delta"))
        cfg.deltas = parse_delta_list(delta_s, "delta", false);
    if (given("--delta-policy")) {
        const auto extra = parse_delta_list(policy_s, "delta-policy", true);
        cfg.deltas.insert(cfg.deltas.end(), extra.begin(), extra.end());
    }
    if (!given("--delta") && !given("--delta-policy"))
        cfg.deltas = parse_delta_list(d.deltas, "delta", false);

    std::size_t users = d.users;
    if (given("--k")) {
        const std::uint64_t k = parse_count(k_s, "k");
        if (k < 2 || k > 64)
            fail("k", "receiver count must be between 2 and 64");
        users = static_cast<std::size_t>(k);
    }
    if (given("--lambda")) {
        cfg.channel.variances.clear();
        for (const std::string& item : split(lambda_s, ','))
            cfg.channel.variances.push_back(parse_double(item, "lambda"));
        if (given("--k") && cfg.channel.size() != users)
            fail("k", "--k " + k_s + " disagrees with the " + std::to_string(cfg.channel.size()) +
                          " variances given by --lambda");
    } else {
        cfg.channel = ChannelParams::defaults(users);
    }

    cfg.trials = given("--trials") ? parse_count(trials_s, "trials") : d.trials;
    if (given("--min-outage-events"))
        cfg.min_outage_events = parse_count(events_s, "min-outage-events");
    if (given("--trial-cap"))
        cfg.trial_cap = parse_count(cap_s, "trial-cap");
    if (given("--r-th"))
        cfg.r_th = parse_double(rth_s, "r-th");
    if (given("--eps"))
        cfg.eps = parse_double(eps_s, "eps");
    if (given("--seed"))
        cfg.seed = parse_count(seed_s, "seed");
    if (given("--window-db"))
        cfg.window_db = parse_double(window_s, "window-db");
    if (given("--workers")) {
        const std::uint64_t w = parse_count(workers_s, "workers");
        if (w < 1 || w > 4096)
            fail("workers", "worker count must be between 1 and 4096");
        inv.workers = static_cast<unsigned>(w);
    }

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        std::string_view message = e.what();
        if (message.starts_with("config: "))
            message.remove_prefix(8);
        fail(e.field(), std::string(message));
    }
    return inv;
}

std::vector<std::string> render_args(const ExperimentConfig& cfg) {
    std::string deltas;
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
        if (i)
            deltas += ',';
        deltas += cfg.deltas[i].label();
    }
    // '=' keeps negative values attached to their flag
    return {
        std::string(to_string(cfg.kind)),
        "--p-db=" + join(cfg.p_db),
        "--delta=" + deltas,
        "--lambda=" + join(cfg.channel.variances),
        "--r-th=" + format_number(cfg.r_th),
        "--eps=" + format_number(cfg.eps),
        "--trials=" + std::to_string(cfg.trials),
        "--min-outage-events=" + std::to_string(cfg.min_outage_events),
        "--trial-cap=" + std::to_string(cfg.trial_cap),
        "--seed=" + std::to_string(cfg.seed),
        "--window-db=" + format_number(cfg.window_db),
    };
}

} // namespace nomafb::cli
