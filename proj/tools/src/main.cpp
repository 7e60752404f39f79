// SPDX-License-Identifier: Apache-2.0
//
// nomafb <experiment> [flags]
//
// Exit status: 0 on success, 2 for configuration errors, 1 for runtime errors.

#include <exception>
#include <iostream>

#include "cli.hpp"
#include "nomafb/montecarlo.hpp"
#include "output.hpp"

int main(int argc, char** argv) {
    using namespace nomafb;
    cli::Invocation inv;
    try {
        inv = cli::parse_config(std::vector<std::string>(argv, argv + argc));
    } catch (const ConfigError& e) {
        std::cerr << "nomafb: " << e.what() << "\nRun 'nomafb --help' for usage.\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "nomafb: " << e.what() << '\n';
        return 2;
    }
    if (inv.help) {
        std::cout << inv.help_text;
        return 0;
    }

    try {
        RunOptions options;
        options.workers = inv.workers.value_or(default_worker_count());
        options.progress = [](const std::string& message) { std::cerr << message << '\n'; };
        const RunStats stats = run_experiment(inv.config, options);
        cli::emit_csv(stats, inv.out);
        if (!inv.json.empty())
            cli::emit_json(stats, inv.json);
    } catch (const ConfigError& e) {
        std::cerr << "nomafb: --" << e.field() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "nomafb: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
