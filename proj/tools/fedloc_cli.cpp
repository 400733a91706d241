// fedloc: experiment runner and ledger tool for the federated RSSI
// localization simulator.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "fedloc/config.hpp"
#include "fedloc/experiment.hpp"
#include "fedloc/ledger.hpp"

namespace {

fedloc::ExperimentConfig resolve_config(const std::string& config_path, const std::string& mode,
                                        bool seed_set, std::uint64_t seed) {
    fedloc::ExperimentConfig cfg =
        config_path.empty() ? fedloc::reference_preset() : fedloc::load_config(config_path);
    if (!mode.empty()) cfg.modes = fedloc::detail::parse_modes(mode);
    if (seed_set) cfg.seed = seed;
    fedloc::require_valid(cfg);
    return cfg;
}

int ledger_cmd(const std::string& action, const std::string& chain_path,
               const std::vector<std::string>& ids) {
    using namespace fedloc;
    if (action == "init") {
        save_chain(genesis(std::time(nullptr)), chain_path);
        std::cout << "initialized " << chain_path << "\n";
        return 0;
    }
    Chain chain = load_chain(chain_path);
    if (action == "add") {
        if (ids.empty()) {
            std::cerr << "ledger add: no device ids given\n";
            return 1;
        }
        chain = append_block(chain, ids, std::time(nullptr));
        save_chain(chain, chain_path);
        std::cout << "appended block " << chain.size() - 1 << " with " << ids.size()
                  << " id(s)\n";
        return 0;
    }
    if (action == "verify") {
        const VerifyReport report = verify_chain(chain);
        if (report.ok) {
            std::cout << "ok: " << chain.size() << " block(s), tip " << chain.tip_hash()
                      << "\n";
            return 0;
        }
        std::cout << "TAMPERED: block " << *report.first_bad_index << ": " << report.detail
                  << "\n";
        return 1;
    }
    if (action == "show") {
        const VerifyReport report = verify_chain(chain);
        if (!report.ok) {
            std::cerr << "chain fails verification at block " << *report.first_bad_index
                      << ": " << report.detail << "\n";
            return 1;
        }
        for (const Block& b : chain.blocks())
            for (const std::string& id : b.device_ids) std::cout << id << "\n";
        return 0;
    }
    std::cerr << "unknown ledger action: " << action << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated Kalman filter RSSI localization simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", mode, chain_path = "chain.txt";
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "Run the experiment and write CSV outputs");
    run->add_option("--config", config_path, "Experiment config JSON (default: reference preset)");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--mode", mode, "fkf, skf, or both (overrides config)");
    run->add_option("--seed", seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });

    auto* ledger = app.add_subcommand("ledger", "Manage a hash-chained device ledger file");
    std::string action;
    std::vector<std::string> ids;
    ledger->add_option("action", action, "init | add | verify | show")->required();
    ledger->add_option("--chain", chain_path, "Chain file path");
    ledger->add_option("ids", ids, "Device ids (for add)");

    auto* bench = app.add_subcommand("bench", "Time per-round filter phases");
    bench->add_option("--config", config_path, "Experiment config JSON (default: reference preset)");
    long bench_rounds = 20000;
    bench->add_option("--rounds", bench_rounds, "Benchmark rounds (>= 10000)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            fedloc::cmd_run(resolve_config(config_path, mode, seed_set, seed), out_dir);
            return 0;
        }
        if (ledger->parsed()) return ledger_cmd(action, chain_path, ids);
        if (bench->parsed()) {
            const auto cfg = resolve_config(config_path, "", seed_set, seed);
            fedloc::print_bench(fedloc::run_bench(cfg, bench_rounds));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
