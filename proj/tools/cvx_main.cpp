// cvx: experiment harness CLI for the truncated-Fock-space CV simulator.
//
// Subcommands: undercount, scaling, cubic-gate, kerr, pointer, all.
// Exit code 0 iff every declared tolerance passed.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvsim/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format;
    std::uint64_t seed = 0;
    long long trials = -1;
    int threads = -1;
    bool seed_set = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config overlay");
    cmd->add_option("--out", flags.out_path, "report output path (default: config value or stdout)");
    cmd->add_option("--format", flags.format, "report format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", flags.seed, "master seed")->each([&](const std::string&) {
        flags.seed_set = true;
    });
    cmd->add_option("--trials", flags.trials, "trial count override for this experiment");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
}

cvsim::ExperimentConfig load_config(const std::string& name, const CommonFlags& flags) {
    cvsim::ExperimentConfig config = flags.config_path.empty()
                                         ? cvsim::ExperimentConfig::with_defaults()
                                         : cvsim::ExperimentConfig::from_file(flags.config_path);
    if (flags.seed_set) config.root["seed"] = flags.seed;
    if (flags.threads >= 0) config.root["threads"] = flags.threads;
    if (!flags.format.empty()) config.root["format"] = flags.format;
    if (!flags.out_path.empty()) config.root["out"] = flags.out_path;
    if (flags.trials >= 0) {
        auto override_trials = [&](const char* section, const char* key) {
            if (config.root.contains(section) && config.root[section].contains(key))
                config.root[section][key] = flags.trials;
        };
        if (name == "undercount" || name == "all") override_trials("undercount", "trials");
        if (name == "cubic-gate" || name == "all") override_trials("cubic_gate", "trials");
        if (name == "kerr" || name == "all") {
            override_trials("kerr", "trials_per_input");
            override_trials("kerr", "superposition_trials");
        }
        if (name == "pointer" || name == "all") override_trials("pointer", "trials");
    }
    return config;
}

int run(const std::string& name, const CommonFlags& flags) {
    const cvsim::ExperimentConfig config = load_config(name, flags);
    const auto t0 = std::chrono::steady_clock::now();
    const cvsim::ExperimentReport report = cvsim::run_experiment(name, config);
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();

    // Per-check console lines; timing stays out of the report so that equal
    // (config, seed) runs serialize byte-identically.
    auto print_checks = [](const nlohmann::ordered_json& doc, const std::string& prefix) {
        if (!doc.contains("checks")) return;
        for (const auto& c : doc.at("checks")) {
            std::cerr << (c.at("passed").get<bool>() ? "[PASS] " : "[FAIL] ") << prefix
                      << c.at("name").get<std::string>() << "\n";
        }
    };
    if (report.doc.contains("experiments")) {
        for (const auto& [sub, subdoc] : report.doc.at("experiments").items())
            print_checks(subdoc, sub + "/");
    } else {
        print_checks(report.doc, "");
    }
    std::cerr << (report.all_passed ? "[PASS] " : "[FAIL] ") << name << " (" << secs << " s)\n";

    cvsim::write_report(report, config.root.at("out").get<std::string>(),
                        config.root.at("format").get<std::string>());
    return report.all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cvx: continuous-variable Fock-space experiment harness"};
    app.require_subcommand(0, 1);

    const std::vector<std::string> names = {"undercount", "scaling", "cubic-gate",
                                            "kerr", "pointer", "all"};
    const std::vector<std::string> descriptions = {
        "multiplexed threshold-detector collision statistics vs the combinatorial oracle",
        "detector-resource and phase-resolution scaling exponents",
        "deterministic cubic phase gate protocol sweeps",
        "Kerr-probe QND counting (modulo the phase period)",
        "position-pointer QND counting (no folding)",
        "every experiment in sequence"};

    std::vector<CommonFlags> flags(names.size());
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(names[i], descriptions[i]);
        add_common_flags(cmd, flags[i]);
        cmds.push_back(cmd);
    }

    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "print the default config schema and exit");

    CLI11_PARSE(app, argc, argv);

    if (dump_config) {
        std::cout << cvsim::ExperimentConfig::default_config().dump(2) << "\n";
        return 0;
    }

    try {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (cmds[i]->parsed()) return run(names[i], flags[i]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << app.help();
    return 2;
}
