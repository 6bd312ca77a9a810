#ifndef CVSIM_EXPERIMENT_HPP
#define CVSIM_EXPERIMENT_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

namespace cvsim {

/// All experiment parameters live in one JSON document: the defaults below
/// merged with an optional user overlay and flag overrides. Every numeric
/// default is in the schema, none in the runner code.
struct ExperimentConfig {
    nlohmann::ordered_json root;

    static nlohmann::ordered_json default_config();
    static ExperimentConfig with_defaults();
    static ExperimentConfig from_overlay(const nlohmann::ordered_json& overlay);
    static ExperimentConfig from_file(const std::string& path);

    std::uint64_t seed() const { return root.at("seed").get<std::uint64_t>(); }
    int threads() const { return root.at("threads").get<int>(); }
};

/// Structured result document. Reports never contain volatile fields
/// (timestamps, wall clock), so identical (config, seed) reproduce them
/// byte for byte; timing goes to the console instead.
struct ExperimentReport {
    nlohmann::ordered_json doc;
    bool all_passed = false;

    std::string to_json_string() const;
    std::string to_csv_string() const;
};

ExperimentReport run_undercount(const ExperimentConfig& config);
ExperimentReport run_scaling(const ExperimentConfig& config);
ExperimentReport run_cubic_gate(const ExperimentConfig& config);
ExperimentReport run_kerr(const ExperimentConfig& config);
ExperimentReport run_pointer(const ExperimentConfig& config);
ExperimentReport run_all(const ExperimentConfig& config);

/// name is one of: undercount, scaling, cubic-gate, kerr, pointer, all.
ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config);

/// format is "json" or "csv"; path "-" or "" writes to stdout.
void write_report(const ExperimentReport& report, const std::string& path,
                  const std::string& format);

}  // namespace cvsim

#endif
