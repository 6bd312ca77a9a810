#include <doctest.h>

#include <cmath>
#include <map>
#include <functional>
#include <sstream>

#include "cvsim/experiment.hpp"
#include "cvsim/measure.hpp"

using namespace cvsim;
using json = nlohmann::ordered_json;

namespace {

ExperimentConfig small_undercount_config() {
    json overlay;
    overlay["undercount"] = {{"photon_numbers", {1, 2}},
                             {"mode_counts", {2, 4}},
                             {"trials", 4000}};
    overlay["threads"] = 2;
    return ExperimentConfig::from_overlay(overlay);
}

}  // namespace

TEST_CASE("config defaults, overlay merge, and schema") {
    ExperimentConfig def = ExperimentConfig::with_defaults();
    CHECK(def.root.at("schema_version") == 1);
    CHECK(def.root.at("scaling").at("epsilon").get<double>() == doctest::Approx(0.05));

    json overlay;
    overlay["seed"] = 7;
    overlay["scaling"] = {{"epsilon", 0.1}};
    ExperimentConfig merged = ExperimentConfig::from_overlay(overlay);
    CHECK(merged.seed() == 7);
    CHECK(merged.root.at("scaling").at("epsilon").get<double>() == doctest::Approx(0.1));
    // untouched siblings survive the merge
    CHECK(merged.root.at("scaling").at("delta_n").get<double>() == doctest::Approx(0.1));

    CHECK_THROWS(run_experiment("nonsense", def));
}

TEST_CASE("kerr experiment report") {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    config.root["kerr"]["trials_per_input"] = 40;
    config.root["kerr"]["superposition_trials"] = 60;
    ExperimentReport report = run_kerr(config);
    CHECK(report.all_passed);
    CHECK(report.doc.at("results").at("period") == 8);
    // delta_n wiring example: 0.01 / (2 pi / 64) ~ 0.102
    CHECK(report.doc.at("results").at("precision").at("delta_n").get<double>() ==
          doctest::Approx(0.01 * 64.0 / (2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("pointer experiment report") {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    config.root["pointer"]["trials"] = 2000;
    ExperimentReport report = run_pointer(config);
    CHECK(report.all_passed);
}

TEST_CASE("undercount experiment on a reduced grid") {
    ExperimentReport report = run_undercount(small_undercount_config());
    CHECK(report.all_passed);
    const json& rows = report.doc.at("results").at("rows");
    CHECK(rows.size() == 4);  // (1,2) (1,4) (2,2) (2,4)
    CHECK(rows[2].at("exact").get<double>() == doctest::Approx(0.5));
    CHECK(rows[3].at("exact").get<double>() == doctest::Approx(0.25));
}

TEST_CASE("scaling experiment: exact phi exponent and fitted N exponent") {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    ExperimentReport report = run_scaling(config);
    const double phi_slope =
        report.doc.at("results").at("phi_fit").at("slope").get<double>();
    CHECK(std::abs(phi_slope + 1.0) < 1e-12);

    // the fitted modes exponent is reproducible from the oracle directly
    const json& rows = report.doc.at("results").at("rows");
    for (const auto& row : rows) {
        const std::size_t k = row.at("k").get<std::size_t>();
        const std::size_t n_star = row.at("required_modes").get<std::size_t>();
        CHECK(undercount_probability(k, n_star).exact <= 0.05);
        if (n_star > k) CHECK(undercount_probability(k, n_star - 1).exact > 0.05);
    }

    // an underdetermined sweep is rejected
    ExperimentConfig bad = ExperimentConfig::with_defaults();
    bad.root["scaling"]["n_max"] = {8};
    CHECK_THROWS(run_scaling(bad));
}

TEST_CASE("reports are byte-identical for identical config and seed") {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    config.root["kerr"]["trials_per_input"] = 25;
    config.root["kerr"]["superposition_trials"] = 30;
    ExperimentReport a = run_kerr(config);
    ExperimentReport b = run_kerr(config);
    CHECK(a.to_json_string() == b.to_json_string());
    CHECK(a.to_csv_string() == b.to_csv_string());
}

TEST_CASE("reports do not depend on the worker thread count") {
    ExperimentConfig one = small_undercount_config();
    one.root["threads"] = 1;
    ExperimentConfig two = small_undercount_config();
    two.root["threads"] = 2;
    json da = run_undercount(one).doc;
    json db = run_undercount(two).doc;
    da.erase("threads");
    db.erase("threads");
    CHECK(da.dump() == db.dump());
}

TEST_CASE("csv and json serializations agree numerically at 15 digits") {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    config.root["kerr"]["trials_per_input"] = 25;
    config.root["kerr"]["superposition_trials"] = 30;
    ExperimentReport report = run_kerr(config);

    std::map<std::string, std::string> csv;
    std::istringstream lines(report.to_csv_string());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        const auto comma = line.find_last_of(',');
        csv[line.substr(0, comma)] = line.substr(comma + 1);
    }

    std::function<void(const json&, const std::string&)> walk =
        [&](const json& node, const std::string& path) {
            if (node.is_object()) {
                for (auto& [k, v] : node.items())
                    walk(v, path.empty() ? k : path + "." + k);
            } else if (node.is_array()) {
                std::size_t i = 0;
                for (const auto& v : node) walk(v, path + "[" + std::to_string(i++) + "]");
            } else if (node.is_number_float()) {
                REQUIRE(csv.count(path) == 1);
                const double from_csv = std::stod(csv.at(path));
                const double from_json = node.get<double>();
                const double scale = std::max({std::abs(from_csv), std::abs(from_json), 1e-300});
                CHECK(std::abs(from_csv - from_json) / scale < 1e-14);
            }
        };
    walk(report.doc, "");
}
