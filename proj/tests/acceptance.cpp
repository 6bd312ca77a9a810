// Acceptance suite: runs every top-level claim of the simulator at its stated
// tolerance and prints one pass/fail line per criterion. Exit code 0 iff all
// criteria pass. Budgets and bands are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cvsim/cubic.hpp"
#include "cvsim/experiment.hpp"
#include "cvsim/gates.hpp"
#include "cvsim/measure.hpp"
#include "cvsim/state.hpp"

using namespace cvsim;
using json = nlohmann::ordered_json;

namespace {

struct CriterionResult {
    int id = 0;
    std::string label;
    bool passed = false;
    double seconds = 0.0;
    std::string detail;
};

std::vector<CriterionResult> g_results;

void record(int id, const std::string& label, bool passed, double seconds,
            const std::string& detail) {
    g_results.push_back({id, label, passed, seconds, detail});
    std::printf("[%s] criterion %d: %s (%.1f s) %s\n", passed ? "PASS" : "FAIL", id,
                label.c_str(), seconds, detail.c_str());
    std::fflush(stdout);
}

double run_timed(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

bool check_passed(const json& doc, const std::string& name) {
    for (const auto& c : doc.at("checks"))
        if (c.at("name").get<std::string>() == name) return c.at("passed").get<bool>();
    return false;
}

bool checks_with_prefix_pass(const json& doc, const std::string& prefix) {
    bool found = false;
    for (const auto& c : doc.at("checks")) {
        const std::string name = c.at("name").get<std::string>();
        if (name.rfind(prefix, 0) == 0) {
            found = true;
            if (!c.at("passed").get<bool>()) return false;
        }
    }
    return found;
}

// ---------------------------------------------------------------- criteria

json g_undercount_doc;

void criterion_1_and_2() {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    ExperimentReport report;
    const double secs = run_timed([&] { report = run_undercount(config); });
    g_undercount_doc = report.doc;

    const bool runtime_ok = secs < 120.0;
    record(1, "undercount bound and tree Monte Carlo, k in 1..4, N in {2,4,8,16}, 1e5 trials",
           report.all_passed && runtime_ok, secs,
           report.all_passed ? (runtime_ok ? "" : "over the 2 min budget")
                             : "bound/simulation check failed");

    // k = 2 exact collision values, matched by simulation within 3 sigma.
    bool values_ok = true;
    std::string detail;
    const std::vector<std::pair<std::size_t, double>> expect = {{2, 0.5}, {4, 0.25}, {8, 0.125}};
    for (const auto& row : g_undercount_doc.at("results").at("rows")) {
        if (row.at("k").get<std::size_t>() != 2) continue;
        for (const auto& [n, val] : expect)
            if (row.at("N").get<std::size_t>() == n) {
                if (row.at("exact").get<double>() != val) values_ok = false;
                if (!row.at("within_band").get<bool>()) values_ok = false;
                detail += "N=" + std::to_string(n) + ":" +
                          std::to_string(row.at("simulated").get<double>()) + " ";
            }
    }
    record(2, "k=2 exact collision values {0.5, 0.25, 0.125} vs simulation", values_ok, 0.0,
           detail);
}

void criterion_3() {
    bool ok = true;
    double worst = 0.0;
    const double secs = run_timed([&] {
        const std::size_t d = 64;
        for (double gamma : {0.05, 0.1}) {
            for (double a : {0.3, 0.7, 1.5}) {
                const ModeOperator shifted = position_function_operator(d, [=](double x) {
                    return std::exp(cxd(0.0, gamma * (x + a) * (x + a) * (x + a)));
                });
                const Matrix lhs = correction_u(a, gamma, d).matrix * shifted.matrix;
                const Matrix rhs = direct_cubic(gamma, d).matrix;
                double block = 0.0;
                for (std::size_t i = 0; i <= 16; ++i)
                    for (std::size_t j = 0; j <= 16; ++j)
                        block = std::max(block, std::abs(lhs(i, j) - rhs(i, j)));
                worst = std::max(worst, block);
                if (block >= 1e-8) ok = false;
            }
        }
    });
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max deviation %.3g", worst);
    record(3, "feed-forward operator identity on the n<=16 block at cutoff 64",
           ok && secs < 60.0, secs, buf);
}

json g_cubic_doc;

void criterion_4() {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    ExperimentReport report;
    const double secs = run_timed([&] { report = run_cubic_gate(config); });
    g_cubic_doc = report.doc;

    const bool determinism = check_passed(g_cubic_doc, "determinism");
    const bool control = check_passed(g_cubic_doc, "control_fidelity");
    const bool mono_sigma = checks_with_prefix_pass(g_cubic_doc, "monotone_sigma/");
    const bool mono_cutoff = checks_with_prefix_pass(g_cubic_doc, "monotone_cutoff/");
    const bool spread = check_passed(g_cubic_doc, "outcome_spread");
    const bool runtime_ok = secs < 600.0;

    std::string detail = std::string("determinism=") + (determinism ? "ok" : "FAIL") +
                         " control=" + (control ? "ok" : "FAIL") +
                         " monotone_sigma=" + (mono_sigma ? "ok" : "FAIL") +
                         " monotone_cutoff=" + (mono_cutoff ? "ok" : "FAIL") +
                         " outcome_spread=" + (spread ? "ok" : "FAIL");
    record(4, "cubic phase gate protocol sweep",
           determinism && control && mono_sigma && mono_cutoff && spread && runtime_ok, secs,
           detail);
}

void criterion_5() {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    ExperimentReport report;
    const double secs = run_timed([&] { report = run_kerr(config); });
    const bool residue = check_passed(report.doc, "residue_inference");
    const bool survival = check_passed(report.doc, "superposition_survival");
    const bool confinement = check_passed(report.doc, "residue_class_confinement");
    record(5, "Kerr periodicity: inferred = n mod period, class survival",
           residue && survival && confinement, secs,
           std::string("residue=") + (residue ? "ok" : "FAIL") + " survival=" +
               (survival ? "ok" : "FAIL"));
}

void criterion_6() {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    ExperimentReport report;
    const double secs = run_timed([&] { report = run_pointer(config); });
    const bool collapse = check_passed(report.doc, "collapse_to_single_fock");
    const bool balance = check_passed(report.doc, "balanced_statistics");
    const bool support = check_passed(report.doc, "outcomes_in_support");
    record(6, "pointer non-periodicity: single-Fock collapse, P(2) = 0.5 +- 3 sigma",
           collapse && balance && support, secs,
           "P(2) freq " +
               std::to_string(report.doc.at("results")
                                  .at("superposition_frequency_low")
                                  .get<double>()));
}

void criterion_7() {
    ExperimentConfig config = ExperimentConfig::with_defaults();
    ExperimentReport report;
    const double secs = run_timed([&] { report = run_scaling(config); });
    const bool n_ok = check_passed(report.doc, "modes_exponent");
    const bool phi_ok = check_passed(report.doc, "phase_resolution_exponent");
    const double slope =
        report.doc.at("results").at("modes_fit").at("slope").get<double>();
    record(7, "scaling exponents: N(n_max) in [1.9, 2.1], phase slope -1 exact",
           n_ok && phi_ok, secs,
           "modes slope " + std::to_string(slope) + (n_ok ? "" : " (out of band)") +
               ", phi slope exact=" + (phi_ok ? "ok" : "FAIL"));
}

void criterion_8() {
    bool ok = true;
    std::string detail;
    const double secs = run_timed([&] {
        // Poisson statistics of D(1)|0> at cutoff 32, per level, within 1e-10
        MultiModeState c = coherent_state(1.0, 32);
        double fact = 1.0;
        for (std::size_t n = 0; n < 32; ++n) {
            if (n > 0) fact *= static_cast<double>(n);
            if (std::abs(std::norm(c.amplitudes()[n]) - std::exp(-1.0) / fact) >= 1e-10) {
                ok = false;
                detail += "poisson ";
                break;
            }
        }

        // Var(q) of S(0.5)|0> at cutoff 40 within 1e-6
        MultiModeState sq = apply(MultiModeState::vacuum({40}), squeeze_one(0.5, 40), 0);
        auto [q40, p40] = quadrature_operators(40);
        ModeOperator q2_40{q40.matrix * q40.matrix, 1, {40, 0}};
        const double mean_q = expectation(sq, q40, 0).real();
        const double var_q = expectation(sq, q2_40, 0).real() - mean_q * mean_q;
        if (std::abs(var_q - std::exp(-1.0) / 2.0) >= 1e-6) {
            ok = false;
            detail += "squeeze-var ";
        }

        // EPR Var(q1 - q2) at eta = 1, cutoff 48, within 1e-5
        MultiModeState epr = epr_pair(1.0, 48, 48);
        auto [q48, p48] = quadrature_operators(48);
        ModeOperator q2_48{q48.matrix * q48.matrix, 1, {48, 0}};
        const double var_diff = expectation(epr, q2_48, 0).real() +
                                expectation(epr, q2_48, 1).real() -
                                2.0 * expectation(epr, tensor_operator(q48, q48), 0, 1).real();
        if (std::abs(var_diff - std::exp(-2.0)) >= 1e-5) {
            ok = false;
            detail += "epr-var ";
        }

        // SUM mean map within 1e-6
        const std::size_t d = 32;
        MultiModeState prod = tensor(coherent_state(1.0 / std::sqrt(2.0), d),
                                     coherent_state(0.25 * std::sqrt(2.0), d));
        MultiModeState summed = apply_sum(prod, sum_gate_factors(d, d), 0, 1, -1.0);
        auto [q32, p32] = quadrature_operators(d);
        if (std::abs(expectation(summed, q32, 1).real() - 1.5) >= 1e-6 ||
            std::abs(expectation(summed, q32, 0).real() - 1.0) >= 1e-6) {
            ok = false;
            detail += "sum-map ";
        }

        // Hong-Ou-Mandel null within 1e-10
        MultiModeState hom = apply(tensor(make_number_state(1, 6), make_number_state(1, 6)),
                                   beamsplitter(M_PI / 4.0, 6, 6), 0, 1);
        if (std::norm(hom.amplitudes()[1 * 6 + 1]) >= 1e-10) {
            ok = false;
            detail += "hom ";
        }
    });
    record(8, "gate-set physics: Poisson, squeezing law, EPR, SUM map, HOM", ok, secs,
           detail.empty() ? "all five sub-checks in tolerance" : ("failed: " + detail));
}

void criterion_9() {
    // Reuses the cubic-gate report (criterion 4 ran it) for the conditional
    // gamma' study at (w = 5, eta = 1, cutoff 96), 100 preparations.
    const bool ok = check_passed(g_cubic_doc, "gamma_scaling_ratio");
    const json& cond = g_cubic_doc.at("results").at("conditional");
    record(9, "gamma' ~ n^{-1/2}: fitted n-to-4n ratio in [1.6, 2.4]", ok, 0.0,
           "ratio " + std::to_string(cond.at("ratio_n_to_4n").get<double>()) + " over " +
               std::to_string(cond.at("preparations").get<std::size_t>()) + " preparations");
}

void criterion_10() {
    bool ok = true;
    std::string detail;
    const double secs = run_timed([&] {
        // kerr and pointer, full default configs
        for (const char* name : {"kerr", "pointer"}) {
            ExperimentConfig config = ExperimentConfig::with_defaults();
            ExperimentReport a = run_experiment(name, config);
            ExperimentReport b = run_experiment(name, config);
            if (a.to_json_string() != b.to_json_string() ||
                a.to_csv_string() != b.to_csv_string()) {
                ok = false;
                detail += std::string(name) + " ";
            }
        }
        // threaded undercount Monte Carlo on a reduced grid
        json overlay;
        overlay["undercount"] = {{"photon_numbers", {1, 2, 3}},
                                 {"mode_counts", {2, 4, 8}},
                                 {"trials", 30000}};
        ExperimentConfig config = ExperimentConfig::from_overlay(overlay);
        ExperimentReport a = run_undercount(config);
        ExperimentReport b = run_undercount(config);
        if (a.to_json_string() != b.to_json_string()) {
            ok = false;
            detail += "undercount ";
        }
    });
    record(10, "byte-identical reports for identical (config, seed)", ok, secs,
           ok ? "kerr, pointer, undercount replays match" : ("mismatch: " + detail));
}

}  // namespace

int main() {
    set_gate_warnings(false);

    criterion_1_and_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();

    int failed = 0;
    for (const auto& r : g_results)
        if (!r.passed) ++failed;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failed,
                g_results.size());
    if (failed > 0)
        std::printf("failing criteria are analyzed in the report output and README notes\n");
    return failed == 0 ? 0 : 1;
}
