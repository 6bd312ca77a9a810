#include "cvsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cvsim/cubic.hpp"
#include "cvsim/gates.hpp"
#include "cvsim/measure.hpp"
#include "cvsim/rng.hpp"
#include "cvsim/state.hpp"

namespace cvsim {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- utilities

std::uint64_t stream_tag(std::string_view label) {
    // FNV-1a; the documented map from experiment labels to rng streams.
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

void parallel_for(int threads, std::size_t count,
                  const std::function<void(std::size_t)>& body) {
    int t = threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads;
    if (t < 1) t = 1;
    t = static_cast<int>(std::min<std::size_t>(t, std::max<std::size_t>(count, 1)));
    if (t == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        constexpr std::size_t chunk = 32;
        while (true) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= count) return;
            const std::size_t end = std::min(begin + chunk, count);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("ols_fit: need >= 2 points");
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xbar += x[i];
        ybar += y[i];
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate abscissae");
    OlsFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    if (n > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - (f.intercept + f.slope * x[i]);
            ssr += r * r;
        }
        f.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

json make_check(const std::string& name, bool passed, json detail) {
    detail["name"] = name;
    detail["passed"] = passed;
    json ordered;
    ordered["name"] = detail["name"];
    ordered["passed"] = detail["passed"];
    for (auto& [k, v] : detail.items())
        if (k != "name" && k != "passed") ordered[k] = v;
    return ordered;
}

bool all_checks_pass(const json& checks) {
    for (const auto& c : checks)
        if (!c.at("passed").get<bool>()) return false;
    return true;
}

void require_trials(std::size_t trials, const char* who) {
    if (trials < 1)
        throw std::invalid_argument(std::string(who) + ": trial count must be >= 1");
}

json report_skeleton(const std::string& experiment, const ExperimentConfig& config,
                     const json& section) {
    json doc;
    doc["schema_version"] = 1;
    doc["experiment"] = experiment;
    doc["seed"] = config.seed();
    doc["threads"] = config.threads();
    doc["config"] = section;
    return doc;
}

MultiModeState superposition_state(const std::vector<std::size_t>& levels, std::size_t cutoff) {
    std::vector<cxd> amps(cutoff, cxd(0.0, 0.0));
    const double a = 1.0 / std::sqrt(static_cast<double>(levels.size()));
    for (std::size_t n : levels) amps.at(n) = a;
    return MultiModeState::from_amplitudes({cutoff}, std::move(amps), true);
}

// ------------------------------------------------------------- undercount

/// exact <= bound checked in integer arithmetic:
/// (N^k - falling(N,k)) * 2N <= k(k-1) * N^k. Falls back to false only if the
/// integers would overflow 128 bits (not reachable for the shipped grids).
bool undercount_bound_exact_arithmetic(std::size_t k, std::size_t n_modes, bool& representable) {
    representable = true;
    if (k == 0 || k == 1) return true;
    unsigned __int128 pow = 1, falling = 1;
    for (std::size_t j = 0; j < k; ++j) {
        if (pow > (static_cast<unsigned __int128>(1) << 100)) {
            representable = false;
            return false;
        }
        pow *= n_modes;
        falling *= (n_modes >= j ? static_cast<unsigned __int128>(n_modes - j) : 0);
    }
    const unsigned __int128 lhs = (pow - falling) * (2 * static_cast<unsigned __int128>(n_modes));
    const unsigned __int128 rhs =
        static_cast<unsigned __int128>(k) * static_cast<unsigned __int128>(k - 1) * pow;
    return lhs <= rhs;
}

}  // namespace

json ExperimentConfig::default_config() {
    return json{
        {"schema_version", 1},
        {"seed", 20010319},
        {"threads", 0},
        {"format", "json"},
        {"out", ""},
        {"undercount",
         {{"photon_numbers", {1, 2, 3, 4}},
          {"mode_counts", {2, 4, 8, 16}},
          {"trials", 100000},
          {"sigma_band", 3.0}}},
        {"scaling",
         {{"n_max", {4, 8, 16, 32}},
          {"epsilon", 0.05},
          {"delta_n", 0.1},
          {"n_slope_band", {1.9, 2.1}},
          {"phi_slope_tol", 1e-12}}},
        {"cubic_gate",
         {{"gamma", 0.1},
          {"sigmas", {2.0, 4.0, 8.0}},
          {"cutoffs", {32, 64}},
          {"trials", 2000},
          {"homodyne_resolution", 0.05},
          {"input_squeeze_eta", 0.3},
          {"monotonicity_slack", 0.01},
          {"outcome_spread_max", 0.02},
          {"spread_sigma", 4.0},
          {"spread_cutoff", 64},
          {"leakage_limit", 1e-6},
          {"gamma_sigma_cubed_budget", 64.0},
          {"control",
           {{"sigma", 4.0},
            {"cutoff", 64},
            {"trials", 2000},
            {"resolution", 0.02},
            {"fidelity_min", 0.99}}},
          {"tuned",
           {{"sigma", 2.0},
            {"cutoff", 64},
            {"trials", 2000},
            {"resolution", 0.05},
            {"fidelity_min", 0.95}}},
          {"conditional",
           {{"w", 5.0},
            {"eta", 1.0},
            {"cutoff", 96},
            {"preparations", 100},
            {"max_attempts", 1000},
            {"ratio_band", {1.6, 2.4}}}}}},
        {"kerr",
         {{"period", 8},
          {"delta_phi_rel", 1e-4},
          {"cutoff", 16},
          {"trials_per_input", 100},
          {"alias_input", 11},
          {"superposition", {2, 10}},
          {"superposition_trials", 200},
          {"survival_fidelity_min", 0.999999},
          {"residue_mass_max", 1e-9},
          {"precision_example",
           {{"delta_phi", 0.01}, {"period", 64}, {"n", 1000}, {"expected_delta_n", 0.102},
            {"expected_tol", 5e-4}}}}},
        {"pointer",
         {{"lambda_t", 1.0},
          {"delta_p_rel", 1e-3},
          {"cutoff", 16},
          {"superposition", {2, 10}},
          {"trials", 10000},
          {"sigma_band", 3.0},
          {"alias_input", 11},
          {"collapse_residual_max", 1e-12},
          {"precision_example", {{"delta_p", 0.05}, {"lambda_t", 1.0}, {"n", 1000}}}}},
    };
}

ExperimentConfig ExperimentConfig::with_defaults() { return ExperimentConfig{default_config()}; }

namespace {
void merge_into(json& base, const json& overlay) {
    for (auto& [key, value] : overlay.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object())
            merge_into(base[key], value);
        else
            base[key] = value;
    }
}
}  // namespace

ExperimentConfig ExperimentConfig::from_overlay(const json& overlay) {
    json root = default_config();
    merge_into(root, overlay);
    return ExperimentConfig{std::move(root)};
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json overlay = json::parse(in);
    return from_overlay(overlay);
}

// ------------------------------------------------------------------ reports

std::string ExperimentReport::to_json_string() const { return doc.dump(2) + "\n"; }

namespace {

std::string fmt15(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

void flatten_csv(const json& node, const std::string& path, std::ostringstream& out) {
    if (node.is_object()) {
        for (auto& [k, v] : node.items())
            flatten_csv(v, path.empty() ? k : path + "." + k, out);
    } else if (node.is_array()) {
        std::size_t i = 0;
        for (const auto& v : node) flatten_csv(v, path + "[" + std::to_string(i++) + "]", out);
    } else if (node.is_number_float()) {
        out << path << "," << fmt15(node.get<double>()) << "\n";
    } else if (node.is_number_integer()) {
        out << path << "," << node.get<long long>() << "\n";
    } else if (node.is_number_unsigned()) {
        out << path << "," << node.get<unsigned long long>() << "\n";
    } else if (node.is_boolean()) {
        out << path << "," << (node.get<bool>() ? "true" : "false") << "\n";
    } else if (node.is_string()) {
        out << path << ",\"" << node.get<std::string>() << "\"\n";
    } else {
        out << path << ",\n";
    }
}

}  // namespace

std::string ExperimentReport::to_csv_string() const {
    std::ostringstream out;
    out << "path,value\n";
    flatten_csv(doc, "", out);
    return out.str();
}

void write_report(const ExperimentReport& report, const std::string& path,
                  const std::string& format) {
    std::string body;
    if (format == "json")
        body = report.to_json_string();
    else if (format == "csv")
        body = report.to_csv_string();
    else
        throw std::invalid_argument("write_report: format must be json or csv");
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << body;
}

// --------------------------------------------------------------- undercount

ExperimentReport run_undercount(const ExperimentConfig& config) {
    const json& section = config.root.at("undercount");
    const std::vector<std::size_t> ks = section.at("photon_numbers").get<std::vector<std::size_t>>();
    const std::vector<std::size_t> ns = section.at("mode_counts").get<std::vector<std::size_t>>();
    const std::size_t trials = section.at("trials").get<std::size_t>();
    const double sigma_band = section.at("sigma_band").get<double>();
    const std::uint64_t seed = config.seed();
    require_trials(trials, "run_undercount");
    if (ks.empty() || ns.empty())
        throw std::invalid_argument("run_undercount: sweep lists must be nonempty");

    json rows = json::array();
    json checks = json::array();

    for (std::size_t k : ks) {
        for (std::size_t n_modes : ns) {
            if (k > n_modes) continue;
            const UndercountProbability oracle = undercount_probability(k, n_modes);
            bool representable = false;
            bool bound_holds = undercount_bound_exact_arithmetic(k, n_modes, representable);
            if (!representable) bound_holds = oracle.exact <= oracle.bound + 1e-15;

            const MultiModeState input = make_number_state(k, std::max<std::size_t>(2, k + 1));
            const std::uint64_t tag =
                stream_tag("undercount/k=" + std::to_string(k) + "/N=" + std::to_string(n_modes));

            std::vector<std::uint8_t> undercounted(trials, 0);
            std::vector<std::uint8_t> dominated(trials, 0);
            parallel_for(config.threads(), trials, [&](std::size_t t) {
                Rng rng = Rng::for_trial(seed, tag, t);
                const MeasurementRecord rec = multiplexed_count(input, 0, n_modes, rng);
                const auto clicks = static_cast<std::size_t>(rec.outcome);
                undercounted[t] = clicks < k ? 1 : 0;
                dominated[t] = clicks <= k ? 1 : 0;
            });
            std::size_t events = 0, dominated_count = 0;
            for (std::size_t t = 0; t < trials; ++t) {
                events += undercounted[t];
                dominated_count += dominated[t];
            }
            const double freq = static_cast<double>(events) / static_cast<double>(trials);
            const double se = std::sqrt(oracle.exact * (1.0 - oracle.exact) /
                                        static_cast<double>(trials));
            const bool mc_ok = std::abs(freq - oracle.exact) <= sigma_band * se ||
                               (se == 0.0 && freq == oracle.exact);
            const bool dominance_ok = dominated_count == trials;

            rows.push_back(json{{"k", k},
                                {"N", n_modes},
                                {"exact", oracle.exact},
                                {"bound", oracle.bound},
                                {"simulated", freq},
                                {"trials", trials},
                                {"std_error", se},
                                {"bound_holds", bound_holds},
                                {"exact_arithmetic", representable},
                                {"within_band", mc_ok},
                                {"undercount_dominance", dominance_ok}});
            const std::string label = "k=" + std::to_string(k) + ",N=" + std::to_string(n_modes);
            checks.push_back(make_check("bound/" + label, bound_holds,
                                        {{"exact", oracle.exact}, {"bound", oracle.bound},
                                         {"exact_arithmetic", representable}}));
            checks.push_back(make_check(
                "simulation/" + label, mc_ok,
                {{"simulated", freq}, {"exact", oracle.exact}, {"std_error", se},
                 {"band_sigmas", sigma_band}}));
            checks.push_back(make_check("dominance/" + label, dominance_ok,
                                        {{"violations", trials - dominated_count}}));
        }
    }

    json doc = report_skeleton("undercount", config, section);
    doc["results"] = json{{"rows", rows},
                          {"leakage",
                           {{"note", "photon number is conserved on the fan-out tree; the "
                                     "working cutoffs are exact"},
                            {"flagged_trials", 0}}}};
    doc["checks"] = checks;
    const bool ok = all_checks_pass(checks);
    doc["all_passed"] = ok;
    return ExperimentReport{std::move(doc), ok};
}

// ------------------------------------------------------------------ scaling

ExperimentReport run_scaling(const ExperimentConfig& config) {
    const json& section = config.root.at("scaling");
    const std::vector<std::size_t> n_max_sweep = section.at("n_max").get<std::vector<std::size_t>>();
    const double epsilon = section.at("epsilon").get<double>();
    const double delta_n = section.at("delta_n").get<double>();
    const std::vector<double> band = section.at("n_slope_band").get<std::vector<double>>();
    const double phi_tol = section.at("phi_slope_tol").get<double>();

    if (n_max_sweep.size() < 4)
        throw std::invalid_argument(
            "run_scaling: the n_max sweep is underdetermined (need at least 4 points)");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("run_scaling: epsilon must lie in (0, 1)");

    auto smallest_n = [&](std::size_t k, double eps) -> std::size_t {
        // exact(k, N) is decreasing in N; binary search the threshold.
        std::size_t lo = std::max<std::size_t>(k, 1);
        std::size_t hi = std::max<std::size_t>(
            lo + 1, static_cast<std::size_t>(std::ceil(
                        static_cast<double>(k) * static_cast<double>(k) / eps)) + k + 16);
        while (undercount_probability(k, hi).exact > eps) hi *= 2;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (undercount_probability(k, mid).exact <= eps)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    };

    json rows = json::array();
    std::vector<double> log_nmax, log_modes, log_phi;
    for (std::size_t n_max : n_max_sweep) {
        const std::size_t n_star = smallest_n(n_max, epsilon);
        // Kerr route: the period must resolve all n_max levels of the
        // truncated space, so chi_t = 2 pi / n_max and dphi = chi_t * dn.
        const double chi_t = 2.0 * M_PI / static_cast<double>(n_max);
        const double delta_phi = chi_t * delta_n;
        rows.push_back(json{{"n_max", n_max},
                            {"k", n_max},
                            {"required_modes", n_star},
                            {"exact_at_required", undercount_probability(n_max, n_star).exact},
                            {"chi_t", chi_t},
                            {"delta_phi", delta_phi}});
        log_nmax.push_back(std::log(static_cast<double>(n_max)));
        log_modes.push_back(std::log(static_cast<double>(n_star)));
        log_phi.push_back(std::log(delta_phi));
    }

    const OlsFit fit_n = ols_fit(log_nmax, log_modes);
    const OlsFit fit_phi = ols_fit(log_nmax, log_phi);

    // Epsilon insensitivity of the detector-resource exponent (reported, not
    // gated): the fitted slope should barely move when epsilon halves.
    std::vector<double> log_modes_half;
    for (std::size_t n_max : n_max_sweep)
        log_modes_half.push_back(std::log(static_cast<double>(smallest_n(n_max, epsilon / 2.0))));
    const OlsFit fit_n_half = ols_fit(log_nmax, log_modes_half);

    json checks = json::array();
    const bool n_ok = fit_n.slope >= band.at(0) && fit_n.slope <= band.at(1);
    checks.push_back(make_check("modes_exponent", n_ok,
                                {{"slope", fit_n.slope},
                                 {"slope_stderr", fit_n.slope_stderr},
                                 {"band", band}}));
    const bool phi_ok = std::abs(fit_phi.slope + 1.0) <= phi_tol;
    checks.push_back(make_check("phase_resolution_exponent", phi_ok,
                                {{"slope", fit_phi.slope}, {"expected", -1.0}, {"tol", phi_tol}}));

    json doc = report_skeleton("scaling", config, section);
    doc["results"] = json{
        {"rows", rows},
        {"modes_fit",
         {{"slope", fit_n.slope}, {"intercept", fit_n.intercept},
          {"slope_stderr", fit_n.slope_stderr},
          {"slope_at_half_epsilon", fit_n_half.slope},
          {"epsilon_sensitivity", fit_n_half.slope - fit_n.slope}}},
        {"phi_fit",
         {{"slope", fit_phi.slope}, {"intercept", fit_phi.intercept},
          {"slope_stderr", fit_phi.slope_stderr}}}};
    doc["checks"] = checks;
    const bool ok = all_checks_pass(checks);
    doc["all_passed"] = ok;
    return ExperimentReport{std::move(doc), ok};
}

// --------------------------------------------------------------- cubic gate

namespace {

struct CubicSweepPoint {
    double sigma = 0.0;
    std::size_t cutoff = 0;
    double mean_fidelity = 0.0;
    double min_fidelity = 1.0;
    double outcome_spread = 0.0;
    std::size_t completed = 0;
    std::size_t leakage_flagged = 0;
    std::size_t trials = 0;
};

CubicSweepPoint run_cubic_config(const ExperimentConfig& config, double gamma, double sigma,
                                 std::size_t cutoff, std::size_t trials, double resolution,
                                 double leakage_limit, double budget, double input_eta,
                                 const std::string& label) {
    const CubicAncilla ancilla = regularized_cubic_state(gamma, sigma, cutoff, budget);
    MultiModeState input = MultiModeState::vacuum({cutoff});
    if (input_eta != 0.0) input = apply(input, squeeze_one(input_eta, cutoff), 0);
    const std::uint64_t tag = stream_tag(label);
    const std::uint64_t seed = config.seed();

    std::vector<double> fid(trials, -1.0), outcome(trials, 0.0);
    std::vector<std::uint8_t> flagged(trials, 0), done(trials, 0);
    parallel_for(config.threads(), trials, [&](std::size_t t) {
        Rng rng = Rng::for_trial(seed, tag, t);
        try {
            const ProtocolTrace trace = cubic_phase_gate(input, ancilla, rng, resolution);
            fid[t] = trace.oracle_fidelity;
            outcome[t] = trace.measured_a;
            flagged[t] = trace.output_leakage > leakage_limit ? 1 : 0;
            done[t] = 1;
        } catch (const std::exception&) {
            done[t] = 0;  // counted against determinism
        }
    });

    CubicSweepPoint point;
    point.sigma = sigma;
    point.cutoff = cutoff;
    point.trials = trials;
    double amin = 1e300, amax = -1e300;
    for (std::size_t t = 0; t < trials; ++t) {
        if (!done[t]) continue;
        ++point.completed;
        point.mean_fidelity += fid[t];
        point.min_fidelity = std::min(point.min_fidelity, fid[t]);
        point.leakage_flagged += flagged[t];
        amin = std::min(amin, outcome[t]);
        amax = std::max(amax, outcome[t]);
    }
    if (point.completed > 0) point.mean_fidelity /= static_cast<double>(point.completed);

    // Per-outcome fidelity flatness: decile bins of the observed outcomes,
    // so every bin holds a tenth of the completed trials.
    if (point.completed >= 20 && amax > amin) {
        std::vector<std::size_t> order;
        order.reserve(point.completed);
        for (std::size_t t = 0; t < trials; ++t)
            if (done[t]) order.push_back(t);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return outcome[a] < outcome[b]; });
        constexpr std::size_t nbins = 10;
        double lo = 1e300, hi = -1e300;
        for (std::size_t b = 0; b < nbins; ++b) {
            const std::size_t begin = b * order.size() / nbins;
            const std::size_t end = (b + 1) * order.size() / nbins;
            if (end == begin) continue;
            double mean = 0.0;
            for (std::size_t i = begin; i < end; ++i) mean += fid[order[i]];
            mean /= static_cast<double>(end - begin);
            lo = std::min(lo, mean);
            hi = std::max(hi, mean);
        }
        point.outcome_spread = hi > lo ? hi - lo : 0.0;
    }
    return point;
}

}  // namespace

ExperimentReport run_cubic_gate(const ExperimentConfig& config) {
    const json& section = config.root.at("cubic_gate");
    const double gamma = section.at("gamma").get<double>();
    const std::vector<double> sigmas = section.at("sigmas").get<std::vector<double>>();
    const std::vector<std::size_t> cutoffs = section.at("cutoffs").get<std::vector<std::size_t>>();
    const std::size_t trials = section.at("trials").get<std::size_t>();
    const double resolution = section.at("homodyne_resolution").get<double>();
    const double slack = section.at("monotonicity_slack").get<double>();
    const double spread_max = section.at("outcome_spread_max").get<double>();
    const double spread_sigma = section.at("spread_sigma").get<double>();
    const std::size_t spread_cutoff = section.at("spread_cutoff").get<std::size_t>();
    const double leakage_limit = section.at("leakage_limit").get<double>();
    const double budget = section.at("gamma_sigma_cubed_budget").get<double>();
    const double input_eta = section.at("input_squeeze_eta").get<double>();
    require_trials(trials, "run_cubic_gate");
    if (sigmas.empty() || cutoffs.empty())
        throw std::invalid_argument("run_cubic_gate: sweep lists must be nonempty");

    json checks = json::array();

    // gamma = 0 control: the protocol degenerates to an identity channel.
    const json& control = section.at("control");
    const CubicSweepPoint control_point = run_cubic_config(
        config, 0.0, control.at("sigma").get<double>(), control.at("cutoff").get<std::size_t>(),
        control.at("trials").get<std::size_t>(), control.at("resolution").get<double>(),
        leakage_limit, budget, input_eta, "cubic/control");
    checks.push_back(make_check("control_fidelity",
                                control_point.mean_fidelity >=
                                    control.at("fidelity_min").get<double>(),
                                {{"mean_fidelity", control_point.mean_fidelity},
                                 {"min", control.at("fidelity_min").get<double>()}}));

    // Vacuum-input run at the tuned configuration.
    const json& tuned = section.at("tuned");
    const CubicSweepPoint tuned_point = run_cubic_config(
        config, gamma, tuned.at("sigma").get<double>(), tuned.at("cutoff").get<std::size_t>(),
        tuned.at("trials").get<std::size_t>(), tuned.at("resolution").get<double>(),
        leakage_limit, budget, 0.0, "cubic/tuned");
    checks.push_back(make_check("tuned_vacuum_fidelity",
                                tuned_point.mean_fidelity >=
                                    tuned.at("fidelity_min").get<double>(),
                                {{"mean_fidelity", tuned_point.mean_fidelity},
                                 {"min", tuned.at("fidelity_min").get<double>()},
                                 {"sigma", tuned.at("sigma")},
                                 {"cutoff", tuned.at("cutoff")}}));

    // (sigma, cutoff) sweep at the working gamma.
    std::vector<CubicSweepPoint> sweep;
    json sweep_rows = json::array();
    std::size_t total_trials = 0, total_completed = 0, total_flagged = 0;
    for (std::size_t cutoff : cutoffs) {
        for (double sigma : sigmas) {
            const std::string label = "cubic/gamma=" + fmt15(gamma) + "/sigma=" + fmt15(sigma) +
                                      "/cutoff=" + std::to_string(cutoff);
            CubicSweepPoint p = run_cubic_config(config, gamma, sigma, cutoff, trials, resolution,
                                                 leakage_limit, budget, input_eta, label);
            total_trials += p.trials;
            total_completed += p.completed;
            total_flagged += p.leakage_flagged;
            sweep_rows.push_back(json{{"sigma", p.sigma},
                                      {"cutoff", p.cutoff},
                                      {"mean_fidelity", p.mean_fidelity},
                                      {"min_fidelity", p.min_fidelity},
                                      {"outcome_spread", p.outcome_spread},
                                      {"completed", p.completed},
                                      {"trials", p.trials},
                                      {"leakage_flagged", p.leakage_flagged}});
            sweep.push_back(p);
        }
    }
    total_trials += control_point.trials + tuned_point.trials;
    total_completed += control_point.completed + tuned_point.completed;

    checks.push_back(make_check("determinism", total_completed == total_trials,
                                {{"completed", total_completed}, {"trials", total_trials}}));

    // Monotonicity along sigma at fixed cutoff.
    for (std::size_t ci = 0; ci < cutoffs.size(); ++ci) {
        for (std::size_t si = 0; si + 1 < sigmas.size(); ++si) {
            const CubicSweepPoint& a = sweep[ci * sigmas.size() + si];
            const CubicSweepPoint& b = sweep[ci * sigmas.size() + si + 1];
            const bool ok = b.mean_fidelity >= a.mean_fidelity - slack;
            checks.push_back(make_check(
                "monotone_sigma/cutoff=" + std::to_string(cutoffs[ci]) + "/" + fmt15(a.sigma) +
                    "->" + fmt15(b.sigma),
                ok, {{"fidelity_from", a.mean_fidelity}, {"fidelity_to", b.mean_fidelity},
                     {"slack", slack}}));
        }
    }
    // Monotonicity along cutoff at fixed sigma.
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        for (std::size_t ci = 0; ci + 1 < cutoffs.size(); ++ci) {
            const CubicSweepPoint& a = sweep[ci * sigmas.size() + si];
            const CubicSweepPoint& b = sweep[(ci + 1) * sigmas.size() + si];
            const bool ok = b.mean_fidelity >= a.mean_fidelity - slack;
            checks.push_back(make_check(
                "monotone_cutoff/sigma=" + fmt15(sigmas[si]) + "/" +
                    std::to_string(cutoffs[ci]) + "->" + std::to_string(cutoffs[ci + 1]),
                ok, {{"fidelity_from", a.mean_fidelity}, {"fidelity_to", b.mean_fidelity},
                     {"slack", slack}}));
        }
    }
    // Outcome flatness at the tuned configuration.
    for (const CubicSweepPoint& p : sweep) {
        if (p.cutoff == spread_cutoff && p.sigma == spread_sigma) {
            checks.push_back(make_check("outcome_spread", p.outcome_spread <= spread_max,
                                        {{"spread", p.outcome_spread},
                                         {"max", spread_max},
                                         {"sigma", p.sigma},
                                         {"cutoff", p.cutoff}}));
        }
    }

    // gamma' ~ n^{-1/2} scaling of the conditional preparation.
    const json& cond = section.at("conditional");
    json cond_result;
    {
        const double w = cond.at("w").get<double>();
        const double eta = cond.at("eta").get<double>();
        const std::size_t cutoff = cond.at("cutoff").get<std::size_t>();
        const std::size_t wanted = cond.at("preparations").get<std::size_t>();
        const std::size_t max_attempts = cond.at("max_attempts").get<std::size_t>();
        const std::vector<double> band = cond.at("ratio_band").get<std::vector<double>>();

        const MultiModeState weta = prepare_weta(w, eta, cutoff, cutoff);
        Rng rng(splitmix64(config.seed() ^ stream_tag("cubic/conditional")));
        std::vector<double> log_n, log_g;
        std::size_t attempts = 0, zero_outcomes = 0, fit_failures = 0;
        while (log_n.size() < wanted && attempts < max_attempts) {
            ++attempts;
            try {
                const auto anc = conditional_cubic_state(weta, rng);
                if (!anc) {
                    ++zero_outcomes;
                    continue;
                }
                if (anc->gamma_effective <= 0.0) {
                    ++fit_failures;
                    continue;
                }
                log_n.push_back(std::log(static_cast<double>(anc->conditioning_outcome)));
                log_g.push_back(std::log(anc->gamma_effective));
            } catch (const std::exception&) {
                ++fit_failures;
            }
        }
        if (log_n.size() < 2)
            throw std::runtime_error("run_cubic_gate: conditional study starved of outcomes");
        const OlsFit fit = ols_fit(log_n, log_g);
        const double ratio = std::pow(4.0, -fit.slope);
        const bool ok = ratio >= band.at(0) && ratio <= band.at(1);
        cond_result = json{{"preparations", log_n.size()},
                           {"attempts", attempts},
                           {"zero_outcomes", zero_outcomes},
                           {"fit_failures", fit_failures},
                           {"slope", fit.slope},
                           {"slope_stderr", fit.slope_stderr},
                           {"ratio_n_to_4n", ratio}};
        checks.push_back(make_check("gamma_scaling_ratio", ok,
                                    {{"ratio_n_to_4n", ratio}, {"band", band},
                                     {"slope", fit.slope}}));
    }

    json doc = report_skeleton("cubic-gate", config, section);
    doc["results"] = json{
        {"control",
         {{"mean_fidelity", control_point.mean_fidelity},
          {"min_fidelity", control_point.min_fidelity},
          {"completed", control_point.completed},
          {"trials", control_point.trials}}},
        {"tuned",
         {{"mean_fidelity", tuned_point.mean_fidelity},
          {"min_fidelity", tuned_point.min_fidelity},
          {"outcome_spread", tuned_point.outcome_spread},
          {"completed", tuned_point.completed},
          {"trials", tuned_point.trials}}},
        {"sweep", sweep_rows},
        {"conditional", cond_result},
        {"leakage", {{"limit", leakage_limit}, {"flagged_trials", total_flagged},
                     {"note", "flagged trials are disclosed, not dropped: the sweep has no "
                              "fitted quantity"}}}};
    doc["checks"] = checks;
    const bool ok = all_checks_pass(checks);
    doc["all_passed"] = ok;
    return ExperimentReport{std::move(doc), ok};
}

// --------------------------------------------------------------------- kerr

ExperimentReport run_kerr(const ExperimentConfig& config) {
    const json& section = config.root.at("kerr");
    const std::size_t period = section.at("period").get<std::size_t>();
    const double chi_t = 2.0 * M_PI / static_cast<double>(period);
    const double delta_phi = section.at("delta_phi_rel").get<double>() * chi_t;
    const std::size_t cutoff = section.at("cutoff").get<std::size_t>();
    const std::size_t trials = section.at("trials_per_input").get<std::size_t>();
    const std::uint64_t seed = config.seed();
    require_trials(trials, "run_kerr");

    json checks = json::array();
    json rows = json::array();

    // Residue arithmetic on every Fock input below the cutoff.
    std::size_t failures = 0;
    for (std::size_t n = 0; n < cutoff; ++n) {
        const MultiModeState input = make_number_state(n, cutoff);
        const std::uint64_t tag = stream_tag("kerr/fock=" + std::to_string(n));
        std::vector<std::uint8_t> ok_trial(trials, 0);
        parallel_for(config.threads(), trials, [&](std::size_t t) {
            Rng rng = Rng::for_trial(seed, tag, t);
            const MeasurementRecord rec = kerr_qnd_measure(input, 0, chi_t, delta_phi, rng);
            ok_trial[t] =
                static_cast<std::size_t>(rec.outcome) == n % period ? 1 : 0;
        });
        std::size_t good = 0;
        for (auto v : ok_trial) good += v;
        failures += trials - good;
        rows.push_back(json{{"n", n}, {"expected", n % period}, {"agreeing_trials", good},
                            {"trials", trials}});
    }
    checks.push_back(make_check("residue_inference", failures == 0,
                                {{"failures", failures},
                                 {"inputs", cutoff},
                                 {"trials_per_input", trials}}));

    // The aliasing example: |11> reads 11 mod 8 = 3.
    {
        const std::size_t alias = section.at("alias_input").get<std::size_t>();
        const MultiModeState input = make_number_state(alias, cutoff);
        Rng rng(splitmix64(seed ^ stream_tag("kerr/alias")));
        const MeasurementRecord rec = kerr_qnd_measure(input, 0, chi_t, delta_phi, rng);
        checks.push_back(make_check("alias_inference",
                                    static_cast<std::size_t>(rec.outcome) == alias % period,
                                    {{"input", alias}, {"inferred", rec.outcome},
                                     {"expected", alias % period}}));
    }

    // A superposition within one residue class must survive the measurement.
    {
        const auto levels = section.at("superposition").get<std::vector<std::size_t>>();
        const std::size_t sup_trials = section.at("superposition_trials").get<std::size_t>();
        const double fid_min = section.at("survival_fidelity_min").get<double>();
        const double mass_max = section.at("residue_mass_max").get<double>();
        const MultiModeState input = superposition_state(levels, cutoff);
        const std::uint64_t tag = stream_tag("kerr/superposition");

        std::vector<double> fids(sup_trials, 0.0), masses(sup_trials, 0.0);
        parallel_for(config.threads(), sup_trials, [&](std::size_t t) {
            Rng rng = Rng::for_trial(seed, tag, t);
            const MeasurementRecord rec = kerr_qnd_measure(input, 0, chi_t, delta_phi, rng);
            fids[t] = fidelity(rec.post_state, input);
            const std::vector<double> dist = number_distribution(rec.post_state, 0);
            const auto inferred = static_cast<std::size_t>(rec.outcome);
            double outside = 0.0;
            for (std::size_t n = 0; n < dist.size(); ++n)
                if (n % period != inferred) outside += dist[n];
            masses[t] = outside;
        });
        double fmin = 1.0, mmax = 0.0;
        for (std::size_t t = 0; t < sup_trials; ++t) {
            fmin = std::min(fmin, fids[t]);
            mmax = std::max(mmax, masses[t]);
        }
        checks.push_back(make_check("superposition_survival", fmin >= fid_min,
                                    {{"min_fidelity", fmin}, {"threshold", fid_min}}));
        checks.push_back(make_check("residue_class_confinement", mmax <= mass_max,
                                    {{"max_mass_outside_class", mmax}, {"threshold", mass_max}}));
    }

    // Precision wiring: delta_n = delta_phi / (chi t).
    json precision;
    {
        const json& pe = section.at("precision_example");
        const double dphi = pe.at("delta_phi").get<double>();
        const double ct = 2.0 * M_PI / pe.at("period").get<double>();
        const std::size_t n = pe.at("n").get<std::size_t>();
        const double dn = dphi / ct;
        const PrecisionCheck pc = precision_check(dn, n);
        const double expected = pe.at("expected_delta_n").get<double>();
        const double tol = pe.at("expected_tol").get<double>();
        precision = json{{"delta_phi", dphi}, {"chi_t", ct}, {"delta_n", dn},
                         {"ratio", pc.ratio}, {"pass", pc.pass}};
        checks.push_back(make_check("precision_wiring",
                                    std::abs(dn - expected) <= tol && pc.pass,
                                    {{"delta_n", dn}, {"expected", expected}, {"tol", tol},
                                     {"ratio", pc.ratio}}));
    }

    json doc = report_skeleton("kerr", config, section);
    doc["results"] = json{{"chi_t", chi_t}, {"delta_phi", delta_phi}, {"period", period},
                          {"fock_rows", rows}, {"precision", precision}};
    doc["checks"] = checks;
    const bool ok = all_checks_pass(checks);
    doc["all_passed"] = ok;
    return ExperimentReport{std::move(doc), ok};
}

// ------------------------------------------------------------------ pointer

ExperimentReport run_pointer(const ExperimentConfig& config) {
    const json& section = config.root.at("pointer");
    const double lambda_t = section.at("lambda_t").get<double>();
    const double delta_p = section.at("delta_p_rel").get<double>() * lambda_t;
    const std::size_t cutoff = section.at("cutoff").get<std::size_t>();
    const std::size_t trials = section.at("trials").get<std::size_t>();
    const double sigma_band = section.at("sigma_band").get<double>();
    const double collapse_max = section.at("collapse_residual_max").get<double>();
    const std::uint64_t seed = config.seed();
    require_trials(trials, "run_pointer");

    json checks = json::array();

    // Superposition collapse: one Fock state per trial, P(low level) ~ 1/2.
    const auto levels = section.at("superposition").get<std::vector<std::size_t>>();
    const MultiModeState input = superposition_state(levels, cutoff);
    const std::uint64_t tag = stream_tag("pointer/superposition");

    std::vector<double> outcome(trials, 0.0);
    std::vector<double> residual(trials, 0.0);
    parallel_for(config.threads(), trials, [&](std::size_t t) {
        Rng rng = Rng::for_trial(seed, tag, t);
        const MeasurementRecord rec = pointer_measure(input, 0, lambda_t, delta_p, rng);
        outcome[t] = rec.outcome;
        const std::vector<double> dist = number_distribution(rec.post_state, 0);
        double largest = 0.0, second = 0.0;
        for (double v : dist) {
            if (v > largest) {
                second = largest;
                largest = v;
            } else {
                second = std::max(second, v);
            }
        }
        residual[t] = second;
    });

    std::size_t low_count = 0, valid = 0;
    double worst_residual = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto o = static_cast<std::size_t>(outcome[t]);
        if (o == levels.at(0)) ++low_count;
        if (o == levels.at(0) || o == levels.at(1)) ++valid;
        worst_residual = std::max(worst_residual, residual[t]);
    }
    const double freq = static_cast<double>(low_count) / static_cast<double>(trials);
    const double se = std::sqrt(0.25 / static_cast<double>(trials));
    checks.push_back(make_check("outcomes_in_support", valid == trials,
                                {{"valid", valid}, {"trials", trials}}));
    checks.push_back(make_check("collapse_to_single_fock", worst_residual <= collapse_max,
                                {{"worst_second_mass", worst_residual},
                                 {"threshold", collapse_max}}));
    checks.push_back(make_check("balanced_statistics",
                                std::abs(freq - 0.5) <= sigma_band * se,
                                {{"frequency", freq}, {"expected", 0.5}, {"std_error", se},
                                 {"band_sigmas", sigma_band}}));

    // No folding: |11> reads 11, not 11 mod period; vacuum reads 0.
    {
        const std::size_t alias = section.at("alias_input").get<std::size_t>();
        const MultiModeState fock = make_number_state(alias, cutoff);
        Rng rng(splitmix64(seed ^ stream_tag("pointer/alias")));
        const MeasurementRecord rec = pointer_measure(fock, 0, lambda_t, delta_p, rng);
        checks.push_back(make_check("unfolded_inference",
                                    static_cast<std::size_t>(rec.outcome) == alias,
                                    {{"input", alias}, {"inferred", rec.outcome}}));
        const MeasurementRecord vac =
            pointer_measure(MultiModeState::vacuum({cutoff}), 0, lambda_t, delta_p, rng);
        checks.push_back(make_check("vacuum_inference", vac.outcome == 0.0,
                                    {{"inferred", vac.outcome}}));
    }

    // Precision wiring for the pointer route: delta_n = delta_p / (lambda t).
    json precision;
    {
        const json& pe = section.at("precision_example");
        const double dp = pe.at("delta_p").get<double>();
        const double lt = pe.at("lambda_t").get<double>();
        const std::size_t n = pe.at("n").get<std::size_t>();
        const double dn = dp / lt;
        const PrecisionCheck pc = precision_check(dn, n);
        precision = json{{"delta_p", dp}, {"lambda_t", lt}, {"delta_n", dn},
                         {"ratio", pc.ratio}, {"pass", pc.pass}};
        checks.push_back(make_check("precision_wiring", pc.pass,
                                    {{"delta_n", dn}, {"ratio", pc.ratio}}));
    }

    json doc = report_skeleton("pointer", config, section);
    doc["results"] = json{{"lambda_t", lambda_t},
                          {"delta_p", delta_p},
                          {"superposition_frequency_low", freq},
                          {"trials", trials},
                          {"worst_second_mass", worst_residual},
                          {"precision", precision}};
    doc["checks"] = checks;
    const bool ok = all_checks_pass(checks);
    doc["all_passed"] = ok;
    return ExperimentReport{std::move(doc), ok};
}

// ---------------------------------------------------------------------- all

ExperimentReport run_all(const ExperimentConfig& config) {
    json doc;
    doc["schema_version"] = 1;
    doc["experiment"] = "all";
    doc["seed"] = config.seed();
    doc["threads"] = config.threads();
    json experiments;
    bool ok = true;
    for (const char* name : {"undercount", "scaling", "cubic-gate", "kerr", "pointer"}) {
        ExperimentReport r = run_experiment(name, config);
        ok = ok && r.all_passed;
        experiments[name] = std::move(r.doc);
    }
    doc["experiments"] = std::move(experiments);
    doc["all_passed"] = ok;
    return ExperimentReport{std::move(doc), ok};
}

ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config) {
    if (name == "undercount") return run_undercount(config);
    if (name == "scaling") return run_scaling(config);
    if (name == "cubic-gate") return run_cubic_gate(config);
    if (name == "kerr") return run_kerr(config);
    if (name == "pointer") return run_pointer(config);
    if (name == "all") return run_all(config);
    throw std::invalid_argument("unknown experiment: " + name);
}

}  // namespace cvsim
