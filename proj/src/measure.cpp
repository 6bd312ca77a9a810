#include "cvsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "cvsim/gates.hpp"

namespace cvsim {

namespace {

void require_normalized(const MultiModeState& s, const char* who) {
    if (std::abs(s.norm() - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(who) + ": state must be normalized");
}

double wrap_to_pi(double x) {
    x = std::fmod(x, 2.0 * M_PI);
    if (x > M_PI) x -= 2.0 * M_PI;
    if (x < -M_PI) x += 2.0 * M_PI;
    return x;
}

/// Applies a diagonal-in-n weight to one mode and renormalizes.
MultiModeState weighted_number_projection(const MultiModeState& state, std::size_t mode,
                                          const std::vector<double>& weights) {
    MultiModeState out = state;
    std::vector<cxd>& a = out.mutable_amplitudes();
    const std::size_t d = state.cutoff(mode);
    const std::size_t s = state.stride(mode);
    const std::size_t block = d * s;
    for (std::size_t base = 0; base < state.dim(); base += block)
        for (std::size_t k = 0; k < d; ++k) {
            const double w = weights[k];
            for (std::size_t inner = 0; inner < s; ++inner) a[base + k * s + inner] *= w;
        }
    return out.normalized();
}

}  // namespace

void DetectorConfig::validate() const {
    switch (model) {
        case Model::multiplexed:
            if (n_modes < 1) throw std::invalid_argument("DetectorConfig: n_modes must be >= 1");
            if ((n_modes & (n_modes - 1)) != 0)
                throw std::invalid_argument("DetectorConfig: n_modes must be a power of 2");
            break;
        case Model::kerr:
            if (chi_t <= 0.0) throw std::invalid_argument("DetectorConfig: chi_t must be > 0");
            if (delta_phi <= 0.0)
                throw std::invalid_argument("DetectorConfig: delta_phi must be > 0");
            break;
        case Model::pointer:
            if (lambda_t <= 0.0)
                throw std::invalid_argument("DetectorConfig: lambda_t must be > 0");
            if (delta_p <= 0.0) throw std::invalid_argument("DetectorConfig: delta_p must be > 0");
            break;
        default:
            break;
    }
}

MeasurementRecord photon_count_pvm(const MultiModeState& state, std::size_t mode, Rng& rng) {
    require_normalized(state, "photon_count_pvm");
    const std::vector<double> p = number_distribution(state, mode);
    const std::size_t n = rng.categorical(p);
    auto [prob, post] = project_number(state, mode, n);
    return MeasurementRecord{static_cast<double>(n), prob, std::move(post), "pvm",
                             static_cast<double>(n)};
}

MeasurementRecord itd_pvm(const MultiModeState& state, std::size_t mode, Rng& rng) {
    require_normalized(state, "itd_pvm");
    const std::vector<double> p = number_distribution(state, mode);
    const double p0 = p[0];
    const bool vacuum = rng.uniform() < p0;
    if (vacuum) {
        auto [prob, post] = project_number(state, mode, 0);
        return MeasurementRecord{0.0, prob, std::move(post), "itd", 0.0};
    }
    // Saturated branch: zero out n = 0, keep all relative amplitudes n >= 1.
    MultiModeState out = state;
    std::vector<cxd>& a = out.mutable_amplitudes();
    const std::size_t s = state.stride(mode);
    const std::size_t block = state.cutoff(mode) * s;
    for (std::size_t base = 0; base < state.dim(); base += block)
        for (std::size_t inner = 0; inner < s; ++inner) a[base + inner] = 0.0;
    return MeasurementRecord{1.0, 1.0 - p0, out.normalized(), "itd", 1.0};
}

UndercountProbability undercount_probability(std::size_t k, std::size_t n_modes) {
    if (n_modes < 1) throw std::invalid_argument("undercount_probability: N must be >= 1");
    UndercountProbability r;
    r.bound = static_cast<double>(k) * static_cast<double>(k - (k > 0 ? 1 : 0)) /
              (2.0 * static_cast<double>(n_modes));
    if (k == 0) {
        r.bound = 0.0;
        r.exact = 0.0;
        return r;
    }
    double no_collision = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
        if (j >= n_modes) {
            no_collision = 0.0;
            break;
        }
        no_collision *= 1.0 - static_cast<double>(j) / static_cast<double>(n_modes);
    }
    r.exact = 1.0 - no_collision;
    return r;
}

namespace {

/// 50/50 beamsplitters for the fan-out tree, cached per cutoff pair.
const ModeOperator& tree_beamsplitter(std::size_t d1, std::size_t d2) {
    thread_local std::map<std::pair<std::size_t, std::size_t>, ModeOperator> cache;
    auto key = std::make_pair(d1, d2);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, beamsplitter(M_PI / 4.0, d1, d2)).first;
    return it->second;
}

std::vector<cxd> basis_vector(std::size_t dim, std::size_t n) {
    std::vector<cxd> v(dim, cxd(0.0, 0.0));
    v[n] = 1.0;
    return v;
}

/// Working set for the depth-first tree simulation. Tree axes are addressed
/// through handles so that removing a measured leaf does not invalidate the
/// positions of pending siblings.
struct TreeSim {
    MultiModeState w;
    std::vector<std::size_t> pos;  // handle -> axis position in w
    std::size_t remaining;         // photon budget still unmeasured
    std::size_t clicks = 0;
    double branch_probability = 1.0;
    Rng* rng = nullptr;
    bool fully_consumed = false;   // the whole working state was measured away

    void remove_axis_at(std::size_t p) {
        for (auto& q : pos)
            if (q > p && q != SIZE_MAX) --q;
    }

    /// Projects the axis onto |n> and drops it. If this was the last mode of
    /// the working state the state is fully consumed and a sentinel remains.
    void project_out_axis(std::size_t handle, std::size_t n) {
        const std::size_t p = pos[handle];
        if (w.mode_count() == 1) {
            fully_consumed = true;
            w = MultiModeState::vacuum({2});
        } else {
            auto [weight, reduced] = contract_mode(w, p, basis_vector(w.cutoff(p), n));
            w = std::move(reduced);
            remove_axis_at(p);
        }
        pos[handle] = SIZE_MAX;
    }

    void measure_leaf(std::size_t handle) {
        const std::vector<double> dist = number_distribution(w, pos[handle]);
        const std::size_t n = rng->categorical(dist);
        branch_probability *= dist[n];
        if (n > 0) ++clicks;
        // The ITD records click / no click; the leaf is then resolved in the
        // number basis before being discarded, which leaves the click
        // statistics of every other leaf unchanged and keeps the state pure.
        project_out_axis(handle, n);
        remaining -= n;
        trim_tree_axes();
    }

    /// Shrinks every live tree axis to the remaining photon budget.
    void trim_tree_axes() {
        if (fully_consumed) return;
        const std::size_t target = std::max<std::size_t>(2, remaining + 1);
        for (std::size_t h = 0; h < pos.size(); ++h) {
            if (pos[h] == SIZE_MAX) continue;
            if (w.cutoff(pos[h]) > target) w = trim_mode_cutoff(w, pos[h], target);
        }
    }

    /// True when the axis is exactly vacuum (within numerical dust).
    bool axis_is_vacuum(std::size_t handle) const {
        const std::vector<double> dist = number_distribution(w, pos[handle]);
        double rest = 0.0;
        for (std::size_t n = 1; n < dist.size(); ++n) rest += dist[n];
        return rest < 1e-15;
    }

    void fan(std::size_t handle, std::size_t levels) {
        if (levels == 0) {
            measure_leaf(handle);
            return;
        }
        if (remaining == 0 || axis_is_vacuum(handle)) {
            // No photons can reach this subtree: every ITD reads 0.
            project_out_axis(handle, 0);
            return;
        }
        const std::size_t dh = w.cutoff(pos[handle]);
        const std::size_t danc = std::min<std::size_t>(dh, remaining + 1);
        w = append_vacuum_mode(w, std::max<std::size_t>(2, danc));
        pos.push_back(w.mode_count() - 1);
        const std::size_t anc = pos.size() - 1;
        w = apply(w, tree_beamsplitter(dh, w.cutoff(pos[anc])), pos[handle], pos[anc]);
        fan(handle, levels - 1);
        fan(anc, levels - 1);
    }
};

}  // namespace

MeasurementRecord multiplexed_count(const MultiModeState& state, std::size_t mode,
                                    std::size_t n_modes, Rng& rng) {
    require_normalized(state, "multiplexed_count");
    if (n_modes < 1) throw std::invalid_argument("multiplexed_count: N must be >= 1");
    if ((n_modes & (n_modes - 1)) != 0)
        throw std::invalid_argument("multiplexed_count: N must be a power of 2 (balanced tree)");

    // Photon budget from the marginal support of the measured mode.
    const std::vector<double> marginal = number_distribution(state, mode);
    std::size_t k_max = 0;
    for (std::size_t n = 0; n < marginal.size(); ++n)
        if (marginal[n] > 1e-15) k_max = n;

    std::size_t levels = 0;
    while ((std::size_t{1} << levels) < n_modes) ++levels;

    // Reject configurations whose peak working set cannot fit.
    const double peak = std::pow(static_cast<double>(k_max + 1),
                                 static_cast<double>(levels + 1)) *
                        static_cast<double>(state.dim()) / static_cast<double>(state.cutoff(mode));
    if (peak > 4e6)
        throw std::invalid_argument("multiplexed_count: cutoff budget exceeded for N = " +
                                    std::to_string(n_modes));

    TreeSim sim{state, {}, k_max, 0, 1.0, &rng, false};
    // Work at the minimal cutoff for the measured mode.
    if (state.cutoff(mode) > k_max + 1)
        sim.w = trim_mode_cutoff(sim.w, mode, std::max<std::size_t>(2, k_max + 1));
    sim.pos.push_back(mode);
    sim.fan(0, levels);

    return MeasurementRecord{static_cast<double>(sim.clicks), sim.branch_probability,
                             std::move(sim.w), "multiplexed",
                             static_cast<double>(sim.clicks)};
}

MeasurementRecord kerr_qnd_measure(const MultiModeState& state, std::size_t mode,
                                   double chi_t, double delta_phi, Rng& rng) {
    require_normalized(state, "kerr_qnd_measure");
    if (chi_t <= 0.0) throw std::invalid_argument("kerr_qnd_measure: chi_t must be > 0");
    if (delta_phi >= chi_t / 2.0)
        throw std::invalid_argument(
            "kerr_qnd_measure: delta_phi >= chi_t/2 makes nearest-integer rounding ambiguous");

    const std::size_t period = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(2.0 * M_PI / chi_t)));

    const std::vector<double> dist = number_distribution(state, mode);
    const std::size_t n_true = rng.categorical(dist);

    double phi = std::fmod(chi_t * static_cast<double>(n_true) + delta_phi * rng.gaussian(),
                           2.0 * M_PI);
    if (phi < 0.0) phi += 2.0 * M_PI;

    const long long inferred_raw = std::llround(phi / chi_t);
    const std::size_t inferred =
        static_cast<std::size_t>(((inferred_raw % static_cast<long long>(period)) +
                                  static_cast<long long>(period)) %
                                 static_cast<long long>(period));

    // Gaussian response on the wrapped phase distance, restricted to the
    // inferred residue class. Log-weights first to dodge underflow.
    const std::size_t d = state.cutoff(mode);
    std::vector<double> logw(d, -1e300);
    double peak = -1e300;
    for (std::size_t n = 0; n < d; ++n) {
        if (n % period != inferred) continue;
        const double dphi = wrap_to_pi(phi - chi_t * static_cast<double>(n));
        logw[n] = -dphi * dphi / (4.0 * delta_phi * delta_phi);
        peak = std::max(peak, logw[n]);
    }
    std::vector<double> weights(d, 0.0);
    for (std::size_t n = 0; n < d; ++n)
        weights[n] = (n % period == inferred) ? std::exp(logw[n] - peak) : 0.0;

    double class_prob = 0.0;
    for (std::size_t n = 0; n < d; ++n)
        if (n % period == inferred) class_prob += dist[n];
    if (class_prob <= 0.0)
        throw std::runtime_error(
            "kerr_qnd_measure: readout noise crossed into a residue class with no "
            "amplitude; delta_phi is too close to chi_t/2 for this input");

    MultiModeState post = weighted_number_projection(state, mode, weights);
    return MeasurementRecord{static_cast<double>(inferred), class_prob, std::move(post), "kerr",
                             phi};
}

MeasurementRecord pointer_measure(const MultiModeState& state, std::size_t mode,
                                  double lambda_t, double delta_p, Rng& rng) {
    require_normalized(state, "pointer_measure");
    if (lambda_t <= 0.0) throw std::invalid_argument("pointer_measure: lambda_t must be > 0");
    if (delta_p >= lambda_t / 2.0)
        throw std::invalid_argument(
            "pointer_measure: delta_p >= lambda_t/2 makes nearest-integer rounding ambiguous");

    const std::vector<double> dist = number_distribution(state, mode);
    const std::size_t n_true = rng.categorical(dist);
    const double p = lambda_t * static_cast<double>(n_true) + delta_p * rng.gaussian();
    const long long inferred_raw = std::llround(p / lambda_t);
    const std::size_t inferred =
        static_cast<std::size_t>(std::max<long long>(0, inferred_raw));

    // Unbounded pointer: plain Gaussian weighting, no residue folding.
    const std::size_t d = state.cutoff(mode);
    std::vector<double> weights(d, 0.0);
    double peak = -1e300;
    for (std::size_t n = 0; n < d; ++n) {
        const double dp = p - lambda_t * static_cast<double>(n);
        weights[n] = -dp * dp / (4.0 * delta_p * delta_p);
        peak = std::max(peak, weights[n]);
    }
    for (std::size_t n = 0; n < d; ++n) weights[n] = std::exp(weights[n] - peak);

    const double prob = inferred < d ? dist[inferred] : 0.0;
    MultiModeState post = weighted_number_projection(state, mode, weights);
    return MeasurementRecord{static_cast<double>(inferred), prob, std::move(post), "pointer", p};
}

namespace {

struct HomodyneGrid {
    QuadratureGrid grid;
    std::vector<double> density;  // per point, sums * spacing to 1
};

/// Position density of one mode of a (possibly entangled) state, refined
/// until the discretized mass is within 1e-6 of 1.
HomodyneGrid homodyne_density(const MultiModeState& state, std::size_t mode) {
    const std::size_t d = state.cutoff(mode);
    double span = 4.0 * std::sqrt(static_cast<double>(d));
    double spacing = 0.25 / std::sqrt(static_cast<double>(d));

    for (int attempt = 0; attempt < 4; ++attempt) {
        const std::size_t npoints =
            static_cast<std::size_t>(std::ceil(2.0 * span / spacing)) + 1;
        QuadratureGrid grid = QuadratureGrid::linspace(-span, span, npoints);
        const std::vector<double> phi = hermite_functions(d, grid.points);

        // density(q) = sum_rest | sum_n c_{n,rest} phi_n(q) |^2
        const std::size_t s = state.stride(mode);
        const std::size_t block = d * s;
        std::vector<double> density(npoints, 0.0);
        const cxd* a = state.amplitudes().data();
        for (std::size_t i = 0; i < npoints; ++i) {
            const double* row = phi.data() + i * d;
            double acc = 0.0;
            for (std::size_t base = 0; base < state.dim(); base += block)
                for (std::size_t inner = 0; inner < s; ++inner) {
                    cxd amp(0.0, 0.0);
                    for (std::size_t n = 0; n < d; ++n) amp += a[base + n * s + inner] * row[n];
                    acc += std::norm(amp);
                }
            density[i] = acc;
        }
        double mass = 0.0;
        for (double v : density) mass += v;
        mass *= grid.spacing;
        if (std::abs(mass - 1.0) <= 1e-6) return HomodyneGrid{std::move(grid), std::move(density)};
        span *= 1.5;
        spacing *= 0.5;
    }
    throw std::runtime_error("homodyne: adaptive grid failed to capture the state");
}

}  // namespace

std::vector<cxd> gaussian_bin_vector(std::size_t cutoff, double q0, double width) {
    if (width <= 0.0) throw std::invalid_argument("gaussian_bin_vector: width must be > 0");
    // The packet is dead beyond 8 widths, so only that window contributes.
    const double lo = q0 - 8.0 * width, hi = q0 + 8.0 * width;
    const double spacing = std::min(width / 8.0, 0.1 / std::sqrt(static_cast<double>(cutoff)));
    const std::size_t npoints = static_cast<std::size_t>(std::ceil((hi - lo) / spacing)) + 1;
    QuadratureGrid grid = QuadratureGrid::linspace(lo, hi, npoints);
    const std::vector<double> phi = hermite_functions(cutoff, grid.points);

    const double norm = std::pow(2.0 * M_PI * width * width, -0.25);
    std::vector<cxd> v(cutoff, cxd(0.0, 0.0));
    for (std::size_t i = 0; i < npoints; ++i) {
        const double q = grid.points[i];
        const double g = norm * std::exp(-(q - q0) * (q - q0) / (4.0 * width * width));
        const double* row = phi.data() + i * cutoff;
        for (std::size_t n = 0; n < cutoff; ++n) v[n] += g * row[n] * grid.spacing;
    }
    double total = 0.0;
    for (const auto& c : v) total += std::norm(c);
    if (total <= 0.0) throw std::runtime_error("gaussian_bin_vector: packet lost to truncation");
    const double inv = 1.0 / std::sqrt(total);
    for (auto& c : v) c *= inv;
    return v;
}

HomodyneReduction homodyne_sample_and_reduce(const MultiModeState& state, std::size_t mode,
                                             Rng& rng, double resolution) {
    require_normalized(state, "homodyne_measure");
    if (resolution <= 0.0) throw std::invalid_argument("homodyne: resolution must be > 0");
    HomodyneGrid hg = homodyne_density(state, mode);
    const std::size_t cell = rng.categorical(hg.density);
    const double jitter = (rng.uniform() - 0.5) * hg.grid.spacing;
    const double outcome = hg.grid.points[cell] + jitter;
    const double density = hg.density[cell];

    if (state.mode_count() == 1)
        return HomodyneReduction{outcome, density, MultiModeState::vacuum({2})};
    const std::vector<cxd> bin = gaussian_bin_vector(state.cutoff(mode), outcome, resolution);
    auto [weight, reduced] = contract_mode(state, mode, bin);
    return HomodyneReduction{outcome, density, std::move(reduced)};
}

MeasurementRecord homodyne_measure(const MultiModeState& state, std::size_t mode, Rng& rng,
                                   double resolution) {
    HomodyneReduction hr = homodyne_sample_and_reduce(state, mode, rng, resolution);
    const std::vector<cxd> bin = gaussian_bin_vector(state.cutoff(mode), hr.outcome, resolution);
    MultiModeState post = state.mode_count() == 1
                              ? MultiModeState::from_amplitudes({state.cutoff(0)}, bin, true)
                              : embed_mode(hr.reduced, mode, bin);
    return MeasurementRecord{hr.outcome, hr.density, std::move(post), "homodyne", hr.outcome};
}

PrecisionCheck precision_check(double delta_n, std::size_t n, double strictness) {
    if (n < 1) throw std::invalid_argument("precision_check: n must be >= 1");
    const double ratio = delta_n / std::cbrt(static_cast<double>(n));
    return PrecisionCheck{ratio < strictness, ratio};
}

MeasurementRecord measure(const MultiModeState& state, std::size_t mode,
                          const DetectorConfig& config, Rng& rng) {
    config.validate();
    switch (config.model) {
        case DetectorConfig::Model::pvm:
            return photon_count_pvm(state, mode, rng);
        case DetectorConfig::Model::itd:
            return itd_pvm(state, mode, rng);
        case DetectorConfig::Model::multiplexed:
            return multiplexed_count(state, mode, config.n_modes, rng);
        case DetectorConfig::Model::kerr:
            return kerr_qnd_measure(state, mode, config.chi_t, config.delta_phi, rng);
        case DetectorConfig::Model::pointer:
            return pointer_measure(state, mode, config.lambda_t, config.delta_p, rng);
    }
    throw std::logic_error("measure: unknown model");
}

}  // namespace cvsim
