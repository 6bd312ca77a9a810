#include "cvsim/cubic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace cvsim {

namespace {

std::vector<cxd> basis_vector(std::size_t dim, std::size_t n) {
    std::vector<cxd> v(dim, cxd(0.0, 0.0));
    v[n] = 1.0;
    return v;
}

const ModeOperator& cached_direct_cubic(double gamma, std::size_t cutoff) {
    thread_local std::map<std::pair<long long, std::size_t>, ModeOperator> cache;
    const auto key = std::make_pair(static_cast<long long>(std::llround(gamma * 1e12)), cutoff);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, direct_cubic(gamma, cutoff)).first;
    return it->second;
}

const SumGateFactors& cached_sum_factors(std::size_t dc, std::size_t dt) {
    thread_local std::map<std::pair<std::size_t, std::size_t>, SumGateFactors> cache;
    const auto key = std::make_pair(dc, dt);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, sum_gate_factors(dc, dt)).first;
    return it->second;
}

}  // namespace

MultiModeState prepare_weta(double w, double eta, std::size_t cutoff_1, std::size_t cutoff_2) {
    const double load = w * w + std::sinh(eta) * std::sinh(eta);
    if (load > static_cast<double>(cutoff_1) / 2.0)
        throw std::invalid_argument(
            "prepare_weta: w^2 + sinh^2(eta) = " + std::to_string(load) +
            " overflows the leakage budget of cutoff " + std::to_string(cutoff_1));
    MultiModeState s = epr_pair(eta, cutoff_1, cutoff_2);
    return apply(s, displacement(cxd(0.0, w), cutoff_1), 0);
}

PhaseFit fit_phase_polynomial(const MultiModeState& single_mode, int degree) {
    if (degree < 1 || degree > 3)
        throw std::invalid_argument("fit_phase_polynomial: degree must be 1..3");
    const std::size_t d = single_mode.cutoff(0);
    const QuadratureGrid grid = QuadratureGrid::for_cutoff(d);
    const std::vector<cxd> psi = wavefunction(single_mode, grid);

    // Density moments locate the fit window.
    double mass = 0.0, mean = 0.0, second = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double w = std::norm(psi[i]);
        mass += w;
        mean += w * grid.points[i];
        second += w * grid.points[i] * grid.points[i];
        peak = std::max(peak, std::abs(psi[i]));
    }
    mean /= mass;
    const double sigma = std::sqrt(std::max(second / mass - mean * mean, 1e-12));
    const double lo = mean - 2.0 * sigma, hi = mean + 2.0 * sigma;
    const double amp_floor = 0.05 * peak;

    // Unwrapped phase samples inside the window, weighted by |psi|^2.
    std::vector<double> qs, thetas, ws;
    double prev = 0.0;
    bool have_prev = false;
    double offset = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double q = grid.points[i];
        if (q < lo || q > hi) continue;
        if (std::abs(psi[i]) < amp_floor) {
            have_prev = false;  // phase is noise near nodes; restart unwrap
            continue;
        }
        double th = std::arg(psi[i]);
        if (have_prev) {
            while (th + offset - prev > M_PI) offset -= 2.0 * M_PI;
            while (th + offset - prev < -M_PI) offset += 2.0 * M_PI;
        } else {
            // Re-anchor near the last good sample by whole turns only, so a
            // genuine pi-jump across a node is kept, not flattened away.
            offset = 2.0 * M_PI * std::round((prev - th) / (2.0 * M_PI));
        }
        th += offset;
        prev = th;
        have_prev = true;
        qs.push_back(q);
        thetas.push_back(th);
        ws.push_back(std::norm(psi[i]));
    }
    if (qs.size() < static_cast<std::size_t>(4 * (degree + 1)))
        throw std::runtime_error("fit_phase_polynomial: too few usable phase samples");

    // Weighted normal equations in the centered, scaled coordinate.
    const int m = degree + 1;
    std::vector<long double> ata(m * m, 0.0L), atb(m, 0.0L);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const long double u = (qs[i] - mean) / sigma;
        long double pows[4] = {1.0L, u, u * u, u * u * u};
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) ata[r * m + c] += ws[i] * pows[r] * pows[c];
            atb[r] += ws[i] * pows[r] * thetas[i];
        }
    }
    // Gaussian elimination with partial pivoting on the tiny system.
    std::vector<long double> x(m, 0.0L);
    {
        std::vector<long double> a = ata, b = atb;
        for (int col = 0; col < m; ++col) {
            int piv = col;
            for (int r = col + 1; r < m; ++r)
                if (std::abs(static_cast<double>(a[r * m + col])) >
                    std::abs(static_cast<double>(a[piv * m + col])))
                    piv = r;
            for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
            std::swap(b[col], b[piv]);
            const long double diag = a[col * m + col];
            if (std::abs(static_cast<double>(diag)) < 1e-30)
                throw std::runtime_error("fit_phase_polynomial: singular normal equations");
            for (int r = col + 1; r < m; ++r) {
                const long double f = a[r * m + col] / diag;
                for (int c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
                b[r] -= f * b[col];
            }
        }
        for (int r = m - 1; r >= 0; --r) {
            long double acc = b[r];
            for (int c = r + 1; c < m; ++c) acc -= a[r * m + c] * x[c];
            x[r] = acc / a[r * m + r];
        }
    }

    // Residual in the fitted coordinate.
    double ss = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const long double u = (qs[i] - mean) / sigma;
        long double fit = 0.0L, upow = 1.0L;
        for (int r = 0; r < m; ++r) {
            fit += x[r] * upow;
            upow *= u;
        }
        const double res = thetas[i] - static_cast<double>(fit);
        ss += ws[i] * res * res;
        wsum += ws[i];
    }

    // Expand sum_k c_k ((q - mean)/sigma)^k into raw q powers.
    PhaseFit out;
    const double mu = mean, s = sigma;
    double c[4] = {0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k <= degree; ++k) c[k] = static_cast<double>(x[k]);
    const double s1 = 1.0 / s, s2 = s1 * s1, s3 = s2 * s1;
    out.coeffs[0] = c[0] - c[1] * mu * s1 + c[2] * mu * mu * s2 - c[3] * mu * mu * mu * s3;
    out.coeffs[1] = c[1] * s1 - 2.0 * c[2] * mu * s2 + 3.0 * c[3] * mu * mu * s3;
    out.coeffs[2] = c[2] * s2 - 3.0 * c[3] * mu * s3;
    out.coeffs[3] = c[3] * s3;
    out.rms_residual = std::sqrt(ss / wsum);
    out.window_lo = lo;
    out.window_hi = hi;
    out.points_used = qs.size();
    return out;
}

namespace {

CubicAncilla make_conditional(const MultiModeState& weta, std::size_t n) {
    auto [weight, mode2] = contract_mode(weta, 0, basis_vector(weta.cutoff(0), n));
    if (weight <= 0.0)
        throw std::invalid_argument("conditional_cubic_state: outcome has zero amplitude");
    const PhaseFit cubic = fit_phase_polynomial(mode2, 3);
    const PhaseFit quadratic = fit_phase_polynomial(mode2, 2);
    CubicAncilla anc;
    anc.state = std::move(mode2);
    anc.gamma_signed = cubic.coeffs[3];
    anc.gamma_effective = std::abs(cubic.coeffs[3]);
    anc.source = CubicAncilla::Source::conditional;
    anc.conditioning_outcome = static_cast<long>(n);
    anc.cubic_fit_rms = cubic.rms_residual;
    anc.quadratic_fit_rms = quadratic.rms_residual;
    return anc;
}

}  // namespace

std::optional<CubicAncilla> conditional_cubic_state(const MultiModeState& weta, Rng& rng) {
    if (weta.mode_count() != 2)
        throw std::invalid_argument("conditional_cubic_state: expects the two-mode |w,eta>");
    const std::vector<double> dist = number_distribution(weta, 0);
    const std::size_t n = rng.categorical(dist);
    if (n == 0) return std::nullopt;  // gamma' undefined; caller retries
    return make_conditional(weta, n);
}

CubicAncilla conditional_cubic_state_at(const MultiModeState& weta, std::size_t n) {
    if (weta.mode_count() != 2)
        throw std::invalid_argument("conditional_cubic_state_at: expects the two-mode |w,eta>");
    if (n == 0) throw std::invalid_argument("conditional_cubic_state_at: n = 0 has no gamma'");
    return make_conditional(weta, n);
}

CubicAncilla regularized_cubic_state(double gamma, double sigma, std::size_t cutoff,
                                     double max_gamma_sigma_cubed) {
    if (sigma <= 0.0) throw std::invalid_argument("regularized_cubic_state: sigma must be > 0");
    if (std::abs(gamma) * sigma * sigma * sigma > max_gamma_sigma_cubed)
        throw std::invalid_argument(
            "regularized_cubic_state: gamma*sigma^3 exceeds the leakage budget");

    const double span = 6.0 * sigma + 2.0;
    const double max_rate = 3.0 * std::abs(gamma) * span * span +
                            std::sqrt(2.0 * static_cast<double>(cutoff)) + 1.0;

    auto integrate = [&](double dq) {
        const std::size_t npoints =
            static_cast<std::size_t>(std::ceil(2.0 * span / dq)) + 1;
        const QuadratureGrid grid = QuadratureGrid::linspace(-span, span, npoints);
        const std::vector<double> phi = hermite_functions(cutoff, grid.points);
        const double env_norm = std::pow(2.0 * M_PI * sigma * sigma, -0.25);
        std::vector<cxd> c(cutoff, cxd(0.0, 0.0));
        for (std::size_t i = 0; i < npoints; ++i) {
            const double q = grid.points[i];
            const cxd f = env_norm * std::exp(-q * q / (4.0 * sigma * sigma)) *
                          std::exp(cxd(0.0, gamma * q * q * q));
            const double* row = phi.data() + i * cutoff;
            for (std::size_t n = 0; n < cutoff; ++n) c[n] += f * row[n] * grid.spacing;
        }
        return c;
    };

    const double dq = 0.3 / max_rate;
    std::vector<cxd> coarse = integrate(dq);
    std::vector<cxd> fine = integrate(dq / 2.0);
    double diff = 0.0;
    for (std::size_t n = 0; n < cutoff; ++n) diff = std::max(diff, std::abs(coarse[n] - fine[n]));
    if (diff > 1e-6)
        throw std::runtime_error(
            "regularized_cubic_state: quadrature did not converge (refinement moved "
            "amplitudes by " + std::to_string(diff) + ")");
    // Richardson step: trapezoid error is O(dq^2), so this removes the
    // leading term and leaves ~diff^2 residual.
    for (std::size_t n = 0; n < cutoff; ++n) fine[n] += (fine[n] - coarse[n]) / 3.0;

    double mass = 0.0;
    for (const auto& v : fine) mass += std::norm(v);
    if (mass <= 0.0) throw std::runtime_error("regularized_cubic_state: state lost to truncation");
    const double inv = 1.0 / std::sqrt(mass);
    for (auto& v : fine) v *= inv;

    CubicAncilla anc;
    anc.state = MultiModeState::from_amplitudes({cutoff}, std::move(fine), true);
    anc.gamma_signed = gamma;
    anc.gamma_effective = std::abs(gamma);
    anc.source = CubicAncilla::Source::regularized;
    anc.gamma_parameter = gamma;
    anc.envelope_sigma = sigma;
    anc.captured_mass = mass;
    return anc;
}

ModeOperator direct_cubic(double gamma, std::size_t cutoff) {
    return position_function_operator(
        cutoff, [gamma](double q) { return std::exp(cxd(0.0, gamma * q * q * q)); });
}

ModeOperator correction_u(double a, double gamma, std::size_t cutoff) {
    return quadratic_phase(-3.0 * gamma * a, -3.0 * gamma * a * a, -gamma * a * a * a, cutoff);
}

ProtocolTrace cubic_phase_gate(const MultiModeState& input, const CubicAncilla& ancilla,
                               Rng& rng, double homodyne_resolution) {
    if (input.mode_count() != 1)
        throw std::invalid_argument("cubic_phase_gate: input must be single-mode");
    if (ancilla.state.mode_count() != 1)
        throw std::invalid_argument("cubic_phase_gate: ancilla must be single-mode");
    const std::size_t dc = input.cutoff(0), dt = ancilla.state.cutoff(0);
    if (dc != dt)
        throw std::invalid_argument("cubic_phase_gate: input and ancilla cutoffs must match");

    // SUM^-1 with the input as control (mode 0), ancilla as target (mode 1).
    MultiModeState joint = tensor(input, ancilla.state);
    joint = apply_sum(joint, cached_sum_factors(dc, dt), 0, 1, +1.0);

    // Position measurement on the target consumes it.
    HomodyneReduction hr = homodyne_sample_and_reduce(joint, 1, rng, homodyne_resolution);

    // Feed-forward correction, quadratic in q (Clifford), using the exact
    // measured value; the bin width only shaped the post-state.
    const double gamma = ancilla.gamma_signed;
    const ModeOperator u = correction_u(hr.outcome, gamma, dc);
    MultiModeState output = apply(hr.reduced, u, 0).normalized();

    ProtocolTrace trace;
    trace.measured_a = hr.outcome;
    trace.correction_applied =
        GateParam{GateKind::quadratic_phase, cxd(0.0, 0.0), 0.0,
                  {-3.0 * gamma * hr.outcome, -3.0 * gamma * hr.outcome * hr.outcome,
                   -gamma * hr.outcome * hr.outcome * hr.outcome}};
    trace.output_leakage = leakage_fraction(output);
    const MultiModeState ideal = apply(input, cached_direct_cubic(gamma, dc), 0);
    trace.oracle_fidelity = fidelity(output, ideal.normalized());
    trace.output = std::move(output);
    return trace;
}

}  // namespace cvsim
