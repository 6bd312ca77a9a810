#include "cvsim/state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cvsim {

namespace {

std::size_t product(const std::vector<std::size_t>& v) {
    std::size_t p = 1;
    for (std::size_t d : v) p *= d;
    return p;
}

void validate_cutoffs(const std::vector<std::size_t>& cutoffs) {
    if (cutoffs.empty()) throw std::invalid_argument("state needs at least one mode");
    for (std::size_t d : cutoffs)
        if (d < 2) throw std::invalid_argument("every mode cutoff must be >= 2");
}

}  // namespace

MultiModeState MultiModeState::vacuum(std::vector<std::size_t> cutoffs) {
    validate_cutoffs(cutoffs);
    std::vector<cxd> amps(product(cutoffs), cxd(0.0, 0.0));
    amps[0] = 1.0;
    return MultiModeState(std::move(cutoffs), std::move(amps), true);
}

MultiModeState MultiModeState::from_amplitudes(std::vector<std::size_t> cutoffs,
                                               std::vector<cxd> amplitudes,
                                               bool assume_normalized) {
    validate_cutoffs(cutoffs);
    if (amplitudes.size() != product(cutoffs))
        throw std::invalid_argument("amplitude tensor extent does not match cutoffs");
    MultiModeState s(std::move(cutoffs), std::move(amplitudes), assume_normalized);
    if (!assume_normalized) s.refresh_normalization_flag();
    return s;
}

std::size_t MultiModeState::stride(std::size_t mode) const {
    if (mode >= cutoffs_.size()) throw std::invalid_argument("mode index out of range");
    std::size_t s = 1;
    for (std::size_t m = mode + 1; m < cutoffs_.size(); ++m) s *= cutoffs_[m];
    return s;
}

double MultiModeState::norm() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return std::sqrt(s);
}

MultiModeState MultiModeState::normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::runtime_error("cannot normalize a zero state");
    MultiModeState out = *this;
    const double inv = 1.0 / n;
    for (auto& a : out.amp_) a *= inv;
    out.normalized_ = true;
    return out;
}

void MultiModeState::refresh_normalization_flag(double tol) {
    normalized_ = std::abs(norm() - 1.0) <= tol;
}

MultiModeState make_number_state(std::size_t n, std::size_t cutoff) {
    if (cutoff < 2) throw std::invalid_argument("cutoff must be >= 2");
    if (n >= cutoff)
        throw std::invalid_argument("Fock index " + std::to_string(n) +
                                    " does not fit below cutoff " + std::to_string(cutoff) +
                                    " (truncated space holds at most cutoff-1 photons)");
    std::vector<cxd> amps(cutoff, cxd(0.0, 0.0));
    amps[n] = 1.0;
    return MultiModeState::from_amplitudes({cutoff}, std::move(amps), true);
}

MultiModeState tensor(const MultiModeState& a, const MultiModeState& b) {
    std::vector<std::size_t> cutoffs = a.cutoffs();
    cutoffs.insert(cutoffs.end(), b.cutoffs().begin(), b.cutoffs().end());
    std::vector<cxd> amps(a.dim() * b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const cxd ai = a.amplitudes()[i];
        for (std::size_t j = 0; j < b.dim(); ++j) amps[i * b.dim() + j] = ai * b.amplitudes()[j];
    }
    return MultiModeState::from_amplitudes(std::move(cutoffs), std::move(amps),
                                           a.is_normalized() && b.is_normalized());
}

MultiModeState apply(const MultiModeState& state, const ModeOperator& op, std::size_t mode) {
    if (op.arity != 1) throw std::invalid_argument("apply: single-mode overload needs arity 1");
    const std::size_t d = state.cutoff(mode);
    if (op.cutoffs[0] != d)
        throw std::invalid_argument("apply: operator cutoff " + std::to_string(op.cutoffs[0]) +
                                    " does not match mode cutoff " + std::to_string(d));
    const std::size_t s = state.stride(mode);
    const std::size_t dim = state.dim();
    const std::size_t block = d * s;

    std::vector<cxd> out(dim, cxd(0.0, 0.0));
    const cxd* in = state.amplitudes().data();
    std::vector<cxd> x(d), y(d);
    for (std::size_t base = 0; base < dim; base += block) {
        for (std::size_t inner = 0; inner < s; ++inner) {
            const cxd* src = in + base + inner;
            for (std::size_t k = 0; k < d; ++k) x[k] = src[k * s];
            matvec(op.matrix, x.data(), y.data());
            cxd* dst = out.data() + base + inner;
            for (std::size_t k = 0; k < d; ++k) dst[k * s] = y[k];
        }
    }
    MultiModeState result =
        MultiModeState::from_amplitudes(state.cutoffs(), std::move(out), false);
    result.refresh_normalization_flag();
    return result;
}

MultiModeState apply(const MultiModeState& state, const ModeOperator& op,
                     std::size_t mode_i, std::size_t mode_j) {
    if (op.arity != 2) throw std::invalid_argument("apply: two-mode overload needs arity 2");
    if (mode_i == mode_j) throw std::invalid_argument("apply: modes must differ");
    const std::size_t di = state.cutoff(mode_i), dj = state.cutoff(mode_j);
    if (op.cutoffs[0] != di || op.cutoffs[1] != dj)
        throw std::invalid_argument("apply: operator cutoffs do not match modes");

    const std::size_t si = state.stride(mode_i), sj = state.stride(mode_j);
    const std::size_t pair_dim = di * dj;
    const std::size_t dim = state.dim();

    // Enumerate the joint index of all other modes with an odometer.
    const std::size_t nmodes = state.mode_count();
    std::vector<std::size_t> other_modes;
    for (std::size_t m = 0; m < nmodes; ++m)
        if (m != mode_i && m != mode_j) other_modes.push_back(m);

    std::vector<std::size_t> counter(other_modes.size(), 0);
    std::vector<cxd> out(dim, cxd(0.0, 0.0));
    const cxd* in = state.amplitudes().data();
    std::vector<cxd> x(pair_dim), y(pair_dim);

    const std::size_t outer_count = dim / pair_dim;
    for (std::size_t outer = 0; outer < outer_count; ++outer) {
        std::size_t base = 0;
        for (std::size_t t = 0; t < other_modes.size(); ++t)
            base += counter[t] * state.stride(other_modes[t]);

        for (std::size_t a = 0; a < di; ++a)
            for (std::size_t b = 0; b < dj; ++b) x[a * dj + b] = in[base + a * si + b * sj];
        matvec(op.matrix, x.data(), y.data());
        for (std::size_t a = 0; a < di; ++a)
            for (std::size_t b = 0; b < dj; ++b) out[base + a * si + b * sj] = y[a * dj + b];

        for (std::size_t t = other_modes.size(); t-- > 0;) {
            if (++counter[t] < state.cutoff(other_modes[t])) break;
            counter[t] = 0;
        }
    }
    MultiModeState result =
        MultiModeState::from_amplitudes(state.cutoffs(), std::move(out), false);
    result.refresh_normalization_flag();
    return result;
}

cxd inner_product(const MultiModeState& s1, const MultiModeState& s2) {
    if (s1.cutoffs() != s2.cutoffs())
        throw std::invalid_argument("inner_product: cutoff mismatch");
    cxd acc(0.0, 0.0);
    for (std::size_t i = 0; i < s1.dim(); ++i)
        acc += std::conj(s1.amplitudes()[i]) * s2.amplitudes()[i];
    return acc;
}

double fidelity(const MultiModeState& s1, const MultiModeState& s2) {
    if (std::abs(s1.norm() - 1.0) > 1e-9 || std::abs(s2.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("fidelity: states must be normalized");
    return std::norm(inner_product(s1, s2));
}

cxd expectation(const MultiModeState& state, const ModeOperator& op, std::size_t mode) {
    return inner_product(state, apply(state, op, mode));
}

cxd expectation(const MultiModeState& state, const ModeOperator& op,
                std::size_t mode_i, std::size_t mode_j) {
    return inner_product(state, apply(state, op, mode_i, mode_j));
}

QuadratureGrid QuadratureGrid::linspace(double qmin, double qmax, std::size_t npoints) {
    if (npoints < 2 || qmax <= qmin) throw std::invalid_argument("bad grid bounds");
    QuadratureGrid g;
    g.spacing = (qmax - qmin) / static_cast<double>(npoints - 1);
    g.points.resize(npoints);
    for (std::size_t i = 0; i < npoints; ++i) g.points[i] = qmin + g.spacing * i;
    return g;
}

QuadratureGrid QuadratureGrid::for_cutoff(std::size_t cutoff, double span_sigmas) {
    const double span = span_sigmas * std::sqrt(static_cast<double>(cutoff));
    const double target = 0.1 / std::sqrt(static_cast<double>(cutoff));
    const std::size_t npoints = static_cast<std::size_t>(std::ceil(2.0 * span / target)) + 1;
    return linspace(-span, span, npoints);
}

std::vector<double> hermite_functions(std::size_t cutoff, const std::vector<double>& points) {
    const std::size_t np = points.size();
    std::vector<double> phi(np * cutoff, 0.0);
    const double norm0 = std::pow(M_PI, -0.25);
    for (std::size_t i = 0; i < np; ++i) {
        const double q = points[i];
        double* row = phi.data() + i * cutoff;
        row[0] = norm0 * std::exp(-0.5 * q * q);
        if (cutoff > 1) row[1] = std::sqrt(2.0) * q * row[0];
        for (std::size_t n = 1; n + 1 < cutoff; ++n) {
            row[n + 1] = std::sqrt(2.0 / (n + 1.0)) * q * row[n] -
                         std::sqrt(n / (n + 1.0)) * row[n - 1];
        }
    }
    return phi;
}

std::vector<cxd> wavefunction(const MultiModeState& state, const QuadratureGrid& grid,
                              double check_tol) {
    if (state.mode_count() != 1)
        throw std::invalid_argument("wavefunction: single-mode states only");
    const std::size_t d = state.cutoff(0);
    const std::vector<double> phi = hermite_functions(d, grid.points);
    std::vector<cxd> psi(grid.points.size(), cxd(0.0, 0.0));
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const double* row = phi.data() + i * d;
        cxd acc(0.0, 0.0);
        for (std::size_t n = 0; n < d; ++n) acc += state.amplitudes()[n] * row[n];
        psi[i] = acc;
    }
    if (check_tol > 0.0) {
        double mass = 0.0;
        for (const auto& v : psi) mass += std::norm(v);
        mass *= grid.spacing;
        const double expected = state.norm() * state.norm();
        if (std::abs(mass - expected) > check_tol)
            throw std::runtime_error(
                "wavefunction: grid too coarse or narrow (discretized mass " +
                std::to_string(mass) + " vs state mass " + std::to_string(expected) +
                "); widen the span or refine the spacing");
    }
    return psi;
}

double leakage_fraction(const MultiModeState& state) {
    const std::size_t nmodes = state.mode_count();
    double total = 0.0;
    double leaked = 0.0;
    // One pass: an amplitude leaks if any of its mode indices sits in the top
    // 10% of that mode's levels.
    std::vector<std::size_t> threshold(nmodes);
    for (std::size_t m = 0; m < nmodes; ++m) {
        const std::size_t d = state.cutoff(m);
        const std::size_t top = std::max<std::size_t>(1, (d + 9) / 10);
        threshold[m] = d - top;
    }
    std::vector<std::size_t> idx(nmodes, 0);
    for (std::size_t flat = 0; flat < state.dim(); ++flat) {
        const double w = std::norm(state.amplitudes()[flat]);
        total += w;
        for (std::size_t m = 0; m < nmodes; ++m) {
            if (idx[m] >= threshold[m]) {
                leaked += w;
                break;
            }
        }
        for (std::size_t m = nmodes; m-- > 0;) {
            if (++idx[m] < state.cutoff(m)) break;
            idx[m] = 0;
        }
    }
    return total > 0.0 ? leaked / total : 0.0;
}

std::vector<double> number_distribution(const MultiModeState& state, std::size_t mode) {
    const std::size_t d = state.cutoff(mode);
    const std::size_t s = state.stride(mode);
    const std::size_t block = d * s;
    std::vector<double> p(d, 0.0);
    const cxd* a = state.amplitudes().data();
    for (std::size_t base = 0; base < state.dim(); base += block)
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t inner = 0; inner < s; ++inner)
                p[k] += std::norm(a[base + k * s + inner]);
    return p;
}

std::pair<double, MultiModeState> project_number(const MultiModeState& state,
                                                 std::size_t mode, std::size_t n) {
    const std::size_t d = state.cutoff(mode);
    if (n >= d) throw std::invalid_argument("project_number: index beyond cutoff");
    const std::size_t s = state.stride(mode);
    const std::size_t block = d * s;
    std::vector<cxd> out(state.dim(), cxd(0.0, 0.0));
    double prob = 0.0;
    const cxd* a = state.amplitudes().data();
    for (std::size_t base = 0; base < state.dim(); base += block)
        for (std::size_t inner = 0; inner < s; ++inner) {
            const cxd v = a[base + n * s + inner];
            out[base + n * s + inner] = v;
            prob += std::norm(v);
        }
    MultiModeState post = MultiModeState::from_amplitudes(state.cutoffs(), std::move(out), false);
    if (prob > 0.0) post = post.normalized();
    return {prob, post};
}

std::pair<double, MultiModeState> contract_mode(const MultiModeState& state,
                                                std::size_t mode,
                                                const std::vector<cxd>& vec) {
    const std::size_t d = state.cutoff(mode);
    if (vec.size() != d) throw std::invalid_argument("contract_mode: vector length mismatch");
    if (state.mode_count() == 1)
        throw std::invalid_argument("contract_mode: cannot remove the last mode");

    std::vector<std::size_t> new_cutoffs;
    for (std::size_t m = 0; m < state.mode_count(); ++m)
        if (m != mode) new_cutoffs.push_back(state.cutoff(m));

    const std::size_t s = state.stride(mode);
    const std::size_t block = d * s;
    std::vector<cxd> out(state.dim() / d, cxd(0.0, 0.0));
    const cxd* a = state.amplitudes().data();
    std::size_t w = 0;
    for (std::size_t base = 0; base < state.dim(); base += block)
        for (std::size_t inner = 0; inner < s; ++inner) {
            cxd acc(0.0, 0.0);
            for (std::size_t k = 0; k < d; ++k) acc += std::conj(vec[k]) * a[base + k * s + inner];
            out[w++] = acc;
        }
    double weight = 0.0;
    for (const auto& v : out) weight += std::norm(v);
    MultiModeState reduced =
        MultiModeState::from_amplitudes(std::move(new_cutoffs), std::move(out), false);
    if (weight > 0.0) reduced = reduced.normalized();
    return {weight, reduced};
}

MultiModeState embed_mode(const MultiModeState& rest, std::size_t mode,
                          const std::vector<cxd>& vec) {
    if (mode > rest.mode_count()) throw std::invalid_argument("embed_mode: position out of range");
    std::vector<std::size_t> cutoffs = rest.cutoffs();
    cutoffs.insert(cutoffs.begin() + mode, vec.size());

    // outer = modes before `mode`, inner = modes after it.
    std::size_t inner = 1;
    for (std::size_t m = mode; m < rest.mode_count(); ++m) inner *= rest.cutoff(m);
    const std::size_t outer = rest.dim() / inner;

    std::vector<cxd> out(rest.dim() * vec.size());
    const cxd* a = rest.amplitudes().data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < vec.size(); ++k)
            for (std::size_t i = 0; i < inner; ++i)
                out[(o * vec.size() + k) * inner + i] = vec[k] * a[o * inner + i];
    MultiModeState s = MultiModeState::from_amplitudes(std::move(cutoffs), std::move(out), false);
    s.refresh_normalization_flag();
    return s;
}

MultiModeState append_vacuum_mode(const MultiModeState& state, std::size_t cutoff) {
    if (cutoff < 2) throw std::invalid_argument("append_vacuum_mode: cutoff must be >= 2");
    std::vector<std::size_t> cutoffs = state.cutoffs();
    cutoffs.push_back(cutoff);
    std::vector<cxd> out(state.dim() * cutoff, cxd(0.0, 0.0));
    for (std::size_t i = 0; i < state.dim(); ++i) out[i * cutoff] = state.amplitudes()[i];
    return MultiModeState::from_amplitudes(std::move(cutoffs), std::move(out),
                                           state.is_normalized());
}

MultiModeState trim_mode_cutoff(const MultiModeState& state, std::size_t mode,
                                std::size_t new_cutoff) {
    const std::size_t d = state.cutoff(mode);
    if (new_cutoff >= d) return state;
    if (new_cutoff < 2) throw std::invalid_argument("trim_mode_cutoff: cutoff must stay >= 2");

    const std::size_t s = state.stride(mode);
    const std::size_t block = d * s;
    std::vector<cxd> out(state.dim() / d * new_cutoff);
    double dropped = 0.0;
    const cxd* a = state.amplitudes().data();
    std::size_t w = 0;
    for (std::size_t base = 0; base < state.dim(); base += block) {
        for (std::size_t k = 0; k < new_cutoff; ++k)
            for (std::size_t inner = 0; inner < s; ++inner) out[w++] = a[base + k * s + inner];
        for (std::size_t k = new_cutoff; k < d; ++k)
            for (std::size_t inner = 0; inner < s; ++inner)
                dropped += std::norm(a[base + k * s + inner]);
    }
    if (dropped > 1e-9)
        throw std::runtime_error("trim_mode_cutoff: discarded mass " + std::to_string(dropped));

    std::vector<std::size_t> cutoffs = state.cutoffs();
    cutoffs[mode] = new_cutoff;
    MultiModeState trimmed =
        MultiModeState::from_amplitudes(std::move(cutoffs), std::move(out), false);
    return trimmed.normalized();
}

}  // namespace cvsim
