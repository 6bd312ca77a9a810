#include "cvsim/gates.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace cvsim {

namespace {

std::atomic<bool> g_warnings{true};

void warn(const std::string& msg) {
    if (g_warnings.load(std::memory_order_relaxed))
        std::cerr << "[cvsim] warning: " << msg << "\n";
}

void check_squeeze_cap(cxd eta, double cap) {
    if (std::abs(eta) > cap)
        throw std::invalid_argument("squeeze parameter |eta| = " + std::to_string(std::abs(eta)) +
                                    " exceeds the configured cap " + std::to_string(cap));
}

/// Shared eigensystem of the position quadrature at a given cutoff. Every
/// function-of-q gate at that cutoff is diagonal in this basis.
const EigenSystem& position_eigensystem(std::size_t cutoff) {
    thread_local std::map<std::size_t, std::unique_ptr<EigenSystem>> cache;
    auto it = cache.find(cutoff);
    if (it == cache.end()) {
        auto [q, p] = quadrature_operators(cutoff);
        auto es = std::make_unique<EigenSystem>(hermitian_eigensystem(q.matrix));
        it = cache.emplace(cutoff, std::move(es)).first;
    }
    return *it->second;
}

const EigenSystem& momentum_eigensystem(std::size_t cutoff) {
    thread_local std::map<std::size_t, std::unique_ptr<EigenSystem>> cache;
    auto it = cache.find(cutoff);
    if (it == cache.end()) {
        auto [q, p] = quadrature_operators(cutoff);
        auto es = std::make_unique<EigenSystem>(hermitian_eigensystem(p.matrix));
        it = cache.emplace(cutoff, std::move(es)).first;
    }
    return *it->second;
}

/// Exponentiates a Hermitian generator given as a set of disjoint chains.
/// Each chain is a list of pair-basis flat indices plus the complex coupling
/// g_t between consecutive members: G[idx(t+1), idx(t)] = g_t. The result is
/// exp(i * scale * G) scattered into a dense (d1*d2)^2 matrix; everything
/// outside the chains is identity.
Matrix exponentiate_chain_blocks(
    std::size_t dim, double scale,
    const std::vector<std::pair<std::vector<std::size_t>, std::vector<cxd>>>& chains) {
    Matrix out = Matrix::identity(dim);
    for (const auto& [idx, coup] : chains) {
        const std::size_t m = idx.size();
        if (m == 1) continue;  // bare diagonal zero block: identity already
        Matrix block(m, m);
        for (std::size_t t = 0; t + 1 < m; ++t) {
            block(t + 1, t) = coup[t];
            block(t, t + 1) = std::conj(coup[t]);
        }
        EigenSystem es = hermitian_eigensystem(block);
        Matrix u = unitary_from_eigensystem(es, scale);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) out(idx[r], idx[c]) = u(r, c);
    }
    return out;
}

}  // namespace

void set_gate_warnings(bool enabled) { g_warnings.store(enabled, std::memory_order_relaxed); }

ModeOperator displacement(cxd alpha, std::size_t cutoff) {
    if (cutoff < 2) throw std::invalid_argument("displacement: cutoff must be >= 2");
    if (std::norm(alpha) > static_cast<double>(cutoff) / 4.0)
        warn("displacement |alpha|^2 = " + std::to_string(std::norm(alpha)) +
             " is large for cutoff " + std::to_string(cutoff) + "; expect truncation leakage");
    // D(alpha) = exp(i G), G = -i(alpha a^dag - alpha* a), Hermitian.
    Matrix g(cutoff, cutoff);
    for (std::size_t n = 0; n + 1 < cutoff; ++n) {
        const double r = std::sqrt(static_cast<double>(n + 1));
        g(n + 1, n) = cxd(0.0, -1.0) * alpha * r;
        g(n, n + 1) = cxd(0.0, 1.0) * std::conj(alpha) * r;
    }
    return hermitian_exponential(ModeOperator{std::move(g), 1, {cutoff, 0}}, 1.0);
}

ModeOperator squeeze_one(cxd eta, std::size_t cutoff, double max_abs_eta) {
    if (cutoff < 2) throw std::invalid_argument("squeeze_one: cutoff must be >= 2");
    check_squeeze_cap(eta, max_abs_eta);
    const double sh = std::sinh(std::abs(eta));
    if (sh * sh > static_cast<double>(cutoff) / 10.0)
        warn("squeeze_one sinh^2|eta| = " + std::to_string(sh * sh) + " is large for cutoff " +
             std::to_string(cutoff) + "; expect truncation leakage");
    // S(eta) = exp((eta* a^2 - eta a^dag^2)/2), the sign for which real
    // eta > 0 squeezes the position quadrature: Var(q) on S(eta)|0> is
    // exp(-2 eta)/2. Built as exp(i G) with G = -i(eta* a^2 - eta a^dag^2)/2.
    Matrix g(cutoff, cutoff);
    for (std::size_t n = 0; n + 2 < cutoff; ++n) {
        const double r = std::sqrt(static_cast<double>((n + 1) * (n + 2))) * 0.5;
        g(n + 2, n) = cxd(0.0, 1.0) * eta * r;
        g(n, n + 2) = cxd(0.0, -1.0) * std::conj(eta) * r;
    }
    return hermitian_exponential(ModeOperator{std::move(g), 1, {cutoff, 0}}, 1.0);
}

ModeOperator squeeze_two(cxd eta, std::size_t cutoff_i, std::size_t cutoff_j,
                         double max_abs_eta) {
    if (cutoff_i < 2 || cutoff_j < 2)
        throw std::invalid_argument("squeeze_two: cutoffs must be >= 2");
    check_squeeze_cap(eta, max_abs_eta);
    const double sh = std::sinh(std::abs(eta));
    if (sh * sh > static_cast<double>(std::min(cutoff_i, cutoff_j)) / 10.0)
        warn("squeeze_two sinh^2|eta| = " + std::to_string(sh * sh) +
             " is large for the cutoffs; expect truncation leakage");

    // S_ij(eta) = exp(eta a_i^dag a_j^dag - eta* a_i a_j), normalized so that
    // real eta > 0 squeezes the position difference: Var(q_i - q_j) on
    // S_ij(eta)|00> is exp(-2 eta). The generator conserves n_i - n_j, so it
    // splits into tridiagonal chains along (n, n) + const.
    std::vector<std::pair<std::vector<std::size_t>, std::vector<cxd>>> chains;
    const long dmax = static_cast<long>(cutoff_i) - 1;
    const long dmin = -(static_cast<long>(cutoff_j) - 1);
    for (long delta = dmin; delta <= dmax; ++delta) {
        std::vector<std::size_t> idx;
        std::vector<cxd> coup;
        const long n1_begin = std::max<long>(0, delta);
        for (long n1 = n1_begin; n1 < static_cast<long>(cutoff_i); ++n1) {
            const long n2 = n1 - delta;
            if (n2 < 0 || n2 >= static_cast<long>(cutoff_j)) break;
            idx.push_back(static_cast<std::size_t>(n1) * cutoff_j + static_cast<std::size_t>(n2));
            if (n1 + 1 < static_cast<long>(cutoff_i) && n2 + 1 < static_cast<long>(cutoff_j)) {
                const double r = std::sqrt(static_cast<double>((n1 + 1) * (n2 + 1)));
                coup.push_back(cxd(0.0, -1.0) * eta * r);
            }
        }
        if (!idx.empty()) chains.emplace_back(std::move(idx), std::move(coup));
    }
    Matrix m = exponentiate_chain_blocks(cutoff_i * cutoff_j, 1.0, chains);
    return ModeOperator{std::move(m), 2, {cutoff_i, cutoff_j}};
}

ModeOperator beamsplitter(double theta, std::size_t cutoff_i, std::size_t cutoff_j) {
    if (cutoff_i < 2 || cutoff_j < 2)
        throw std::invalid_argument("beamsplitter: cutoffs must be >= 2");
    // exp(theta(a_i^dag a_j - a_i a_j^dag)) conserves n_i + n_j: chains along
    // constant total photon number.
    std::vector<std::pair<std::vector<std::size_t>, std::vector<cxd>>> chains;
    const long smax = static_cast<long>(cutoff_i) + static_cast<long>(cutoff_j) - 2;
    for (long s = 0; s <= smax; ++s) {
        std::vector<std::size_t> idx;
        std::vector<cxd> coup;
        const long n1_begin = std::max<long>(0, s - (static_cast<long>(cutoff_j) - 1));
        const long n1_end = std::min<long>(static_cast<long>(cutoff_i) - 1, s);
        for (long n1 = n1_begin; n1 <= n1_end; ++n1) {
            const long n2 = s - n1;
            idx.push_back(static_cast<std::size_t>(n1) * cutoff_j + static_cast<std::size_t>(n2));
            if (n1 + 1 <= n1_end) {
                // <n1+1, n2-1| a_i^dag a_j |n1, n2> = sqrt((n1+1) n2)
                const double r = std::sqrt(static_cast<double>((n1 + 1) * n2));
                coup.push_back(cxd(0.0, -1.0) * r);
            }
        }
        if (!idx.empty()) chains.emplace_back(std::move(idx), std::move(coup));
    }
    Matrix m = exponentiate_chain_blocks(cutoff_i * cutoff_j, theta, chains);
    return ModeOperator{std::move(m), 2, {cutoff_i, cutoff_j}};
}

SumGateFactors sum_gate_factors(std::size_t cutoff_control, std::size_t cutoff_target) {
    const EigenSystem& eq = position_eigensystem(cutoff_control);
    const EigenSystem& ep = momentum_eigensystem(cutoff_target);
    SumGateFactors f;
    f.u_control = eq.vectors;
    f.u_target = ep.vectors;
    f.lambda_q = eq.values;
    f.lambda_p = ep.values;
    f.cutoff_control = cutoff_control;
    f.cutoff_target = cutoff_target;
    return f;
}

MultiModeState apply_sum(const MultiModeState& state, const SumGateFactors& f,
                         std::size_t control, std::size_t target, double sign) {
    if (state.cutoff(control) != f.cutoff_control || state.cutoff(target) != f.cutoff_target)
        throw std::invalid_argument("apply_sum: factor cutoffs do not match state");
    // exp(i sign q_c p_t) = (Uq (x) Up) diag(e^{i sign lam mu}) (Uq (x) Up)^dag
    ModeOperator uq{f.u_control, 1, {f.cutoff_control, 0}};
    ModeOperator up{f.u_target, 1, {f.cutoff_target, 0}};
    ModeOperator uq_dag{f.u_control.adjoint(), 1, {f.cutoff_control, 0}};
    ModeOperator up_dag{f.u_target.adjoint(), 1, {f.cutoff_target, 0}};

    MultiModeState s = apply(state, uq_dag, control);
    s = apply(s, up_dag, target);

    std::vector<cxd>& a = s.mutable_amplitudes();
    const std::size_t dc = f.cutoff_control, dt = f.cutoff_target;
    // Phase table once, then one sweep over the tensor.
    std::vector<cxd> phase(dc * dt);
    for (std::size_t k = 0; k < dc; ++k)
        for (std::size_t l = 0; l < dt; ++l)
            phase[k * dt + l] = std::exp(cxd(0.0, sign * f.lambda_q[k] * f.lambda_p[l]));

    std::vector<std::size_t> idx(s.mode_count(), 0);
    for (std::size_t flat = 0; flat < s.dim(); ++flat) {
        a[flat] *= phase[idx[control] * dt + idx[target]];
        for (std::size_t m = s.mode_count(); m-- > 0;) {
            if (++idx[m] < s.cutoff(m)) break;
            idx[m] = 0;
        }
    }

    s = apply(s, uq, control);
    s = apply(s, up, target);
    return s;
}

namespace {

/// Materializes exp(i sign q_c p_t) densely from the spectral factors.
Matrix dense_sum_matrix(std::size_t d1, std::size_t d2, double sign) {
    SumGateFactors f = sum_gate_factors(d1, d2);
    const std::size_t dim = d1 * d2;
    // M = sum_k P_k (x) T_k with P_k = u_k u_k^dag from the control basis and
    // T_k the phase-weighted target resolvent.
    Matrix m(dim, dim);
    for (std::size_t k = 0; k < d1; ++k) {
        Matrix t(d2, d2);
        for (std::size_t l = 0; l < d2; ++l) {
            const cxd ph = std::exp(cxd(0.0, sign * f.lambda_q[k] * f.lambda_p[l]));
            for (std::size_t j = 0; j < d2; ++j) {
                const cxd ujl = f.u_target(j, l) * ph;
                for (std::size_t jp = 0; jp < d2; ++jp)
                    t(j, jp) += ujl * std::conj(f.u_target(jp, l));
            }
        }
        for (std::size_t i = 0; i < d1; ++i) {
            const cxd uik = f.u_control(i, k);
            for (std::size_t ip = 0; ip < d1; ++ip) {
                const cxd w = uik * std::conj(f.u_control(ip, k));
                if (w == cxd(0.0, 0.0)) continue;
                for (std::size_t j = 0; j < d2; ++j)
                    for (std::size_t jp = 0; jp < d2; ++jp)
                        m(i * d2 + j, ip * d2 + jp) += w * t(j, jp);
            }
        }
    }
    return m;
}

}  // namespace

ModeOperator sum_gate(std::size_t cutoff_i, std::size_t cutoff_j) {
    return ModeOperator{dense_sum_matrix(cutoff_i, cutoff_j, -1.0), 2, {cutoff_i, cutoff_j}};
}

ModeOperator sum_inverse(std::size_t cutoff_i, std::size_t cutoff_j) {
    return ModeOperator{dense_sum_matrix(cutoff_i, cutoff_j, 1.0), 2, {cutoff_i, cutoff_j}};
}

ModeOperator position_function_operator(std::size_t cutoff,
                                        const std::function<cxd(double)>& phase_function) {
    const EigenSystem& es = position_eigensystem(cutoff);
    Matrix scaled = es.vectors;
    for (std::size_t k = 0; k < cutoff; ++k) {
        const cxd ph = phase_function(es.values[k]);
        for (std::size_t i = 0; i < cutoff; ++i) scaled(i, k) *= ph;
    }
    return ModeOperator{scaled * es.vectors.adjoint(), 1, {cutoff, 0}};
}

ModeOperator quadratic_phase(double c2, double c1, double c0, std::size_t cutoff) {
    if (std::abs(c2) > static_cast<double>(cutoff) / 8.0)
        warn("quadratic_phase |c2| = " + std::to_string(std::abs(c2)) +
             " is large for cutoff " + std::to_string(cutoff) + "; expect truncation leakage");
    return position_function_operator(cutoff, [=](double q) {
        return std::exp(cxd(0.0, c2 * q * q + c1 * q + c0));
    });
}

MultiModeState epr_pair(double eta, std::size_t cutoff_i, std::size_t cutoff_j,
                        double max_abs_eta) {
    check_squeeze_cap(eta, max_abs_eta);
    // S_12(eta)|00>: |00> lives in the n_i - n_j = 0 chain, so only that
    // block of the squeezer is needed.
    const std::size_t m = std::min(cutoff_i, cutoff_j);
    Matrix block(m, m);
    for (std::size_t t = 0; t + 1 < m; ++t) {
        const double r = static_cast<double>(t + 1);
        block(t + 1, t) = cxd(0.0, -1.0) * eta * r;
        block(t, t + 1) = cxd(0.0, 1.0) * eta * r;
    }
    EigenSystem es = hermitian_eigensystem(block);
    Matrix u = unitary_from_eigensystem(es, 1.0);

    std::vector<cxd> amps(cutoff_i * cutoff_j, cxd(0.0, 0.0));
    for (std::size_t t = 0; t < m; ++t) amps[t * cutoff_j + t] = u(t, 0);
    MultiModeState s = MultiModeState::from_amplitudes({cutoff_i, cutoff_j}, std::move(amps), false);
    s.refresh_normalization_flag();
    return s;
}

MultiModeState coherent_state(cxd alpha, std::size_t cutoff) {
    return apply(MultiModeState::vacuum({cutoff}), displacement(alpha, cutoff), 0);
}

}  // namespace cvsim
