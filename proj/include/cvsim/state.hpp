#ifndef CVSIM_STATE_HPP
#define CVSIM_STATE_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "cvsim/fock.hpp"
#include "cvsim/linalg.hpp"

namespace cvsim {

/// Complex amplitude tensor over n truncated single-mode Fock spaces,
/// row-major with mode 0 slowest. All values are immutable in spirit:
/// operations return fresh states.
class MultiModeState {
public:
    /// Default: a single-mode vacuum at the minimal cutoff.
    MultiModeState() : MultiModeState({2}, {cxd(1.0, 0.0), cxd(0.0, 0.0)}, true) {}

    static MultiModeState vacuum(std::vector<std::size_t> cutoffs);
    static MultiModeState from_amplitudes(std::vector<std::size_t> cutoffs,
                                          std::vector<cxd> amplitudes,
                                          bool assume_normalized = false);

    std::size_t mode_count() const { return cutoffs_.size(); }
    const std::vector<std::size_t>& cutoffs() const { return cutoffs_; }
    std::size_t cutoff(std::size_t mode) const { return cutoffs_.at(mode); }
    std::size_t dim() const { return amp_.size(); }

    const std::vector<cxd>& amplitudes() const { return amp_; }
    std::vector<cxd>& mutable_amplitudes() { return amp_; }

    /// Stride of a mode index in the flat amplitude array.
    std::size_t stride(std::size_t mode) const;

    double norm() const;
    bool is_normalized() const { return normalized_; }
    MultiModeState normalized() const;

    /// Re-checks the norm and refreshes the flag (used after manual edits).
    void refresh_normalization_flag(double tol = 1e-12);

private:
    MultiModeState(std::vector<std::size_t> cutoffs, std::vector<cxd> amps, bool normalized)
        : cutoffs_(std::move(cutoffs)), amp_(std::move(amps)), normalized_(normalized) {}

    std::vector<std::size_t> cutoffs_;
    std::vector<cxd> amp_;
    bool normalized_ = false;
};

/// Single-mode Fock eigenstate |n>. Rejects n >= cutoff with an explicit
/// truncation error.
MultiModeState make_number_state(std::size_t n, std::size_t cutoff);

MultiModeState tensor(const MultiModeState& a, const MultiModeState& b);

/// Contract an operator against the named mode(s). No normalization is
/// performed: unitaries preserve the norm by themselves, non-unitary
/// operators (ladders, projectors) return the raw contraction.
MultiModeState apply(const MultiModeState& state, const ModeOperator& op, std::size_t mode);
MultiModeState apply(const MultiModeState& state, const ModeOperator& op,
                     std::size_t mode_i, std::size_t mode_j);

cxd expectation(const MultiModeState& state, const ModeOperator& op, std::size_t mode);
cxd expectation(const MultiModeState& state, const ModeOperator& op,
                std::size_t mode_i, std::size_t mode_j);

/// |<s1|s2>|^2 for matching cutoffs; both states must be normalized.
double fidelity(const MultiModeState& s1, const MultiModeState& s2);

cxd inner_product(const MultiModeState& s1, const MultiModeState& s2);

/// Uniformly spaced position grid (dimensionless q, hbar = 1).
struct QuadratureGrid {
    std::vector<double> points;
    double spacing = 0.0;

    static QuadratureGrid linspace(double qmin, double qmax, std::size_t npoints);
    /// Grid spanning +-span_sigmas*sqrt(cutoff) with spacing fine enough for
    /// the top Hermite function of the cutoff.
    static QuadratureGrid for_cutoff(std::size_t cutoff, double span_sigmas = 4.0);
};

/// Hermite-Gaussian basis functions phi_n(q) by the stable three-term
/// recurrence; row-major [point][n], n < cutoff.
std::vector<double> hermite_functions(std::size_t cutoff, const std::vector<double>& points);

/// Position wavefunction of a single-mode state sampled on the grid.
/// If check_tol > 0 and the discretized norm deviates from the state norm by
/// more than check_tol, throws with a grid diagnostic.
std::vector<cxd> wavefunction(const MultiModeState& state, const QuadratureGrid& grid,
                              double check_tol = 1e-3);

/// Probability mass in the top 10% of Fock levels of any mode; the
/// truncation-error proxy experiments must keep below 1e-6.
double leakage_fraction(const MultiModeState& state);

/// Marginal photon-number distribution of one mode.
std::vector<double> number_distribution(const MultiModeState& state, std::size_t mode);

/// Projects mode onto |n>. Returns the outcome probability and the normalized
/// post-measurement state (mode kept). Probability 0 yields a zero state and
/// must be handled by the caller.
std::pair<double, MultiModeState> project_number(const MultiModeState& state,
                                                 std::size_t mode, std::size_t n);

/// Contracts conj(vec) against one mode axis, removing that mode.
/// Returns ||result||^2 before normalization along with the normalized
/// reduced state (or the raw zero state if the weight vanishes).
std::pair<double, MultiModeState> contract_mode(const MultiModeState& state,
                                                std::size_t mode,
                                                const std::vector<cxd>& vec);

/// Inserts a fresh mode at position `mode` in the product state vec (x) rest.
MultiModeState embed_mode(const MultiModeState& rest, std::size_t mode,
                          const std::vector<cxd>& vec);

/// Appends a vacuum mode with the given cutoff as the last mode.
MultiModeState append_vacuum_mode(const MultiModeState& state, std::size_t cutoff);

/// Drops Fock levels >= new_cutoff on one mode. The discarded amplitudes must
/// carry negligible mass (< 1e-9); the result is renormalized.
MultiModeState trim_mode_cutoff(const MultiModeState& state, std::size_t mode,
                                std::size_t new_cutoff);

}  // namespace cvsim

#endif
