#ifndef CVSIM_CUBIC_HPP
#define CVSIM_CUBIC_HPP

#include <array>
#include <optional>

#include "cvsim/gates.hpp"
#include "cvsim/measure.hpp"
#include "cvsim/rng.hpp"
#include "cvsim/state.hpp"

namespace cvsim {

/// Single-mode non-Gaussian ancilla resource for the cubic phase gate.
/// gamma_effective is the magnitude of the fitted (or requested) cubic phase
/// coefficient; gamma_signed keeps its sign for the feed-forward correction.
struct CubicAncilla {
    MultiModeState state;
    double gamma_effective = 0.0;
    double gamma_signed = 0.0;

    enum class Source { conditional, regularized } source = Source::regularized;

    // conditional provenance
    long conditioning_outcome = -1;
    double displacement_w = 0.0;
    double squeeze_eta = 0.0;
    double cubic_fit_rms = 0.0;
    double quadratic_fit_rms = 0.0;

    // regularized provenance
    double gamma_parameter = 0.0;
    double envelope_sigma = 0.0;
    double captured_mass = 1.0;  // mass of the ideal state below the cutoff
};

/// |w,eta> = D_1(i w) S_12(eta) |00>: two-mode squeezed vacuum with a large
/// momentum displacement on the first mode. <N_1> = w^2 + sinh^2(eta).
MultiModeState prepare_weta(double w, double eta, std::size_t cutoff_1, std::size_t cutoff_2);

/// Weighted least-squares polynomial fit of the unwrapped phase arg psi(q)
/// over the central 2-sigma support. Coefficients are in raw q powers.
struct PhaseFit {
    std::array<double, 4> coeffs{0.0, 0.0, 0.0, 0.0};
    double rms_residual = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t points_used = 0;
};
PhaseFit fit_phase_polynomial(const MultiModeState& single_mode, int degree);

/// Photon-counts mode 1 of a |w,eta> state; outcome n > 0 projects mode 2
/// into an approximate cubic phase state whose fitted coefficient scales as
/// n^{-1/2}. Returns nullopt on the n = 0 outcome (gamma' undefined there;
/// the caller retries).
std::optional<CubicAncilla> conditional_cubic_state(const MultiModeState& weta, Rng& rng);

/// Deterministic variant conditioned on a chosen outcome n (any n >= 1 with
/// nonzero amplitude); used by convergence and scaling studies.
CubicAncilla conditional_cubic_state_at(const MultiModeState& weta, std::size_t n);

/// Finite-energy stand-in for the ideal |gamma>: amplitudes from numerically
/// integrating exp(i gamma q^3) G_sigma(q) phi_n(q), where G_sigma is a
/// Gaussian envelope whose position density has standard deviation sigma.
CubicAncilla regularized_cubic_state(double gamma, double sigma, std::size_t cutoff,
                                     double max_gamma_sigma_cubed = 64.0);

/// V_gamma = exp(i gamma q^3), the oracle the protocol is judged against.
ModeOperator direct_cubic(double gamma, std::size_t cutoff);

/// U(a) = exp(i gamma q^3 - i gamma (q+a)^3)
///      = exp(i(-3 gamma a q^2 - 3 gamma a^2 q - gamma a^3)), quadratic in q.
ModeOperator correction_u(double a, double gamma, std::size_t cutoff);

/// One full protocol run and its bookkeeping.
struct ProtocolTrace {
    double measured_a = 0.0;
    GateParam correction_applied;
    MultiModeState output;
    double oracle_fidelity = 0.0;
    double output_leakage = 0.0;
};

/// The deterministic cubic phase gate: SUM^-1 with the input as control and
/// the ancilla as target, position measurement of the target, feed-forward
/// U(a) on the control. Every homodyne outcome completes; there is no
/// post-selection branch.
ProtocolTrace cubic_phase_gate(const MultiModeState& input, const CubicAncilla& ancilla,
                               Rng& rng, double homodyne_resolution);

}  // namespace cvsim

#endif
