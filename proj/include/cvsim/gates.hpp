#ifndef CVSIM_GATES_HPP
#define CVSIM_GATES_HPP

#include <array>
#include <cstddef>
#include <functional>

#include "cvsim/fock.hpp"
#include "cvsim/state.hpp"

namespace cvsim {

/// Default cap on |eta|: sinh^2(eta) photons per squeezer grow fast enough to
/// silently wreck truncation fidelity beyond this.
inline constexpr double kDefaultSqueezeCap = 3.0;

enum class GateKind {
    displacement,
    squeeze1,
    squeeze2,
    sum,
    sum_inverse,
    beamsplitter,
    quadratic_phase,
};

/// Parameter bundle for one Clifford gate; arity and parameter use depend on
/// the kind (alpha for displacement, eta for squeezers, theta for the
/// beamsplitter, (c2, c1, c0) for exp(i(c2 q^2 + c1 q + c0))).
struct GateParam {
    GateKind kind = GateKind::displacement;
    cxd complex_param{0.0, 0.0};
    double theta = 0.0;
    std::array<double, 3> quad{0.0, 0.0, 0.0};
};

/// Toggles the stderr warnings for parameter choices that will leak
/// probability mass into the truncation boundary.
void set_gate_warnings(bool enabled);

/// D(alpha) = exp(alpha a^dag - alpha* a).
ModeOperator displacement(cxd alpha, std::size_t cutoff);

/// S(eta) = exp((eta* a^2 - eta a^dag^2) / 2): real eta > 0 squeezes the
/// position quadrature, Var(q) on S(eta)|0> = exp(-2 eta)/2, <N> = sinh^2|eta|.
ModeOperator squeeze_one(cxd eta, std::size_t cutoff, double max_abs_eta = kDefaultSqueezeCap);

/// S_ij(eta) = exp(eta a_i^dag a_j^dag - eta* a_i a_j): real eta > 0 squeezes
/// the position difference, Var(q_i - q_j) on S_ij(eta)|00> = exp(-2 eta).
/// Built per photon-number-difference block, which the generator conserves.
ModeOperator squeeze_two(cxd eta, std::size_t cutoff_i, std::size_t cutoff_j,
                         double max_abs_eta = kDefaultSqueezeCap);

/// exp(theta (a_i^dag a_j - a_i a_j^dag)); photon-number conserving.
ModeOperator beamsplitter(double theta, std::size_t cutoff_i, std::size_t cutoff_j);

/// SUM_ij = exp(-i q_i p_j), control i, target j: q_j -> q_i + q_j.
ModeOperator sum_gate(std::size_t cutoff_i, std::size_t cutoff_j);
ModeOperator sum_inverse(std::size_t cutoff_i, std::size_t cutoff_j);

/// exp(i (c2 q^2 + c1 q + c0)); a function of q, so it commutes with q.
ModeOperator quadratic_phase(double c2, double c1, double c0, std::size_t cutoff);

/// Operator f(q) for |f| = 1 functions, assembled in the cached q eigenbasis.
/// All position-function gates built at one cutoff share that basis, so
/// algebraic identities between them hold to machine precision.
ModeOperator position_function_operator(std::size_t cutoff,
                                        const std::function<cxd(double)>& phase_function);

/// S_12(eta)|00>, the finite-eta EPR approximation.
MultiModeState epr_pair(double eta, std::size_t cutoff_i, std::size_t cutoff_j,
                        double max_abs_eta = kDefaultSqueezeCap);

/// D(alpha)|0>.
MultiModeState coherent_state(cxd alpha, std::size_t cutoff);

/// Spectral factors of the SUM generator q_i (x) p_j. Applying them is far
/// cheaper than materializing the dense two-mode matrix at large cutoffs.
struct SumGateFactors {
    Matrix u_control;             // eigenvectors of q at the control cutoff
    Matrix u_target;              // eigenvectors of p at the target cutoff
    std::vector<double> lambda_q;
    std::vector<double> lambda_p;
    std::size_t cutoff_control = 0;
    std::size_t cutoff_target = 0;
};

SumGateFactors sum_gate_factors(std::size_t cutoff_control, std::size_t cutoff_target);

/// Applies exp(i * sign * q_c p_t): sign = -1 is SUM, +1 is SUM^-1.
MultiModeState apply_sum(const MultiModeState& state, const SumGateFactors& f,
                         std::size_t control, std::size_t target, double sign);

}  // namespace cvsim

#endif
