#ifndef CVSIM_MEASURE_HPP
#define CVSIM_MEASURE_HPP

#include <cstdint>
#include <string>
#include <utility>

#include "cvsim/rng.hpp"
#include "cvsim/state.hpp"

namespace cvsim {

/// Outcome of one measurement. `probability` is the probability of the
/// sampled outcome (a density for continuous outcomes). `readout` carries the
/// raw continuous record where one exists (Kerr phase, pointer momentum);
/// otherwise it repeats the outcome.
struct MeasurementRecord {
    double outcome = 0.0;
    double probability = 0.0;
    MultiModeState post_state;
    std::string model_tag;
    double readout = 0.0;
};

/// Tagged choice of measurement model plus its parameters.
struct DetectorConfig {
    enum class Model { pvm, itd, multiplexed, kerr, pointer };
    Model model = Model::pvm;
    std::size_t n_modes = 1;     // multiplexed: balanced tree width (power of 2)
    double chi_t = 0.0;          // kerr
    double delta_phi = 0.0;      // kerr
    double lambda_t = 0.0;       // pointer
    double delta_p = 0.0;        // pointer
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Photon counting PVM {|n><n|}. The post-state keeps the measured mode, so
/// repeating the measurement reproduces the outcome with probability 1.
MeasurementRecord photon_count_pvm(const MultiModeState& state, std::size_t mode, Rng& rng);

/// Ideal threshold detector: outcome 0 (vacuum) or 1 ("one or more").
/// The 1+ projector preserves all relative amplitudes among n >= 1.
MeasurementRecord itd_pvm(const MultiModeState& state, std::size_t mode, Rng& rng);

/// Fans the mode through a balanced tree of 50/50 beamsplitters into n_modes
/// modes, each read by an ITD. Outcome = click count (undercounts only).
/// The post-state is the undetected remainder of the input state; when the
/// whole state was consumed a trivial vacuum mode is returned.
MeasurementRecord multiplexed_count(const MultiModeState& state, std::size_t mode,
                                    std::size_t n_modes, Rng& rng);

struct UndercountProbability {
    double exact = 0.0;  // 1 - N! / (N^k (N-k)!)
    double bound = 0.0;  // k(k-1) / (2N)
};

/// Combinatorial collision oracle for k photons fanned uniformly over N
/// modes. Independent of the Fock-space route through multiplexed_count.
UndercountProbability undercount_probability(std::size_t k, std::size_t n_modes);

/// Kerr-probe QND number measurement: phase chi_t per photon with Gaussian
/// readout noise delta_phi, folded mod 2pi. Outcome = inferred count modulo
/// round(2pi/chi_t); the post-state is the Gaussian-weighted projection onto
/// that residue class.
MeasurementRecord kerr_qnd_measure(const MultiModeState& state, std::size_t mode,
                                   double chi_t, double delta_phi, Rng& rng);

/// Position-pointer QND number measurement: momentum kick lambda_t per photon
/// with Gaussian noise delta_p, no folding, so no residue ambiguity.
MeasurementRecord pointer_measure(const MultiModeState& state, std::size_t mode,
                                  double lambda_t, double delta_p, Rng& rng);

/// Homodyne position measurement: samples q from |psi(q)|^2 on an adaptive
/// grid; the post-state projects the mode onto a Gaussian bin of width
/// `resolution` centered at the outcome. `probability` is the density.
MeasurementRecord homodyne_measure(const MultiModeState& state, std::size_t mode, Rng& rng,
                                   double resolution);

/// Homodyne core that consumes the measured mode: returns the outcome, its
/// density, and the normalized reduced state on the remaining modes.
struct HomodyneReduction {
    double outcome = 0.0;
    double density = 0.0;
    MultiModeState reduced;
};
HomodyneReduction homodyne_sample_and_reduce(const MultiModeState& state, std::size_t mode,
                                             Rng& rng, double resolution);

/// Fock coefficients of a normalized Gaussian wavepacket centered at q0 whose
/// position density has standard deviation width.
std::vector<cxd> gaussian_bin_vector(std::size_t cutoff, double q0, double width);

struct PrecisionCheck {
    bool pass = false;
    double ratio = 0.0;  // delta_n / n^{1/3}
};

/// Checks delta_n << n^{1/3}; "<<" means ratio < strictness.
PrecisionCheck precision_check(double delta_n, std::size_t n, double strictness = 0.1);

/// Dispatch through a DetectorConfig (homodyne is a separate operation).
MeasurementRecord measure(const MultiModeState& state, std::size_t mode,
                          const DetectorConfig& config, Rng& rng);

}  // namespace cvsim

#endif
