// Python bindings for the CV Fock-space simulator: states, Clifford gates,
// the five detector models, the cubic phase gate protocol, and the
// experiment harness.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cvsim/cubic.hpp"
#include "cvsim/experiment.hpp"
#include "cvsim/gates.hpp"
#include "cvsim/measure.hpp"
#include "cvsim/rng.hpp"
#include "cvsim/state.hpp"

namespace py = pybind11;
using namespace cvsim;

PYBIND11_MODULE(_cvsim, m) {
    m.doc() = "Truncated-Fock-space continuous-variable quantum optics simulator";

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def_static("for_trial", &Rng::for_trial, py::arg("master_seed"), py::arg("stream_tag"),
                    py::arg("trial_index"))
        .def("uniform", &Rng::uniform)
        .def("gaussian", &Rng::gaussian);

    py::class_<MultiModeState>(m, "MultiModeState")
        .def_static("vacuum", &MultiModeState::vacuum, py::arg("cutoffs"))
        .def_static("from_amplitudes", &MultiModeState::from_amplitudes, py::arg("cutoffs"),
                    py::arg("amplitudes"), py::arg("assume_normalized") = false)
        .def_property_readonly("cutoffs", &MultiModeState::cutoffs)
        .def_property_readonly("amplitudes",
                               [](const MultiModeState& s) { return s.amplitudes(); })
        .def_property_readonly("mode_count", &MultiModeState::mode_count)
        .def_property_readonly("is_normalized", &MultiModeState::is_normalized)
        .def("norm", &MultiModeState::norm)
        .def("normalized", &MultiModeState::normalized);

    py::class_<ModeOperator>(m, "ModeOperator")
        .def_readonly("arity", &ModeOperator::arity)
        .def_property_readonly("cutoffs",
                               [](const ModeOperator& op) {
                                   return op.arity == 1
                                              ? std::vector<std::size_t>{op.cutoffs[0]}
                                              : std::vector<std::size_t>{op.cutoffs[0],
                                                                         op.cutoffs[1]};
                               })
        .def_property_readonly("dim", &ModeOperator::dim)
        .def("entry", [](const ModeOperator& op, std::size_t i, std::size_t j) {
            return op.matrix(i, j);
        });

    py::class_<QuadratureGrid>(m, "QuadratureGrid")
        .def_static("linspace", &QuadratureGrid::linspace, py::arg("qmin"), py::arg("qmax"),
                    py::arg("npoints"))
        .def_static("for_cutoff", &QuadratureGrid::for_cutoff, py::arg("cutoff"),
                    py::arg("span_sigmas") = 4.0)
        .def_readonly("points", &QuadratureGrid::points)
        .def_readonly("spacing", &QuadratureGrid::spacing);

    // fock-core operations
    m.def("make_number_state", &make_number_state, py::arg("n"), py::arg("cutoff"));
    m.def("coherent_state", &coherent_state, py::arg("alpha"), py::arg("cutoff"));
    m.def("tensor", &tensor);
    m.def("annihilation_matrix", &annihilation_matrix, py::arg("cutoff"));
    m.def("creation_matrix", &creation_matrix, py::arg("cutoff"));
    m.def("number_operator", &number_operator, py::arg("cutoff"));
    m.def("quadrature_operators", &quadrature_operators, py::arg("cutoff"));
    m.def("hermitian_exponential", &hermitian_exponential, py::arg("generator"),
          py::arg("scale"));
    m.def("apply",
          py::overload_cast<const MultiModeState&, const ModeOperator&, std::size_t>(&apply),
          py::arg("state"), py::arg("op"), py::arg("mode"));
    m.def("apply2",
          py::overload_cast<const MultiModeState&, const ModeOperator&, std::size_t,
                            std::size_t>(&apply),
          py::arg("state"), py::arg("op"), py::arg("mode_i"), py::arg("mode_j"));
    m.def("expectation",
          py::overload_cast<const MultiModeState&, const ModeOperator&, std::size_t>(
              &expectation),
          py::arg("state"), py::arg("op"), py::arg("mode"));
    m.def("expectation2",
          py::overload_cast<const MultiModeState&, const ModeOperator&, std::size_t,
                            std::size_t>(&expectation),
          py::arg("state"), py::arg("op"), py::arg("mode_i"), py::arg("mode_j"));
    m.def("fidelity", &fidelity);
    m.def("wavefunction", &wavefunction, py::arg("state"), py::arg("grid"),
          py::arg("check_tol") = 1e-3);
    m.def("leakage_fraction", &leakage_fraction);
    m.def("number_distribution", &number_distribution, py::arg("state"), py::arg("mode"));

    // clifford-ops
    m.def("displacement", &displacement, py::arg("alpha"), py::arg("cutoff"));
    m.def("squeeze_one", &squeeze_one, py::arg("eta"), py::arg("cutoff"),
          py::arg("max_abs_eta") = kDefaultSqueezeCap);
    m.def("squeeze_two", &squeeze_two, py::arg("eta"), py::arg("cutoff_i"), py::arg("cutoff_j"),
          py::arg("max_abs_eta") = kDefaultSqueezeCap);
    m.def("beamsplitter", &beamsplitter, py::arg("theta"), py::arg("cutoff_i"),
          py::arg("cutoff_j"));
    m.def("sum_gate", &sum_gate, py::arg("cutoff_i"), py::arg("cutoff_j"));
    m.def("sum_inverse", &sum_inverse, py::arg("cutoff_i"), py::arg("cutoff_j"));
    m.def("quadratic_phase", &quadratic_phase, py::arg("c2"), py::arg("c1"), py::arg("c0"),
          py::arg("cutoff"));
    m.def("epr_pair", &epr_pair, py::arg("eta"), py::arg("cutoff_i"), py::arg("cutoff_j"),
          py::arg("max_abs_eta") = kDefaultSqueezeCap);
    m.def("set_gate_warnings", &set_gate_warnings);

    // detectors
    py::class_<MeasurementRecord>(m, "MeasurementRecord")
        .def_readonly("outcome", &MeasurementRecord::outcome)
        .def_readonly("probability", &MeasurementRecord::probability)
        .def_readonly("post_state", &MeasurementRecord::post_state)
        .def_readonly("model_tag", &MeasurementRecord::model_tag)
        .def_readonly("readout", &MeasurementRecord::readout);

    m.def("photon_count_pvm", &photon_count_pvm, py::arg("state"), py::arg("mode"),
          py::arg("rng"));
    m.def("itd_pvm", &itd_pvm, py::arg("state"), py::arg("mode"), py::arg("rng"));
    m.def("multiplexed_count", &multiplexed_count, py::arg("state"), py::arg("mode"),
          py::arg("n_modes"), py::arg("rng"));
    m.def("kerr_qnd_measure", &kerr_qnd_measure, py::arg("state"), py::arg("mode"),
          py::arg("chi_t"), py::arg("delta_phi"), py::arg("rng"));
    m.def("pointer_measure", &pointer_measure, py::arg("state"), py::arg("mode"),
          py::arg("lambda_t"), py::arg("delta_p"), py::arg("rng"));
    m.def("homodyne_measure", &homodyne_measure, py::arg("state"), py::arg("mode"),
          py::arg("rng"), py::arg("resolution"));
    m.def("undercount_probability", [](std::size_t k, std::size_t n) {
        const UndercountProbability u = undercount_probability(k, n);
        return py::make_tuple(u.exact, u.bound);
    });
    m.def("precision_check", [](double delta_n, std::size_t n, double strictness) {
        const PrecisionCheck c = precision_check(delta_n, n, strictness);
        return py::make_tuple(c.pass, c.ratio);
    }, py::arg("delta_n"), py::arg("n"), py::arg("strictness") = 0.1);

    // cubic-phase
    py::class_<CubicAncilla>(m, "CubicAncilla")
        .def_readonly("state", &CubicAncilla::state)
        .def_readonly("gamma_effective", &CubicAncilla::gamma_effective)
        .def_readonly("gamma_signed", &CubicAncilla::gamma_signed)
        .def_readonly("conditioning_outcome", &CubicAncilla::conditioning_outcome)
        .def_readonly("cubic_fit_rms", &CubicAncilla::cubic_fit_rms)
        .def_readonly("quadratic_fit_rms", &CubicAncilla::quadratic_fit_rms)
        .def_readonly("envelope_sigma", &CubicAncilla::envelope_sigma)
        .def_readonly("captured_mass", &CubicAncilla::captured_mass);

    py::class_<ProtocolTrace>(m, "ProtocolTrace")
        .def_readonly("measured_a", &ProtocolTrace::measured_a)
        .def_readonly("output", &ProtocolTrace::output)
        .def_readonly("oracle_fidelity", &ProtocolTrace::oracle_fidelity)
        .def_readonly("output_leakage", &ProtocolTrace::output_leakage);

    m.def("prepare_weta", &prepare_weta, py::arg("w"), py::arg("eta"), py::arg("cutoff_1"),
          py::arg("cutoff_2"));
    m.def("conditional_cubic_state", &conditional_cubic_state, py::arg("weta"), py::arg("rng"));
    m.def("conditional_cubic_state_at", &conditional_cubic_state_at, py::arg("weta"),
          py::arg("n"));
    m.def("regularized_cubic_state", &regularized_cubic_state, py::arg("gamma"),
          py::arg("sigma"), py::arg("cutoff"), py::arg("max_gamma_sigma_cubed") = 64.0);
    m.def("direct_cubic", &direct_cubic, py::arg("gamma"), py::arg("cutoff"));
    m.def("correction_u", &correction_u, py::arg("a"), py::arg("gamma"), py::arg("cutoff"));
    m.def("cubic_phase_gate", &cubic_phase_gate, py::arg("input"), py::arg("ancilla"),
          py::arg("rng"), py::arg("homodyne_resolution") = 0.05);

    // experiment harness
    m.def("default_config",
          []() { return ExperimentConfig::default_config().dump(2); });
    m.def(
        "run_experiment",
        [](const std::string& name, const std::string& overlay_json) {
            const auto overlay = overlay_json.empty()
                                     ? nlohmann::ordered_json::object()
                                     : nlohmann::ordered_json::parse(overlay_json);
            const ExperimentReport report =
                run_experiment(name, ExperimentConfig::from_overlay(overlay));
            return py::make_tuple(report.all_passed, report.to_json_string());
        },
        py::arg("name"), py::arg("overlay_json") = std::string());
}
