#include <doctest.h>

#include <cmath>

#include "cvsim/fock.hpp"
#include "cvsim/gates.hpp"
#include "cvsim/state.hpp"

using namespace cvsim;

namespace {
double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}
}  // namespace

TEST_CASE("number states") {
    MultiModeState vac = make_number_state(0, 8);
    CHECK(vac.amplitudes()[0] == cxd(1.0, 0.0));
    CHECK(vac.is_normalized());

    MultiModeState three = make_number_state(3, 8);
    CHECK(std::abs(three.amplitudes()[3]) == doctest::Approx(1.0));
    CHECK(expectation(three, number_operator(8), 0).real() == doctest::Approx(3.0));

    CHECK_THROWS_AS(make_number_state(8, 8), std::invalid_argument);
    CHECK_THROWS_AS(make_number_state(0, 1), std::invalid_argument);
}

TEST_CASE("annihilation matrix entries and commutator") {
    ModeOperator a2 = annihilation_matrix(2);
    CHECK(a2.matrix(0, 1) == cxd(1.0, 0.0));
    CHECK(a2.matrix(0, 0) == cxd(0.0, 0.0));
    CHECK(a2.matrix(1, 0) == cxd(0.0, 0.0));
    CHECK(a2.matrix(1, 1) == cxd(0.0, 0.0));

    ModeOperator a3 = annihilation_matrix(3);
    CHECK(a3.matrix(1, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    // [a, a^dag] = I away from the truncation boundary
    const std::size_t d = 12;
    ModeOperator a = annihilation_matrix(d);
    ModeOperator ad = creation_matrix(d);
    Matrix comm = a.matrix * ad.matrix - ad.matrix * a.matrix;
    for (std::size_t n = 0; n + 1 < d; ++n)
        CHECK(std::abs(comm(n, n) - cxd(1.0, 0.0)) < 1e-14);

    CHECK_THROWS_AS(annihilation_matrix(1), std::invalid_argument);
}

TEST_CASE("quadrature operators") {
    const std::size_t d = 16;
    auto [q, p] = quadrature_operators(d);
    MultiModeState vac = MultiModeState::vacuum({d});
    CHECK(std::abs(expectation(vac, q, 0)) < 1e-14);

    ModeOperator q2{q.matrix * q.matrix, 1, {d, 0}};
    CHECK(expectation(vac, q2, 0).real() == doctest::Approx(0.5).epsilon(1e-14));

    // [q, p] = i on n <= d-2, exact to 1e-12
    Matrix comm = q.matrix * p.matrix - p.matrix * q.matrix;
    for (std::size_t n = 0; n + 1 < d; ++n)
        CHECK(std::abs(comm(n, n) - cxd(0.0, 1.0)) < 1e-12);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (i != j) CHECK(std::abs(comm(i, j)) < 1e-12);
}

TEST_CASE("hermitian exponential") {
    const std::size_t d = 16;
    ModeOperator n_op = number_operator(d);

    // exp(i pi N)|1> = -|1>
    ModeOperator u = hermitian_exponential(n_op, M_PI);
    MultiModeState one = make_number_state(1, d);
    MultiModeState phased = apply(one, u, 0);
    CHECK(std::abs(phased.amplitudes()[1] - cxd(-1.0, 0.0)) < 1e-12);

    // zero scale is the identity
    ModeOperator id = hermitian_exponential(n_op, 0.0);
    CHECK(max_abs_difference(id.matrix, Matrix::identity(d)) < 1e-14);

    // exp(i pi/2 N) |alpha> = |i alpha> up to (here: exactly no) global phase
    const cxd alpha(0.8, 0.2);
    MultiModeState rotated = apply(coherent_state(alpha, 32),
                                   hermitian_exponential(number_operator(32), M_PI / 2.0), 0);
    MultiModeState target = coherent_state(alpha * cxd(0.0, 1.0), 32);
    CHECK(fidelity(rotated, target) == doctest::Approx(1.0).epsilon(1e-12));

    // non-Hermitian generators are rejected
    ModeOperator bad = annihilation_matrix(d);
    CHECK_THROWS_AS(hermitian_exponential(bad, 1.0), std::invalid_argument);

    // unitarity at the build cutoff
    CHECK(is_unitary(u, 1e-10));
}

TEST_CASE("apply: identity, ladder action, and spectator modes") {
    const std::size_t d = 6;
    MultiModeState one = make_number_state(1, d);
    MultiModeState same = apply(one, identity_operator(d), 0);
    CHECK(fidelity(one, same) == doctest::Approx(1.0));

    // a|1> = |0> with unnormalized coefficient 1
    MultiModeState lowered = apply(one, annihilation_matrix(d), 0);
    CHECK(std::abs(lowered.amplitudes()[0] - cxd(1.0, 0.0)) < 1e-14);
    CHECK(lowered.norm() == doctest::Approx(1.0));

    // two-mode op on modes (0,1) of a 3-mode state leaves mode-2 marginals put
    MultiModeState tri = tensor(tensor(coherent_state(0.4, d), make_number_state(1, d)),
                                coherent_state(cxd(0.0, 0.5), d));
    std::vector<double> before = number_distribution(tri, 2);
    MultiModeState stirred = apply(tri, beamsplitter(0.7, d, d), 0, 1);
    std::vector<double> after = number_distribution(stirred, 2);
    for (std::size_t n = 0; n < d; ++n) CHECK(before[n] == doctest::Approx(after[n]).epsilon(1e-12));

    // dimension mismatch rejected
    CHECK_THROWS_AS(apply(one, identity_operator(d + 1), 0), std::invalid_argument);
}

TEST_CASE("wavefunction on the default grid") {
    const std::size_t d = 24;
    QuadratureGrid grid = QuadratureGrid::for_cutoff(d);

    // grid invariant: strictly increasing, uniform spacing
    for (std::size_t i = 0; i + 1 < grid.points.size(); ++i) {
        CHECK(grid.points[i + 1] > grid.points[i]);
        CHECK(std::abs((grid.points[i + 1] - grid.points[i]) - grid.spacing) < 1e-12);
    }

    // vacuum is the Gaussian pi^{-1/4} e^{-q^2/2}
    std::vector<cxd> psi = wavefunction(MultiModeState::vacuum({d}), grid);
    for (std::size_t i = 0; i < grid.points.size(); i += 37) {
        const double q = grid.points[i];
        const double expected = std::pow(M_PI, -0.25) * std::exp(-0.5 * q * q);
        CHECK(std::abs(psi[i] - cxd(expected, 0.0)) < 1e-10);
    }

    // |1> has odd parity: psi(0) = 0
    std::vector<cxd> psi1 = wavefunction(make_number_state(1, d), grid);
    std::size_t mid = grid.points.size() / 2;
    CHECK(std::abs(psi1[mid]) < 1e-9);

    // squeezed vacuum: position density variance e^{-2 eta}/2
    const std::size_t ds = 40;
    MultiModeState sq = apply(MultiModeState::vacuum({ds}), squeeze_one(0.5, ds), 0);
    QuadratureGrid gs = QuadratureGrid::for_cutoff(ds);
    std::vector<cxd> psis = wavefunction(sq, gs);
    double mass = 0.0, second = 0.0;
    for (std::size_t i = 0; i < gs.points.size(); ++i) {
        const double w = std::norm(psis[i]) * gs.spacing;
        mass += w;
        second += w * gs.points[i] * gs.points[i];
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(second == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-4));

    // too-narrow grid fails the normalization check with a diagnostic
    QuadratureGrid narrow = QuadratureGrid::linspace(-0.5, 0.5, 32);
    CHECK_THROWS_AS(wavefunction(MultiModeState::vacuum({d}), narrow), std::runtime_error);
}

TEST_CASE("fidelity and expectation") {
    CHECK(fidelity(make_number_state(0, 8), make_number_state(1, 8)) == doctest::Approx(0.0));
    MultiModeState c = coherent_state(1.0, 32);
    CHECK(fidelity(c, c) == doctest::Approx(1.0));
    CHECK(fidelity(c, MultiModeState::vacuum({32})) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    // <N> on |alpha> = |alpha|^2; Poisson amplitudes
    CHECK(expectation(c, number_operator(32), 0).real() == doctest::Approx(1.0).epsilon(1e-12));
    for (int n = 0; n < 8; ++n)
        CHECK(std::norm(c.amplitudes()[n]) ==
              doctest::Approx(std::exp(-1.0) / factorial(n)).epsilon(1e-10));

    // Hermitian expectation is real
    auto [q, p] = quadrature_operators(32);
    CHECK(std::abs(expectation(c, q, 0).imag()) < 1e-10);

    // <N> on squeezed vacuum = sinh^2(eta)
    const std::size_t ds = 40;
    MultiModeState sq = apply(MultiModeState::vacuum({ds}), squeeze_one(0.5, ds), 0);
    CHECK(expectation(sq, number_operator(ds), 0).real() ==
          doctest::Approx(std::pow(std::sinh(0.5), 2)).epsilon(1e-6));

    CHECK_THROWS_AS(fidelity(make_number_state(0, 8), make_number_state(0, 9)),
                    std::invalid_argument);
}

TEST_CASE("truncation monotonicity of a fixed preparation") {
    // fidelity between the cutoff-d and cutoff-2d builds is nondecreasing in d
    auto embedded_fidelity = [](std::size_t d) {
        MultiModeState small = apply(MultiModeState::vacuum({d}), squeeze_one(0.6, d), 0);
        MultiModeState big = apply(MultiModeState::vacuum({2 * d}), squeeze_one(0.6, 2 * d), 0);
        std::vector<cxd> padded(2 * d, cxd(0.0, 0.0));
        for (std::size_t n = 0; n < d; ++n) padded[n] = small.amplitudes()[n];
        MultiModeState embedded =
            MultiModeState::from_amplitudes({2 * d}, std::move(padded), false).normalized();
        return fidelity(embedded, big);
    };
    double prev = 0.0;
    for (std::size_t d : {8, 16, 32}) {
        const double f = embedded_fidelity(d);
        CHECK(f >= prev - 1e-12);
        prev = f;
    }
    CHECK(prev > 0.999);
}

TEST_CASE("leakage fraction") {
    CHECK(leakage_fraction(MultiModeState::vacuum({20})) == doctest::Approx(0.0));
    CHECK(leakage_fraction(make_number_state(19, 20)) == doctest::Approx(1.0));
    // top 10% of 20 levels = levels 18 and 19
    CHECK(leakage_fraction(make_number_state(18, 20)) == doctest::Approx(1.0));
    CHECK(leakage_fraction(make_number_state(17, 20)) == doctest::Approx(0.0));
}

TEST_CASE("state helpers: tensor, project, contract, embed, trim") {
    MultiModeState pair = tensor(make_number_state(1, 4), coherent_state(0.5, 6));
    CHECK(pair.mode_count() == 2);
    CHECK(pair.cutoff(0) == 4);
    CHECK(pair.cutoff(1) == 6);

    auto [prob, post] = project_number(pair, 0, 1);
    CHECK(prob == doctest::Approx(1.0));
    CHECK(post.is_normalized());

    std::vector<cxd> e1(4, cxd(0.0, 0.0));
    e1[1] = 1.0;
    auto [weight, reduced] = contract_mode(pair, 0, e1);
    CHECK(weight == doctest::Approx(1.0));
    CHECK(reduced.mode_count() == 1);
    CHECK(fidelity(reduced, coherent_state(0.5, 6)) == doctest::Approx(1.0));

    MultiModeState back = embed_mode(reduced, 0, e1);
    CHECK(fidelity(back, pair) == doctest::Approx(1.0));

    MultiModeState padded = append_vacuum_mode(reduced, 4);
    CHECK(padded.mode_count() == 2);
    CHECK(number_distribution(padded, 1)[0] == doctest::Approx(1.0));

    MultiModeState trimmed = trim_mode_cutoff(make_number_state(1, 8), 0, 3);
    CHECK(trimmed.cutoff(0) == 3);
    CHECK(std::abs(trimmed.amplitudes()[1]) == doctest::Approx(1.0));
    CHECK_THROWS_AS(trim_mode_cutoff(make_number_state(5, 8), 0, 4), std::runtime_error);
}
