#include "catch_amalgamated.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qbattery/models.hpp"
#include "qbattery/propagator.hpp"

using namespace qbattery;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
ModelSpec nonlinear(int n, int N, double g1, double omega0 = 1.0, int dim_a = 2) {
    return ModelSpec(omega0, n, N, g1, CouplingMode::ReferenceG1,
                     ModeCutoff(dim_a, std::max(N, n * (dim_a - 1)) + 1), ModelKind::Nonlinear);
}
}  // namespace

TEST_CASE("charger Hamiltonian H_A", "[models]") {
    SECTION("n = 2: eigenvalue 2 on |1,0>") {
        ModelSpec spec = nonlinear(2, 2, 1.0);
        OperatorMatrix h = build_H_A(spec);
        int i = spec.cutoff.index_of(1, 0);
        CHECK(h.entries()(i, i).real() == 2.0);
    }
    SECTION("n = 1 reduces to omega0 a^dag a") {
        ModelSpec spec(1.3, 1, 1, 1.0, CouplingMode::ReferenceG1, ModeCutoff(4, 4),
                       ModelKind::Linear);
        Matrix expected = 1.3 * number_operator(Mode::A, spec.cutoff).entries();
        CHECK((build_H_A(spec).entries() - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("initial charger energy is N omega0 for n = N") {
        for (int N : {2, 5, 9}) {
            ModelSpec spec = nonlinear(N, N, 1.0, 0.7);
            QuantumState psi0 = fock_state(1, 0, spec.cutoff);
            CHECK_THAT(expectation(build_H_A(spec), psi0).real(), WithinRel(N * 0.7, 1e-14));
        }
    }
}

TEST_CASE("battery Hamiltonian H_B", "[models]") {
    ModelSpec spec = nonlinear(4, 4, 1.0, 1.0);
    SECTION("<H_B> on |0,N> is N omega0, vacuum is 0") {
        CHECK(expectation(build_H_B(spec), fock_state(0, 4, spec.cutoff)).real() == 4.0);
        CHECK(expectation(build_H_B(spec), fock_state(0, 0, spec.cutoff)).real() == 0.0);
    }
    SECTION("evolved state at the quarter period carries the full charge") {
        double omega = spec.g_n() * std::exp(0.5 * log_factorial(4));
        QuantumState psi = evolve(build_total(spec), fock_state(1, 0, spec.cutoff),
                                  M_PI / (2.0 * omega));
        CHECK_THAT(expectation(build_H_B(spec), psi).real(), WithinAbs(4.0, 1e-10));
    }
}

TEST_CASE("interaction Hamiltonian H_int", "[models]") {
    SECTION("<0,N|H_N|1,0> = g_N sqrt(N!)") {
        for (int N : {2, 3, 7}) {
            ModelSpec spec = nonlinear(N, N, 0.9);
            Matrix h = build_H_int(spec).entries();
            double expected = spec.g_n() * std::exp(0.5 * log_factorial(N));
            CHECK_THAT(h(spec.cutoff.index_of(0, N), spec.cutoff.index_of(1, 0)).real(),
                       WithinRel(expected, 1e-14));
        }
    }
    SECTION("H_N|1,0> points along |0,N> and nothing else") {
        ModelSpec spec = nonlinear(3, 3, 1.1);
        Vector image = build_H_int(spec).entries() * fock_state(1, 0, spec.cutoff).amplitudes();
        int target = spec.cutoff.index_of(0, 3);
        for (int i = 0; i < image.size(); ++i)
            if (i != target) CHECK(std::abs(image(i)) == 0.0);
        CHECK_THAT(std::abs(image(target)),
                   WithinRel(spec.g_n() * std::exp(0.5 * log_factorial(3)), 1e-14));
    }
    SECTION("n = 1 matrix element is g_1") {
        ModelSpec spec(1.0, 1, 1, 0.37, CouplingMode::ReferenceG1, ModeCutoff(3, 3),
                       ModelKind::Linear);
        Matrix h = build_H_int(spec).entries();
        CHECK_THAT(h(spec.cutoff.index_of(0, 1), spec.cutoff.index_of(1, 0)).real(),
                   WithinRel(0.37, 1e-15));
    }
    SECTION("H_int|1,0> equals g_N sqrt(N!) |0,N> exactly") {
        ModelSpec spec = nonlinear(5, 5, 1.0);
        Vector image = build_H_int(spec).entries() * fock_state(1, 0, spec.cutoff).amplitudes();
        Vector expected = Vector::Zero(spec.cutoff.total());
        expected(spec.cutoff.index_of(0, 5)) = spec.g_n() * std::exp(0.5 * log_factorial(5));
        CHECK((image - expected).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("total Hamiltonian", "[models]") {
    ModelSpec spec = nonlinear(3, 3, 0.8, 1.2, 3);
    OperatorMatrix total = build_total(spec);
    SECTION("hermitian and equal to the sum of parts") {
        CHECK(total.hermitian());
        Matrix sum = build_H_A(spec).entries() + build_H_B(spec).entries() +
                     build_H_int(spec).entries();
        CHECK((total.entries() - sum).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("<1,0|H|1,0> = N omega0 (no interaction diagonal)") {
        int i = spec.cutoff.index_of(1, 0);
        CHECK_THAT(total.entries()(i, i).real(), WithinRel(3 * 1.2, 1e-14));
    }
}

TEST_CASE("commutation of H_int with H_A + H_B", "[models]") {
    // exact block structure: the commutator vanishes to the last bit
    for (auto [n, N, da, db] : std::vector<std::array<int, 4>>{
             {1, 1, 5, 5}, {2, 2, 4, 8}, {3, 5, 3, 8}, {6, 6, 2, 7}}) {
        ModelSpec spec(1.0, n, N, 0.5, CouplingMode::DirectGn, ModeCutoff(da, db),
                       n == 1 ? ModelKind::Linear : ModelKind::Nonlinear);
        Matrix hi = build_H_int(spec).entries();
        Matrix h0 = build_H_A(spec).entries() + build_H_B(spec).entries();
        CHECK((hi * h0 - h0 * hi).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("coupling map g_N = g_1/sqrt((N-1)!)", "[models]") {
    CHECK(map_coupling(2.0, 1) == 2.0);
    CHECK(map_coupling(2.0, 2) == 2.0);
    CHECK_THAT(map_coupling(1.0, 5), WithinRel(1.0 / std::sqrt(24.0), 1e-14));
    CHECK_THAT(map_coupling(1.0, 5), WithinAbs(0.2041241, 1e-7));
    CHECK_THROWS_AS(map_coupling(1.0, 0), InvalidArgument);
}

TEST_CASE("coupling map equalizes initial variances", "[models]") {
    double g1 = 0.85, omega0 = 1.4;
    for (int N : {2, 3, 5, 8}) {
        ModelSpec nl = nonlinear(N, N, g1, omega0);
        QuantumState nl0 = fock_state(1, 0, nl.cutoff);
        Vector h_psi = build_total(nl).entries() * nl0.amplitudes();
        double var_nl = h_psi.squaredNorm() -
                        std::pow(nl0.amplitudes().dot(h_psi).real(), 2);

        ModelSpec lin(omega0, 1, N, g1, CouplingMode::ReferenceG1, ModeCutoff(N + 1, N + 1),
                      ModelKind::Linear);
        QuantumState lin0 = fock_state(N, 0, lin.cutoff);
        Vector h_psi_l = build_total(lin).entries() * lin0.amplitudes();
        double var_l = h_psi_l.squaredNorm() -
                       std::pow(lin0.amplitudes().dot(h_psi_l).real(), 2);

        double target = N * g1 * g1;
        CHECK_THAT(var_nl, WithinRel(target, 1e-10));
        CHECK_THAT(var_l, WithinRel(target, 1e-10));
        CHECK(std::abs(var_nl - var_l) < 1e-10 * target);
    }
}

TEST_CASE("josephson effective coupling", "[models]") {
    SECTION("n = 1: E_J lambda1 lambda2") {
        JosephsonSpec j(2.0, 0.1, 0.2, 1.0, 1.0, 1);
        CHECK_THAT(josephson_effective_coupling(j), WithinRel(2.0 * 0.1 * 0.2, 1e-14));
    }
    SECTION("n = 3: -E_J lambda1 lambda2^3 / 6") {
        JosephsonSpec j(1.0, 0.05, 0.05, 3.0, 1.0, 3);
        CHECK_THAT(josephson_effective_coupling(j),
                   WithinRel(-1.0 * 0.05 * std::pow(0.05, 3) / 6.0, 1e-14));
    }
    SECTION("even order is rejected") {
        CHECK_THROWS_AS(JosephsonSpec(1.0, 0.05, 0.05, 2.0, 1.0, 2), EvenOrderUnsupported);
    }
}

TEST_CASE("full josephson Hamiltonian", "[models]") {
    SECTION("degenerate limit: tiny lambda recovers the oscillators minus E_J") {
        // lambda -> 0 is excluded by validation; 1e-8 puts cos(phi) within 1e-16 of identity
        JosephsonSpec j(1.5, 1e-8, 1e-8, 3.0, 1.0, 3);
        ModeCutoff cut(4, 6);
        Matrix h = build_josephson_full(j, cut).entries();
        Matrix expected = 3.0 * number_operator(Mode::A, cut).entries() +
                          1.0 * number_operator(Mode::B, cut).entries() -
                          1.5 * Matrix::Identity(cut.total(), cut.total());
        CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("n = 3 matrix element matches the effective coupling to O(lambda^2)") {
        JosephsonSpec j(1.0, 0.05, 0.05, 3.0, 1.0, 3);
        ModeCutoff cut(8, 12);
        Matrix h = build_josephson_full(j, cut).entries();
        double element = h(cut.index_of(0, 3), cut.index_of(1, 0)).real();
        double target = josephson_effective_coupling(j) * std::sqrt(6.0);
        CHECK_THAT(target, WithinAbs(-2.5515518e-6, 1e-12));
        CHECK(std::abs(element - target) / std::abs(target) < 0.01);
    }
    SECTION("hermitian by construction") {
        JosephsonSpec j(1.0, 0.3, 0.2, 1.0, 1.0, 1);
        ModeCutoff cut(6, 6);
        OperatorMatrix h = build_josephson_full(j, cut);
        CHECK((h.entries() - h.entries().adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("taylor resonant terms", "[models]") {
    SECTION("n = 1 at order 2: a^dag b with coefficient E_J lambda1 lambda2") {
        JosephsonSpec j(1.0, 0.1, 0.2, 1.0, 1.0, 1);
        auto terms = taylor_resonant_terms(j, 2);
        bool found_adag_b = false, found_a_bdag = false, found_const = false;
        for (const auto& t : terms) {
            if (t.order == 2 && t.a_raise == 1 && t.b_lower == 1 && t.a_lower == 0 &&
                t.b_raise == 0) {
                found_adag_b = true;
                CHECK_THAT(t.coefficient, WithinRel(1.0 * 0.1 * 0.2, 1e-14));
            }
            if (t.order == 2 && t.a_lower == 1 && t.b_raise == 1 && t.a_raise == 0 &&
                t.b_lower == 0)
                found_a_bdag = true;
            if (t.order == 0) {
                found_const = true;
                CHECK(t.coefficient == -1.0);  // the -E_J offset
                CHECK(t.monomial() == "1");
            }
        }
        CHECK(found_adag_b);
        CHECK(found_a_bdag);
        CHECK(found_const);
    }
    SECTION("n = 3 at order 4 reproduces the effective coupling to machine precision") {
        JosephsonSpec j(1.3, 0.07, 0.04, 3.0, 1.0, 3);
        auto terms = taylor_resonant_terms(j, 4);
        double expected = josephson_effective_coupling(j);
        bool found = false;
        for (const auto& t : terms)
            if (t.order == 4 && t.a_raise == 1 && t.a_lower == 0 && t.b_raise == 0 &&
                t.b_lower == 3) {
                found = true;
                CHECK_THAT(t.coefficient, WithinRel(expected, 1e-15));
                CHECK(t.monomial() == "adag b^3");
            }
        CHECK(found);
    }
    SECTION("every returned monomial passes the frequency-matching rule") {
        JosephsonSpec j(1.0, 0.1, 0.1, 3.0, 1.0, 3);
        for (const auto& t : taylor_resonant_terms(j, 8))
            CHECK(j.n * (t.a_raise - t.a_lower) + (t.b_raise - t.b_lower) == 0);
    }
    SECTION("max_order below n+1 is rejected") {
        JosephsonSpec j(1.0, 0.1, 0.1, 3.0, 1.0, 3);
        CHECK_THROWS_AS(taylor_resonant_terms(j, 3), InvalidArgument);
    }
    SECTION("off-resonance specs are rejected") {
        JosephsonSpec j(1.0, 0.1, 0.1, 3.1, 1.0, 3);
        CHECK_THROWS_AS(taylor_resonant_terms(j, 4), InvalidArgument);
    }
}
