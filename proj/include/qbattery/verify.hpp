#pragma once

// Self-check suites behind the `verify` subcommand. Each suite exercises one
// family of invariants at small desk-scale parameters and reports pass/fail
// with a human-readable detail string. The qsl-saturation suite accepts a
// deliberate corruption factor on the mapped coupling so the failure path
// itself can be exercised end to end.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qbattery/certify.hpp"
#include "qbattery/classical.hpp"
#include "qbattery/dynamics.hpp"
#include "qbattery/fock.hpp"
#include "qbattery/models.hpp"
#include "qbattery/propagator.hpp"

namespace qbattery {

struct VerifyOptions {
    double corrupt_gn_factor = 1.0;  // scales g_N after the mapping; 1 = honest run
    unsigned seed = 20240811;
    int random_states = 25;
};

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace verify_detail {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << msg;
        }
    }
};

inline ModelSpec nonlinear_spec(int N, double g1, double omega0 = 1.0) {
    return ModelSpec(omega0, N, N, g1, CouplingMode::ReferenceG1, ModeCutoff(2, N + 1),
                     ModelKind::Nonlinear);
}

// Random charger states (pure or diagonal mixtures) with <a^dag a> = 1 so the
// initial local energy is exactly N omega0 under H_A = N omega0 a^dag a.
// Mean-one distributions are built by mixing a random distribution with a
// point mass at level 0 or the top level.
inline std::vector<double> random_mean_one_distribution(std::mt19937& rng, int levels) {
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    std::vector<double> p(levels);
    double sum = 0.0, mean = 0.0;
    for (int m = 0; m < levels; ++m) {
        p[m] = uni(rng);
        sum += p[m];
    }
    for (int m = 0; m < levels; ++m) {
        p[m] /= sum;
        mean += m * p[m];
    }
    if (mean >= 1.0) {
        double lam = 1.0 / mean;  // mix with vacuum
        for (int m = 0; m < levels; ++m) p[m] *= lam;
        p[0] += 1.0 - lam;
    } else {
        int top = levels - 1;
        double lam = (top - 1.0) / (top - mean);  // mix with the top level
        for (int m = 0; m < levels; ++m) p[m] *= lam;
        p[top] += 1.0 - lam;
    }
    return p;
}

inline QuantumState random_charger_state(std::mt19937& rng, const ModeCutoff& cutoff, int levels,
                                         bool pure) {
    std::vector<double> p = random_mean_one_distribution(rng, levels);
    if (pure) {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        Vector v = Vector::Zero(cutoff.total());
        for (int m = 0; m < levels; ++m)
            v(cutoff.index_of(m, 0)) = std::polar(std::sqrt(p[m]), phase(rng));
        v /= v.norm();
        return QuantumState::pure(cutoff, std::move(v));
    }
    Matrix rho = Matrix::Zero(cutoff.total(), cutoff.total());
    double trace = 0.0;
    for (int m = 0; m < levels; ++m) {
        rho(cutoff.index_of(m, 0), cutoff.index_of(m, 0)) = p[m];
        trace += p[m];
    }
    rho /= trace;
    return QuantumState::mixed(cutoff, std::move(rho));
}

}  // namespace verify_detail

inline SuiteResult verify_ladder_algebra(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    for (int d : {2, 3, 7, 12}) {
        ModeCutoff cut(2, d);
        Matrix b = ladder_lower(Mode::B, cut).entries();
        Matrix comm = b * b.adjoint() - b.adjoint() * b;
        Matrix expected = Matrix::Identity(cut.total(), cut.total());
        for (int ma = 0; ma < 2; ++ma)
            expected(cut.index_of(ma, d - 1), cut.index_of(ma, d - 1)) = -(d - 1.0);
        // diagonal carries sqrt(m)*sqrt(m) rounding; the zero pattern is exact
        c.require((comm - expected).cwiseAbs().maxCoeff() < 1e-13,
                  "[b,b^dag] structure broken at dim " + std::to_string(d));
        Matrix off = comm;
        off.diagonal().setZero();
        c.require(off.cwiseAbs().maxCoeff() == 0.0,
                  "[b,b^dag] off-diagonal entries at dim " + std::to_string(d));
        Matrix nb = number_operator(Mode::B, cut).entries();
        c.require((b.adjoint() * b - nb).cwiseAbs().maxCoeff() < 1e-13,
                  "b^dag b != number operator at dim " + std::to_string(d));
    }
    for (int m = 0; m < 6; ++m) {
        ModeCutoff cut(8, 8);
        c.require(std::abs(fock_state(m, 0, cut).amplitudes().norm() - 1.0) < 1e-10,
                  "fock norm");
    }
    for (double alpha : {0.0, 0.5, 1.3}) {
        ModeCutoff cut(40, 2);
        c.require(std::abs(coherent_state(alpha, cut, Mode::A).amplitudes().norm() - 1.0) < 1e-10,
                  "coherent norm at alpha " + std::to_string(alpha));
    }
    // index convention round trip
    ModeCutoff cut(5, 9);
    bool rt = true;
    for (int i = 0; i < cut.total(); ++i) {
        auto [ma, mb] = cut.levels_at(i);
        rt = rt && cut.index_of(ma, mb) == i;
    }
    c.require(rt, "index round trip");
    return {"ladder-algebra", c.ok, c.detail.str()};
}

inline SuiteResult verify_commutation(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    for (auto [n, N, da, db] : std::vector<std::array<int, 4>>{
             {1, 1, 4, 4}, {2, 2, 3, 6}, {3, 3, 4, 9}, {5, 5, 2, 6}, {2, 4, 4, 9}}) {
        ModelSpec spec(1.0, n, N, 0.7, CouplingMode::DirectGn, ModeCutoff(da, db),
                       n == 1 ? ModelKind::Linear : ModelKind::Nonlinear);
        Matrix hi = build_H_int(spec).entries();
        Matrix h0 = (build_H_A(spec) + build_H_B(spec)).entries();
        double comm = (hi * h0 - h0 * hi).cwiseAbs().maxCoeff();
        c.require(comm < 1e-12, "[H_int, H_A+H_B] = " + std::to_string(comm) + " at n=" +
                                    std::to_string(n));
    }
    return {"commutation", c.ok, c.detail.str()};
}

inline SuiteResult verify_conservation(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    std::vector<double> grid(301);
    for (int i = 0; i < 301; ++i) grid[i] = 5.0 * i / 300.0;
    for (int N : {2, 5}) {
        ModelSpec spec = verify_detail::nonlinear_spec(N, 1.0);
        QuantumState psi0 = fock_state(1, 0, spec.cutoff);
        try {
            charging_trace(spec, psi0, grid);  // throws PhysicsViolation on drift
        } catch (const PhysicsViolation& e) {
            c.require(false, e.what());
        }
    }
    // coherent input under the n = 2 model
    try {
        ModelSpec spec(1.0, 2, 2, 1.0, CouplingMode::DirectGn, ModeCutoff(15, 29),
                       ModelKind::Nonlinear);
        charging_trace(spec, coherent_state(1.0, spec.cutoff, Mode::A), grid);
    } catch (const PhysicsViolation& e) {
        c.require(false, e.what());
    }
    return {"conservation", c.ok, c.detail.str()};
}

inline SuiteResult verify_block_oracle(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    for (int N : {2, 5, 9}) {
        ModelSpec spec = verify_detail::nonlinear_spec(N, 0.9, 1.1);
        QuantumState psi0 = fock_state(1, 0, spec.cutoff);
        Propagator prop(build_total(spec));
        double omega = spec.g_n() * std::exp(0.5 * log_factorial(N));
        for (double t : {0.13, 0.7, 2.4}) {
            Vector psi = prop.evolve_vector(psi0.amplitudes(), t);
            Vector expected = Vector::Zero(spec.cutoff.total());
            Complex phase = std::polar(1.0, -N * spec.omega0 * t);
            expected(spec.cutoff.index_of(1, 0)) = phase * std::cos(omega * t);
            expected(spec.cutoff.index_of(0, N)) =
                phase * Complex(0.0, -1.0) * std::sin(omega * t);
            double dev = (psi - expected).cwiseAbs().maxCoeff();
            c.require(dev < 1e-9, "two-level oracle deviation " + std::to_string(dev) + " at N=" +
                                      std::to_string(N));
        }
    }
    return {"block-oracle", c.ok, c.detail.str()};
}

inline SuiteResult verify_time_reversal(const VerifyOptions& opt) {
    using verify_detail::Check;
    Check c;
    std::mt19937 rng(opt.seed);
    ModelSpec spec(1.0, 2, 2, 0.8, CouplingMode::DirectGn, ModeCutoff(6, 11),
                   ModelKind::Nonlinear);
    Propagator prop(build_total(spec));
    std::normal_distribution<double> gauss;
    for (int rep = 0; rep < 5; ++rep) {
        Vector psi(spec.cutoff.total());
        for (int i = 0; i < psi.size(); ++i) psi(i) = Complex(gauss(rng), gauss(rng));
        psi /= psi.norm();
        double t = 0.3 + rep;
        Vector back = prop.evolve_vector(prop.evolve_vector(psi, t), -t);
        double dev = (back - psi).cwiseAbs().maxCoeff();
        c.require(dev < 1e-9, "round trip deviation " + std::to_string(dev));
    }
    return {"time-reversal", c.ok, c.detail.str()};
}

inline SuiteResult verify_qsl_saturation(const VerifyOptions& opt) {
    using verify_detail::Check;
    Check c;
    for (int N : {2, 4, 7}) {
        double g1 = 1.0, omega0 = 1.0;
        double g_corrupt = map_coupling(g1, N) * opt.corrupt_gn_factor;
        ModelSpec spec(omega0, N, N, g_corrupt, CouplingMode::DirectGn, ModeCutoff(2, N + 1),
                       ModelKind::Nonlinear);
        QuantumState psi0 = fock_state(1, 0, spec.cutoff);
        double tau_qsl_expected = M_PI / (2.0 * std::sqrt(double(N)) * g1);
        auto opt_result = optimal_charging_time(spec, psi0, 10.0 * tau_qsl_expected);
        double ratio = opt_result.tau_bar / tau_qsl_expected;
        c.require(std::abs(ratio - 1.0) < 1e-6,
                  "tau_bar/tau_QSL = " + std::to_string(ratio) + " at N=" + std::to_string(N));
    }
    return {"qsl-saturation", c.ok, c.detail.str()};
}

inline SuiteResult verify_variance_equalization(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    double g1 = 0.8, omega0 = 1.2;
    for (int N : {2, 3, 5, 8}) {
        ModelSpec nl = verify_detail::nonlinear_spec(N, g1, omega0);
        QuantumState nl0 = fock_state(1, 0, nl.cutoff);
        double var_nl = variance(build_total(nl), nl0);
        ModelSpec lin(omega0, 1, N, g1, CouplingMode::ReferenceG1, ModeCutoff(N + 1, N + 1),
                      ModelKind::Linear);
        QuantumState lin0 = fock_state(N, 0, lin.cutoff);
        double var_l = variance(build_total(lin), lin0);
        double target = N * g1 * g1;
        c.require(std::abs(var_nl * var_nl - var_l * var_l) < 1e-10 * target,
                  "variances differ at N=" + std::to_string(N));
        c.require(std::abs(var_nl * var_nl - target) < 1e-10 * target,
                  "variance != N g1^2 at N=" + std::to_string(N));
    }
    return {"variance-equalization", c.ok, c.detail.str()};
}

inline SuiteResult verify_power_bound(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    int N = 3;
    double g1 = 1.0, omega0 = 1.0;
    ModelSpec spec = verify_detail::nonlinear_spec(N, g1, omega0);
    QuantumState psi0 = fock_state(1, 0, spec.cutoff);
    EvolutionContext ctx = make_context(spec, psi0);
    double tau_bar = M_PI / (2.0 * std::sqrt(double(N)) * g1);
    Eigen::VectorXd diag_B(spec.cutoff.total());
    for (int i = 0; i < spec.cutoff.total(); ++i)
        diag_B(i) = ctx.H_B.entries()(i, i).real();
    auto coeffs = ctx.propagator.prepare(psi0.amplitudes());
    for (int k = 1; k <= 40; ++k) {
        double tau = 2.2 * tau_bar * k / 40.0;
        double e = diag_B.dot(ctx.propagator.evolve_prepared(coeffs, tau).cwiseAbs2());
        double p = e / tau;
        double bound = power_bound(ctx, tau, 201);
        c.require(p <= bound + 1e-9,
                  "P > bound at tau = " + std::to_string(tau) + " (" + std::to_string(p) + " vs " +
                      std::to_string(bound) + ")");
    }
    return {"power-bound", c.ok, c.detail.str()};
}

inline SuiteResult verify_classical_fixed_point(const VerifyOptions&) {
    using verify_detail::Check;
    Check c;
    for (int n : {2, 3, 5}) {
        for (Frame frame : {Frame::Rotating, Frame::Lab}) {
            ClassicalParams params{n, 1.0, 0.9};
            ClassicalState init{std::sqrt(2.0 * n / double(n)), {0.0, 0.0}, frame};
            auto traj = integrate_classical(init, params, 4.0, 0.01);
            bool all_zero = true;
            for (double e : traj.energy_B) all_zero = all_zero && e == 0.0;
            c.require(all_zero, "E_B not bitwise zero for n=" + std::to_string(n));
        }
    }
    return {"classical-fixed-point", c.ok, c.detail.str()};
}

inline SuiteResult verify_local_energy_bound(const VerifyOptions& opt) {
    using verify_detail::Check;
    Check c;
    const int N = 3;
    const double omega0 = 1.0;
    const int charger_levels = 5;
    ModeCutoff cutoff(charger_levels, N * (charger_levels - 1) + 1);
    ModelSpec spec(omega0, N, N, 1.0, CouplingMode::ReferenceG1, cutoff, ModelKind::Nonlinear);
    OperatorMatrix H_B = build_H_B(spec);
    OperatorMatrix Q = charge_operator(spec);
    OperatorMatrix H = build_total(spec);
    std::mt19937 rng(opt.seed);
    std::vector<double> grid(121);
    double horizon = 3.0 * M_PI / (2.0 * std::sqrt(double(N)));
    for (size_t i = 0; i < grid.size(); ++i) grid[i] = horizon * i / (grid.size() - 1.0);
    for (int rep = 0; rep < opt.random_states; ++rep) {
        QuantumState psi = verify_detail::random_charger_state(rng, cutoff, charger_levels,
                                                               rep % 2 == 0);
        ChargingTrace trace = charging_trace(H, H_B, Q, psi, grid);
        double e_max = *std::max_element(trace.energy_B.begin(), trace.energy_B.end());
        c.require(e_max <= N * omega0 + 1e-9,
                  "E_B = " + std::to_string(e_max) + " exceeds N omega0 on state " +
                      std::to_string(rep));
    }
    return {"local-energy-bound", c.ok, c.detail.str()};
}

inline const std::map<std::string, std::function<SuiteResult(const VerifyOptions&)>>&
verify_suites() {
    static const std::map<std::string, std::function<SuiteResult(const VerifyOptions&)>> suites = {
        {"ladder-algebra", verify_ladder_algebra},
        {"commutation", verify_commutation},
        {"conservation", verify_conservation},
        {"block-oracle", verify_block_oracle},
        {"time-reversal", verify_time_reversal},
        {"qsl-saturation", verify_qsl_saturation},
        {"variance-equalization", verify_variance_equalization},
        {"power-bound", verify_power_bound},
        {"classical-fixed-point", verify_classical_fixed_point},
        {"local-energy-bound", verify_local_energy_bound},
    };
    return suites;
}

inline std::vector<std::string> verify_suite_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : verify_suites()) names.push_back(name);
    return names;
}

inline std::vector<SuiteResult> run_verify_suites(const std::vector<std::string>& names,
                                                  const VerifyOptions& options = {}) {
    const auto& suites = verify_suites();
    std::vector<SuiteResult> results;
    for (const auto& name : names) {
        auto it = suites.find(name);
        if (it == suites.end()) throw InvalidArgument("unknown verify suite '" + name + "'");
        try {
            results.push_back(it->second(options));
        } catch (const Error& e) {
            results.push_back({name, false, e.what()});
        }
    }
    return results;
}

}  // namespace qbattery
