#pragma once

// Classical analog of the charger-battery model in complex coordinates
// X = q + i p: Hamilton's equations in the lab or rotating frame, fixed-step
// RK4 integration with an energy-drift guard, and the charging summary that
// exposes the frozen dynamics of the n > 1 models.
//
// Lab frame:      dX_A/dt = -i n w0 X_A - i g_n X_B^n
//                 dX_B/dt = -i w0 X_B  - i n g_n X_A conj(X_B)^{n-1}
// Rotating frame: same with the w0 terms dropped.
//
// Energies: E_A = (n w0 / 2)|X_A|^2, E_B = (w0/2)|X_B|^2,
// E_int = g_n Re(conj(X_A) X_B^n); all three are frame-invariant at the
// model's resonance, so the total-energy monitor works in either frame.

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "qbattery/errors.hpp"

namespace qbattery {

enum class Frame { Lab, Rotating };

struct ClassicalParams {
    int n = 1;
    double omega0 = 1.0;
    double g_n = 1.0;
};

struct ClassicalState {
    std::complex<double> X_A{0.0, 0.0};
    std::complex<double> X_B{0.0, 0.0};
    Frame frame = Frame::Rotating;
};

struct ClassicalDerivative {
    std::complex<double> dX_A{0.0, 0.0};
    std::complex<double> dX_B{0.0, 0.0};
};

namespace detail {

// Integer power by repeated multiplication; keeps 0^k exactly zero and
// defines z^0 = 1.
inline std::complex<double> ipow(std::complex<double> z, int k) {
    std::complex<double> out{1.0, 0.0};
    for (int i = 0; i < k; ++i) out *= z;
    return out;
}

}  // namespace detail

inline ClassicalDerivative classical_rhs(const ClassicalState& state,
                                         const ClassicalParams& params) {
    if (params.n < 1) throw InvalidArgument("classical_rhs: n must be >= 1");
    const std::complex<double> I{0.0, 1.0};
    const double n = params.n, g = params.g_n;
    ClassicalDerivative d;
    d.dX_A = -I * g * detail::ipow(state.X_B, params.n);
    d.dX_B = -I * n * g * state.X_A * detail::ipow(std::conj(state.X_B), params.n - 1);
    if (state.frame == Frame::Lab) {
        d.dX_A += -I * (n * params.omega0) * state.X_A;
        d.dX_B += -I * params.omega0 * state.X_B;
    }
    return d;
}

struct ClassicalTrajectory {
    std::vector<double> times;
    std::vector<ClassicalState> states;
    std::vector<double> energy_A;
    std::vector<double> energy_B;
    std::vector<double> energy_interaction;
    std::vector<double> energy_total;
};

inline double classical_energy_A(const ClassicalParams& p, const ClassicalState& s) {
    return 0.5 * p.n * p.omega0 * std::norm(s.X_A);
}
inline double classical_energy_B(const ClassicalParams& p, const ClassicalState& s) {
    return 0.5 * p.omega0 * std::norm(s.X_B);
}
inline double classical_energy_interaction(const ClassicalParams& p, const ClassicalState& s) {
    return p.g_n * std::real(std::conj(s.X_A) * detail::ipow(s.X_B, p.n));
}

// Default step: dt = (1/50) min(2 pi / (n w0), 1 / (g_n max(1,|X|)^{n-1} n)).
inline double default_classical_step(const ClassicalParams& p, const ClassicalState& initial) {
    double x = std::max({1.0, std::abs(initial.X_A), std::abs(initial.X_B)});
    double interaction_scale = 1.0 / (p.g_n * std::pow(x, p.n - 1) * p.n);
    return std::min(2.0 * M_PI / (p.n * p.omega0), interaction_scale) / 50.0;
}

// Classic fixed-step RK4. Fixed steps keep the X_B = 0 fixed point of the
// n > 1 models exact in floating point and make runs reproducible.
inline ClassicalTrajectory integrate_classical(const ClassicalState& initial,
                                               const ClassicalParams& params, double t_end,
                                               double dt) {
    if (dt <= 0.0 || t_end <= 0.0)
        throw InvalidArgument("integrate_classical: dt and t_end must be > 0");

    auto step = [&params](const ClassicalState& s, double h) {
        auto shift = [&](const ClassicalState& base, const ClassicalDerivative& k, double f) {
            ClassicalState out = base;
            out.X_A = base.X_A + f * k.dX_A;
            out.X_B = base.X_B + f * k.dX_B;
            return out;
        };
        ClassicalDerivative k1 = classical_rhs(s, params);
        ClassicalDerivative k2 = classical_rhs(shift(s, k1, 0.5 * h), params);
        ClassicalDerivative k3 = classical_rhs(shift(s, k2, 0.5 * h), params);
        ClassicalDerivative k4 = classical_rhs(shift(s, k3, h), params);
        ClassicalState out = s;
        out.X_A = s.X_A + (h / 6.0) * (k1.dX_A + 2.0 * k2.dX_A + 2.0 * k3.dX_A + k4.dX_A);
        out.X_B = s.X_B + (h / 6.0) * (k1.dX_B + 2.0 * k2.dX_B + 2.0 * k3.dX_B + k4.dX_B);
        return out;
    };

    const int nsteps = static_cast<int>(std::ceil(t_end / dt - 1e-12));
    ClassicalTrajectory traj;
    traj.times.reserve(nsteps + 1);
    traj.states.reserve(nsteps + 1);

    ClassicalState s = initial;
    auto record = [&](double t, const ClassicalState& st) {
        traj.times.push_back(t);
        traj.states.push_back(st);
        traj.energy_A.push_back(classical_energy_A(params, st));
        traj.energy_B.push_back(classical_energy_B(params, st));
        traj.energy_interaction.push_back(classical_energy_interaction(params, st));
        traj.energy_total.push_back(traj.energy_A.back() + traj.energy_B.back() +
                                    traj.energy_interaction.back());
    };
    record(0.0, s);
    for (int i = 1; i <= nsteps; ++i) {
        double h = std::min(dt, t_end - traj.times.back());
        s = step(s, h);
        record(traj.times.back() + h, s);
    }

    double e0 = traj.energy_total.front();
    double scale = std::max({std::abs(traj.energy_A.front()) + std::abs(traj.energy_B.front()) +
                                 std::abs(traj.energy_interaction.front()),
                             std::abs(e0), 1e-12});
    double drift = 0.0;
    for (double e : traj.energy_total) drift = std::max(drift, std::abs(e - e0));
    if (drift > 1e-6 * scale)
        throw StepTooLarge("relative energy drift " + std::to_string(drift / scale) +
                           " exceeds 1e-6; reduce dt");
    return traj;
}

struct ClassicalChargingSummary {
    double energy_B_max = 0.0;
    std::optional<double> tau_at_max;  // absent when the trace is flat
};

// Energy-matched protocol: |X_A(0)|^2 = 2N/n so that E_A(0) = N w0, phase 0,
// battery at rest, rotating frame. For n > 1 this initial condition sits on
// the exact X_B = 0 fixed point and the battery energy stays identically zero.
inline ClassicalChargingSummary classical_charging_summary(const ClassicalParams& params, int N,
                                                           double horizon,
                                                           std::optional<double> dt_opt =
                                                               std::nullopt) {
    if (N < 1) throw InvalidArgument("classical_charging_summary: N must be >= 1");
    if (horizon <= 0.0) throw NonpositiveTime("classical_charging_summary: horizon must be > 0");
    ClassicalState init;
    init.X_A = std::sqrt(2.0 * N / params.n);
    init.X_B = {0.0, 0.0};
    init.frame = Frame::Rotating;
    double dt = dt_opt.value_or(default_classical_step(params, init));
    ClassicalTrajectory traj = integrate_classical(init, params, horizon, dt);

    size_t imax = 0;
    for (size_t i = 1; i < traj.energy_B.size(); ++i)
        if (traj.energy_B[i] > traj.energy_B[imax]) imax = i;

    ClassicalChargingSummary summary;
    summary.energy_B_max = traj.energy_B[imax];
    if (summary.energy_B_max <= 0.0) return summary;  // flat trace, time stays absent

    // parabolic refinement of the sampled peak
    double tau = traj.times[imax];
    double e_max = traj.energy_B[imax];
    if (imax > 0 && imax + 1 < traj.energy_B.size()) {
        double e_l = traj.energy_B[imax - 1], e_c = traj.energy_B[imax],
               e_r = traj.energy_B[imax + 1];
        double denom = e_l - 2.0 * e_c + e_r;
        if (denom < 0.0) {
            double shift = 0.5 * (e_l - e_r) / denom;
            tau += shift * dt;
            e_max = e_c - 0.25 * (e_l - e_r) * shift;
        }
    }
    summary.energy_B_max = e_max;
    summary.tau_at_max = tau;
    return summary;
}

}  // namespace qbattery
