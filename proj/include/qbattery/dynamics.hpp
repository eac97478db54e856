#pragma once

// Charging observables and searches on top of the spectral propagator:
// stored energy, average power, full charging traces with conservation
// monitors, earliest-maximum charging time, orthogonality time, battery
// charge distributions, and operator variances.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "qbattery/errors.hpp"
#include "qbattery/fock.hpp"
#include "qbattery/models.hpp"
#include "qbattery/propagator.hpp"

namespace qbattery {

// E_B = <H_B>; real and non-negative for the bosonic battery.
inline double stored_energy(const QuantumState& state, const OperatorMatrix& H_B) {
    double e = expectation(H_B, state).real();
    if (e < -kNormTolerance)
        throw PhysicsViolation("stored-energy-nonnegative", "E_B = " + std::to_string(e));
    return e;
}

// P_B(tau) = E_B(tau)/tau. Undefined at tau = 0.
inline double average_power(double energy, double tau) {
    if (tau <= 0.0) throw NonpositiveTime("average_power: tau must be > 0");
    return energy / tau;
}

// <delta H> = sqrt(<H^2> - <H>^2), clamped at zero against rounding.
inline double variance(const OperatorMatrix& H, const QuantumState& state) {
    if (!H.hermitian()) throw NotHermitian("variance: operator must be flagged hermitian");
    require_same_cutoff(H.cutoff(), state.cutoff(), "variance");
    double mean, mean_sq;
    if (state.is_pure()) {
        Vector h_psi = H.entries() * state.amplitudes();
        mean = state.amplitudes().dot(h_psi).real();
        mean_sq = h_psi.squaredNorm();
    } else {
        Matrix h_rho = H.entries() * state.density();
        mean = h_rho.trace().real();
        mean_sq = (H.entries() * h_rho).trace().real();
    }
    double var = mean_sq - mean * mean;
    if (var < 0.0) {
        if (var < -1e-12 * std::max(1.0, mean_sq))
            throw PhysicsViolation("variance-nonnegative", "var = " + std::to_string(var));
        var = 0.0;
    }
    return std::sqrt(var);
}

struct ChargingTrace {
    std::vector<double> times;
    std::vector<double> energy_B;
    std::vector<std::optional<double>> power_B;  // absent at t = 0
    std::vector<Complex> overlap0;               // <psi(0)|psi(t)>; tr(rho0 rho(t)) for mixed
    std::vector<double> var_H_B;                 // <delta H_B>^2
    std::vector<double> norm;                    // ||psi||^2 or tr(rho)
    std::vector<double> energy_total;
    std::vector<double> charge;                  // <Q>
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
    if (grid.size() < 2 || grid.front() != 0.0)
        throw InvalidArgument("time grid must start at 0 and have at least 2 points");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw InvalidArgument("time grid must be strictly increasing");
}

inline void check_monitors(const ChargingTrace& trace, bool enforce_charge) {
    auto drift = [](const std::vector<double>& v) {
        double d = 0.0;
        for (double x : v) d = std::max(d, std::abs(x - v.front()));
        return d;
    };
    for (double x : trace.norm)
        if (std::abs(x - 1.0) >= 1e-10)
            throw PhysicsViolation("norm-conservation", "norm " + std::to_string(x));
    double e_scale = std::max(1.0, std::abs(trace.energy_total.front()));
    if (drift(trace.energy_total) >= 1e-9 * e_scale)
        throw PhysicsViolation("energy-conservation",
                               "drift " + std::to_string(drift(trace.energy_total)));
    if (enforce_charge) {
        double q_scale = std::max(1.0, std::abs(trace.charge.front()));
        if (drift(trace.charge) >= 1e-9 * q_scale)
            throw PhysicsViolation("charge-conservation",
                                   "drift " + std::to_string(drift(trace.charge)));
    }
}

}  // namespace detail

// Trace of a generic Hamiltonian/battery/charge triple. Pure states evolve in
// the spectral basis with an O(dim) observable pass per grid point; mixed
// states use blockwise rho-twiddle phases. Set enforce_charge_conservation to
// false for generators that do not commute with Q.
inline ChargingTrace charging_trace(const OperatorMatrix& H_total, const OperatorMatrix& H_B,
                                    const OperatorMatrix& Q, const QuantumState& initial,
                                    const std::vector<double>& grid,
                                    bool enforce_charge_conservation = true) {
    detail::check_grid(grid);
    require_same_cutoff(H_total.cutoff(), initial.cutoff(), "charging_trace");
    require_same_cutoff(H_total.cutoff(), H_B.cutoff(), "charging_trace");
    require_same_cutoff(H_total.cutoff(), Q.cutoff(), "charging_trace");

    const int dim = H_total.dim();
    Propagator prop(H_total);

    // diagonal observables suffice for everything except <H_total>
    Eigen::VectorXd diag_B(dim), diag_Q(dim);
    for (int i = 0; i < dim; ++i) {
        diag_B(i) = H_B.entries()(i, i).real();
        diag_Q(i) = Q.entries()(i, i).real();
    }
    Eigen::SparseMatrix<Complex> h_sparse = H_total.entries().sparseView();

    ChargingTrace trace;
    const size_t npts = grid.size();
    trace.times = grid;
    trace.energy_B.resize(npts);
    trace.power_B.resize(npts);
    trace.overlap0.resize(npts);
    trace.var_H_B.resize(npts);
    trace.norm.resize(npts);
    trace.energy_total.resize(npts);
    trace.charge.resize(npts);

    if (initial.is_pure()) {
        const Vector& psi0 = initial.amplitudes();
        auto coeffs = prop.prepare(psi0);
        for (size_t k = 0; k < npts; ++k) {
            Vector psi = prop.evolve_prepared(coeffs, grid[k]);
            Eigen::VectorXd p = psi.cwiseAbs2();
            double eb = diag_B.dot(p);
            double eb2 = diag_B.cwiseAbs2().dot(p);
            trace.energy_B[k] = eb;
            trace.power_B[k] = (grid[k] > 0.0) ? std::optional<double>(eb / grid[k])
                                               : std::nullopt;
            trace.overlap0[k] = psi0.dot(psi);
            trace.var_H_B[k] = std::max(0.0, eb2 - eb * eb);
            trace.norm[k] = p.sum();
            trace.energy_total[k] = psi.dot(h_sparse * psi).real();
            trace.charge[k] = diag_Q.dot(p);
        }
    } else {
        // rho-twiddle blocks: V^dag rho V, phased per time on the fly
        const auto& blocks = prop.blocks();
        const Matrix& rho0 = initial.density();
        std::vector<std::vector<Matrix>> rho_t(blocks.size());
        for (size_t pb = 0; pb < blocks.size(); ++pb) {
            rho_t[pb].resize(blocks.size());
            for (size_t qb = 0; qb < blocks.size(); ++qb) {
                Matrix sub(blocks[pb].indices.size(), blocks[qb].indices.size());
                for (size_t r = 0; r < blocks[pb].indices.size(); ++r)
                    for (size_t c = 0; c < blocks[qb].indices.size(); ++c)
                        sub(r, c) = rho0(blocks[pb].indices[r], blocks[qb].indices[c]);
                rho_t[pb][qb] = blocks[pb].eigenvectors.adjoint() * sub * blocks[qb].eigenvectors;
            }
        }
        auto rho0_tilde = rho_t;  // for tr(rho0 rho(t))
        for (size_t k = 0; k < npts; ++k) {
            const double t = grid[k];
            // diagonal of rho(t) in the original basis, block by block
            Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
            double e_total = 0.0;
            Complex overlap = 0.0;
            for (size_t pb = 0; pb < blocks.size(); ++pb) {
                const auto& blk = blocks[pb];
                const int d = static_cast<int>(blk.indices.size());
                Vector phase(d);
                for (int j = 0; j < d; ++j) phase(j) = std::polar(1.0, -blk.eigenvalues(j) * t);
                Matrix rpp = phase.asDiagonal() * rho_t[pb][pb] *
                             phase.conjugate().asDiagonal();
                Matrix back = blk.eigenvectors * rpp * blk.eigenvectors.adjoint();
                for (int r = 0; r < d; ++r) p(blk.indices[r]) = back(r, r).real();
                for (int j = 0; j < d; ++j) e_total += blk.eigenvalues(j) * rpp(j, j).real();
                for (size_t qb = 0; qb < blocks.size(); ++qb) {
                    const auto& oblk = blocks[qb];
                    Vector ophase(oblk.indices.size());
                    for (Eigen::Index j = 0; j < ophase.size(); ++j)
                        ophase(j) = std::polar(1.0, -oblk.eigenvalues(j) * t);
                    Matrix rpq = phase.asDiagonal() * rho_t[pb][qb] *
                                 ophase.conjugate().asDiagonal();
                    overlap += (rho0_tilde[qb][pb] * rpq).trace();
                }
            }
            double eb = diag_B.dot(p);
            double eb2 = diag_B.cwiseAbs2().dot(p);
            trace.energy_B[k] = eb;
            trace.power_B[k] = (t > 0.0) ? std::optional<double>(eb / t) : std::nullopt;
            trace.overlap0[k] = overlap;
            trace.var_H_B[k] = std::max(0.0, eb2 - eb * eb);
            trace.norm[k] = p.sum();
            trace.energy_total[k] = e_total;
            trace.charge[k] = diag_Q.dot(p);
        }
    }

    detail::check_monitors(trace, enforce_charge_conservation);
    return trace;
}

inline ChargingTrace charging_trace(const ModelSpec& spec, const QuantumState& initial,
                                    const std::vector<double>& grid) {
    return charging_trace(build_total(spec), build_H_B(spec), charge_operator(spec), initial,
                          grid);
}

struct SearchTolerances {
    double time_rel = 1e-9;    // golden-section window / tau
    double energy_rel = 1e-9;  // ties within energy_rel * E_scale count as the maximum
    int grid_points = 2048;    // dense pre-scan resolution, at least 2000
};

struct OptimalChargingResult {
    double tau_bar = 0.0;
    double energy_max = 0.0;
};

namespace detail {

// Golden-section maximization of f on [lo, hi].
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double tol_abs) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol_abs) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        }
    }
    double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

}  // namespace detail

// Earliest time in [0, horizon] at which E_B reaches (within tolerance) its
// global maximum: dense scan, golden-section refinement of every local peak,
// then the earliest peak within energy_rel * E_scale of the best one.
inline OptimalChargingResult optimal_charging_time(const ModelSpec& spec,
                                                   const QuantumState& initial, double horizon,
                                                   const SearchTolerances& tol = {}) {
    if (horizon <= 0.0) throw NonpositiveTime("optimal_charging_time: horizon must be > 0");
    OperatorMatrix H = build_total(spec);
    OperatorMatrix H_B = build_H_B(spec);
    require_same_cutoff(H.cutoff(), initial.cutoff(), "optimal_charging_time");

    Propagator prop(H);
    const int dim = H.dim();
    Eigen::VectorXd diag_B(dim);
    for (int i = 0; i < dim; ++i) diag_B(i) = H_B.entries()(i, i).real();

    const bool pure = initial.is_pure();
    auto coeffs = pure ? prop.prepare(initial.amplitudes()) : std::vector<Vector>{};
    auto energy_at = [&](double t) {
        if (pure) return diag_B.dot(prop.evolve_prepared(coeffs, t).cwiseAbs2());
        return stored_energy(prop.apply(initial, t), H_B);
    };

    const int npts = std::max(tol.grid_points, 2000);
    std::vector<double> ts(npts), es(npts);
    for (int i = 0; i < npts; ++i) {
        ts[i] = horizon * double(i) / double(npts - 1);
        es[i] = energy_at(ts[i]);
    }

    // E_scale: the local energy initially available for transfer
    double e_scale = expectation(build_H_A(spec), initial).real() +
                     expectation(H_B, initial).real();
    double tol_E = tol.energy_rel * e_scale;

    double grid_max = *std::max_element(es.begin(), es.end());
    if (grid_max <= tol_E) throw FlatTrace("optimal_charging_time: battery energy never rises");

    // refine every local peak, then take the earliest one tying the best
    std::vector<std::pair<double, double>> peaks;  // (tau, E)
    for (int i = 0; i < npts; ++i) {
        bool left_ok = (i == 0) || es[i] >= es[i - 1];
        bool right_ok = (i == npts - 1) || es[i] >= es[i + 1];
        if (!(left_ok && right_ok)) continue;
        if (es[i] < grid_max - std::max(tol_E, 1e-3 * grid_max)) continue;  // skip minor peaks
        double lo = ts[std::max(0, i - 1)], hi = ts[std::min(npts - 1, i + 1)];
        peaks.push_back(detail::golden_max(energy_at, lo, hi, tol.time_rel * std::max(ts[i], hi - lo)));
    }
    double best = 0.0;
    for (const auto& pk : peaks) best = std::max(best, pk.second);
    for (const auto& pk : peaks)
        if (pk.second >= best - tol_E) return {pk.first, pk.second};
    throw FlatTrace("optimal_charging_time: no peak located");  // unreachable
}

// Default horizon: ten Mandelstam-Tamm times of the initial state.
inline double default_search_horizon(const OperatorMatrix& H_total, const QuantumState& initial) {
    double dv = variance(H_total, initial);
    if (dv <= 0.0)
        throw ZeroVariance("default_search_horizon: initial state is stationary");
    return 10.0 * M_PI / (2.0 * dv);
}

// Earliest time with |<psi(0)|psi(t)>| < 1e-6 in [0, horizon]. The overlap
// dips below threshold only in narrow windows around its zeros, so local
// minima are refined by golden section before bisecting the crossing.
inline double orthogonality_time(const OperatorMatrix& H, const QuantumState& initial,
                                 double horizon) {
    if (horizon <= 0.0) throw NonpositiveTime("orthogonality_time: horizon must be > 0");
    if (!initial.is_pure())
        throw InvalidArgument("orthogonality_time: defined for pure states");
    constexpr double kThreshold = 1e-6;

    Propagator prop(H);
    auto coeffs = prop.prepare(initial.amplitudes());
    const Vector& psi0 = initial.amplitudes();
    auto overlap_abs = [&](double t) {
        return std::abs(psi0.dot(prop.evolve_prepared(coeffs, t)));
    };

    const int npts = 2048;
    std::vector<double> ts(npts), f(npts);
    for (int i = 0; i < npts; ++i) {
        ts[i] = horizon * double(i) / double(npts - 1);
        f[i] = overlap_abs(ts[i]);
    }
    for (int i = 1; i < npts; ++i) {
        bool is_min = f[i] <= f[i - 1] && (i == npts - 1 || f[i] <= f[i + 1]);
        if (!is_min && f[i] >= kThreshold) continue;
        double lo = ts[i - 1], hi = ts[std::min(npts - 1, i + 1)];
        auto [tmin, fneg] =
            detail::golden_max([&](double t) { return -overlap_abs(t); }, lo, hi,
                               1e-12 * horizon);
        if (-fneg >= kThreshold) continue;
        // walk back to a grid point still above threshold (t = 0 always is),
        // then bisect the first crossing on [lo, tmin]
        int j = i - 1;
        while (j > 0 && f[j] < kThreshold) --j;
        double a = ts[j], b = tmin;
        for (int it = 0; it < 200 && b - a > 1e-15 * horizon; ++it) {
            double mid = 0.5 * (a + b);
            (overlap_abs(mid) >= kThreshold ? a : b) = mid;
        }
        return 0.5 * (a + b);
    }
    throw NeverOrthogonal("orthogonality_time: overlap never drops below 1e-6 within horizon");
}

struct ChargeDistribution {
    double time = 0.0;
    std::vector<double> probabilities;              // marginal over battery levels m_b
    std::map<int, std::vector<double>> conditional; // p_{m|M} by charger input level M
};

// Battery occupation probabilities of a state. When the evolution started
// from a state diagonal in the charger Fock basis (battery in vacuum), passing
// the non-linearity order recovers the conditional table p_{m|M} from the
// conserved-charge sectors: the sector of input level M holds the kets
// |M-m, n*m>.
inline ChargeDistribution charge_distribution(const QuantumState& state, double time_tag,
                                              std::optional<int> order_n = std::nullopt) {
    const ModeCutoff& c = state.cutoff();
    ChargeDistribution dist;
    dist.time = time_tag;
    dist.probabilities.assign(c.dim_b, 0.0);

    Eigen::VectorXd diag(c.total());
    if (state.is_pure())
        diag = state.amplitudes().cwiseAbs2();
    else
        diag = state.density().diagonal().real();

    for (int ma = 0; ma < c.dim_a; ++ma)
        for (int mb = 0; mb < c.dim_b; ++mb)
            dist.probabilities[mb] += diag(c.index_of(ma, mb));

    double total = 0.0;
    for (double p : dist.probabilities) {
        if (p < -1e-12 || p > 1.0 + 1e-12)
            throw PhysicsViolation("probability-range", std::to_string(p));
        total += p;
    }
    if (std::abs(total - 1.0) >= 1e-10)
        throw PhysicsViolation("probability-normalization", std::to_string(total));

    if (order_n) {
        const int n = *order_n;
        if (n < 1) throw InvalidArgument("charge_distribution: order must be >= 1");
        // accumulate sector weights p_M, then the conditionals
        std::map<int, double> weight;
        for (int ma = 0; ma < c.dim_a; ++ma)
            for (int mb = 0; mb < c.dim_b; ++mb) {
                double w = diag(c.index_of(ma, mb));
                if (w <= 0.0 || mb % n != 0) continue;
                weight[ma + mb / n] += w;
            }
        for (const auto& [M, pM] : weight) {
            if (pM < 1e-14) continue;
            std::vector<double> cond(M + 1, 0.0);
            for (int m = 0; m <= M; ++m) {
                int ma = M - m, mb = n * m;
                if (ma < c.dim_a && mb < c.dim_b) cond[m] = diag(c.index_of(ma, mb)) / pM;
            }
            dist.conditional[M] = std::move(cond);
        }
    }
    return dist;
}

}  // namespace qbattery
