#pragma once

// Model Hamiltonians: charger H_A = n w0 a^dag a, battery H_B = w0 b^dag b,
// interaction H_n = g_n [a^dag b^n + a (b^dag)^n], their sum, the conserved
// charge Q = n a^dag a + b^dag b, the variance-equalizing coupling map
// g_N = g_1/sqrt((N-1)!), and the Josephson-junction realization
// H = w1 a^dag a + w2 b^dag b - E_J cos(phi1 + phi2).

#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "qbattery/errors.hpp"
#include "qbattery/fock.hpp"

namespace qbattery {

enum class ModelKind { Linear, Nonlinear, Josephson };

// How ModelSpec::coupling is to be read: as the reference linear coupling g_1
// (mapped to g_n through map_coupling) or directly as g_n.
enum class CouplingMode { ReferenceG1, DirectGn };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Linear: return "linear";
        case ModelKind::Nonlinear: return "nonlinear";
        case ModelKind::Josephson: return "josephson";
    }
    return "?";
}

inline const char* to_string(CouplingMode m) {
    return m == CouplingMode::ReferenceG1 ? "g1" : "gn";
}

// g_N = g_1 / sqrt((N-1)!), computed through lgamma.
inline double map_coupling(double g1, int N) {
    if (N < 1) throw InvalidArgument("map_coupling: N must be >= 1");
    return g1 * std::exp(-0.5 * log_factorial(N - 1));
}

struct ModelSpec {
    double omega0 = 1.0;
    int n = 1;  // order of the non-linear coupling
    int N = 1;  // excitation number / target charge
    double coupling = 1.0;
    CouplingMode coupling_mode = CouplingMode::ReferenceG1;
    ModeCutoff cutoff;
    ModelKind kind = ModelKind::Linear;

    ModelSpec(double omega0_, int n_, int N_, double coupling_, CouplingMode mode_,
              ModeCutoff cutoff_, ModelKind kind_)
        : omega0(omega0_), n(n_), N(N_), coupling(coupling_), coupling_mode(mode_),
          cutoff(cutoff_), kind(kind_) {
        if (omega0 <= 0.0) throw InvalidArgument("ModelSpec: omega0 must be > 0");
        if (n < 1) throw InvalidArgument("ModelSpec: n must be >= 1");
        if (N < 1) throw InvalidArgument("ModelSpec: N must be >= 1");
        if (coupling <= 0.0) throw InvalidArgument("ModelSpec: coupling must be > 0");
        if (kind == ModelKind::Linear && n != 1)
            throw InvalidArgument("ModelSpec: linear model requires n = 1");
        if (kind == ModelKind::Nonlinear && (cutoff.dim_a < 2 || cutoff.dim_b < N + 1))
            throw InvalidArgument("ModelSpec: nonlinear model needs dim_a >= 2 and dim_b >= N+1");
    }

    // Coupling constant g_n actually entering H_int. The reference mapping is
    // keyed by the coupling order, so the linear model keeps g_1 itself and
    // the order-N model gets g_N = g_1/sqrt((N-1)!).
    double g_n() const {
        return coupling_mode == CouplingMode::ReferenceG1 ? map_coupling(coupling, n) : coupling;
    }
};

inline OperatorMatrix build_H_A(const ModelSpec& spec) {
    return (spec.n * spec.omega0) * number_operator(Mode::A, spec.cutoff);
}

inline OperatorMatrix build_H_B(const ModelSpec& spec) {
    return spec.omega0 * number_operator(Mode::B, spec.cutoff);
}

// Conserved charge Q = n a^dag a + b^dag b; commutes with the total
// Hamiltonian exactly (also in the truncated space).
inline OperatorMatrix charge_operator(const ModelSpec& spec) {
    return static_cast<double>(spec.n) * number_operator(Mode::A, spec.cutoff) +
           number_operator(Mode::B, spec.cutoff);
}

// H_int = g_n [a^dag b^n + a (b^dag)^n], filled directly from
// <m_a+1, m_b-n| . |m_a, m_b> = g_n sqrt(m_a+1) sqrt(m_b!/(m_b-n)!).
inline OperatorMatrix build_H_int(const ModelSpec& spec) {
    const ModeCutoff& c = spec.cutoff;
    const int n = spec.n;
    const double g = spec.g_n();
    Matrix m = Matrix::Zero(c.total(), c.total());
    for (int ma = 0; ma + 1 < c.dim_a; ++ma)
        for (int mb = n; mb < c.dim_b; ++mb) {
            double el = g * std::sqrt(double(ma + 1)) * sqrt_falling_factorial(mb, n);
            m(c.index_of(ma + 1, mb - n), c.index_of(ma, mb)) = el;
            m(c.index_of(ma, mb), c.index_of(ma + 1, mb - n)) = el;
        }
    return OperatorMatrix(c, std::move(m), true);
}

inline OperatorMatrix build_total(const ModelSpec& spec) {
    if (spec.kind == ModelKind::Josephson)
        throw InvalidArgument("build_total: use build_josephson_full for the Josephson model");
    return build_H_A(spec) + build_H_B(spec) + build_H_int(spec);
}

struct JosephsonSpec {
    double E_J = 1.0;
    double lambda1 = 0.05;  // zero-point phase amplitude of resonator 1
    double lambda2 = 0.05;
    double omega1 = 0.0;  // resonator frequencies, omega_i = 1/sqrt(L_i C_i)
    double omega2 = 1.0;
    int n = 1;  // odd non-linearity order selected by omega1 = n*omega2

    JosephsonSpec(double E_J_, double lambda1_, double lambda2_, double omega1_, double omega2_,
                  int n_)
        : E_J(E_J_), lambda1(lambda1_), lambda2(lambda2_), omega1(omega1_), omega2(omega2_),
          n(n_) {
        if (E_J <= 0.0) throw InvalidArgument("JosephsonSpec: E_J must be > 0");
        if (lambda1 <= 0.0 || lambda2 <= 0.0)
            throw InvalidArgument("JosephsonSpec: lambda_i must be > 0");
        if (omega1 <= 0.0 || omega2 <= 0.0)
            throw InvalidArgument("JosephsonSpec: omega_i must be > 0");
        if (n < 1) throw InvalidArgument("JosephsonSpec: n must be >= 1");
        if (n % 2 == 0)
            throw EvenOrderUnsupported("JosephsonSpec: n must be odd (phase factor (-1)^((n-1)/2) "
                                       "is only defined for odd n)");
    }

    bool on_resonance(double rel_tol = 1e-12) const {
        return std::abs(omega1 - n * omega2) <= rel_tol * std::abs(n * omega2);
    }

    void require_resonance(const char* where) const {
        if (!on_resonance())
            throw InvalidArgument(std::string(where) +
                                  ": requires omega1 = n*omega2 within 1e-12 relative");
    }
};

// Effective resonant coupling g_n = E_J (-1)^((n-1)/2) lambda1 lambda2^n / n!.
inline double josephson_effective_coupling(const JosephsonSpec& jspec) {
    if (jspec.n % 2 == 0) throw EvenOrderUnsupported("josephson_effective_coupling: n even");
    double sign = ((jspec.n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    return jspec.E_J * sign * jspec.lambda1 *
           std::exp(jspec.n * std::log(jspec.lambda2) - log_factorial(jspec.n));
}

// Full junction Hamiltonian with the cosine evaluated by spectral calculus on
// phi1 + phi2 = lambda1 (a + a^dag) + lambda2 (b + b^dag): exact within the
// truncated space, no series truncation.
inline OperatorMatrix build_josephson_full(const JosephsonSpec& jspec, const ModeCutoff& cutoff) {
    Matrix phi = jspec.lambda1 * (ladder_lower(Mode::A, cutoff).entries() +
                                  ladder_raise(Mode::A, cutoff).entries()) +
                 jspec.lambda2 * (ladder_lower(Mode::B, cutoff).entries() +
                                  ladder_raise(Mode::B, cutoff).entries());
    Eigen::SelfAdjointEigenSolver<Matrix> es(phi);
    if (es.info() != Eigen::Success)
        throw Error("build_josephson_full: eigendecomposition of phi failed");
    Matrix cos_phi = es.eigenvectors() *
                     es.eigenvalues().array().cos().matrix().asDiagonal() *
                     es.eigenvectors().adjoint();
    Matrix h = jspec.omega1 * number_operator(Mode::A, cutoff).entries() +
               jspec.omega2 * number_operator(Mode::B, cutoff).entries() - jspec.E_J * cos_phi;
    h = 0.5 * (h + h.adjoint().eval());  // scrub rounding asymmetry
    return OperatorMatrix(cutoff, std::move(h), true);
}

// One normal-ordered monomial adag^p a^q bdag^r b^s surviving the resonance
// filter n*(p-q) + (r-s) = 0, with the order of the cosine expansion it came
// from.
struct ResonantTerm {
    int order = 0;  // total order in (phi1, phi2)
    int a_raise = 0, a_lower = 0, b_raise = 0, b_lower = 0;
    double coefficient = 0.0;

    std::string monomial() const {
        if (a_raise + a_lower + b_raise + b_lower == 0) return "1";
        std::string s;
        auto append = [&s](const char* sym, int p) {
            if (p == 0) return;
            if (!s.empty()) s += " ";
            s += sym;
            if (p > 1) s += "^" + std::to_string(p);
        };
        append("adag", a_raise);
        append("a", a_lower);
        append("bdag", b_raise);
        append("b", b_lower);
        return s;
    }
};

// Expands -E_J cos(phi1 + phi2) through the given total order, normal-orders
// each product, and keeps the monomials commuting with H_A + H_B at resonance
// omega1 = n*omega2. The resonance filter is pure excitation bookkeeping:
// n*(net a change) + (net b change) = 0.
inline std::vector<ResonantTerm> taylor_resonant_terms(const JosephsonSpec& jspec, int max_order) {
    if (max_order < jspec.n + 1)
        throw InvalidArgument("taylor_resonant_terms: max_order must be >= n+1");
    jspec.require_resonance("taylor_resonant_terms");

    // key: (order, p, q, r, s) so corrections at higher order stay separate rows
    std::map<std::tuple<int, int, int, int, int>, double> acc;
    for (int total = 0; total <= max_order; total += 2) {
        int m = total / 2;
        double sign = (m % 2 == 0) ? 1.0 : -1.0;
        for (int k = 0; k <= total; ++k) {
            int l = total - k;
            double base = -jspec.E_J * sign * std::pow(jspec.lambda1, k) *
                          std::pow(jspec.lambda2, l);
            // (x + x^dag)^k = sum_j k!/(j! 2^j) sum_{p+q=k-2j} x^dag^p x^q / (p! q!)
            for (int j1 = 0; 2 * j1 <= k; ++j1)
                for (int p = 0; p <= k - 2 * j1; ++p) {
                    int q = k - 2 * j1 - p;
                    for (int j2 = 0; 2 * j2 <= l; ++j2)
                        for (int r = 0; r <= l - 2 * j2; ++r) {
                            int s = l - 2 * j2 - r;
                            if (jspec.n * (p - q) + (r - s) != 0) continue;
                            double denom_log = log_factorial(j1) + j1 * std::log(2.0) +
                                               log_factorial(p) + log_factorial(q) +
                                               log_factorial(j2) + j2 * std::log(2.0) +
                                               log_factorial(r) + log_factorial(s);
                            acc[{total, p, q, r, s}] += base * std::exp(-denom_log);
                        }
                }
        }
    }

    std::vector<ResonantTerm> terms;
    terms.reserve(acc.size());
    for (const auto& [key, coeff] : acc) {
        auto [order, p, q, r, s] = key;
        terms.push_back(ResonantTerm{order, p, q, r, s, coeff});
    }
    return terms;
}

}  // namespace qbattery
