#pragma once

// Two-mode truncated Fock space: basis indexing, quantum states (pure vectors
// and density matrices), operator matrices, ladder operators and the standard
// state constructors (Fock, coherent, squeezed vacuum).
//
// Basis convention: |m_a>_A |m_b>_B lives at flat index m_a*dim_b + m_b.
// Truncation convention: lowering from the top kept level is kept, raising
// into it is dropped, so a^dag a is exactly diagonal(0..d-1).

#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "qbattery/errors.hpp"

namespace qbattery {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kDefaultMaxTotalDim = 4096;
inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTailTolerance = 1e-10;

enum class Mode { A, B };

// log(m!) through lgamma; exact to near machine precision for any level we
// can represent, no overflow.
inline double log_factorial(int m) { return std::lgamma(static_cast<double>(m) + 1.0); }

// sqrt(m! / (m-k)!) for m >= k >= 0.
inline double sqrt_falling_factorial(int m, int k) {
    if (k == 0) return 1.0;
    return std::exp(0.5 * (log_factorial(m) - log_factorial(m - k)));
}

struct ModeCutoff {
    int dim_a = 0;
    int dim_b = 0;

    ModeCutoff(int da, int db, int max_total_dim = kDefaultMaxTotalDim) : dim_a(da), dim_b(db) {
        if (dim_a < 2 || dim_b < 2)
            throw InvalidArgument("ModeCutoff: need at least 2 kept levels per mode");
        if (max_total_dim < 4) throw InvalidArgument("ModeCutoff: max_total_dim too small");
        if (static_cast<long long>(dim_a) * dim_b > max_total_dim)
            throw InvalidArgument("ModeCutoff: total dimension " + std::to_string(dim_a) + "x" +
                                  std::to_string(dim_b) + " exceeds maximum " +
                                  std::to_string(max_total_dim));
    }

    int total() const { return dim_a * dim_b; }
    int dim(Mode mode) const { return mode == Mode::A ? dim_a : dim_b; }

    int index_of(int m_a, int m_b) const {
        if (m_a < 0 || m_a >= dim_a || m_b < 0 || m_b >= dim_b)
            throw IndexOutOfCutoff("level (" + std::to_string(m_a) + "," + std::to_string(m_b) +
                                   ") outside cutoff " + std::to_string(dim_a) + "x" +
                                   std::to_string(dim_b));
        return m_a * dim_b + m_b;
    }

    // Inverse of index_of.
    std::pair<int, int> levels_at(int index) const {
        if (index < 0 || index >= total()) throw IndexOutOfCutoff("flat index out of range");
        return {index / dim_b, index % dim_b};
    }

    bool operator==(const ModeCutoff& o) const { return dim_a == o.dim_a && dim_b == o.dim_b; }
    bool operator!=(const ModeCutoff& o) const { return !(*this == o); }
};

inline void require_same_cutoff(const ModeCutoff& x, const ModeCutoff& y, const char* where) {
    if (x != y)
        throw CutoffMismatch(std::string(where) + ": cutoffs " + std::to_string(x.dim_a) + "x" +
                             std::to_string(x.dim_b) + " vs " + std::to_string(y.dim_a) + "x" +
                             std::to_string(y.dim_b));
}

enum class StateKind { Pure, Mixed };

class QuantumState {
public:
    static QuantumState pure(const ModeCutoff& cutoff, Vector amplitudes) {
        if (amplitudes.size() != cutoff.total())
            throw InvalidArgument("pure state: amplitude vector has wrong length");
        double norm2 = amplitudes.squaredNorm();
        if (std::abs(norm2 - 1.0) >= kNormTolerance)
            throw InvalidArgument("pure state: squared norm " + std::to_string(norm2) +
                                  " not within 1e-10 of 1");
        return QuantumState(cutoff, std::move(amplitudes));
    }

    static QuantumState mixed(const ModeCutoff& cutoff, Matrix density) {
        if (density.rows() != cutoff.total() || density.cols() != cutoff.total())
            throw InvalidArgument("mixed state: density matrix has wrong shape");
        double trace = density.trace().real();
        if (std::abs(density.trace().imag()) >= kNormTolerance ||
            std::abs(trace - 1.0) >= kNormTolerance)
            throw InvalidArgument("mixed state: trace not within 1e-10 of 1");
        double herm = (density - density.adjoint()).cwiseAbs().maxCoeff();
        if (herm >= kHermitianTolerance)
            throw InvalidArgument("mixed state: not Hermitian (deviation " + std::to_string(herm) +
                                  ")");
        Eigen::SelfAdjointEigenSolver<Matrix> es(density, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kNormTolerance)
            throw InvalidArgument("mixed state: negative eigenvalue " +
                                  std::to_string(es.eigenvalues().minCoeff()));
        return QuantumState(cutoff, std::move(density));
    }

    const ModeCutoff& cutoff() const { return cutoff_; }
    StateKind kind() const { return kind_; }
    bool is_pure() const { return kind_ == StateKind::Pure; }

    const Vector& amplitudes() const {
        if (!is_pure()) throw InvalidArgument("amplitudes(): state is mixed");
        return amplitudes_;
    }
    const Matrix& density() const {
        if (is_pure()) throw InvalidArgument("density(): state is pure");
        return density_;
    }

    // Density matrix view regardless of kind (forms |psi><psi| for pure).
    Matrix as_density() const {
        return is_pure() ? Matrix(amplitudes_ * amplitudes_.adjoint()) : density_;
    }

private:
    QuantumState(const ModeCutoff& cutoff, Vector amps)
        : cutoff_(cutoff), kind_(StateKind::Pure), amplitudes_(std::move(amps)) {}
    QuantumState(const ModeCutoff& cutoff, Matrix rho)
        : cutoff_(cutoff), kind_(StateKind::Mixed), density_(std::move(rho)) {}

    ModeCutoff cutoff_;
    StateKind kind_;
    Vector amplitudes_;
    Matrix density_;
};

class OperatorMatrix {
public:
    OperatorMatrix(const ModeCutoff& cutoff, Matrix entries, bool hermitian)
        : cutoff_(cutoff), entries_(std::move(entries)), hermitian_(hermitian) {
        if (entries_.rows() != cutoff_.total() || entries_.cols() != cutoff_.total())
            throw InvalidArgument("OperatorMatrix: entries have wrong shape");
        if (hermitian_) {
            double dev = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
            if (dev >= kHermitianTolerance)
                throw NotHermitian("operator flagged hermitian deviates by " +
                                   std::to_string(dev));
        }
    }

    const ModeCutoff& cutoff() const { return cutoff_; }
    const Matrix& entries() const { return entries_; }
    bool hermitian() const { return hermitian_; }
    int dim() const { return cutoff_.total(); }

    OperatorMatrix adjoint() const { return OperatorMatrix(cutoff_, entries_.adjoint(), hermitian_); }

    OperatorMatrix operator+(const OperatorMatrix& o) const {
        require_same_cutoff(cutoff_, o.cutoff_, "operator+");
        return OperatorMatrix(cutoff_, entries_ + o.entries_, hermitian_ && o.hermitian_);
    }
    OperatorMatrix operator-(const OperatorMatrix& o) const {
        require_same_cutoff(cutoff_, o.cutoff_, "operator-");
        return OperatorMatrix(cutoff_, entries_ - o.entries_, hermitian_ && o.hermitian_);
    }
    // Products are generally not Hermitian; callers re-flag when they know better.
    OperatorMatrix operator*(const OperatorMatrix& o) const {
        require_same_cutoff(cutoff_, o.cutoff_, "operator*");
        return OperatorMatrix(cutoff_, entries_ * o.entries_, false);
    }
    friend OperatorMatrix operator*(double s, const OperatorMatrix& op) {
        return OperatorMatrix(op.cutoff_, s * op.entries_, op.hermitian_);
    }

private:
    ModeCutoff cutoff_;
    Matrix entries_;
    bool hermitian_;
};

// Annihilation operator of one mode tensored with identity on the other.
// <m-1|a|m> = sqrt(m); nothing maps into the top kept level.
inline OperatorMatrix ladder_lower(Mode mode, const ModeCutoff& cutoff) {
    Matrix m = Matrix::Zero(cutoff.total(), cutoff.total());
    if (mode == Mode::A) {
        for (int ma = 1; ma < cutoff.dim_a; ++ma)
            for (int mb = 0; mb < cutoff.dim_b; ++mb)
                m(cutoff.index_of(ma - 1, mb), cutoff.index_of(ma, mb)) = std::sqrt(double(ma));
    } else {
        for (int ma = 0; ma < cutoff.dim_a; ++ma)
            for (int mb = 1; mb < cutoff.dim_b; ++mb)
                m(cutoff.index_of(ma, mb - 1), cutoff.index_of(ma, mb)) = std::sqrt(double(mb));
    }
    return OperatorMatrix(cutoff, std::move(m), false);
}

inline OperatorMatrix ladder_raise(Mode mode, const ModeCutoff& cutoff) {
    return ladder_lower(mode, cutoff).adjoint();
}

inline OperatorMatrix number_operator(Mode mode, const ModeCutoff& cutoff) {
    Matrix m = Matrix::Zero(cutoff.total(), cutoff.total());
    for (int ma = 0; ma < cutoff.dim_a; ++ma)
        for (int mb = 0; mb < cutoff.dim_b; ++mb) {
            int i = cutoff.index_of(ma, mb);
            m(i, i) = (mode == Mode::A) ? ma : mb;
        }
    return OperatorMatrix(cutoff, std::move(m), true);
}

inline OperatorMatrix identity_operator(const ModeCutoff& cutoff) {
    return OperatorMatrix(cutoff, Matrix::Identity(cutoff.total(), cutoff.total()), true);
}

inline QuantumState fock_state(int m_a, int m_b, const ModeCutoff& cutoff) {
    Vector v = Vector::Zero(cutoff.total());
    v(cutoff.index_of(m_a, m_b)) = 1.0;  // throws IndexOutOfCutoff when outside
    return QuantumState::pure(cutoff, std::move(v));
}

namespace detail {

// Places single-mode amplitudes on `mode`, the other mode in its ground state,
// after checking that the dropped tail carries less than kTailTolerance of the
// population. Amplitudes are renormalized after truncation.
inline QuantumState embed_single_mode(const Eigen::VectorXd& amps, double dropped_population,
                                      const ModeCutoff& cutoff, Mode mode,
                                      const char* constructor) {
    if (dropped_population >= kTailTolerance)
        throw CutoffTooSmall(std::string(constructor) + ": dropped population " +
                             std::to_string(dropped_population) + " exceeds 1e-10; increase dim_" +
                             (mode == Mode::A ? "a" : "b"));
    Eigen::VectorXd c = amps / amps.norm();
    Vector v = Vector::Zero(cutoff.total());
    int d = cutoff.dim(mode);
    for (int m = 0; m < d; ++m) {
        int idx = (mode == Mode::A) ? cutoff.index_of(m, 0) : cutoff.index_of(0, m);
        v(idx) = c(m);
    }
    return QuantumState::pure(cutoff, std::move(v));
}

}  // namespace detail

// Coherent state with real alpha >= 0: c_m = e^{-alpha^2/2} alpha^m / sqrt(m!).
inline QuantumState coherent_state(double alpha, const ModeCutoff& cutoff, Mode mode) {
    if (alpha < 0.0) throw InvalidArgument("coherent_state: alpha must be >= 0");
    int d = cutoff.dim(mode);
    Eigen::VectorXd c(d);
    double kept = 0.0;
    for (int m = 0; m < d; ++m) {
        double log_c = (alpha > 0.0)
                           ? -0.5 * alpha * alpha + m * std::log(alpha) - 0.5 * log_factorial(m)
                           : (m == 0 ? 0.0 : -std::numeric_limits<double>::infinity());
        c(m) = std::exp(log_c);
        kept += c(m) * c(m);
    }
    return detail::embed_single_mode(c, 1.0 - kept, cutoff, mode, "coherent_state");
}

// Squeezed vacuum with real r >= 0 (even levels only):
// c_{2k} = (-tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r).
inline QuantumState squeezed_vacuum_state(double r, const ModeCutoff& cutoff, Mode mode) {
    if (r < 0.0) throw InvalidArgument("squeezed_vacuum_state: r must be >= 0");
    int d = cutoff.dim(mode);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    double kept = 0.0;
    if (r == 0.0) {
        c(0) = 1.0;
        kept = 1.0;
    } else {
        double log_tanh = std::log(std::tanh(r));
        double log_cosh = std::log(std::cosh(r));
        for (int k = 0; 2 * k < d; ++k) {
            double log_c = k * log_tanh + 0.5 * log_factorial(2 * k) - k * std::log(2.0) -
                           log_factorial(k) - 0.5 * log_cosh;
            double sign = (k % 2 == 0) ? 1.0 : -1.0;
            c(2 * k) = sign * std::exp(log_c);
            kept += c(2 * k) * c(2 * k);
        }
    }
    return detail::embed_single_mode(c, 1.0 - kept, cutoff, mode, "squeezed_vacuum_state");
}

// <x|y> with conjugation on x. Pure states only.
inline Complex inner_product(const QuantumState& x, const QuantumState& y) {
    require_same_cutoff(x.cutoff(), y.cutoff(), "inner_product");
    if (!x.is_pure() || !y.is_pure())
        throw InvalidArgument("inner_product: both states must be pure");
    return x.amplitudes().dot(y.amplitudes());  // Eigen's dot conjugates the left factor
}

// <op> on a state; trace(rho op) for mixed. For operators flagged hermitian
// the imaginary part is checked to be negligible.
inline Complex expectation(const OperatorMatrix& op, const QuantumState& state) {
    require_same_cutoff(op.cutoff(), state.cutoff(), "expectation");
    Complex value;
    if (state.is_pure()) {
        value = state.amplitudes().dot(op.entries() * state.amplitudes());
    } else {
        value = (op.entries() * state.density()).trace();
    }
    if (op.hermitian()) {
        double scale = std::max(1.0, std::abs(value.real()));
        if (std::abs(value.imag()) >= 1e-10 * scale)
            throw PhysicsViolation("hermitian-expectation-real",
                                   "imaginary part " + std::to_string(value.imag()));
    }
    return value;
}

}  // namespace qbattery
