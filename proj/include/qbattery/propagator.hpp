#pragma once

// Exact unitary evolution by one-time spectral decomposition, cached per
// Hamiltonian. The decomposition runs independently on each connected
// component of the matrix's exact zero pattern; for the charge-conserving
// model Hamiltonians these components are the Q = n a^dag a + b^dag b sectors,
// which keeps even the largest desk-scale scenarios cheap. A generic dense
// Hamiltonian simply yields a single component.

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "qbattery/errors.hpp"
#include "qbattery/fock.hpp"

namespace qbattery {

class Propagator {
public:
    struct Block {
        std::vector<int> indices;       // original basis indices of this component
        Eigen::VectorXd eigenvalues;
        Matrix eigenvectors;            // columns in the gathered sub-basis
    };

    explicit Propagator(const OperatorMatrix& H) : cutoff_(H.cutoff()), dim_(H.dim()) {
        if (!H.hermitian()) throw NotHermitian("Propagator: generator must be flagged hermitian");
        const Matrix& m = H.entries();

        // union-find over the exact nonzero pattern
        std::vector<int> parent(dim_);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&parent](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (int i = 0; i < dim_; ++i)
            for (int j = i + 1; j < dim_; ++j)
                if (m(i, j) != Complex(0.0, 0.0)) {
                    int ri = find(i), rj = find(j);
                    if (ri != rj) parent[ri] = rj;
                }

        std::vector<std::vector<int>> groups(dim_);
        for (int i = 0; i < dim_; ++i) groups[find(i)].push_back(i);

        for (auto& g : groups) {
            if (g.empty()) continue;
            Block blk;
            blk.indices = std::move(g);
            const int d = static_cast<int>(blk.indices.size());
            Matrix sub(d, d);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) sub(r, c) = m(blk.indices[r], blk.indices[c]);
            Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
            if (es.info() != Eigen::Success)
                throw Error("Propagator: eigendecomposition failed");
            blk.eigenvalues = es.eigenvalues();
            blk.eigenvectors = es.eigenvectors();
            blocks_.push_back(std::move(blk));
        }
    }

    const ModeCutoff& cutoff() const { return cutoff_; }
    int dim() const { return dim_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    // Spectral coefficients of a vector, per block: V^dag psi.
    std::vector<Vector> prepare(const Vector& psi) const {
        std::vector<Vector> coeffs;
        coeffs.reserve(blocks_.size());
        for (const auto& blk : blocks_) {
            Vector sub(blk.indices.size());
            for (size_t r = 0; r < blk.indices.size(); ++r) sub(r) = psi(blk.indices[r]);
            coeffs.push_back(blk.eigenvectors.adjoint() * sub);
        }
        return coeffs;
    }

    // psi(t) from prepared coefficients: V e^{-i lambda t} (V^dag psi0).
    Vector evolve_prepared(const std::vector<Vector>& coeffs, double t) const {
        Vector out(dim_);
        for (size_t b = 0; b < blocks_.size(); ++b) {
            const Block& blk = blocks_[b];
            Vector phased(coeffs[b].size());
            for (Eigen::Index k = 0; k < phased.size(); ++k)
                phased(k) = std::polar(1.0, -blk.eigenvalues(k) * t) * coeffs[b](k);
            Vector sub = blk.eigenvectors * phased;
            for (size_t r = 0; r < blk.indices.size(); ++r) out(blk.indices[r]) = sub(r);
        }
        return out;
    }

    Vector evolve_vector(const Vector& psi, double t) const {
        return evolve_prepared(prepare(psi), t);
    }

    // Dense U(t), assembled blockwise. Meant for modest dimensions.
    Matrix unitary(double t) const {
        Matrix u = Matrix::Zero(dim_, dim_);
        for (const auto& blk : blocks_) {
            const int d = static_cast<int>(blk.indices.size());
            Matrix phased = blk.eigenvectors;
            for (int k = 0; k < d; ++k)
                phased.col(k) *= std::polar(1.0, -blk.eigenvalues(k) * t);
            Matrix sub = phased * blk.eigenvectors.adjoint();
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) u(blk.indices[r], blk.indices[c]) = sub(r, c);
        }
        return u;
    }

    Matrix evolve_density(const Matrix& rho, double t) const {
        Matrix u = unitary(t);
        return u * rho * u.adjoint();
    }

    // U(t)|psi> or U(t) rho U(t)^dag, renormalization-free.
    QuantumState apply(const QuantumState& state, double t) const {
        require_same_cutoff(cutoff_, state.cutoff(), "Propagator::apply");
        if (state.is_pure()) {
            Vector psi = evolve_vector(state.amplitudes(), t);
            double norm2 = psi.squaredNorm();
            if (std::abs(norm2 - 1.0) >= kNormTolerance)
                throw PhysicsViolation("unitarity", "evolved norm^2 = " + std::to_string(norm2));
            return QuantumState::pure(cutoff_, std::move(psi));
        }
        return QuantumState::mixed(cutoff_, evolve_density(state.density(), t));
    }

private:
    ModeCutoff cutoff_;
    int dim_;
    std::vector<Block> blocks_;
};

// Convenience wrapper for one-off evolutions. Repeated evolution under the
// same Hamiltonian should construct a Propagator once instead.
inline QuantumState evolve(const OperatorMatrix& H, const QuantumState& state, double t) {
    return Propagator(H).apply(state, t);
}

}  // namespace qbattery
