// Copyright 2026 The pwmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pwmsim/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pwmsim {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NotHermitian: return "NotHermitian";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::DimensionOverflow: return "DimensionOverflow";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::NotPeriodic: return "NotPeriodic";
        case ErrorKind::AmplitudeTooSmall: return "AmplitudeTooSmall";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::CacheMiss: return "CacheMiss";
        case ErrorKind::NotNormalized: return "NotNormalized";
        case ErrorKind::NonUniformGrid: return "NonUniformGrid";
        case ErrorKind::FundamentalMismatch: return "FundamentalMismatch";
        case ErrorKind::TimingUnstable: return "TimingUnstable";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

Operator EigenSystem::reconstruct() const {
    return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
}

Eigen::VectorXcd EigenSystem::phases(double t) const {
    Eigen::VectorXcd out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out[i] = std::polar(1.0, -t * values[i]);
    }
    return out;
}

Operator EigenSystem::propagator(double t) const {
    return vectors * phases(t).asDiagonal() * vectors.adjoint();
}

double max_abs(const Operator& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const Operator& a) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "operator is not square");
    }
    return max_abs(a - a.adjoint());
}

double unitarity_defect(const Operator& u) {
    return max_abs(u.adjoint() * u - Operator::Identity(u.rows(), u.cols()));
}

bool is_hermitian(const Operator& a, double tol) {
    return a.rows() == a.cols() && hermiticity_defect(a) <= tol;
}

void require_hermitian(const Operator& a, std::string_view what, double tol) {
    const double defect = hermiticity_defect(a);
    if (!(defect <= tol)) {
        throw Error(ErrorKind::NotHermitian,
                    std::string(what) + " has ||A - A^dagger||_max = " + std::to_string(defect));
    }
}

EigenSystem eig_hermitian(const Operator& a) {
    require_hermitian(a, "eig_hermitian input");
    if (a.rows() == 0) {
        return {};
    }
    // The solver only reads the lower triangle; symmetrize so round-off in the
    // upper half cannot bias the result.
    const Operator sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> solver(sym, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NoConvergence, "Hermitian eigensolver did not converge");
    }
    EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index j = 0; j < es.vectors.cols(); ++j) {
        // First component within round-off of the largest magnitude, so that
        // ties such as (1, -1)/sqrt(2) resolve the same way on every run.
        const RealVector mags = es.vectors.col(j).cwiseAbs();
        const double top = mags.maxCoeff();
        Eigen::Index pivot = 0;
        while (mags[pivot] < top * (1.0 - 1e-10)) {
            ++pivot;
        }
        const Complex p = es.vectors(pivot, j);
        es.vectors.col(j) *= std::conj(p) / std::abs(p);
        es.vectors(pivot, j) = std::abs(es.vectors(pivot, j));
    }
    return es;
}

Operator expm_hermitian_scaled(const Operator& a, double t) {
    if (t == 0.0) {
        require_hermitian(a, "expm_hermitian_scaled input");
        return Operator::Identity(a.rows(), a.cols());
    }
    return eig_hermitian(a).propagator(t);
}

Operator kron(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Operator kron_power(const Operator& base, int n, std::size_t dim_cap) {
    if (n < 1) {
        throw Error(ErrorKind::InvalidArgument, "kron_power requires N >= 1");
    }
    if (base.rows() != base.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "kron_power base must be square");
    }
    std::size_t dim = 1;
    for (int i = 0; i < n; ++i) {
        dim *= static_cast<std::size_t>(base.rows());
        if (dim > dim_cap) {
            throw Error(ErrorKind::DimensionOverflow,
                        "dimension " + std::to_string(base.rows()) + "^" + std::to_string(n) +
                            " exceeds cap " + std::to_string(dim_cap));
        }
    }
    Operator out = base;
    for (int i = 1; i < n; ++i) {
        out = kron(out, base);
    }
    return out;
}

Operator identity(Eigen::Index dim) { return Operator::Identity(dim, dim); }

Operator pauli_x() {
    Operator m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

Operator pauli_y() {
    Operator m(2, 2);
    m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    return m;
}

Operator pauli_z() {
    Operator m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

QubitHamiltonian nqubit_hamiltonian(int n_qubits, double kappa1, double kappa2, std::size_t dim_cap) {
    if (n_qubits < 1) {
        throw Error(ErrorKind::InvalidArgument, "qubit count must be >= 1");
    }
    if (n_qubits > 10) {
        throw Error(ErrorKind::DimensionOverflow, "qubit count above 10 is not supported");
    }
    const double scale = std::ldexp(1.0, -n_qubits);
    QubitHamiltonian h;
    h.h0 = scale * kron_power(pauli_z(), n_qubits, dim_cap);
    h.h1 = (scale * kappa1) * kron_power(pauli_x(), n_qubits, dim_cap);
    h.h2 = (scale * kappa2) * kron_power(pauli_y(), n_qubits, dim_cap);
    return h;
}

}  // namespace pwmsim
