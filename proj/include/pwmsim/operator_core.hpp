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

#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "pwmsim/errors.hpp"

namespace pwmsim {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using State = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-9;
inline constexpr std::size_t kDefaultDimensionCap = 1024;

/// Eigendecomposition A = D diag(values) D^dagger of a Hermitian operator.
/// Eigenvalues ascend; each eigenvector's largest-magnitude component is real
/// and positive so cached decompositions are reproducible.
struct EigenSystem {
    RealVector values;
    Operator vectors;

    [[nodiscard]] Eigen::Index dim() const noexcept { return values.size(); }
    [[nodiscard]] Operator reconstruct() const;
    /// exp(-i t A) assembled from the stored decomposition.
    [[nodiscard]] Operator propagator(double t) const;
    /// exp(-i t values) as a vector of phases.
    [[nodiscard]] Eigen::VectorXcd phases(double t) const;
};

[[nodiscard]] double max_abs(const Operator& a);
[[nodiscard]] double hermiticity_defect(const Operator& a);
[[nodiscard]] double unitarity_defect(const Operator& u);
[[nodiscard]] bool is_hermitian(const Operator& a, double tol = kHermitianTolerance);

/// Throws NotHermitian if ||A - A^dagger||_max exceeds tol.
void require_hermitian(const Operator& a, std::string_view what, double tol = kHermitianTolerance);

[[nodiscard]] EigenSystem eig_hermitian(const Operator& a);

/// exp(-i t A) for Hermitian A, via eigendecomposition.
[[nodiscard]] Operator expm_hermitian_scaled(const Operator& a, double t);

[[nodiscard]] Operator kron(const Operator& a, const Operator& b);
[[nodiscard]] Operator kron_power(const Operator& base, int n, std::size_t dim_cap = kDefaultDimensionCap);

[[nodiscard]] Operator identity(Eigen::Index dim);
[[nodiscard]] Operator pauli_x();
[[nodiscard]] Operator pauli_y();
[[nodiscard]] Operator pauli_z();

struct QubitHamiltonian {
    Operator h0;
    Operator h1;
    Operator h2;
};

/// H0 = Z^{(x)N}/2^N, H1 = kappa1 X^{(x)N}/2^N, H2 = kappa2 Y^{(x)N}/2^N.
[[nodiscard]] QubitHamiltonian nqubit_hamiltonian(int n_qubits, double kappa1, double kappa2,
                                                  std::size_t dim_cap = kDefaultDimensionCap);

}  // namespace pwmsim
