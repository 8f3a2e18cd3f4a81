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

#include <functional>
#include <string>
#include <vector>

#include "pwmsim/propagators.hpp"

namespace pwmsim {

enum class ErrorForm { Actual, PrioriDirect, PrioriSeries };
[[nodiscard]] std::string to_string(ErrorForm form);

struct ErrorCurve {
    std::vector<double> times;  // us
    std::vector<double> values;
    ErrorForm form = ErrorForm::Actual;
    std::string method = "pwm";
    int pulse_number = 0;
    double xi = 0.0;
    double kappa = 0.0;
};

/// 1/2 |1 - <psi_ref| U_M |psi0>|.
[[nodiscard]] double infidelity(const State& psi_ref, const Operator& u_m, const State& psi0);
/// Same with psi_m = U_M psi0 supplied directly.
[[nodiscard]] double infidelity(const State& psi_ref, const State& psi_m);

/// Actual error of `approx` against `reference` at their shared checkpoints.
[[nodiscard]] ErrorCurve actual_error_curve(const SimulationResult& reference, const SimulationResult& approx,
                                            const State& psi0);

/// 1/2 |int_0^t <psi|H_M - H|psi> dt'| along the PWM trajectory, integrated
/// segment by segment with adaptive Gauss-Kronrod. One value per time.
[[nodiscard]] std::vector<double> priori_error_direct_curve(const SwitchingSequence& seq,
                                                            const PropagatorCache& cache,
                                                            const ControlledHamiltonian& ham, const State& psi0,
                                                            const std::vector<double>& times, double tol = 1e-10);
[[nodiscard]] double priori_error_direct(const SwitchingSequence& seq, const PropagatorCache& cache,
                                         const ControlledHamiltonian& ham, const State& psi0, double t,
                                         double tol = 1e-10);

/// Expectation <psi(t)| H_k |psi(t)> for control k.
using ExpectationFn = std::function<double(double t, std::size_t k)>;

[[nodiscard]] ExpectationFn expectation_along(const std::function<State(double)>& trajectory,
                                              const std::vector<Operator>& hk);

/// Harmonic-series estimate with the l-sum truncated at l_max. Each control
/// harmonic A sin(h w t + phi) contributes
/// sqrt(2) A int <H_k> cos(h w t + phi + pi/4) sum_l (-1)^l cos(l M (h w t + phi)).
[[nodiscard]] double priori_error_series(const std::vector<PeriodicFourierData>& fourier,
                                         const ExpectationFn& expectation, double t, int pulse_number, int l_max);

/// The l -> infinity limit of the same expression: the l-sum becomes
/// -1/2 + pi sum_j delta(M(h w t + phi) - (2j+1) pi).
[[nodiscard]] double priori_error_series_limit(const std::vector<PeriodicFourierData>& fourier,
                                               const ExpectationFn& expectation, double t, int pulse_number);

struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Composite Gauss-Legendre rule on [0, t] whose panels never straddle an edge.
[[nodiscard]] QuadratureGrid segment_aligned_grid(const std::vector<double>& edges, double t,
                                                  std::size_t target_points);

struct ErrorOperator {
    Operator definition;  // U(t) - U_M(t)
    Operator integral;    // -i int_0^t U(t) U(t')^dag (H - H_M)(t') U_M(t') dt'
    [[nodiscard]] double discrepancy() const { return max_abs(definition - integral); }
};

/// Trajectories must be sampled at grid.nodes followed by t itself.
[[nodiscard]] ErrorOperator error_operator(const QuadratureGrid& grid, const SimulationResult& reference,
                                           const SimulationResult& pwm, const ControlledHamiltonian& ham,
                                           const SwitchingSequence& seq, const std::vector<double>& xi, double t);

}  // namespace pwmsim
