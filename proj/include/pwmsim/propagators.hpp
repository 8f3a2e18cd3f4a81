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

#include <map>
#include <string>
#include <vector>

#include "pwmsim/operator_core.hpp"
#include "pwmsim/pwm_schedule.hpp"
#include "pwmsim/signals.hpp"

namespace pwmsim {

/// H(t) = H0 + sum_k u_k(t) H_k.
struct ControlledHamiltonian {
    Operator h0;
    std::vector<Operator> hk;
    std::vector<ControlSignal> controls;

    [[nodiscard]] Eigen::Index dim() const noexcept { return h0.rows(); }
    [[nodiscard]] Operator at(double t) const;
    /// H0 + sum_k s_k xi_k H_k.
    [[nodiscard]] Operator switched(const SignVector& signs, const std::vector<double>& xi) const;
    /// Hermiticity and shape checks.
    void validate() const;
    /// Discontinuities of any control inside (a, b), sorted.
    [[nodiscard]] std::vector<double> breakpoints(double a, double b) const;
};

[[nodiscard]] ControlledHamiltonian make_qubit_model(int n_qubits, double kappa1, double kappa2,
                                                     std::vector<ControlSignal> controls);

/// Eigensystems of the finite set {H0 + sum_k s_k xi_k H_k}, plus basis
/// transition matrices D_b^dag D_a between every pair of entries.
class PropagatorCache {
public:
    static PropagatorCache build(const Operator& h0, const std::vector<Operator>& hk, const std::vector<double>& xi,
                                 const std::set<SignVector>& signs_needed);
    static PropagatorCache build(const ControlledHamiltonian& ham, const std::vector<double>& xi,
                                 const SwitchingSequence& seq);

    [[nodiscard]] std::size_t size() const noexcept { return systems_.size(); }
    [[nodiscard]] std::size_t index_of(const SignVector& signs) const;
    [[nodiscard]] const EigenSystem& system(std::size_t index) const { return systems_.at(index); }
    [[nodiscard]] const EigenSystem& at(const SignVector& signs) const { return systems_[index_of(signs)]; }
    [[nodiscard]] const Operator& transition(std::size_t from, std::size_t to) const;
    [[nodiscard]] const std::vector<SignVector>& keys() const noexcept { return keys_; }
    [[nodiscard]] const std::vector<double>& xi() const noexcept { return xi_; }
    [[nodiscard]] double build_seconds() const noexcept { return build_seconds_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }

private:
    std::vector<SignVector> keys_;  // sorted; position == index
    std::vector<EigenSystem> systems_;
    std::vector<Operator> transitions_;  // [to * size + from]
    std::vector<double> xi_;
    Eigen::Index dim_ = 0;
    double build_seconds_ = 0.0;
};

struct SimulationResult {
    std::string method;
    std::vector<double> times;
    std::vector<Operator> propagators;  // U(t_i, 0)
    double wall_seconds = 0.0;
    std::size_t steps = 0;         // exponential factors applied
    std::size_t diagonalizations = 0;

    [[nodiscard]] State state(std::size_t i, const State& psi0) const { return propagators.at(i) * psi0; }
    [[nodiscard]] const Operator& final() const { return propagators.back(); }
};

/// Checkpoints must be non-decreasing and inside [0, seq.total].
[[nodiscard]] SimulationResult pwm_propagate(const SwitchingSequence& seq, const PropagatorCache& cache,
                                             const std::vector<double>& checkpoints);

/// Evolution restricted to segments inside [t0, t1] (used for composition).
[[nodiscard]] Operator pwm_slice(const SwitchingSequence& seq, const PropagatorCache& cache, double t0, double t1);

/// Segment-resolved PWM trajectory: evaluates U_M(t) or U_M(t)psi0 anywhere.
class PwmTrajectory {
public:
    PwmTrajectory(const SwitchingSequence& seq, const PropagatorCache& cache, const State& psi0,
                  bool keep_propagators = false);

    [[nodiscard]] State state(double t) const;
    [[nodiscard]] Operator propagator(double t) const;
    [[nodiscard]] std::size_t segment_index(double t) const;
    [[nodiscard]] const std::vector<double>& edges() const noexcept { return edges_; }
    [[nodiscard]] const SignVector& signs(std::size_t segment) const { return signs_.at(segment); }
    [[nodiscard]] double total() const noexcept { return edges_.back(); }

private:
    const PropagatorCache* cache_;
    std::vector<double> edges_;  // size segments + 1
    std::vector<std::size_t> entry_;
    std::vector<SignVector> signs_;
    std::vector<State> start_states_;
    std::vector<Operator> start_props_;
};

struct PwcOptions {
    bool memoize = false;  // reuse eigensystems for repeated midpoint Hamiltonians
};

/// Exponential midpoint rule on the grid k*tau, split at checkpoints and
/// control discontinuities; each sub-step uses its own midpoint.
[[nodiscard]] SimulationResult pwc_propagate(const ControlledHamiltonian& ham, double tau,
                                             const std::vector<double>& checkpoints, PwcOptions options = {});

/// Midpoint stepping with jittered step durations tau + delta_j; H is taken
/// at the nominal midpoint (j + 1/2) tau. Returns U after `steps` steps.
[[nodiscard]] Operator pwc_propagate_noisy(const ControlledHamiltonian& ham, double tau, std::size_t steps,
                                           const std::vector<double>& deltas);

/// Area-weighted Strang splitting: e^{-i tau/2 H0} e^{-i sum_k A_k H_k} e^{-i tau/2 H0}.
[[nodiscard]] SimulationResult spo_propagate(const ControlledHamiltonian& ham, double tau,
                                             const std::vector<double>& checkpoints);

struct ReferenceOptions {
    double base_tau = 1.0;
    int initial_refinement = 1;
    int max_refinement = 1 << 14;
    double tolerance = 1e-10;
};

/// Richardson-accelerated midpoint reference. Successive extrapolated
/// results at R and 2R must agree within tolerance (max-abs).
struct ReferenceResult {
    SimulationResult result;
    int refinement = 0;  // R of the accepted (R, 2R) pair
    double self_consistency = 0.0;
};
[[nodiscard]] ReferenceResult reference_propagate(const ControlledHamiltonian& ham,
                                                  const std::vector<double>& checkpoints,
                                                  ReferenceOptions options = {});

}  // namespace pwmsim
