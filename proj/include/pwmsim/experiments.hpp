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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pwmsim/error_analysis.hpp"
#include "pwmsim/spectral.hpp"

namespace pwmsim {

enum class Method { Pwm, Pwc, Spo };
[[nodiscard]] std::string to_string(Method m);
[[nodiscard]] Method parse_method(const std::string& name);

enum class SweepAxis { Time, PulseNumber, Xi, Kappa1, Qubits, Delta };
[[nodiscard]] std::string to_string(SweepAxis a);
[[nodiscard]] SweepAxis parse_axis(const std::string& name);

/// Qubit model of the test family with its control waveforms.
struct ModelSpec {
    int n_qubits = 1;
    double kappa1 = 1.0;
    double kappa2 = 0.0;
    std::vector<ControlSignal> controls;

    [[nodiscard]] ControlledHamiltonian hamiltonian() const;
    [[nodiscard]] State initial_state() const;  // |0...0>
};

struct SweepSpec {
    ModelSpec model;
    SweepAxis axis = SweepAxis::Time;
    std::vector<double> values;         // axis values (times when axis == Time)
    std::vector<double> times{20.0};    // checkpoints for non-time axes
    std::vector<int> pulse_numbers{20}; // one line per M
    std::optional<double> xi;           // common pulse amplitude; default max|u_k|
    std::vector<Method> methods{Method::Pwm};
    bool priori = false;                // also evaluate the direct priori estimate
    ReferenceOptions reference;
    std::uint64_t seed = 0;
    unsigned threads = 0;               // 0: hardware concurrency

    void validate() const;
};

struct SweepRecord {
    Method method = Method::Pwm;
    int pulse_number = 0;
    SweepAxis axis = SweepAxis::Time;
    double axis_value = 0.0;
    ErrorCurve actual;
    std::optional<ErrorCurve> priori;
    bool eap_feasible = true;
    std::size_t clamped_widths = 0;
};

[[nodiscard]] std::vector<SweepRecord> run_sweep(const SweepSpec& spec);

enum class BenchMode { EqualM, EqualEpsilon, QubitSweep };
[[nodiscard]] std::string to_string(BenchMode m);
[[nodiscard]] BenchMode parse_bench_mode(const std::string& name);

struct BenchSpec {
    ModelSpec model;
    BenchMode mode = BenchMode::EqualM;
    std::vector<int> pulse_numbers{50, 100, 150, 200};
    std::vector<int> qubits{2, 4, 6, 8};
    std::vector<double> target_epsilons{1e-3};
    double t_us = 20.0;
    int repetitions = 5;
    bool quick = false;
    double min_batch_seconds = 2e-3;  // inner loop until one sample takes this long
    int max_attempts = 3;             // re-measure when the spread is too large
    ReferenceOptions reference;

    void validate() const;
};

struct BenchRecord {
    Method method = Method::Pwm;
    int n_qubits = 1;
    int pulse_number = 0;
    double t_us = 0.0;
    std::optional<double> target_epsilon;
    double seconds = 0.0;   // median per propagation
    double spread = 0.0;    // interquartile range / median
    std::size_t repetitions = 0;
    std::optional<double> epsilon;
    std::optional<double> g;  // t_c(PWM) / t_c(PWC) at the same point
};

[[nodiscard]] std::vector<BenchRecord> run_bench(const BenchSpec& spec);

/// Median wall time of one call, measured serially after a warm-up.
struct TimingSample {
    double median = 0.0;
    double spread = 0.0;
    std::vector<double> samples;
};
[[nodiscard]] TimingSample time_median(const std::function<void()>& fn, int repetitions, double min_batch_seconds,
                                       int max_attempts, bool quick);
/// Interleaved variant: repetition r of every function runs before
/// repetition r+1 of any, so slow drifts in machine load hit all alike.
[[nodiscard]] std::vector<TimingSample> time_interleaved(const std::vector<std::function<void()>>& fns,
                                                         int repetitions, double min_batch_seconds, int max_attempts,
                                                         bool quick);

struct NoiseSpec {
    ModelSpec model;
    std::vector<int> pulse_numbers{20, 40, 60, 80, 100};
    std::vector<double> deltas{1e-3};  // us
    double t_us = 100.0;
    int trials = 200;
    std::vector<Method> methods{Method::Pwm, Method::Pwc};
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool quick = false;
    ReferenceOptions reference;

    void validate() const;
};

struct NoiseStudyRecord {
    Method method = Method::Pwm;
    int pulse_number = 0;
    double delta = 0.0;
    int trials = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
    std::uint64_t seed = 0;
    std::size_t clamped_widths = 0;
};

[[nodiscard]] std::vector<NoiseStudyRecord> run_noise_study(const NoiseSpec& spec);

struct SpectrumStudy {
    PwmParams params;
    std::vector<PulseInterval> intervals;  // one base period (or the FFT window)
    Spectrum signal;
    Spectrum train;
    std::optional<Spectrum> gaussian;
    ScopeDeviation train_deviation;
    std::optional<ScopeDeviation> gaussian_deviation;
    bool fft_path = false;
};

/// Closed-form path for periodic controls; FFT over 20 base periods with a
/// flat-top window otherwise.
[[nodiscard]] SpectrumStudy run_spectrum_study(const ControlSignal& u, int pulse_number, std::optional<double> xi,
                                               std::optional<int> n_max, bool gaussian);

/// splitmix64 finalizer chained over the parts.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// Runs body(i) for i in [0, n) on a small pool; results must be written by
/// index. The lowest-index exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace pwmsim
