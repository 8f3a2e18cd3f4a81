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

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "pwmsim/signals.hpp"

namespace pwmsim {

/// Pulse grid shared by all controls: M pulses per base period T = 2 pi/omega_min,
/// interval length tau = T/M, amplitudes xi per control.
struct PwmParams {
    int pulse_number = 1;
    std::vector<double> xi;
    double period = 0.0;
    double tau = 0.0;
    double t_total = 0.0;

    [[nodiscard]] double scope() const noexcept { return pulse_number * kTwoPi / period; }
    [[nodiscard]] double omega_min() const noexcept { return kTwoPi / period; }
    /// Intervals needed to cover [0, t_total]; the last may be partial.
    [[nodiscard]] std::size_t interval_count() const;
};

/// Grid from the controls' common omega_min. xi defaults to max|u_k| per control.
[[nodiscard]] PwmParams make_pwm_params(const std::vector<ControlSignal>& controls, int pulse_number,
                                        double t_total, std::optional<std::vector<double>> xi = std::nullopt);

enum class WidthPolicy {
    Strict,  // AmplitudeTooSmall when xi < max|u|
    Clamp,   // widths clamped to the interval length, counted in PulseInterval::clamped
};

struct PulseInterval {
    int index = 0;  // 1-based m; spans [(m-1) tau, m tau]
    double start = 0.0;
    double length = 0.0;
    double width = 0.0;  // |t_p| in us
    int sign = 0;        // sign of the interval's integral; 0 when negligible
    double area = 0.0;   // integral of u over the interval
    bool clamped = false;

    [[nodiscard]] double center() const noexcept { return start + 0.5 * length; }
};

/// Equal-area pulse widths: |t_p| = |integral of u over the interval| / xi.
[[nodiscard]] std::vector<PulseInterval> eap_widths(const ControlSignal& u, const PwmParams& params,
                                                    std::size_t control = 0,
                                                    WidthPolicy policy = WidthPolicy::Strict);

inline constexpr std::size_t kMaxControls = 8;

/// Per-control switch states s_k in {-1, 0, +1}; fixed capacity, no heap.
class SignVector {
public:
    SignVector() = default;
    SignVector(std::size_t n, std::int8_t fill);

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    std::int8_t& operator[](std::size_t k) noexcept { return data_[k]; }
    std::int8_t operator[](std::size_t k) const noexcept { return data_[k]; }
    void push_back(std::int8_t s);
    [[nodiscard]] const std::int8_t* begin() const noexcept { return data_.data(); }
    [[nodiscard]] const std::int8_t* end() const noexcept { return data_.data() + size_; }

    friend bool operator==(const SignVector& a, const SignVector& b) noexcept {
        return std::equal(a.begin(), a.end(), b.begin(), b.end());
    }
    friend bool operator<(const SignVector& a, const SignVector& b) noexcept {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }

private:
    std::array<std::int8_t, kMaxControls> data_{};
    std::uint8_t size_ = 0;
};

struct Segment {
    double start = 0.0;
    double duration = 0.0;
    SignVector signs;
    std::size_t interval = 0;  // 0-based position in SwitchingSequence::intervals
};

/// Per-interval pulse description; segments are derived from it by symmetric
/// nesting of all pulses around the interval midpoint.
struct IntervalLayout {
    double start = 0.0;
    double length = 0.0;
    std::vector<double> widths;
    SignVector signs;
};

struct SwitchingSequence {
    std::size_t controls = 0;
    double total = 0.0;
    std::vector<IntervalLayout> intervals;
    std::vector<Segment> segments;
    std::size_t clamped = 0;  // widths clamped by perturbation

    [[nodiscard]] std::set<SignVector> sign_set() const;
    /// Sign vector active at time t (segment containing t; right-continuous).
    [[nodiscard]] const SignVector& signs_at(double t) const;
};

/// Lay out the pulses of all controls interval by interval. Segment edges are
/// the sorted union of pulse edges; for a single control this is the
/// free / pulse / free pattern with free time (tau - t_p)/2 on each side.
[[nodiscard]] SwitchingSequence build_switching_sequence(
    const std::vector<std::vector<PulseInterval>>& per_control, const PwmParams& params);

[[nodiscard]] SwitchingSequence layout_sequence(std::size_t controls, std::vector<IntervalLayout> intervals);

/// Add deltas[i] to the i-th active pulse (interval-major, control-minor);
/// free time around the pulse shrinks by delta/2 on each side. Widths are
/// clamped to [0, interval length].
[[nodiscard]] SwitchingSequence apply_width_deltas(const SwitchingSequence& seq, const std::vector<double>& deltas);

[[nodiscard]] std::size_t active_pulse_count(const SwitchingSequence& seq);

/// Uniform switching noise on every active pulse width, delta in [-delta_amp, delta_amp].
[[nodiscard]] SwitchingSequence perturb_widths(const SwitchingSequence& seq, double delta_amp, std::uint64_t seed);

/// Gaussian pulse train sum_m s_m xi exp(-pi (t - c_m)^2 / t_p^2); each pulse
/// has L1 mass xi t_p. Sampled uniformly with at least samples_per_tau points
/// per interval (more when pulses are narrow).
[[nodiscard]] ControlSignal gaussian_realization(const std::vector<PulseInterval>& intervals,
                                                 const PwmParams& params, std::size_t control = 0,
                                                 int samples_per_tau = 50, bool declare_period = true);

/// Cell averages of the rectangular pulse train over n cells of width dt
/// starting at t0.
[[nodiscard]] std::vector<double> sample_pulse_train(const std::vector<PulseInterval>& intervals, double xi,
                                                     double t0, double dt, std::size_t n);

}  // namespace pwmsim
