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

#include "pwmsim/pwm_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace pwmsim {

namespace {

constexpr double kZeroAreaRelTol = 1e-15;
constexpr double kEdgeMergeRelTol = 1e-14;

double uniform_pm1(std::mt19937_64& rng) {
    // Portable mapping of 53 random bits to [-1, 1].
    const double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u01 - 1.0;
}

// Appends the symmetric nested layout of one interval to `out`. Scratch
// buffers are reused across intervals.
void append_interval_segments(const IntervalLayout& iv, std::size_t index, std::vector<double>& rings,
                              std::vector<Segment>& out) {
    const std::size_t k_count = iv.signs.size();
    const double half_len = 0.5 * iv.length;
    const double tol = kEdgeMergeRelTol * iv.length;

    // rings[0] = half length, then distinct pulse half-widths, outermost first.
    rings.clear();
    for (std::size_t k = 0; k < k_count; ++k) {
        if (iv.signs[k] != 0 && iv.widths[k] > 0.0) {
            rings.push_back(std::min(0.5 * iv.widths[k], half_len));
        }
    }
    if (rings.empty()) {
        out.push_back(Segment{iv.start, iv.length, SignVector(k_count, 0), index});
        return;
    }
    std::sort(rings.begin(), rings.end(), std::greater<>());
    rings.insert(rings.begin(), half_len);
    std::size_t kept = 1;
    for (std::size_t j = 1; j < rings.size(); ++j) {
        if (rings[kept - 1] - rings[j] > tol) {
            rings[kept++] = rings[j];
        }
    }
    rings.resize(kept);

    auto active = [&](double outer) {
        SignVector s(k_count, 0);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (iv.signs[k] != 0 && 0.5 * iv.widths[k] >= outer - tol) {
                s[k] = iv.signs[k];
            }
        }
        return s;
    };

    // Band j lies between rings[j+1] and rings[j] on both sides of the center.
    const std::size_t bands = rings.size() - 1;
    const std::size_t first = out.size();
    double t = iv.start;
    for (std::size_t j = 0; j < bands; ++j) {
        const double dur = rings[j] - rings[j + 1];
        out.push_back(Segment{t, dur, active(rings[j]), index});
        t += dur;
    }
    const double center = iv.start + half_len;
    out.push_back(Segment{center - rings.back(), 2.0 * rings.back(), active(rings.back()), index});
    t = center + rings.back();
    for (std::size_t j = bands; j-- > 0;) {
        const Segment& mirror = out[first + j];
        out.push_back(Segment{t, mirror.duration, mirror.signs, index});
        t += mirror.duration;
    }
}

}  // namespace

SignVector::SignVector(std::size_t n, std::int8_t fill) {
    if (n > kMaxControls) {
        throw Error(ErrorKind::DimensionOverflow, "at most " + std::to_string(kMaxControls) + " controls");
    }
    size_ = static_cast<std::uint8_t>(n);
    std::fill(data_.begin(), data_.begin() + n, fill);
}

void SignVector::push_back(std::int8_t s) {
    if (size_ == kMaxControls) {
        throw Error(ErrorKind::DimensionOverflow, "at most " + std::to_string(kMaxControls) + " controls");
    }
    data_[size_++] = s;
}

std::size_t PwmParams::interval_count() const {
    if (!(t_total > 0.0)) {
        return 0;
    }
    const double q = t_total / tau;
    auto n = static_cast<std::size_t>(std::floor(q));
    if (q - static_cast<double>(n) > 1e-9) {
        ++n;
    }
    return n;
}

PwmParams make_pwm_params(const std::vector<ControlSignal>& controls, int pulse_number, double t_total,
                          std::optional<std::vector<double>> xi) {
    if (controls.empty()) {
        throw Error(ErrorKind::InvalidArgument, "at least one control signal is required");
    }
    if (pulse_number < 1) {
        throw Error(ErrorKind::InvalidArgument, "pulse number M must be >= 1");
    }
    if (t_total < 0.0 || !std::isfinite(t_total)) {
        throw Error(ErrorKind::InvalidArgument, "horizon must be a finite non-negative time");
    }
    double omega_min = controls.front().band().omega_min;
    for (const auto& u : controls) {
        omega_min = std::min(omega_min, u.band().omega_min);
    }
    PwmParams p;
    p.pulse_number = pulse_number;
    p.period = kTwoPi / omega_min;
    p.tau = p.period / pulse_number;
    p.t_total = t_total;
    if (xi) {
        if (xi->size() != controls.size()) {
            throw Error(ErrorKind::DimensionMismatch, "one pulse amplitude per control is required");
        }
        p.xi = *xi;
    } else {
        for (const auto& u : controls) {
            p.xi.push_back(u.max_abs() > 0.0 ? u.max_abs() : 1.0);
        }
    }
    for (double x : p.xi) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw Error(ErrorKind::InvalidArgument, "pulse amplitude xi must be positive");
        }
    }
    return p;
}

std::vector<PulseInterval> eap_widths(const ControlSignal& u, const PwmParams& params, std::size_t control,
                                      WidthPolicy policy) {
    if (control >= params.xi.size()) {
        throw Error(ErrorKind::InvalidArgument, "control index out of range");
    }
    const double xi = params.xi[control];
    if (policy == WidthPolicy::Strict && xi < u.max_abs() * (1.0 - 1e-12)) {
        throw Error(ErrorKind::AmplitudeTooSmall, "xi = " + std::to_string(xi) + " below max|u| = " +
                                                      std::to_string(u.max_abs()));
    }
    const std::size_t n = params.interval_count();
    std::vector<PulseInterval> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PulseInterval iv;
        iv.index = static_cast<int>(i) + 1;
        iv.start = static_cast<double>(i) * params.tau;
        iv.length = std::min(params.tau, params.t_total - iv.start);
        if (std::abs(iv.length - params.tau) <= 1e-12 * params.tau) {
            iv.length = params.tau;
        }
        iv.area = u.integrate(iv.start, iv.start + iv.length);
        if (std::abs(iv.area) < kZeroAreaRelTol * params.tau) {
            iv.sign = 0;
            iv.width = 0.0;
        } else {
            iv.sign = iv.area > 0.0 ? 1 : -1;
            iv.width = std::abs(iv.area) / xi;
            if (iv.width > iv.length) {
                // Either round-off at full area or an infeasible amplitude.
                iv.clamped = iv.width > iv.length * (1.0 + 1e-12);
                iv.width = iv.length;
            }
        }
        out.push_back(iv);
    }
    return out;
}

std::set<SignVector> SwitchingSequence::sign_set() const {
    std::set<SignVector> out;
    for (const auto& s : segments) {
        out.insert(s.signs);
    }
    return out;
}

const SignVector& SwitchingSequence::signs_at(double t) const {
    if (segments.empty()) {
        throw Error(ErrorKind::OutOfRange, "empty switching sequence");
    }
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double value, const Segment& s) { return value < s.start; });
    if (it == segments.begin()) {
        return segments.front().signs;
    }
    return std::prev(it)->signs;
}

SwitchingSequence layout_sequence(std::size_t controls, std::vector<IntervalLayout> intervals) {
    SwitchingSequence seq;
    seq.controls = controls;
    seq.intervals = std::move(intervals);
    std::size_t reserve = 0;
    for (const auto& iv : seq.intervals) {
        reserve += 2 * iv.signs.size() + 1;
    }
    seq.segments.reserve(reserve);
    std::vector<double> rings;
    for (std::size_t i = 0; i < seq.intervals.size(); ++i) {
        append_interval_segments(seq.intervals[i], i, rings, seq.segments);
        seq.total += seq.intervals[i].length;
    }
    return seq;
}

SwitchingSequence build_switching_sequence(const std::vector<std::vector<PulseInterval>>& per_control,
                                           const PwmParams& params) {
    if (per_control.empty()) {
        throw Error(ErrorKind::InvalidArgument, "no controls");
    }
    const std::size_t n = per_control.front().size();
    for (const auto& ivs : per_control) {
        if (ivs.size() != n) {
            throw Error(ErrorKind::GridMismatch, "controls disagree on interval count");
        }
    }
    std::vector<IntervalLayout> layouts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ref = per_control.front()[i];
        layouts[i].start = ref.start;
        layouts[i].length = ref.length;
        for (const auto& ivs : per_control) {
            const auto& iv = ivs[i];
            if (std::abs(iv.start - ref.start) > 1e-12 * params.tau ||
                std::abs(iv.length - ref.length) > 1e-12 * params.tau) {
                throw Error(ErrorKind::GridMismatch, "controls disagree on the tau grid at interval " +
                                                         std::to_string(i + 1));
            }
            layouts[i].widths.push_back(iv.width);
            layouts[i].signs.push_back(static_cast<std::int8_t>(iv.sign));
        }
    }
    return layout_sequence(per_control.size(), std::move(layouts));
}

std::size_t active_pulse_count(const SwitchingSequence& seq) {
    std::size_t count = 0;
    for (const auto& iv : seq.intervals) {
        for (auto s : iv.signs) {
            count += s != 0 ? 1 : 0;
        }
    }
    return count;
}

SwitchingSequence apply_width_deltas(const SwitchingSequence& seq, const std::vector<double>& deltas) {
    if (deltas.size() != active_pulse_count(seq)) {
        throw Error(ErrorKind::DimensionMismatch, "one delta per active pulse is required");
    }
    auto layouts = seq.intervals;
    std::size_t next = 0;
    std::size_t clamped = 0;
    for (auto& iv : layouts) {
        for (std::size_t k = 0; k < iv.signs.size(); ++k) {
            if (iv.signs[k] == 0) {
                continue;
            }
            const double w = iv.widths[k] + deltas[next++];
            if (w < 0.0 || w > iv.length) {
                ++clamped;
            }
            iv.widths[k] = std::clamp(w, 0.0, iv.length);
        }
    }
    auto out = layout_sequence(seq.controls, std::move(layouts));
    out.clamped = seq.clamped + clamped;
    return out;
}

SwitchingSequence perturb_widths(const SwitchingSequence& seq, double delta_amp, std::uint64_t seed) {
    if (!(delta_amp >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "noise amplitude must be >= 0");
    }
    if (delta_amp == 0.0) {
        return seq;
    }
    std::mt19937_64 rng(seed);
    std::vector<double> deltas(active_pulse_count(seq));
    for (auto& d : deltas) {
        d = delta_amp * uniform_pm1(rng);
    }
    return apply_width_deltas(seq, deltas);
}

ControlSignal gaussian_realization(const std::vector<PulseInterval>& intervals, const PwmParams& params,
                                   std::size_t control, int samples_per_tau, bool declare_period) {
    if (control >= params.xi.size()) {
        throw Error(ErrorKind::InvalidArgument, "control index out of range");
    }
    if (samples_per_tau < 50) {
        throw Error(ErrorKind::InvalidArgument, "Gaussian realization needs >= 50 samples per tau");
    }
    const double xi = params.xi[control];
    const double t_end = intervals.empty() ? params.tau : intervals.back().start + intervals.back().length;

    // Resolve the narrowest meaningful pulse: sigma = t_p / sqrt(2 pi).
    double dt = params.tau / samples_per_tau;
    for (const auto& iv : intervals) {
        if (iv.sign != 0 && iv.width >= 1e-3 * params.tau) {
            dt = std::min(dt, iv.width / std::sqrt(kTwoPi) / 2.0);
        }
    }
    auto cells = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    cells = std::max<std::size_t>(cells, 1);
    dt = t_end / static_cast<double>(cells);

    std::vector<double> values(cells + 1, 0.0);
    for (const auto& iv : intervals) {
        if (iv.sign == 0 || iv.width <= 0.0) {
            continue;
        }
        const double c = iv.center();
        const double reach = 8.0 * iv.width;  // exp(-pi * 64) is far below double precision
        const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor((c - reach) / dt)));
        const auto hi = std::min(cells, static_cast<std::size_t>(std::ceil((c + reach) / dt)));
        for (std::size_t i = lo; i <= hi; ++i) {
            const double x = (static_cast<double>(i) * dt - c) / iv.width;
            values[i] += iv.sign * xi * std::exp(-M_PI * x * x);
        }
    }
    const double omega_min = params.omega_min();
    std::optional<double> period;
    if (declare_period) {
        period = params.period;
    }
    return ControlSignal::tabulated(0.0, dt, std::move(values), {omega_min, params.scope()}, period);
}

std::vector<double> sample_pulse_train(const std::vector<PulseInterval>& intervals, double xi, double t0,
                                       double dt, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (const auto& iv : intervals) {
        if (iv.sign == 0 || iv.width <= 0.0) {
            continue;
        }
        const double a = iv.center() - 0.5 * iv.width;
        const double b = iv.center() + 0.5 * iv.width;
        const double first = std::floor((a - t0) / dt);
        const double last = std::floor((b - t0) / dt);
        for (double cell = std::max(0.0, first); cell <= last && cell < static_cast<double>(n); cell += 1.0) {
            const double lo = std::max(a, t0 + cell * dt);
            const double hi = std::min(b, t0 + (cell + 1.0) * dt);
            if (hi > lo) {
                out[static_cast<std::size_t>(cell)] += iv.sign * xi * (hi - lo) / dt;
            }
        }
    }
    return out;
}

}  // namespace pwmsim
