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

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pwmsim/errors.hpp"

namespace pwmsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Ordinary frequency in MHz to angular frequency in rad/us.
[[nodiscard]] constexpr double angular_from_mhz(double freq_mhz) noexcept { return kTwoPi * freq_mhz; }

/// Frequency band [omega_min, omega_max] in rad/us.
struct FrequencyBand {
    double omega_min = 0.0;
    double omega_max = 0.0;
};

/// One sinusoidal component amp * sin(2 pi f t + phase).
struct Tone {
    double amp = 1.0;
    double freq_mhz = 0.0;
    double phase = 0.0;
};

enum class SignalKind { Sinusoid, SumOfSinusoids, Triangle, Sawtooth, Constant, Tabulated };

[[nodiscard]] std::string to_string(SignalKind kind);

struct Harmonic {
    int n = 0;
    double amp = 0.0;
    double phase = 0.0;
};

/// u(t) = dc/2 + sum_n amp_n sin(n w t + phase_n), w = fundamental.
struct PeriodicFourierData {
    double fundamental = 0.0;
    double dc = 0.0;
    std::vector<Harmonic> harmonics;

    [[nodiscard]] double resynthesize(double t) const;
};

/// Real band-limited control function u(t), time in us.
class ControlSignal {
public:
    static ControlSignal sinusoid(double amp, double freq_mhz, double phase = 0.0);
    /// Sum of tones. With normalize set, amplitudes are rescaled so that
    /// sup|u| = 1.
    static ControlSignal sum_of_sinusoids(std::vector<Tone> tones, bool normalize = true);
    /// Triangle wave of peak amp; rises from 0 at t=0 to amp at a quarter period.
    static ControlSignal triangle(double amp, double freq_mhz, double phase = 0.0);
    /// Rising sawtooth, zero at t=0, jump from +amp to -amp at half period.
    static ControlSignal sawtooth(double amp, double freq_mhz, double phase = 0.0);
    /// Constant value; the declared frequency fixes the pulse grid.
    static ControlSignal constant(double value, double freq_mhz);
    /// Uniformly sampled table, linearly interpolated. The band is declared by
    /// the caller; tables coarser than 20 samples per 2 pi/omega_max are
    /// rejected.
    static ControlSignal tabulated(double t0, double dt, std::vector<double> values, FrequencyBand band,
                                   std::optional<double> period_us = std::nullopt);

    [[nodiscard]] SignalKind kind() const noexcept { return kind_; }
    [[nodiscard]] const FrequencyBand& band() const noexcept { return band_; }
    [[nodiscard]] double max_abs() const noexcept { return max_abs_; }
    /// Fundamental angular frequency (rad/us) when the signal is periodic.
    [[nodiscard]] std::optional<double> fundamental() const noexcept { return fundamental_; }
    [[nodiscard]] bool is_periodic() const noexcept { return fundamental_.has_value(); }

    [[nodiscard]] double evaluate(double t) const;
    [[nodiscard]] double integrate(double a, double b) const;

    /// Points inside (a, b) where u or its derivative is discontinuous.
    [[nodiscard]] std::vector<double> breakpoints(double a, double b) const;

    /// Same waveform multiplied by factor.
    [[nodiscard]] ControlSignal scaled(double factor) const;

    [[nodiscard]] const std::vector<Tone>& tones() const;
    [[nodiscard]] double table_start() const;
    [[nodiscard]] double table_step() const;
    [[nodiscard]] const std::vector<double>& table_values() const;

    [[nodiscard]] std::string describe() const;

private:
    struct Tones {
        std::vector<Tone> tones;
    };
    struct Wave {
        double amp;
        double freq_mhz;
        double phase;
    };
    struct Constant {
        double value;
        double freq_mhz;
    };
    struct Table {
        double t0;
        double dt;
        std::vector<double> values;
    };

    ControlSignal() = default;

    SignalKind kind_ = SignalKind::Constant;
    std::variant<Tones, Wave, Constant, Table> data_;
    FrequencyBand band_;
    double max_abs_ = 0.0;
    std::optional<double> fundamental_;
};

/// Harmonic content over one fundamental period using the quadrature
/// definitions A_n = (w/pi) sqrt(C_n^2 + S_n^2), tan(phase_n) = C_n / S_n.
/// Harmonics with A_n < 1e-12 are dropped.
[[nodiscard]] PeriodicFourierData periodic_fourier(const ControlSignal& u, int n_max);

/// Integer ratio detection used to find a common fundamental for tones.
/// Returns the fundamental frequency in MHz, or nullopt when the ratios are
/// not rational with denominators up to max_denominator.
[[nodiscard]] std::optional<double> common_fundamental_mhz(const std::vector<double>& freqs_mhz,
                                                           long max_denominator = 1000);

}  // namespace pwmsim
