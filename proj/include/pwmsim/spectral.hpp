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

#include <utility>
#include <vector>

#include "pwmsim/operator_core.hpp"
#include "pwmsim/pwm_schedule.hpp"
#include "pwmsim/signals.hpp"

namespace pwmsim {

/// Two-sided Fourier coefficients c_n, n in [-n_max, n_max], of a periodic
/// function f(t) = sum_n c_n exp(i n w t).
struct Spectrum {
    double fundamental = 0.0;  // rad/us
    double scope = 0.0;        // rad/us; 0 when not a PWM train
    int n_max = 0;
    std::vector<Complex> coefficients;  // index n + n_max

    [[nodiscard]] Complex at(int n) const;
    void set(int n, Complex c) { coefficients.at(static_cast<std::size_t>(n + n_max)) = c; }
    /// sum_n |c_n|^2.
    [[nodiscard]] double power() const;
    /// max |c_{-n} - conj(c_n)|.
    [[nodiscard]] double reality_defect() const;
    [[nodiscard]] double resynthesize(double t) const;
};

[[nodiscard]] Spectrum make_spectrum(double fundamental, int n_max, double scope = 0.0);

/// Closed-form coefficients of the rectangular pulse train over one base
/// period: c_0 = (xi/T) sum s t_p, c_n = sum s xi/(n pi) sin(n pi t_p/T) e^{-i n w c_m}.
[[nodiscard]] Spectrum rect_train_coefficients(const std::vector<PulseInterval>& intervals, const PwmParams& params,
                                               int n_max, std::size_t control = 0);
/// Same over an explicit period (a whole number of base periods).
[[nodiscard]] Spectrum rect_train_coefficients(const std::vector<PulseInterval>& intervals, double xi, double period,
                                               int n_max, double scope);

/// Gaussian pulse xi exp(-pi (t-c)^2/t_p^2) has area xi t_p, so
/// c_n = (xi/T) sum s t_p exp(-(n w t_p)^2/4pi) e^{-i n w c_m}; the
/// approximate form drops the damping factor.
struct GaussianSpectra {
    Spectrum exact;
    Spectrum approx;
};
[[nodiscard]] GaussianSpectra gaussian_train_coefficients(const std::vector<PulseInterval>& intervals,
                                                          const PwmParams& params, int n_max,
                                                          std::size_t control = 0);
[[nodiscard]] GaussianSpectra gaussian_train_coefficients(const std::vector<PulseInterval>& intervals, double xi,
                                                          double period, int n_max, double scope);
[[nodiscard]] double gaussian_damping(int n, double omega, double width);

/// Exact harmonic content of a periodic control signal.
[[nodiscard]] Spectrum signal_spectrum(const ControlSignal& u, int n_max, double scope = 0.0);

enum class Window { Rectangular, FlatTop };

/// DFT of a uniform series spanning `periods` whole base periods, normalized
/// so that A sin(w t) yields |c_{+-1}| = A/2. Coefficient n refers to the
/// base-period harmonic, i.e. DFT bin n*periods.
[[nodiscard]] Spectrum fft_spectrum(const std::vector<double>& samples, double dt, int periods = 1,
                                    Window window = Window::Rectangular);
/// Same, with explicit sample times that must form a uniform grid.
[[nodiscard]] Spectrum fft_spectrum(const std::vector<double>& times, const std::vector<double>& samples,
                                    int periods = 1, Window window = Window::Rectangular);

struct ScopeDeviation {
    double in_scope = 0.0;
    double out_scope = 0.0;
    int in_argmax = 0;
    int out_argmax = 0;
};

/// In-scope: |n w| < Omega excluding the |n| = M-1 edge; out-of-scope: the rest.
/// Copy restricted to |n| <= n_max.
[[nodiscard]] Spectrum truncated(const Spectrum& s, int n_max);

[[nodiscard]] ScopeDeviation scope_deviation(const Spectrum& target, const Spectrum& approx, double scope);

enum class CancellationBranch {
    Minus,  // sum_m exp(+i 2pi (1-n) m / M)
    Plus,   // sum_m exp(-i 2pi (1+n) m / M)
};
[[nodiscard]] Complex cancellation_sum(int pulse_number, int n, CancellationBranch branch = CancellationBranch::Minus);

}  // namespace pwmsim
