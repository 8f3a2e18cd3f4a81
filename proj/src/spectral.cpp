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

#include "pwmsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace pwmsim {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_within_period(const std::vector<PulseInterval>& intervals, double period) {
    if (!(period > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "period must be positive");
    }
    for (const auto& iv : intervals) {
        if (iv.start < -1e-12 * period || iv.start + iv.length > period * (1.0 + 1e-12)) {
            throw Error(ErrorKind::InvalidArgument, "train coefficients need intervals inside one period");
        }
    }
}

// Flat-top window coefficients (SRS, HFT-style 5-term).
double flat_top(std::size_t j, std::size_t n) {
    constexpr double a[] = {0.21557895, 0.41663158, 0.277263158, 0.083578947, 0.006947368};
    const double x = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    return a[0] - a[1] * std::cos(x) + a[2] * std::cos(2 * x) - a[3] * std::cos(3 * x) + a[4] * std::cos(4 * x);
}

}  // namespace

Complex Spectrum::at(int n) const {
    if (n < -n_max || n > n_max) {
        return {0.0, 0.0};
    }
    return coefficients[static_cast<std::size_t>(n + n_max)];
}

double Spectrum::power() const {
    double p = 0.0;
    for (const auto& c : coefficients) {
        p += std::norm(c);
    }
    return p;
}

double Spectrum::reality_defect() const {
    double d = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        d = std::max(d, std::abs(at(-n) - std::conj(at(n))));
    }
    return d;
}

double Spectrum::resynthesize(double t) const {
    double v = 0.0;
    for (int n = -n_max; n <= n_max; ++n) {
        v += (at(n) * std::exp(kI * (n * fundamental * t))).real();
    }
    return v;
}

Spectrum make_spectrum(double fundamental, int n_max, double scope) {
    if (n_max < 0) {
        throw Error(ErrorKind::InvalidArgument, "n_max must be >= 0");
    }
    Spectrum s;
    s.fundamental = fundamental;
    s.scope = scope;
    s.n_max = n_max;
    s.coefficients.assign(static_cast<std::size_t>(2 * n_max + 1), Complex{});
    return s;
}

Spectrum rect_train_coefficients(const std::vector<PulseInterval>& intervals, const PwmParams& params, int n_max,
                                 std::size_t control) {
    return rect_train_coefficients(intervals, params.xi.at(control), params.period, n_max, params.scope());
}

Spectrum rect_train_coefficients(const std::vector<PulseInterval>& intervals, double xi, double period, int n_max,
                                 double scope) {
    require_within_period(intervals, period);
    const double w = kTwoPi / period;
    Spectrum out = make_spectrum(w, n_max, scope);
    for (int n = 0; n <= n_max; ++n) {
        Complex c{};
        for (const auto& iv : intervals) {
            if (iv.sign == 0) {
                continue;
            }
            if (n == 0) {
                c += iv.sign * xi * iv.width / period;
            } else {
                const double mag = iv.sign * xi / (n * std::numbers::pi) * std::sin(n * std::numbers::pi * iv.width / period);
                c += mag * std::exp(-kI * (n * w * iv.center()));
            }
        }
        out.set(n, c);
        out.set(-n, std::conj(c));
    }
    return out;
}

double gaussian_damping(int n, double omega, double width) {
    const double x = n * omega * width;
    return std::exp(-x * x / (2.0 * kTwoPi));
}

GaussianSpectra gaussian_train_coefficients(const std::vector<PulseInterval>& intervals, const PwmParams& params,
                                            int n_max, std::size_t control) {
    return gaussian_train_coefficients(intervals, params.xi.at(control), params.period, n_max, params.scope());
}

GaussianSpectra gaussian_train_coefficients(const std::vector<PulseInterval>& intervals, double xi, double period,
                                            int n_max, double scope) {
    require_within_period(intervals, period);
    const double w = kTwoPi / period;
    GaussianSpectra out{make_spectrum(w, n_max, scope), make_spectrum(w, n_max, scope)};
    for (int n = 0; n <= n_max; ++n) {
        Complex exact{};
        Complex approx{};
        for (const auto& iv : intervals) {
            if (iv.sign == 0) {
                continue;
            }
            const Complex base = iv.sign * xi * iv.width / period * std::exp(-kI * (n * w * iv.center()));
            exact += base * gaussian_damping(n, w, iv.width);
            approx += base;
        }
        out.exact.set(n, exact);
        out.exact.set(-n, std::conj(exact));
        out.approx.set(n, approx);
        out.approx.set(-n, std::conj(approx));
    }
    return out;
}

Spectrum signal_spectrum(const ControlSignal& u, int n_max, double scope) {
    const auto data = periodic_fourier(u, n_max);
    Spectrum out = make_spectrum(data.fundamental, n_max, scope);
    out.set(0, 0.5 * data.dc);
    for (const auto& h : data.harmonics) {
        if (h.n < 1 || h.n > n_max) {
            continue;
        }
        // A sin(x + phi) = A e^{i phi}/(2i) e^{ix} + c.c.
        const Complex c = h.amp * std::exp(kI * h.phase) / (2.0 * kI);
        out.set(h.n, c);
        out.set(-h.n, std::conj(c));
    }
    return out;
}

Spectrum fft_spectrum(const std::vector<double>& samples, double dt, int periods, Window window) {
    if (samples.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "fft_spectrum needs at least two samples");
    }
    if (!(dt > 0.0) || periods < 1) {
        throw Error(ErrorKind::InvalidArgument, "dt must be positive and periods >= 1");
    }
    const std::size_t n = samples.size();
    std::vector<double> x(samples);
    double gain = 1.0;
    if (window == Window::FlatTop) {
        gain = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double wj = flat_top(j, n);
            x[j] *= wj;
            gain += wj;
        }
        gain /= static_cast<double>(n);
    }
    Eigen::FFT<double> fft;
    std::vector<Complex> bins;
    fft.fwd(bins, x);

    const double window_len = dt * static_cast<double>(n);
    const int n_max = static_cast<int>((n - 1) / 2) / periods;
    Spectrum out = make_spectrum(kTwoPi * periods / window_len, n_max);
    const double norm = 1.0 / (static_cast<double>(n) * gain);
    for (int k = 0; k <= n_max; ++k) {
        const Complex c = bins[static_cast<std::size_t>(k * periods)] * norm;
        out.set(k, c);
        out.set(-k, std::conj(c));
    }
    out.set(0, Complex(out.at(0).real(), 0.0));
    return out;
}

Spectrum fft_spectrum(const std::vector<double>& times, const std::vector<double>& samples, int periods,
                      Window window) {
    if (times.size() != samples.size()) {
        throw Error(ErrorKind::DimensionMismatch, "times and samples differ in length");
    }
    if (times.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "fft_spectrum needs at least two samples");
    }
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t j = 1; j < times.size(); ++j) {
        if (std::abs(times[j] - times[j - 1] - dt) > 1e-9 * std::max(dt, 1e-300)) {
            throw Error(ErrorKind::NonUniformGrid, "sample spacing deviates at index " + std::to_string(j));
        }
    }
    return fft_spectrum(samples, dt, periods, window);
}

Spectrum truncated(const Spectrum& s, int n_max) {
    Spectrum out = make_spectrum(s.fundamental, std::min(n_max, s.n_max), s.scope);
    for (int n = -out.n_max; n <= out.n_max; ++n) {
        out.set(n, s.at(n));
    }
    return out;
}

ScopeDeviation scope_deviation(const Spectrum& target, const Spectrum& approx, double scope) {
    const double w = target.fundamental;
    if (std::abs(w - approx.fundamental) > 1e-9 * std::max(std::abs(w), std::abs(approx.fundamental))) {
        throw Error(ErrorKind::FundamentalMismatch, "spectra use different fundamentals");
    }
    const int pulse_number = static_cast<int>(std::lround(scope / w));
    const int n_max = std::min(target.n_max, approx.n_max);
    ScopeDeviation out;
    for (int n = -n_max; n <= n_max; ++n) {
        const double d = std::abs(target.at(n) - approx.at(n));
        const int a = std::abs(n);
        const bool inside = a * w < scope * (1.0 - 1e-12) && a != pulse_number - 1;
        if (inside) {
            if (d > out.in_scope) {
                out.in_scope = d;
                out.in_argmax = n;
            }
        } else if (d > out.out_scope) {
            out.out_scope = d;
            out.out_argmax = n;
        }
    }
    return out;
}

Complex cancellation_sum(int pulse_number, int n, CancellationBranch branch) {
    if (pulse_number < 1) {
        throw Error(ErrorKind::InvalidArgument, "M must be >= 1");
    }
    const long m_mod = pulse_number;
    const long step = branch == CancellationBranch::Minus ? 1L - n : -(1L + n);
    const long k = ((step % m_mod) + m_mod) % m_mod;
    if (k == 0) {
        return {static_cast<double>(pulse_number), 0.0};
    }
    Complex sum{};
    for (long m = 1; m <= m_mod; ++m) {
        const long r = (k * m) % m_mod;
        const double angle = kTwoPi * static_cast<double>(r) / static_cast<double>(m_mod);
        sum += Complex(std::cos(angle), std::sin(angle));
    }
    return sum;
}

}  // namespace pwmsim
