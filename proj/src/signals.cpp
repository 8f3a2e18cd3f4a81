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

#include "pwmsim/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

namespace pwmsim {

namespace {

constexpr double kMinHarmonicAmp = 1e-12;
constexpr double kBandFloor = 1e-3;  // relative amplitude defining omega_max of triangle/sawtooth
constexpr int kTableMinSamplesPerPeriod = 20;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double frac(double x) { return x - std::floor(x); }

// Integral of sin(w t + phi) over [a, b] without cancellation for short spans.
double sine_area(double w, double phi, double a, double b) {
    return 2.0 * std::sin(0.5 * w * (a + b) + phi) * std::sin(0.5 * w * (b - a)) / w;
}

// Antiderivative in theta of the unit triangle wave; periodic with zero mean.
double triangle_primitive(double theta) {
    const double s = frac(theta / kTwoPi);
    double h = 0.0;
    if (s < 0.25) {
        h = 2.0 * s * s;
    } else if (s < 0.75) {
        h = 2.0 * s - 2.0 * s * s - 0.25;
    } else {
        h = 2.0 * (1.0 - s) * (1.0 - s);
    }
    return kTwoPi * h;
}

double triangle_unit(double theta) {
    const double s = frac(theta / kTwoPi);
    if (s < 0.25) {
        return 4.0 * s;
    }
    if (s < 0.75) {
        return 2.0 - 4.0 * s;
    }
    return 4.0 * s - 4.0;
}

double sawtooth_unit(double theta) { return 2.0 * frac(theta / kTwoPi + 0.5) - 1.0; }

double sawtooth_primitive(double theta) {
    const double r = frac(theta / kTwoPi + 0.5);
    return kTwoPi * (r * r - r);
}

void require_positive_frequency(double freq_mhz, const char* what) {
    if (!(freq_mhz > 0.0) || !std::isfinite(freq_mhz)) {
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " frequency must be positive");
    }
}

double tones_value(const std::vector<Tone>& tones, double t) {
    double v = 0.0;
    for (const auto& tone : tones) {
        v += tone.amp * std::sin(angular_from_mhz(tone.freq_mhz) * t + tone.phase);
    }
    return v;
}

// sup_t |sum of tones| over one common period, by dense scan plus Brent refinement.
double tones_supremum(const std::vector<Tone>& tones, double period) {
    double shortest = period;
    for (const auto& tone : tones) {
        shortest = std::min(shortest, 1.0 / tone.freq_mhz);
    }
    const auto samples = static_cast<std::size_t>(
        std::clamp(64.0 * period / shortest, 4096.0, 4.0e6));
    const double h = period / static_cast<double>(samples);
    auto neg_abs = [&](double t) { return -std::abs(tones_value(tones, t)); };

    double best = 0.0;
    std::vector<double> grid(samples + 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = std::abs(tones_value(tones, (static_cast<double>(i) - 1.0) * h));
    }
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (grid[i] >= grid[i - 1] && grid[i] >= grid[i + 1]) {
            const double t = (static_cast<double>(i) - 1.0) * h;
            const auto r = boost::math::tools::brent_find_minima(neg_abs, t - h, t + h, 52);
            best = std::max({best, -r.second, grid[i]});
        }
    }
    return best;
}

std::pair<long, long> best_rational(double x, long max_den) {
    // Continued-fraction convergents of x.
    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double a = std::floor(r);
        const long ai = static_cast<long>(a);
        const long p2 = ai * p1 + p0;
        const long q2 = ai * q1 + q0;
        if (q2 > max_den) {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double rem = r - a;
        if (rem < 1e-15) {
            break;
        }
        r = 1.0 / rem;
    }
    return {p1, q1};
}

}  // namespace

std::string to_string(SignalKind kind) {
    switch (kind) {
        case SignalKind::Sinusoid: return "sinusoid";
        case SignalKind::SumOfSinusoids: return "sum";
        case SignalKind::Triangle: return "triangle";
        case SignalKind::Sawtooth: return "sawtooth";
        case SignalKind::Constant: return "constant";
        case SignalKind::Tabulated: return "tabulated";
    }
    return "unknown";
}

double PeriodicFourierData::resynthesize(double t) const {
    double v = 0.5 * dc;
    for (const auto& h : harmonics) {
        v += h.amp * std::sin(h.n * fundamental * t + h.phase);
    }
    return v;
}

std::optional<double> common_fundamental_mhz(const std::vector<double>& freqs_mhz, long max_denominator) {
    if (freqs_mhz.empty()) {
        return std::nullopt;
    }
    const double f_min = *std::min_element(freqs_mhz.begin(), freqs_mhz.end());
    std::vector<std::pair<long, long>> ratios;
    long common_den = 1;
    for (double f : freqs_mhz) {
        const double x = f / f_min;
        const auto [p, q] = best_rational(x, max_denominator);
        if (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) > 1e-9 * x) {
            return std::nullopt;
        }
        ratios.emplace_back(p, q);
        common_den = std::lcm(common_den, q);
        if (common_den > max_denominator) {
            return std::nullopt;
        }
    }
    long g = 0;
    for (const auto& [p, q] : ratios) {
        g = std::gcd(g, p * (common_den / q));
    }
    return f_min * static_cast<double>(g) / static_cast<double>(common_den);
}

ControlSignal ControlSignal::sinusoid(double amp, double freq_mhz, double phase) {
    require_positive_frequency(freq_mhz, "sinusoid");
    ControlSignal s;
    s.kind_ = SignalKind::Sinusoid;
    s.data_ = Tones{{Tone{amp, freq_mhz, phase}}};
    const double w = angular_from_mhz(freq_mhz);
    s.band_ = {w, w};
    s.max_abs_ = std::abs(amp);
    s.fundamental_ = w;
    return s;
}

ControlSignal ControlSignal::sum_of_sinusoids(std::vector<Tone> tones, bool normalize) {
    if (tones.empty()) {
        throw Error(ErrorKind::InvalidArgument, "sum of sinusoids needs at least one tone");
    }
    std::vector<double> freqs;
    for (const auto& tone : tones) {
        require_positive_frequency(tone.freq_mhz, "tone");
        freqs.push_back(tone.freq_mhz);
    }
    ControlSignal s;
    s.kind_ = SignalKind::SumOfSinusoids;
    const auto [lo, hi] = std::minmax_element(freqs.begin(), freqs.end());
    s.band_ = {angular_from_mhz(*lo), angular_from_mhz(*hi)};

    const auto fundamental = common_fundamental_mhz(freqs);
    double sup = 0.0;
    if (fundamental) {
        s.fundamental_ = angular_from_mhz(*fundamental);
        sup = tones_supremum(tones, 1.0 / *fundamental);
    } else {
        // Incommensurate tones come arbitrarily close to all peaks aligning.
        for (const auto& tone : tones) {
            sup += std::abs(tone.amp);
        }
    }
    if (normalize && sup > 0.0) {
        for (auto& tone : tones) {
            tone.amp /= sup;
        }
        sup = 1.0;
    }
    s.max_abs_ = sup;
    s.data_ = Tones{std::move(tones)};
    return s;
}

ControlSignal ControlSignal::triangle(double amp, double freq_mhz, double phase) {
    require_positive_frequency(freq_mhz, "triangle");
    ControlSignal s;
    s.kind_ = SignalKind::Triangle;
    s.data_ = Wave{amp, freq_mhz, phase};
    const double w = angular_from_mhz(freq_mhz);
    // Odd harmonics fall as 1/n^2.
    int n_top = 1;
    for (int n = 3; 1.0 / (static_cast<double>(n) * n) >= kBandFloor; n += 2) {
        n_top = n;
    }
    s.band_ = {w, n_top * w};
    s.max_abs_ = std::abs(amp);
    s.fundamental_ = w;
    return s;
}

ControlSignal ControlSignal::sawtooth(double amp, double freq_mhz, double phase) {
    require_positive_frequency(freq_mhz, "sawtooth");
    ControlSignal s;
    s.kind_ = SignalKind::Sawtooth;
    s.data_ = Wave{amp, freq_mhz, phase};
    const double w = angular_from_mhz(freq_mhz);
    // Harmonics fall as 1/n.
    const int n_top = static_cast<int>(std::floor(1.0 / kBandFloor + 1e-9));
    s.band_ = {w, n_top * w};
    s.max_abs_ = std::abs(amp);
    s.fundamental_ = w;
    return s;
}

ControlSignal ControlSignal::constant(double value, double freq_mhz) {
    require_positive_frequency(freq_mhz, "constant-signal grid");
    ControlSignal s;
    s.kind_ = SignalKind::Constant;
    s.data_ = Constant{value, freq_mhz};
    const double w = angular_from_mhz(freq_mhz);
    s.band_ = {w, w};
    s.max_abs_ = std::abs(value);
    s.fundamental_ = w;
    return s;
}

ControlSignal ControlSignal::tabulated(double t0, double dt, std::vector<double> values, FrequencyBand band,
                                       std::optional<double> period_us) {
    if (values.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "tabulated signal needs at least two samples");
    }
    if (!(dt > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tabulated signal step must be positive");
    }
    if (!(band.omega_min > 0.0) || band.omega_min > band.omega_max) {
        throw Error(ErrorKind::InvalidArgument, "tabulated signal band must satisfy 0 < omega_min <= omega_max");
    }
    const double max_dt = kTwoPi / band.omega_max / kTableMinSamplesPerPeriod;
    if (dt > max_dt * (1.0 + 1e-12)) {
        throw Error(ErrorKind::InvalidArgument,
                    "tabulated signal step " + std::to_string(dt) + " us is coarser than 20 samples per "
                    "2 pi/omega_max (max " + std::to_string(max_dt) + " us)");
    }
    ControlSignal s;
    s.kind_ = SignalKind::Tabulated;
    s.band_ = band;
    double m = 0.0;
    for (double v : values) {
        m = std::max(m, std::abs(v));
    }
    s.max_abs_ = m;
    if (period_us) {
        if (!(*period_us > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "declared period must be positive");
        }
        s.fundamental_ = kTwoPi / *period_us;
    }
    s.data_ = Table{t0, dt, std::move(values)};
    return s;
}

double ControlSignal::evaluate(double t) const {
    return std::visit(
        Overloaded{
            [&](const Tones& d) { return tones_value(d.tones, t); },
            [&](const Wave& d) {
                const double theta = angular_from_mhz(d.freq_mhz) * t + d.phase;
                return d.amp * (kind_ == SignalKind::Triangle ? triangle_unit(theta) : sawtooth_unit(theta));
            },
            [&](const Constant& d) { return d.value; },
            [&](const Table& d) {
                const double span = d.dt * static_cast<double>(d.values.size() - 1);
                const double x = (t - d.t0) / d.dt;
                if (x < -1e-9 || t - d.t0 > span + 1e-9 * d.dt) {
                    throw Error(ErrorKind::OutOfRange, "t = " + std::to_string(t) + " us outside table");
                }
                const auto last = d.values.size() - 2;
                const auto i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), last);
                const double w = std::clamp(x - static_cast<double>(i), 0.0, 1.0);
                return (1.0 - w) * d.values[i] + w * d.values[i + 1];
            },
        },
        data_);
}

double ControlSignal::integrate(double a, double b) const {
    if (b < a) {
        throw Error(ErrorKind::InvalidArgument, "integrate requires a <= b");
    }
    return std::visit(
        Overloaded{
            [&](const Tones& d) {
                double area = 0.0;
                for (const auto& tone : d.tones) {
                    area += tone.amp * sine_area(angular_from_mhz(tone.freq_mhz), tone.phase, a, b);
                }
                return area;
            },
            [&](const Wave& d) {
                const double w = angular_from_mhz(d.freq_mhz);
                const auto primitive = kind_ == SignalKind::Triangle ? triangle_primitive : sawtooth_primitive;
                return d.amp / w * (primitive(w * b + d.phase) - primitive(w * a + d.phase));
            },
            [&](const Constant& d) { return d.value * (b - a); },
            [&](const Table& d) {
                // Composite Simpson with panels aligned to the knots; exact for
                // the piecewise-linear interpolant.
                const double span = d.dt * static_cast<double>(d.values.size() - 1);
                if (a - d.t0 < -1e-9 * d.dt || b - d.t0 > span + 1e-9 * d.dt) {
                    throw Error(ErrorKind::OutOfRange, "integration range outside table");
                }
                if (a == b) {
                    return 0.0;
                }
                const auto cells = d.values.size() - 1;
                const auto first = std::min(static_cast<std::size_t>(std::max(0.0, std::floor((a - d.t0) / d.dt))),
                                            cells - 1);
                double area = 0.0;
                for (std::size_t i = first; i < cells; ++i) {
                    const double lo = std::max(a, d.t0 + d.dt * static_cast<double>(i));
                    const double hi = std::min(b, d.t0 + d.dt * static_cast<double>(i + 1));
                    if (hi > lo) {
                        area += (hi - lo) / 6.0 * (evaluate(lo) + 4.0 * evaluate(0.5 * (lo + hi)) + evaluate(hi));
                    }
                    if (d.t0 + d.dt * static_cast<double>(i + 1) >= b) {
                        break;
                    }
                }
                return area;
            },
        },
        data_);
}

std::vector<double> ControlSignal::breakpoints(double a, double b) const {
    std::vector<double> out;
    auto collect = [&](double period, double offset, std::initializer_list<double> fractions) {
        // Points t with (t + offset)/period having one of the given fractional parts.
        const double k0 = std::floor((a + offset) / period) - 1.0;
        for (double k = k0; (k * period - offset) <= b + period; k += 1.0) {
            for (double f : fractions) {
                const double t = (k + f) * period - offset;
                if (t > a && t < b) {
                    out.push_back(t);
                }
            }
        }
    };
    std::visit(Overloaded{
                   [](const Tones&) {},
                   [](const Constant&) {},
                   [&](const Wave& d) {
                       const double period = 1.0 / d.freq_mhz;
                       const double offset = d.phase / angular_from_mhz(d.freq_mhz);
                       if (kind_ == SignalKind::Triangle) {
                           collect(period, offset, {0.25, 0.75});
                       } else {
                           collect(period, offset, {0.5});
                       }
                   },
                   [&](const Table& d) {
                       for (std::size_t i = 0; i < d.values.size(); ++i) {
                           const double t = d.t0 + d.dt * static_cast<double>(i);
                           if (t > a && t < b) {
                               out.push_back(t);
                           }
                       }
                   },
               },
               data_);
    std::sort(out.begin(), out.end());
    return out;
}

ControlSignal ControlSignal::scaled(double factor) const {
    ControlSignal s = *this;
    std::visit(Overloaded{
                   [&](Tones& d) {
                       for (auto& tone : d.tones) {
                           tone.amp *= factor;
                       }
                   },
                   [&](Wave& d) { d.amp *= factor; },
                   [&](Constant& d) { d.value *= factor; },
                   [&](Table& d) {
                       for (auto& v : d.values) {
                           v *= factor;
                       }
                   },
               },
               s.data_);
    s.max_abs_ = max_abs_ * std::abs(factor);
    return s;
}

const std::vector<Tone>& ControlSignal::tones() const {
    if (const auto* d = std::get_if<Tones>(&data_)) {
        return d->tones;
    }
    throw Error(ErrorKind::InvalidArgument, "signal has no tone list");
}

double ControlSignal::table_start() const {
    if (const auto* d = std::get_if<Table>(&data_)) {
        return d->t0;
    }
    throw Error(ErrorKind::InvalidArgument, "signal is not tabulated");
}

double ControlSignal::table_step() const {
    if (const auto* d = std::get_if<Table>(&data_)) {
        return d->dt;
    }
    throw Error(ErrorKind::InvalidArgument, "signal is not tabulated");
}

const std::vector<double>& ControlSignal::table_values() const {
    if (const auto* d = std::get_if<Table>(&data_)) {
        return d->values;
    }
    throw Error(ErrorKind::InvalidArgument, "signal is not tabulated");
}

std::string ControlSignal::describe() const {
    std::ostringstream os;
    os << to_string(kind_);
    std::visit(Overloaded{
                   [&](const Tones& d) {
                       for (const auto& tone : d.tones) {
                           os << " [amp=" << tone.amp << " f=" << tone.freq_mhz << "MHz phase=" << tone.phase
                              << "]";
                       }
                   },
                   [&](const Wave& d) { os << " amp=" << d.amp << " f=" << d.freq_mhz << "MHz"; },
                   [&](const Constant& d) { os << " value=" << d.value; },
                   [&](const Table& d) { os << " n=" << d.values.size() << " dt=" << d.dt << "us"; },
               },
               data_);
    return os.str();
}

PeriodicFourierData periodic_fourier(const ControlSignal& u, int n_max) {
    if (!u.fundamental()) {
        throw Error(ErrorKind::NotPeriodic, "signal has no declared fundamental: " + u.describe());
    }
    if (n_max < 0) {
        throw Error(ErrorKind::InvalidArgument, "n_max must be >= 0");
    }
    const double w = *u.fundamental();
    const double period = kTwoPi / w;
    double t0 = 0.0;
    if (u.kind() == SignalKind::Tabulated) {
        t0 = u.table_start();
    }

    // Panels: split at non-smooth points, then subdivide so each panel spans
    // at most a quarter wavelength of the highest harmonic.
    std::vector<double> edges{t0};
    for (double b : u.breakpoints(t0, t0 + period)) {
        edges.push_back(b);
    }
    edges.push_back(t0 + period);
    const double max_panel = period / (4.0 * std::max(1, n_max));
    std::vector<double> panels;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double len = edges[i + 1] - edges[i];
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_panel)));
        for (int p = 0; p < pieces; ++p) {
            panels.push_back(edges[i] + len * p / pieces);
        }
    }
    panels.push_back(t0 + period);

    using Rule = boost::math::quadrature::gauss<double, 20>;
    auto integral = [&](auto&& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < panels.size(); ++i) {
            acc += Rule::integrate(f, panels[i], panels[i + 1]);
        }
        return acc;
    };

    PeriodicFourierData data;
    data.fundamental = w;
    data.dc = w / M_PI * integral([&](double t) { return u.evaluate(t); });
    for (int n = 1; n <= n_max; ++n) {
        const double c = integral([&](double t) { return u.evaluate(t) * std::cos(n * w * t); });
        const double s = integral([&](double t) { return u.evaluate(t) * std::sin(n * w * t); });
        const double amp = w / M_PI * std::hypot(c, s);
        if (amp >= kMinHarmonicAmp) {
            data.harmonics.push_back({n, amp, std::atan2(c, s)});
        }
    }
    return data;
}

}  // namespace pwmsim
