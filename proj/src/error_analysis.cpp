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

#include "pwmsim/error_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pwmsim {

namespace {

constexpr int kPanelOrder = 20;
using Gauss = boost::math::quadrature::gauss<double, kPanelOrder>;

// Full node/weight set of the order-20 rule on [-1, 1].
const std::vector<std::pair<double, double>>& reference_rule() {
    static const std::vector<std::pair<double, double>> rule = [] {
        std::vector<std::pair<double, double>> r;
        const auto& x = Gauss::abscissa();
        const auto& w = Gauss::weights();
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.emplace_back(-x[i], w[i]);
            if (x[i] != 0.0) {
                r.emplace_back(x[i], w[i]);
            }
        }
        std::sort(r.begin(), r.end());
        return r;
    }();
    return rule;
}

template <class F>
double composite_gauss(F&& f, double a, double b, double max_panel) {
    if (!(b > a)) {
        return 0.0;
    }
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_panel)));
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + static_cast<double>(p) * h;
        sum += Gauss::integrate(f, lo, lo + h);
    }
    return sum;
}

// sum_{l=1}^{L} (-1)^l cos(l x) by the Chebyshev recurrence.
double alternating_cosine_sum(double x, int l_max) {
    const double c1 = std::cos(x);
    double prev = 1.0;
    double cur = c1;
    double sum = 0.0;
    double sign = -1.0;
    for (int l = 1; l <= l_max; ++l) {
        sum += sign * cur;
        const double next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
        sign = -sign;
    }
    return sum;
}

double harmonic_envelope(const Harmonic& h, double w, double t) {
    return std::numbers::sqrt2 * h.amp * std::cos(h.n * w * t + h.phase + 0.25 * std::numbers::pi);
}

void require_same_times(const std::vector<double>& have, const QuadratureGrid& grid, double t, const char* what) {
    if (have.size() != grid.nodes.size() + 1) {
        throw Error(ErrorKind::GridMismatch, std::string(what) + " trajectory is not sampled on the quadrature grid");
    }
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        if (std::abs(have[i] - grid.nodes[i]) > 1e-12 * std::max(1.0, t)) {
            throw Error(ErrorKind::GridMismatch, std::string(what) + " trajectory node " + std::to_string(i) +
                                                     " differs from the quadrature grid");
        }
    }
    if (std::abs(have.back() - t) > 1e-12 * std::max(1.0, t)) {
        throw Error(ErrorKind::GridMismatch, std::string(what) + " trajectory does not end at t");
    }
}

}  // namespace

std::string to_string(ErrorForm form) {
    switch (form) {
        case ErrorForm::Actual:
            return "actual";
        case ErrorForm::PrioriDirect:
            return "priori_direct";
        case ErrorForm::PrioriSeries:
            return "priori_series";
    }
    return "unknown";
}

double infidelity(const State& psi_ref, const State& psi_m) {
    if (psi_ref.size() != psi_m.size()) {
        throw Error(ErrorKind::DimensionMismatch, "states differ in dimension");
    }
    for (const State* s : {&psi_ref, &psi_m}) {
        if (std::abs(s->norm() - 1.0) > 1e-10) {
            throw Error(ErrorKind::NotNormalized, "state norm deviates from 1 by " + std::to_string(s->norm() - 1.0));
        }
    }
    return 0.5 * std::abs(Complex(1.0, 0.0) - psi_ref.dot(psi_m));
}

double infidelity(const State& psi_ref, const Operator& u_m, const State& psi0) {
    if (std::abs(psi0.norm() - 1.0) > 1e-10) {
        throw Error(ErrorKind::NotNormalized, "initial state is not normalized");
    }
    return infidelity(psi_ref, State(u_m * psi0));
}

ErrorCurve actual_error_curve(const SimulationResult& reference, const SimulationResult& approx, const State& psi0) {
    if (reference.times.size() != approx.times.size()) {
        throw Error(ErrorKind::GridMismatch, "reference and approximation use different checkpoints");
    }
    ErrorCurve c;
    c.form = ErrorForm::Actual;
    c.method = approx.method;
    c.times = approx.times;
    for (std::size_t i = 0; i < approx.times.size(); ++i) {
        if (std::abs(reference.times[i] - approx.times[i]) > 1e-12 * std::max(1.0, approx.times[i])) {
            throw Error(ErrorKind::GridMismatch, "checkpoint " + std::to_string(i) + " differs");
        }
        c.values.push_back(infidelity(reference.state(i, psi0), approx.propagators[i], psi0));
    }
    return c;
}

std::vector<double> priori_error_direct_curve(const SwitchingSequence& seq, const PropagatorCache& cache,
                                              const ControlledHamiltonian& ham, const State& psi0,
                                              const std::vector<double>& times, double tol) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || times[i] > seq.total * (1.0 + 1e-12) + 1e-12 || (i > 0 && times[i] < times[i - 1])) {
            throw Error(ErrorKind::OutOfRange, "priori error times must be sorted inside the horizon");
        }
    }
    if (psi0.size() != cache.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "initial state dimension differs from the Hamiltonian");
    }
    const std::size_t k_count = ham.hk.size();
    // Control operators in each cached eigenbasis.
    std::vector<std::vector<Operator>> rotated(cache.size());
    for (std::size_t e = 0; e < cache.size(); ++e) {
        const auto& d = cache.system(e).vectors;
        for (const auto& h : ham.hk) {
            rotated[e].push_back(d.adjoint() * h * d);
        }
    }
    const auto& xi = cache.xi();

    std::vector<double> out;
    out.reserve(times.size());
    std::size_t next = 0;
    while (next < times.size() && times[next] <= 0.0) {
        out.push_back(0.0);
        ++next;
    }
    double acc = 0.0;
    State psi = psi0;
    for (const auto& seg : seq.segments) {
        if (next == times.size()) {
            break;
        }
        if (seg.duration <= 0.0) {
            continue;
        }
        const std::size_t e = cache.index_of(seg.signs);
        const auto& es = cache.system(e);
        const Eigen::VectorXcd phi = es.vectors.adjoint() * psi;
        const double a = seg.start;
        const double b = seg.start + seg.duration;
        auto f = [&](double tp) {
            const Eigen::VectorXcd v = es.phases(tp - a).cwiseProduct(phi);
            double s = 0.0;
            for (std::size_t k = 0; k < k_count; ++k) {
                const double gap = seg.signs[k] * xi[k] - ham.controls[k].evaluate(tp);
                s += gap * v.dot(rotated[e][k] * v).real();
            }
            return s;
        };
        auto integrate = [&](double lo, double hi) {
            std::vector<double> cuts{lo};
            for (double c : ham.breakpoints(lo, hi)) {
                cuts.push_back(c);
            }
            cuts.push_back(hi);
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                if (cuts[i + 1] > cuts[i]) {
                    s += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, cuts[i], cuts[i + 1], 12,
                                                                                       tol);
                }
            }
            return s;
        };
        double pos = a;
        while (next < times.size() && times[next] <= b) {
            acc += integrate(pos, times[next]);
            pos = times[next];
            out.push_back(0.5 * std::abs(acc));
            ++next;
        }
        acc += integrate(pos, b);
        psi = es.vectors * es.phases(seg.duration).cwiseProduct(phi);
    }
    while (out.size() < times.size()) {
        out.push_back(0.5 * std::abs(acc));
    }
    return out;
}

double priori_error_direct(const SwitchingSequence& seq, const PropagatorCache& cache,
                           const ControlledHamiltonian& ham, const State& psi0, double t, double tol) {
    return priori_error_direct_curve(seq, cache, ham, psi0, {t}, tol).front();
}

ExpectationFn expectation_along(const std::function<State(double)>& trajectory, const std::vector<Operator>& hk) {
    return [trajectory, hk](double t, std::size_t k) {
        const State psi = trajectory(t);
        return psi.dot(hk.at(k) * psi).real();
    };
}

double priori_error_series(const std::vector<PeriodicFourierData>& fourier, const ExpectationFn& expectation,
                           double t, int pulse_number, int l_max) {
    if (l_max < 0 || pulse_number < 1) {
        throw Error(ErrorKind::InvalidArgument, "need l_max >= 0 and M >= 1");
    }
    if (l_max == 0 || t <= 0.0) {
        return 0.0;
    }
    double fastest = 0.0;
    for (const auto& fd : fourier) {
        for (const auto& h : fd.harmonics) {
            fastest = std::max(fastest, h.n * fd.fundamental * (l_max * pulse_number + 1.0));
        }
    }
    if (fastest == 0.0) {
        return 0.0;
    }
    const double panel = 0.5 * std::numbers::pi / fastest;
    auto f = [&](double tp) {
        double s = 0.0;
        for (std::size_t k = 0; k < fourier.size(); ++k) {
            if (fourier[k].harmonics.empty()) {
                continue;
            }
            const double ex = expectation(tp, k);
            for (const auto& h : fourier[k].harmonics) {
                const double arg = h.n * fourier[k].fundamental * tp + h.phase;
                s += ex * harmonic_envelope(h, fourier[k].fundamental, tp) *
                     alternating_cosine_sum(pulse_number * arg, l_max);
            }
        }
        return s;
    };
    return std::abs(composite_gauss(f, 0.0, t, panel));
}

double priori_error_series_limit(const std::vector<PeriodicFourierData>& fourier, const ExpectationFn& expectation,
                                 double t, int pulse_number) {
    if (pulse_number < 1) {
        throw Error(ErrorKind::InvalidArgument, "M must be >= 1");
    }
    if (t <= 0.0) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < fourier.size(); ++k) {
        const double w = fourier[k].fundamental;
        for (const auto& h : fourier[k].harmonics) {
            auto g = [&](double tp) { return expectation(tp, k) * harmonic_envelope(h, w, tp); };
            const double hw = h.n * w;
            total += -0.5 * composite_gauss(g, 0.0, t, 0.25 * kTwoPi / (hw * pulse_number));
            // Comb teeth where M (h w t + phi) = (2j + 1) pi.
            const double spacing = kTwoPi / (pulse_number * hw);
            const double first = (std::numbers::pi / pulse_number - h.phase) / hw;
            const double j0 = std::ceil(-first / spacing - 1e-12);
            for (double j = j0;; j += 1.0) {
                const double tj = first + j * spacing;
                if (tj > t * (1.0 + 1e-12)) {
                    break;
                }
                double weight = std::numbers::pi / (pulse_number * hw);
                if (tj < 1e-12 * t || tj > t * (1.0 - 1e-12)) {
                    weight *= 0.5;
                }
                total += weight * g(tj);
            }
        }
    }
    return std::abs(total);
}

QuadratureGrid segment_aligned_grid(const std::vector<double>& edges, double t, std::size_t target_points) {
    if (!(t > 0.0)) {
        return {};
    }
    std::vector<double> cuts{0.0};
    for (double e : edges) {
        if (e > cuts.back() && e < t) {
            cuts.push_back(e);
        }
    }
    cuts.push_back(t);
    const double panels_total = std::max<double>(static_cast<double>(cuts.size() - 1),
                                                 std::ceil(static_cast<double>(target_points) / kPanelOrder));
    const auto& rule = reference_rule();
    QuadratureGrid g;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        const auto panels = static_cast<std::size_t>(std::max(1.0, std::round(panels_total * (b - a) / t)));
        const double h = (b - a) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double lo = a + static_cast<double>(p) * h;
            for (const auto& [x, w] : rule) {
                g.nodes.push_back(lo + 0.5 * h * (x + 1.0));
                g.weights.push_back(0.5 * h * w);
            }
        }
    }
    return g;
}

ErrorOperator error_operator(const QuadratureGrid& grid, const SimulationResult& reference, const SimulationResult& pwm,
                             const ControlledHamiltonian& ham, const SwitchingSequence& seq,
                             const std::vector<double>& xi, double t) {
    require_same_times(reference.times, grid, t, "reference");
    require_same_times(pwm.times, grid, t, "PWM");
    const Operator& u_t = reference.propagators.back();
    ErrorOperator out;
    out.definition = u_t - pwm.propagators.back();
    Operator acc = Operator::Zero(ham.dim(), ham.dim());
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
        const double tp = grid.nodes[j];
        const Operator diff = ham.at(tp) - ham.switched(seq.signs_at(tp), xi);
        acc += grid.weights[j] * (reference.propagators[j].adjoint() * diff * pwm.propagators[j]);
    }
    out.integral = Complex(0.0, -1.0) * (u_t * acc);
    return out;
}

}  // namespace pwmsim
