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

#include "pwmsim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace pwmsim {

namespace {

using Clock = std::chrono::steady_clock;

void require_increasing(const std::vector<double>& v, const std::string& what) {
    if (v.empty()) {
        throw Error(ErrorKind::InvalidArgument, what + " must not be empty");
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, what + " must be strictly increasing");
        }
    }
}

void require_pulse_numbers(const std::vector<int>& m) {
    if (m.empty()) {
        throw Error(ErrorKind::InvalidArgument, "pulse number list must not be empty");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] < 1 || (i > 0 && m[i] <= m[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "pulse numbers must be >= 1 and strictly increasing");
        }
    }
}

struct PwmSetup {
    PwmParams params;
    SwitchingSequence seq;
    PropagatorCache cache;
    bool feasible = true;
    std::size_t clamped = 0;
};

PwmSetup build_pwm(const ControlledHamiltonian& ham, int pulse_number, double horizon, std::optional<double> xi) {
    std::optional<std::vector<double>> xis;
    if (xi) {
        xis = std::vector<double>(ham.controls.size(), *xi);
    }
    PwmSetup s;
    s.params = make_pwm_params(ham.controls, pulse_number, horizon, xis);
    std::vector<std::vector<PulseInterval>> per_control;
    for (std::size_t k = 0; k < ham.controls.size(); ++k) {
        const bool ok = s.params.xi[k] >= ham.controls[k].max_abs() * (1.0 - 1e-12);
        s.feasible = s.feasible && ok;
        per_control.push_back(eap_widths(ham.controls[k], s.params, k, ok ? WidthPolicy::Strict : WidthPolicy::Clamp));
        for (const auto& iv : per_control.back()) {
            s.clamped += iv.clamped ? 1 : 0;
        }
    }
    s.seq = build_switching_sequence(per_control, s.params);
    s.cache = PropagatorCache::build(ham, s.params.xi, s.seq);
    return s;
}

double base_period(const ControlledHamiltonian& ham) {
    return make_pwm_params(ham.controls, 1, 0.0).period;
}

SimulationResult run_method(Method m, const ControlledHamiltonian& ham, int pulse_number, std::optional<double> xi,
                            const std::vector<double>& times, PwmSetup* setup_out) {
    const double horizon = times.back();
    if (m == Method::Pwm) {
        auto s = build_pwm(ham, pulse_number, horizon, xi);
        auto r = pwm_propagate(s.seq, s.cache, times);
        if (setup_out) {
            *setup_out = std::move(s);
        }
        return r;
    }
    const double tau = base_period(ham) / pulse_number;
    return m == Method::Pwc ? pwc_propagate(ham, tau, times) : spo_propagate(ham, tau, times);
}

double uniform_pm1(std::mt19937_64& rng) {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Pwm:
            return "pwm";
        case Method::Pwc:
            return "pwc";
        case Method::Spo:
            return "spo";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "pwm") return Method::Pwm;
    if (name == "pwc") return Method::Pwc;
    if (name == "spo") return Method::Spo;
    throw Error(ErrorKind::ConfigInvalid, "unknown method '" + name + "' (pwm, pwc, spo)");
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Time:
            return "t";
        case SweepAxis::PulseNumber:
            return "M";
        case SweepAxis::Xi:
            return "xi";
        case SweepAxis::Kappa1:
            return "kappa1";
        case SweepAxis::Qubits:
            return "N";
        case SweepAxis::Delta:
            return "delta";
    }
    return "unknown";
}

SweepAxis parse_axis(const std::string& name) {
    for (auto a : {SweepAxis::Time, SweepAxis::PulseNumber, SweepAxis::Xi, SweepAxis::Kappa1, SweepAxis::Qubits,
                   SweepAxis::Delta}) {
        if (to_string(a) == name) {
            return a;
        }
    }
    throw Error(ErrorKind::ConfigInvalid, "unknown sweep axis '" + name + "' (t, M, xi, kappa1, N, delta)");
}

std::string to_string(BenchMode m) {
    switch (m) {
        case BenchMode::EqualM:
            return "equal-M";
        case BenchMode::EqualEpsilon:
            return "equal-eps";
        case BenchMode::QubitSweep:
            return "qubits";
    }
    return "unknown";
}

BenchMode parse_bench_mode(const std::string& name) {
    for (auto m : {BenchMode::EqualM, BenchMode::EqualEpsilon, BenchMode::QubitSweep}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw Error(ErrorKind::ConfigInvalid, "unknown bench mode '" + name + "' (equal-M, equal-eps, qubits)");
}

ControlledHamiltonian ModelSpec::hamiltonian() const {
    auto h = make_qubit_model(n_qubits, kappa1, kappa2, controls);
    h.validate();
    return h;
}

State ModelSpec::initial_state() const {
    const auto dim = static_cast<Eigen::Index>(1) << n_qubits;
    State psi = State::Zero(dim);
    psi(0) = 1.0;
    return psi;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (auto p : parts) {
        h = mix(h ^ p);
    }
    return h;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::exception_ptr> errors(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::mutex mu;
        std::size_t next = 0;
        auto worker = [&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard lock(mu);
                    if (next >= n) {
                        return;
                    }
                    i = next++;
                }
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

void SweepSpec::validate() const {
    if (model.controls.empty()) {
        throw Error(ErrorKind::InvalidArgument, "sweep needs at least one control");
    }
    if (axis == SweepAxis::Delta) {
        throw Error(ErrorKind::InvalidArgument, "noise amplitude sweeps run through the noise study");
    }
    require_increasing(values, "sweep values");
    if (axis != SweepAxis::Time) {
        require_increasing(times, "checkpoint times");
    }
    if (axis != SweepAxis::PulseNumber) {
        require_pulse_numbers(pulse_numbers);
    }
    if (methods.empty()) {
        throw Error(ErrorKind::InvalidArgument, "no methods selected");
    }
    if (axis == SweepAxis::Time && values.front() < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "times must be >= 0");
    }
}

std::vector<SweepRecord> run_sweep(const SweepSpec& spec) {
    spec.validate();
    const bool time_axis = spec.axis == SweepAxis::Time;
    const std::vector<double>& times = time_axis ? spec.values : spec.times;

    struct Point {
        Method method;
        int pulse_number;
        double value;
        ModelSpec model;
        std::optional<double> xi;
        std::size_t model_key;
    };
    std::vector<ModelSpec> models;
    auto model_index = [&](const ModelSpec& m) {
        for (std::size_t i = 0; i < models.size(); ++i) {
            if (models[i].n_qubits == m.n_qubits && models[i].kappa1 == m.kappa1) {
                return i;
            }
        }
        models.push_back(m);
        return models.size() - 1;
    };

    std::vector<Point> points;
    const std::vector<double> axis_values = time_axis ? std::vector<double>{0.0} : spec.values;
    std::vector<int> lines = spec.pulse_numbers;
    if (spec.axis == SweepAxis::PulseNumber) {
        lines = {0};
    }
    for (Method m : spec.methods) {
        for (int line : lines) {
            for (double v : axis_values) {
                Point p{m, line, v, spec.model, spec.xi, 0};
                switch (spec.axis) {
                    case SweepAxis::PulseNumber:
                        p.pulse_number = static_cast<int>(std::lround(v));
                        break;
                    case SweepAxis::Xi:
                        p.xi = v;
                        break;
                    case SweepAxis::Kappa1:
                        p.model.kappa1 = v;
                        break;
                    case SweepAxis::Qubits:
                        p.model.n_qubits = static_cast<int>(std::lround(v));
                        break;
                    default:
                        break;
                }
                p.model_key = model_index(p.model);
                points.push_back(std::move(p));
            }
        }
    }

    std::vector<ReferenceResult> refs(models.size());
    parallel_for(models.size(), spec.threads,
                 [&](std::size_t i) { refs[i] = reference_propagate(models[i].hamiltonian(), times, spec.reference); });

    std::vector<SweepRecord> out(points.size());
    parallel_for(points.size(), spec.threads, [&](std::size_t i) {
        const Point& p = points[i];
        const auto ham = p.model.hamiltonian();
        const State psi0 = p.model.initial_state();
        PwmSetup setup;
        const auto r = run_method(p.method, ham, p.pulse_number, p.xi, times, &setup);
        SweepRecord rec;
        rec.method = p.method;
        rec.pulse_number = p.pulse_number;
        rec.axis = spec.axis;
        rec.axis_value = time_axis ? times.back() : p.value;
        rec.actual = actual_error_curve(refs[p.model_key].result, r, psi0);
        rec.actual.pulse_number = p.pulse_number;
        rec.actual.kappa = p.model.kappa1;
        rec.actual.xi = p.method == Method::Pwm ? setup.params.xi.front() : 0.0;
        if (p.method == Method::Pwm) {
            rec.eap_feasible = setup.feasible;
            rec.clamped_widths = setup.clamped;
            if (spec.priori) {
                ErrorCurve c = rec.actual;
                c.form = ErrorForm::PrioriDirect;
                c.values = priori_error_direct_curve(setup.seq, setup.cache, ham, psi0, times);
                rec.priori = std::move(c);
            }
        }
        out[i] = std::move(rec);
    });
    return out;
}

void BenchSpec::validate() const {
    if (model.controls.empty()) {
        throw Error(ErrorKind::InvalidArgument, "bench needs at least one control");
    }
    if (repetitions < 1) {
        throw Error(ErrorKind::InvalidArgument, "repetitions must be >= 1");
    }
    if (repetitions < 5 && !quick) {
        throw Error(ErrorKind::InvalidArgument, "timing reports need >= 5 repetitions (use --quick to override)");
    }
    if (!(t_us > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "bench time must be positive");
    }
    require_pulse_numbers(pulse_numbers);
    if (mode == BenchMode::QubitSweep && qubits.empty()) {
        throw Error(ErrorKind::InvalidArgument, "qubit sweep needs qubit counts");
    }
    if (mode == BenchMode::EqualEpsilon) {
        for (double e : target_epsilons) {
            if (!(e > 0.0 && e < 1.0)) {
                throw Error(ErrorKind::InvalidArgument, "target epsilon must lie in (0, 1)");
            }
        }
    }
}

std::vector<TimingSample> time_interleaved(const std::vector<std::function<void()>>& fns, int repetitions,
                                           double min_batch_seconds, int max_attempts, bool quick) {
    auto elapsed = [](Clock::time_point s) { return std::chrono::duration<double>(Clock::now() - s).count(); };
    std::vector<int> loops;
    for (const auto& fn : fns) {
        auto s0 = Clock::now();
        fn();  // warm-up, discarded
        const double first = std::max(elapsed(s0), 1e-9);
        loops.push_back(static_cast<int>(std::max(1.0, std::ceil(min_batch_seconds / first))));
    }
    auto spread_ok = [](const std::vector<TimingSample>& ts) {
        return std::all_of(ts.begin(), ts.end(), [](const TimingSample& t) { return t.spread <= 0.5; });
    };
    std::vector<TimingSample> best;
    for (int attempt = 0; attempt < std::max(1, max_attempts); ++attempt) {
        std::vector<TimingSample> cur(fns.size());
        for (int r = 0; r < repetitions; ++r) {
            for (std::size_t f = 0; f < fns.size(); ++f) {
                auto s = Clock::now();
                for (int l = 0; l < loops[f]; ++l) {
                    fns[f]();
                }
                cur[f].samples.push_back(elapsed(s) / loops[f]);
            }
        }
        for (auto& t : cur) {
            t.median = median_of(t.samples);
            t.spread =
                t.samples.size() >= 4 ? (quantile(t.samples, 0.75) - quantile(t.samples, 0.25)) / t.median : 0.0;
        }
        auto worst = [](const std::vector<TimingSample>& ts) {
            double w = 0.0;
            for (const auto& t : ts) {
                w = std::max(w, t.spread);
            }
            return w;
        };
        if (best.empty() || worst(cur) < worst(best)) {
            best = std::move(cur);
        }
        if (spread_ok(best)) {
            return best;
        }
    }
    if (!quick) {
        double w = 0.0;
        for (const auto& t : best) {
            w = std::max(w, t.spread);
        }
        throw Error(ErrorKind::TimingUnstable, "timing spread " + std::to_string(w) + " of the median after " +
                                                   std::to_string(max_attempts) + " attempts");
    }
    return best;
}

TimingSample time_median(const std::function<void()>& fn, int repetitions, double min_batch_seconds,
                         int max_attempts, bool quick) {
    return time_interleaved({fn}, repetitions, min_batch_seconds, max_attempts, quick).front();
}

std::vector<BenchRecord> run_bench(const BenchSpec& spec) {
    spec.validate();
    std::vector<BenchRecord> out;
    const double t = spec.t_us;
    const std::vector<double> at_t{t};

    // PWM is timed end to end: widths, layout, pre-diagonalization, stepping.
    auto pair_records = [&](int n_qubits, int m_pwm, int m_pwc, std::optional<double> target,
                            const ControlledHamiltonian& ham, const State* psi_ref, const State& psi0) {
        const double tau = base_period(ham) / m_pwc;
        const auto timing = time_interleaved(
            {[&] {
                 auto s = build_pwm(ham, m_pwm, t, std::nullopt);
                 if (pwm_propagate(s.seq, s.cache, at_t).propagators.empty()) {
                     throw Error(ErrorKind::NoConvergence, "empty PWM result");
                 }
             },
             [&] {
                 if (pwc_propagate(ham, tau, at_t).propagators.empty()) {
                     throw Error(ErrorKind::NoConvergence, "empty PWC result");
                 }
             }},
            spec.repetitions, spec.min_batch_seconds, spec.max_attempts, spec.quick);
        const auto& tp = timing[0];
        const auto& tc = timing[1];
        BenchRecord a;
        a.method = Method::Pwm;
        a.n_qubits = n_qubits;
        a.pulse_number = m_pwm;
        a.t_us = t;
        a.target_epsilon = target;
        a.seconds = tp.median;
        a.spread = tp.spread;
        a.repetitions = tp.samples.size();
        BenchRecord b = a;
        b.method = Method::Pwc;
        b.pulse_number = m_pwc;
        b.seconds = tc.median;
        b.spread = tc.spread;
        b.repetitions = tc.samples.size();
        if (psi_ref) {
            a.epsilon = infidelity(*psi_ref, run_method(Method::Pwm, ham, m_pwm, std::nullopt, at_t, nullptr).final(),
                                   psi0);
            b.epsilon = infidelity(*psi_ref, run_method(Method::Pwc, ham, m_pwc, std::nullopt, at_t, nullptr).final(),
                                   psi0);
        }
        a.g = tp.median / tc.median;
        b.g = a.g;
        out.push_back(a);
        out.push_back(b);
    };

    if (spec.mode == BenchMode::QubitSweep) {
        for (int m : spec.pulse_numbers) {
            for (int n : spec.qubits) {
                ModelSpec model = spec.model;
                model.n_qubits = n;
                const auto ham = model.hamiltonian();
                pair_records(n, m, m, std::nullopt, ham, nullptr, model.initial_state());
            }
        }
        return out;
    }

    const auto ham = spec.model.hamiltonian();
    const State psi0 = spec.model.initial_state();
    const auto ref = reference_propagate(ham, at_t, spec.reference);
    const State psi_ref = ref.result.state(0, psi0);

    if (spec.mode == BenchMode::EqualM) {
        for (int m : spec.pulse_numbers) {
            pair_records(spec.model.n_qubits, m, m, std::nullopt, ham, &psi_ref, psi0);
        }
        return out;
    }

    // Equal-epsilon: smallest M reaching the target, per method.
    auto smallest_m = [&](Method method, double target) {
        auto eps = [&](int m) {
            return infidelity(psi_ref, run_method(method, ham, m, std::nullopt, at_t, nullptr).final(), psi0);
        };
        int hi = 1;
        while (eps(hi) > target) {
            hi *= 2;
            if (hi > (1 << 14)) {
                throw Error(ErrorKind::NoConvergence, to_string(method) + " cannot reach epsilon " +
                                                          std::to_string(target) + " with M <= 16384");
            }
        }
        int lo = hi / 2;  // eps(lo) > target unless hi == 1
        while (hi - lo > 1) {
            const int mid = lo + (hi - lo) / 2;
            (eps(mid) <= target ? hi : lo) = mid;
        }
        return hi;
    };
    for (double target : spec.target_epsilons) {
        const int m_pwm = smallest_m(Method::Pwm, target);
        const int m_pwc = smallest_m(Method::Pwc, target);
        pair_records(spec.model.n_qubits, m_pwm, m_pwc, target, ham, &psi_ref, psi0);
    }
    return out;
}

void NoiseSpec::validate() const {
    if (model.controls.empty()) {
        throw Error(ErrorKind::InvalidArgument, "noise study needs at least one control");
    }
    require_pulse_numbers(pulse_numbers);
    if (deltas.empty()) {
        throw Error(ErrorKind::InvalidArgument, "noise amplitude list must not be empty");
    }
    for (double d : deltas) {
        if (!(d >= 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "noise amplitudes must be >= 0");
        }
    }
    if (trials < 1 || (trials < 100 && !quick)) {
        throw Error(ErrorKind::InvalidArgument, "noise statistics need >= 100 trials (use --quick to override)");
    }
    if (!(t_us > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "noise study time must be positive");
    }
    for (Method m : methods) {
        if (m == Method::Spo) {
            throw Error(ErrorKind::InvalidArgument, "the switching-noise model is defined for pwm and pwc only");
        }
    }
}

std::vector<NoiseStudyRecord> run_noise_study(const NoiseSpec& spec) {
    spec.validate();
    const auto ham = spec.model.hamiltonian();
    const State psi0 = spec.model.initial_state();
    const auto ref = reference_propagate(ham, {spec.t_us}, spec.reference);
    const State psi_ref = ref.result.state(0, psi0);
    const double period = base_period(ham);

    std::vector<NoiseStudyRecord> out;
    for (Method method : spec.methods) {
        for (int m : spec.pulse_numbers) {
            std::optional<PwmSetup> base;
            std::size_t steps = 0;
            const double tau = period / m;
            if (method == Method::Pwm) {
                base = build_pwm(ham, m, spec.t_us, std::nullopt);
            } else {
                const double q = spec.t_us / tau;
                steps = static_cast<std::size_t>(std::llround(q));
                if (std::abs(q - static_cast<double>(steps)) > 1e-9 * q) {
                    throw Error(ErrorKind::InvalidArgument, "noise study time must be a whole number of PWC steps");
                }
            }
            for (std::size_t di = 0; di < spec.deltas.size(); ++di) {
                const double delta = spec.deltas[di];
                const auto trials = static_cast<std::size_t>(spec.trials);
                std::vector<double> eps(trials);
                std::vector<std::size_t> clamped(trials, 0);
                parallel_for(trials, spec.threads, [&](std::size_t i) {
                    const std::uint64_t seed = derive_seed(
                        spec.seed, {static_cast<std::uint64_t>(method), static_cast<std::uint64_t>(m), di, i});
                    Operator u;
                    if (method == Method::Pwm) {
                        const auto seq = perturb_widths(base->seq, delta, seed);
                        clamped[i] = seq.clamped;
                        const auto cache = PropagatorCache::build(ham, base->params.xi, seq);
                        u = pwm_propagate(seq, cache, {seq.total}).final();
                    } else {
                        std::mt19937_64 rng(seed);
                        std::vector<double> d(steps);
                        for (auto& x : d) {
                            x = delta * uniform_pm1(rng);
                        }
                        u = pwc_propagate_noisy(ham, tau, steps, d);
                    }
                    eps[i] = infidelity(psi_ref, u, psi0);
                });
                NoiseStudyRecord rec;
                rec.method = method;
                rec.pulse_number = m;
                rec.delta = delta;
                rec.trials = spec.trials;
                rec.seed = spec.seed;
                // Shifted two-pass sums: identical samples give exactly zero variance.
                const double shift = eps.front();
                double sum = 0.0;
                for (double e : eps) {
                    sum += e - shift;
                }
                const double dmean = sum / static_cast<double>(trials);
                rec.mean = shift + dmean;
                double ss = 0.0;
                for (double e : eps) {
                    ss += (e - shift - dmean) * (e - shift - dmean);
                }
                rec.variance = trials > 1 ? ss / static_cast<double>(trials - 1) : 0.0;
                for (auto c : clamped) {
                    rec.clamped_widths += c;
                }
                out.push_back(rec);
            }
        }
    }
    return out;
}

SpectrumStudy run_spectrum_study(const ControlSignal& u, int pulse_number, std::optional<double> xi,
                                 std::optional<int> n_max, bool gaussian) {
    SpectrumStudy s;
    std::optional<std::vector<double>> xis;
    if (xi) {
        xis = std::vector<double>{*xi};
    }
    const PwmParams base = make_pwm_params({u}, pulse_number, 0.0, xis);
    const int harmonics = n_max.value_or(5 * pulse_number);
    const WidthPolicy policy =
        base.xi.front() >= u.max_abs() * (1.0 - 1e-12) ? WidthPolicy::Strict : WidthPolicy::Clamp;

    if (u.is_periodic()) {
        // The signal period may span several base periods (e.g. 20 and 50 kHz).
        const double fund = *u.fundamental();
        const auto ratio = std::max<long>(1, std::lround(base.omega_min() / fund));
        s.params = make_pwm_params({u}, pulse_number, base.period * static_cast<double>(ratio), xis);
        s.intervals = eap_widths(u, s.params, 0, policy);
        const double period = s.params.period * static_cast<double>(ratio);
        const int n = harmonics * static_cast<int>(ratio);
        s.signal = signal_spectrum(u, n, s.params.scope());
        s.train = rect_train_coefficients(s.intervals, s.params.xi.front(), period, n, s.params.scope());
        if (gaussian) {
            s.gaussian =
                gaussian_train_coefficients(s.intervals, s.params.xi.front(), period, n, s.params.scope()).exact;
        }
    } else {
        constexpr int kWindowPeriods = 20;
        constexpr std::size_t kSamples = std::size_t{1} << 17;
        s.fft_path = true;
        s.params = make_pwm_params({u}, pulse_number, base.period * kWindowPeriods, xis);
        s.intervals = eap_widths(u, s.params, 0, policy);
        const double window = s.params.t_total;
        const double dt = window / static_cast<double>(kSamples);
        std::vector<double> sig(kSamples);
        for (std::size_t j = 0; j < kSamples; ++j) {
            const double a = static_cast<double>(j) * dt;
            sig[j] = u.integrate(a, a + dt) / dt;
        }
        const int n = harmonics * kWindowPeriods;
        s.signal = truncated(fft_spectrum(sig, dt, 1, Window::FlatTop), n);
        s.train = truncated(
            fft_spectrum(sample_pulse_train(s.intervals, s.params.xi.front(), 0.0, dt, kSamples), dt, 1,
                         Window::FlatTop),
            n);
        s.signal.scope = s.train.scope = s.params.scope();
        if (gaussian) {
            const auto g = gaussian_realization(s.intervals, s.params, 0, 50, false);
            std::vector<double> gs(kSamples);
            const double end = g.table_start() + g.table_step() * static_cast<double>(g.table_values().size() - 1);
            for (std::size_t j = 0; j < kSamples; ++j) {
                const double a = static_cast<double>(j) * dt;
                const double b = std::min(a + dt, end);
                gs[j] = b > a ? g.integrate(a, b) / dt : 0.0;
            }
            s.gaussian = truncated(fft_spectrum(gs, dt, 1, Window::FlatTop), n);
            s.gaussian->scope = s.params.scope();
        }
    }
    s.train_deviation = scope_deviation(s.signal, s.train, s.params.scope());
    if (s.gaussian) {
        s.gaussian_deviation = scope_deviation(s.train, *s.gaussian, s.params.scope());
    }
    return s;
}

}  // namespace pwmsim
