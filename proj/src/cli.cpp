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

#include "pwmsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>

#include <CLI11.hpp>

#include "pwmsim/io.hpp"

#ifndef PWMSIM_VERSION
#define PWMSIM_VERSION "dev"
#endif

namespace pwmsim::cli {

namespace {

using nlohmann::json;

struct Globals {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::vector<std::string> formats;
    bool quick = false;
    bool dry_run = false;
    CLI::Option* seed_opt = nullptr;
};

struct Local {
    std::optional<int> pulse_number;
    std::optional<double> horizon_us;
    std::optional<double> time_us;
    std::optional<int> n_max;
    bool gaussian = false;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<int> pulse_numbers;
    std::vector<std::string> methods;
    std::string axis;
    bool no_priori = false;
    bool series = false;
    std::vector<double> deltas;
    std::optional<int> trials;
    std::string mode;
    std::optional<int> repetitions;
    std::vector<int> qubits;
    std::vector<double> epsilons;
};

// Everything a command produces before it is persisted.
struct Outputs {
    std::vector<std::pair<std::string, CsvTable>> tables;
    std::vector<std::pair<std::string, SvgChart>> charts;
    json summary = json::object();
    json timing = json::object();
    std::vector<std::string> lines;  // console summary
};

struct Context {
    std::string command;
    RunConfig cfg;
    Globals g;
    json config_json;
    std::string hash;

    CsvTable table(const std::string& kind, std::vector<std::string> columns) const {
        CsvTable t;
        t.kind = kind;
        t.config_hash = hash;
        t.columns = std::move(columns);
        return t;
    }
};

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }
std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<std::vector<double>> xi_vector(const RunConfig& cfg) {
    if (!cfg.xi) return std::nullopt;
    return std::vector<double>(cfg.signals.size(), *cfg.xi);
}

// Base period of the configured controls, used as the default horizon.
double base_period(const RunConfig& cfg) {
    const auto controls = cfg.controls();
    return make_pwm_params(controls, 1, 1.0).period;
}

std::vector<double> default_grid(double t_total, int points) {
    std::vector<double> out;
    for (int i = 1; i <= points; ++i) {
        out.push_back(t_total * i / points);
    }
    return out;
}

std::vector<Method> methods_of(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& n : names) {
        out.push_back(parse_method(n));
    }
    return out;
}

std::string sign_string(const SignVector& s) {
    std::string out;
    for (auto v : s) {
        out += v > 0 ? '+' : (v < 0 ? '-' : '0');
    }
    return out;
}

// ---------------------------------------------------------------- schedule

void resolve_schedule(RunConfig& c, const Local& l) {
    if (l.horizon_us) c.time_us = *l.horizon_us;
    if (!c.time_us) c.time_us = base_period(c);
}

Outputs cmd_schedule(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Outputs o;
    CsvTable iv = ctx.table("schedule", {"control", "interval", "start_us", "length_us", "center_us", "width_us",
                                         "sign", "area", "xi"});
    CsvTable seg = ctx.table("segments", {"segment", "start_us", "duration_us", "signs"});
    const double horizon = *c.time_us;
    if (horizon < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "horizon must be >= 0");
    }
    if (horizon == 0.0) {
        o.tables.emplace_back("schedule", iv);
        o.tables.emplace_back("schedule_segments", seg);
        o.summary = {{"intervals", 0}, {"segments", 0}};
        o.lines.push_back("schedule: empty horizon, no intervals");
        return o;
    }
    const auto controls = c.controls();
    const PwmParams params = make_pwm_params(controls, c.pulse_number, horizon, xi_vector(c));
    std::vector<std::vector<PulseInterval>> per_control;
    for (std::size_t k = 0; k < controls.size(); ++k) {
        per_control.push_back(eap_widths(controls[k], params, k));
        for (const auto& p : per_control.back()) {
            iv.add_row({num(k), num(p.index), num(p.start), num(p.length), num(p.center()), num(p.width),
                        num(p.sign), num(p.area), num(params.xi[k])});
        }
    }
    const SwitchingSequence seq = build_switching_sequence(per_control, params);
    for (std::size_t i = 0; i < seq.segments.size(); ++i) {
        const auto& s = seq.segments[i];
        seg.add_row({num(i), num(s.start), num(s.duration), sign_string(s.signs)});
    }

    // Waveform overlay: u(t), the rectangular train and optionally the Gaussian train.
    const std::size_t n = static_cast<std::size_t>(std::max(2000, 200 * c.pulse_number));
    const double dt = horizon / static_cast<double>(n);
    std::vector<std::string> cols{"t_us"};
    std::vector<std::vector<double>> data;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = (static_cast<double>(i) + 0.5) * dt;
    }
    SvgChart chart{"PWM schedule (control 0)", "t (us)", "u", false, false, {}, {}};
    for (std::size_t k = 0; k < controls.size(); ++k) {
        const std::string sfx = std::to_string(k);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = controls[k].evaluate(t[i]);
        }
        cols.push_back("u" + sfx);
        data.push_back(u);
        cols.push_back("train" + sfx);
        data.push_back(sample_pulse_train(per_control[k], params.xi[k], 0.0, dt, n));
        if (c.gaussian) {
            const ControlSignal g = gaussian_realization(per_control[k], params, k, 50, false);
            std::vector<double> gv(n);
            for (std::size_t i = 0; i < n; ++i) {
                gv[i] = g.evaluate(t[i]);
            }
            cols.push_back("gaussian" + sfx);
            data.push_back(gv);
        }
        if (k == 0) {
            chart.series.push_back({"u(t)", t, data[data.size() - (c.gaussian ? 3 : 2)]});
            chart.series.push_back({"PWM train", t, data[data.size() - (c.gaussian ? 2 : 1)]});
            if (c.gaussian) chart.series.push_back({"Gaussian train", t, data.back()});
        }
    }
    CsvTable wave = ctx.table("waveform", cols);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row{num(t[i])};
        for (const auto& d : data) {
            row.push_back(num(d[i]));
        }
        wave.add_row(std::move(row));
    }
    o.tables.emplace_back("schedule", std::move(iv));
    o.tables.emplace_back("schedule_segments", std::move(seg));
    o.tables.emplace_back("schedule_waveform", std::move(wave));
    o.charts.emplace_back("schedule", std::move(chart));
    o.summary = {{"intervals", params.interval_count()},
                 {"segments", seq.segments.size()},
                 {"tau_us", params.tau},
                 {"period_us", params.period},
                 {"xi", params.xi},
                 {"first_width_us", per_control[0].empty() ? 0.0 : per_control[0][0].width}};
    o.lines.push_back("schedule: " + std::to_string(params.interval_count()) + " intervals, tau=" +
                      num(params.tau) + " us, first width " +
                      num(per_control[0].empty() ? 0.0 : per_control[0][0].width) + " us");
    return o;
}

// ---------------------------------------------------------------- spectrum

void resolve_spectrum(RunConfig& c, const Local&) {
    if (!c.n_max) c.n_max = 5 * c.pulse_number;
}

void add_spectrum_rows(CsvTable& t, const std::string& series, const Spectrum& s) {
    for (int n = -s.n_max; n <= s.n_max; ++n) {
        const Complex v = s.at(n);
        t.add_row({series, num(n), num(n * s.fundamental / kTwoPi), num(v.real()), num(v.imag()), num(std::abs(v))});
    }
}

json deviation_json(const ScopeDeviation& d) {
    return {{"in_scope", d.in_scope}, {"in_argmax", d.in_argmax}, {"out_scope", d.out_scope},
            {"out_argmax", d.out_argmax}};
}

Outputs cmd_spectrum(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Outputs o;
    const auto controls = c.controls();
    const SpectrumStudy st = run_spectrum_study(controls[0], c.pulse_number, c.xi, c.n_max, c.gaussian);
    CsvTable t = ctx.table("spectrum", {"series", "n", "freq_MHz", "re", "im", "abs"});
    add_spectrum_rows(t, "signal", st.signal);
    add_spectrum_rows(t, "train", st.train);
    if (st.gaussian) add_spectrum_rows(t, "gaussian", *st.gaussian);
    CsvTable dev = ctx.table("scope_deviation", {"comparison", "in_scope", "in_argmax", "out_scope", "out_argmax"});
    auto dev_row = [&](const std::string& name, const ScopeDeviation& d) {
        dev.add_row({name, num(d.in_scope), num(d.in_argmax), num(d.out_scope), num(d.out_argmax)});
    };
    dev_row("train_vs_signal", st.train_deviation);
    if (st.gaussian_deviation) dev_row("gaussian_vs_train", *st.gaussian_deviation);

    SvgChart chart{"Spectrum magnitude", "frequency (MHz)", "|c_n|", false, true, {}, {}};
    for (const auto* s : {&st.signal, &st.train}) {
        SvgSeries ser{s == &st.signal ? "signal" : "PWM train", {}, {}};
        for (int n = 0; n <= s->n_max; ++n) {
            ser.x.push_back(n * s->fundamental / kTwoPi);
            ser.y.push_back(std::abs(s->at(n)));
        }
        chart.series.push_back(std::move(ser));
    }
    chart.x_markers.push_back(st.train.scope / kTwoPi);

    o.tables.emplace_back("spectrum", std::move(t));
    o.tables.emplace_back("scope_deviation", std::move(dev));
    o.charts.emplace_back("spectrum", std::move(chart));
    o.summary = {{"fundamental_rad_per_us", st.train.fundamental},
                 {"scope_rad_per_us", st.train.scope},
                 {"n_max", st.train.n_max},
                 {"fft_path", st.fft_path},
                 {"train_vs_signal", deviation_json(st.train_deviation)}};
    if (st.gaussian_deviation) o.summary["gaussian_vs_train"] = deviation_json(*st.gaussian_deviation);
    o.lines.push_back("spectrum: M=" + std::to_string(c.pulse_number) +
                      " in_scope=" + num(st.train_deviation.in_scope) + " (n=" +
                      std::to_string(st.train_deviation.in_argmax) + ") out_scope=" +
                      num(st.train_deviation.out_scope));
    if (st.gaussian_deviation) {
        o.lines.push_back("spectrum: gaussian vs rectangular in_scope=" + num(st.gaussian_deviation->in_scope));
    }
    return o;
}

// ---------------------------------------------------------------- simulate

void resolve_simulate(RunConfig& c, const Local& l) {
    if (l.time_us) c.time_us = *l.time_us;
    if (!l.times.empty()) c.times_us = l.times;
    if (!l.methods.empty()) c.methods = l.methods;
    if (!c.time_us) c.time_us = c.times_us ? c.times_us->back() : base_period(c);
    if (!c.times_us) c.times_us = default_grid(*c.time_us, 20);
    if (!c.methods) c.methods = std::vector<std::string>{"pwm", "pwc", "spo"};
}

Outputs cmd_simulate(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Outputs o;
    const ModelSpec model = c.model();
    const ControlledHamiltonian ham = model.hamiltonian();
    const State psi0 = model.initial_state();
    const std::vector<double>& times = *c.times_us;
    const PwmParams params = make_pwm_params(model.controls, c.pulse_number, *c.time_us, xi_vector(c));

    auto t0 = std::chrono::steady_clock::now();
    const ReferenceResult ref = reference_propagate(ham, times, c.reference());
    o.timing["reference_seconds"] = elapsed(t0);
    o.summary["reference"] = {{"refinement", ref.refinement}, {"self_consistency", ref.self_consistency}};

    CsvTable t = ctx.table("simulate", {"method", "pulse_number", "t_us", "epsilon", "p_ground"});
    SvgChart chart{"Simulation error", "t (us)", "epsilon", true, false, {}, {}};
    for (const Method m : methods_of(*c.methods)) {
        SimulationResult r;
        t0 = std::chrono::steady_clock::now();
        if (m == Method::Pwm) {
            std::vector<std::vector<PulseInterval>> per_control;
            for (std::size_t k = 0; k < model.controls.size(); ++k) {
                per_control.push_back(eap_widths(model.controls[k], params, k));
            }
            const SwitchingSequence seq = build_switching_sequence(per_control, params);
            const PropagatorCache cache = PropagatorCache::build(ham, params.xi, seq);
            r = pwm_propagate(seq, cache, times);
            r.diagonalizations = cache.size();
        } else if (m == Method::Pwc) {
            r = pwc_propagate(ham, params.tau, times);
        } else {
            r = spo_propagate(ham, params.tau, times);
        }
        o.timing[to_string(m) + "_seconds"] = elapsed(t0);
        const ErrorCurve e = actual_error_curve(ref.result, r, psi0);
        SvgSeries ser{to_string(m), {}, {}};
        for (std::size_t i = 0; i < times.size(); ++i) {
            const State psi = r.state(i, psi0);
            t.add_row({to_string(m), num(c.pulse_number), num(times[i]), num(e.values[i]), num(std::norm(psi(0)))});
            ser.x.push_back(times[i]);
            ser.y.push_back(e.values[i]);
        }
        chart.series.push_back(std::move(ser));
        o.summary[to_string(m)] = {{"steps", r.steps},
                                   {"diagonalizations", r.diagonalizations},
                                   {"final_epsilon", e.values.back()}};
        o.lines.push_back("simulate: " + to_string(m) + " M=" + std::to_string(c.pulse_number) + " t=" +
                          num(times.back()) + " us epsilon=" + num(e.values.back()));
    }
    o.tables.emplace_back("simulate", std::move(t));
    o.charts.emplace_back("simulate", std::move(chart));
    return o;
}

// ---------------------------------------------------------------- error

void resolve_error(RunConfig& c, const Local& l, bool quick) {
    if (!l.axis.empty()) c.axis = l.axis;
    if (!l.values.empty()) c.values = l.values;
    if (!l.times.empty()) c.times_us = l.times;
    if (!l.pulse_numbers.empty()) c.pulse_numbers = l.pulse_numbers;
    if (!l.methods.empty()) c.methods = l.methods;
    if (l.time_us) c.time_us = *l.time_us;
    if (l.no_priori) c.priori = false;
    if (!c.axis) c.axis = "t";
    const SweepAxis axis = parse_axis(*c.axis);
    if (axis == SweepAxis::Time) {
        if (!c.times_us) {
            c.times_us = quick ? std::vector<double>{5, 10, 15, 20} : default_grid(20.0, 20);
        }
    } else {
        if (!c.values) {
            throw Error(ErrorKind::ConfigInvalid, "sweep axis '" + *c.axis + "' needs study.values");
        }
        if (!c.times_us) c.times_us = std::vector<double>{c.time_us.value_or(20.0)};
    }
    if (!c.pulse_numbers) {
        c.pulse_numbers = quick ? std::vector<int>{20, 40} : std::vector<int>{20, 40, 60, 80, 100};
    }
    if (!c.methods) c.methods = std::vector<std::string>{"pwm"};
    if (!c.priori) c.priori = true;
}

Outputs cmd_error(const Context& ctx, bool series) {
    const RunConfig& c = ctx.cfg;
    Outputs o;
    SweepSpec spec;
    spec.model = c.model();
    spec.axis = parse_axis(*c.axis);
    if (spec.axis == SweepAxis::Time) {
        spec.values = *c.times_us;
    } else {
        spec.values = *c.values;
        spec.times = *c.times_us;
    }
    spec.pulse_numbers = *c.pulse_numbers;
    spec.xi = c.xi;
    spec.methods = methods_of(*c.methods);
    spec.priori = *c.priori;
    spec.reference = c.reference();
    spec.seed = c.seed.value_or(0);
    spec.threads = c.threads;

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<SweepRecord> records = run_sweep(spec);
    o.timing["sweep_seconds"] = elapsed(t0);

    // Optional harmonic-series estimate along the PWM trajectory (time axis only).
    std::map<int, std::vector<double>> series_values;
    if (series && spec.axis == SweepAxis::Time) {
        const auto t1 = std::chrono::steady_clock::now();
        const ControlledHamiltonian ham = spec.model.hamiltonian();
        const State psi0 = spec.model.initial_state();
        std::vector<PeriodicFourierData> fourier;
        for (const auto& u : spec.model.controls) {
            fourier.push_back(periodic_fourier(u, 32));
        }
        for (int m : spec.pulse_numbers) {
            const PwmParams params = make_pwm_params(spec.model.controls, m, spec.values.back(), xi_vector(c));
            std::vector<std::vector<PulseInterval>> per_control;
            for (std::size_t k = 0; k < spec.model.controls.size(); ++k) {
                per_control.push_back(eap_widths(spec.model.controls[k], params, k, WidthPolicy::Clamp));
            }
            const SwitchingSequence seq = build_switching_sequence(per_control, params);
            const PropagatorCache cache = PropagatorCache::build(ham, params.xi, seq);
            const PwmTrajectory traj(seq, cache, psi0);
            const ExpectationFn ex = expectation_along([&](double t) { return traj.state(t); }, ham.hk);
            auto& vals = series_values[m];
            for (double t : spec.values) {
                vals.push_back(priori_error_series(fourier, ex, t, m, c.l_max));
            }
        }
        o.timing["series_seconds"] = elapsed(t1);
    }

    std::vector<std::string> cols{"method", "pulse_number", "axis", "axis_value", "t_us", "actual", "priori_direct"};
    if (!series_values.empty()) cols.push_back("priori_series");
    cols.insert(cols.end(), {"eap_feasible", "clamped_widths"});
    CsvTable t = ctx.table("error", cols);
    SvgChart chart{"PWM error", spec.axis == SweepAxis::Time ? "t (us)" : to_string(spec.axis), "epsilon", true,
                   false, {}, {}};
    std::map<std::string, SvgSeries> lines;
    std::vector<std::string> order;
    auto point = [&](const std::string& name, double x, double y) {
        if (!lines.count(name)) {
            order.push_back(name);
            lines[name].name = name;
        }
        lines[name].x.push_back(x);
        lines[name].y.push_back(y);
    };
    json rows = json::array();
    for (const auto& r : records) {
        for (std::size_t i = 0; i < r.actual.times.size(); ++i) {
            const double tt = r.actual.times[i];
            const double ax = spec.axis == SweepAxis::Time ? tt : r.axis_value;
            std::vector<std::string> row{to_string(r.method), num(r.pulse_number), to_string(r.axis), num(ax),
                                         num(tt), num(r.actual.values[i]),
                                         r.priori ? num(r.priori->values[i]) : std::string()};
            if (!series_values.empty()) {
                row.push_back(r.method == Method::Pwm ? num(series_values[r.pulse_number][i]) : std::string());
            }
            row.push_back(r.eap_feasible ? "1" : "0");
            row.push_back(num(r.clamped_widths));
            t.add_row(std::move(row));
            const std::string base = to_string(r.method) + " M=" + std::to_string(r.pulse_number);
            point(base, ax, r.actual.values[i]);
            if (r.priori) point(base + " priori", ax, r.priori->values[i]);
        }
    }
    for (const auto& n : order) {
        chart.series.push_back(lines[n]);
    }
    o.tables.emplace_back("error", std::move(t));
    o.charts.emplace_back("error", std::move(chart));
    o.summary = {{"records", records.size()}};
    for (const auto& r : records) {
        if (r.actual.values.empty()) continue;
        o.lines.push_back("error: " + to_string(r.method) + " M=" + std::to_string(r.pulse_number) +
                          (spec.axis == SweepAxis::Time || spec.axis == SweepAxis::PulseNumber ? "" : " " + to_string(r.axis) + "=" + num(r.axis_value)) +
                          " t=" + num(r.actual.times.back()) + " actual=" + num(r.actual.values.back()) +
                          (r.priori ? " priori=" + num(r.priori->values.back()) : ""));
    }
    return o;
}

// ---------------------------------------------------------------- noise

void resolve_noise(RunConfig& c, const Local& l, bool quick) {
    if (!l.deltas.empty()) c.deltas_us = l.deltas;
    if (!l.pulse_numbers.empty()) c.pulse_numbers = l.pulse_numbers;
    if (!l.methods.empty()) c.methods = l.methods;
    if (l.trials) c.trials = *l.trials;
    if (l.time_us) c.time_us = *l.time_us;
    if (!c.seed) {
        throw Error(ErrorKind::ConfigInvalid, "noise studies need a seed (--seed or 'seed' in the config)");
    }
    if (!c.deltas_us) c.deltas_us = std::vector<double>{1e-3};
    if (!c.pulse_numbers) {
        c.pulse_numbers = quick ? std::vector<int>{20, 40} : std::vector<int>{20, 40, 60, 80, 100};
    }
    if (!c.methods) c.methods = std::vector<std::string>{"pwm", "pwc"};
    if (!c.trials) c.trials = quick ? 20 : 200;
    if (!c.time_us) c.time_us = 100.0;
}

Outputs cmd_noise(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Outputs o;
    NoiseSpec spec;
    spec.model = c.model();
    spec.pulse_numbers = *c.pulse_numbers;
    spec.deltas = *c.deltas_us;
    spec.t_us = *c.time_us;
    spec.trials = *c.trials;
    spec.methods = methods_of(*c.methods);
    spec.seed = *c.seed;
    spec.threads = c.threads;
    spec.quick = ctx.g.quick;
    spec.reference = c.reference();

    const auto t0 = std::chrono::steady_clock::now();
    const auto records = run_noise_study(spec);
    o.timing["study_seconds"] = elapsed(t0);

    CsvTable t = ctx.table("noise", {"method", "pulse_number", "delta_us", "trials", "mean", "variance", "seed",
                                     "clamped_widths"});
    SvgChart chart{"Switching-noise variance", "M", "variance of epsilon", true, false, {}, {}};
    std::map<std::string, SvgSeries> lines;
    std::vector<std::string> order;
    for (const auto& r : records) {
        t.add_row({to_string(r.method), num(r.pulse_number), num(r.delta), num(r.trials), num(r.mean),
                   num(r.variance), std::to_string(r.seed), num(r.clamped_widths)});
        const std::string name = to_string(r.method) + " delta=" + num(r.delta);
        if (!lines.count(name)) {
            order.push_back(name);
            lines[name].name = name;
        }
        lines[name].x.push_back(r.pulse_number);
        lines[name].y.push_back(r.variance);
        o.lines.push_back("noise: " + to_string(r.method) + " M=" + std::to_string(r.pulse_number) +
                          " delta=" + num(r.delta) + " us mean=" + num(r.mean) + " variance=" + num(r.variance));
    }
    for (const auto& n : order) {
        chart.series.push_back(lines[n]);
    }
    o.tables.emplace_back("noise", std::move(t));
    o.charts.emplace_back("noise", std::move(chart));
    o.summary = {{"records", records.size()}};
    return o;
}

// ---------------------------------------------------------------- bench

void resolve_bench(RunConfig& c, const Local& l, bool quick) {
    if (!l.mode.empty()) c.bench_mode = l.mode;
    if (!l.pulse_numbers.empty()) c.pulse_numbers = l.pulse_numbers;
    if (!l.qubits.empty()) c.qubit_counts = l.qubits;
    if (!l.epsilons.empty()) c.target_epsilons = l.epsilons;
    if (l.repetitions) c.repetitions = *l.repetitions;
    if (l.time_us) c.time_us = *l.time_us;
    if (!c.bench_mode) c.bench_mode = "equal-M";
    const BenchMode mode = parse_bench_mode(*c.bench_mode);
    if (!c.pulse_numbers) {
        if (mode == BenchMode::QubitSweep) {
            c.pulse_numbers = std::vector<int>{200};
        } else {
            c.pulse_numbers = quick ? std::vector<int>{50, 100} : std::vector<int>{50, 100, 150, 200};
        }
    }
    if (!c.qubit_counts) c.qubit_counts = quick ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 6, 8};
    if (!c.target_epsilons) c.target_epsilons = std::vector<double>{1e-3};
    if (!c.repetitions) c.repetitions = quick ? 3 : 5;
    if (!c.time_us) c.time_us = 20.0;
}

Outputs cmd_bench(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Outputs o;
    BenchSpec spec;
    spec.model = c.model();
    spec.mode = parse_bench_mode(*c.bench_mode);
    spec.pulse_numbers = *c.pulse_numbers;
    spec.qubits = *c.qubit_counts;
    spec.target_epsilons = *c.target_epsilons;
    spec.t_us = *c.time_us;
    spec.repetitions = *c.repetitions;
    spec.quick = ctx.g.quick;
    spec.reference = c.reference();

    const auto t0 = std::chrono::steady_clock::now();
    const auto records = run_bench(spec);
    o.timing["bench_seconds"] = elapsed(t0);

    CsvTable t = ctx.table("bench", {"method", "n_qubits", "pulse_number", "t_us", "target_epsilon", "seconds",
                                     "spread", "repetitions", "epsilon", "g"});
    SvgChart chart{"CPU time", spec.mode == BenchMode::QubitSweep ? "N" : "M", "seconds", true, false, {}, {}};
    std::map<std::string, SvgSeries> lines;
    std::vector<std::string> order;
    json rows = json::array();
    for (const auto& r : records) {
        t.add_row({to_string(r.method), num(r.n_qubits), num(r.pulse_number), num(r.t_us), opt_num(r.target_epsilon),
                   num(r.seconds), num(r.spread), num(r.repetitions), opt_num(r.epsilon), opt_num(r.g)});
        const std::string name = to_string(r.method);
        if (!lines.count(name)) {
            order.push_back(name);
            lines[name].name = name;
        }
        lines[name].x.push_back(spec.mode == BenchMode::QubitSweep ? r.n_qubits : r.pulse_number);
        lines[name].y.push_back(r.seconds);
        json row{{"method", to_string(r.method)}, {"n_qubits", r.n_qubits}, {"pulse_number", r.pulse_number},
                 {"seconds", r.seconds}, {"spread", r.spread}};
        if (r.g) row["g"] = *r.g;
        rows.push_back(row);
        if (r.g) {
            o.lines.push_back("bench: N=" + std::to_string(r.n_qubits) + " M=" + std::to_string(r.pulse_number) +
                              " g=" + num(*r.g));
        }
    }
    for (const auto& n : order) {
        chart.series.push_back(lines[n]);
    }
    o.tables.emplace_back("bench", std::move(t));
    o.charts.emplace_back("bench", std::move(chart));
    o.summary = {{"records", records.size()}};
    o.timing["records"] = rows;
    return o;
}

// ---------------------------------------------------------------- driver

std::vector<std::string> planned_files(const Context& ctx, const std::vector<std::string>& tables,
                                       const std::vector<std::string>& charts) {
    std::vector<std::string> out;
    if (ctx.cfg.wants("csv")) {
        for (const auto& t : tables) out.push_back(t + ".csv");
    }
    if (ctx.cfg.wants("svg")) {
        for (const auto& c : charts) out.push_back(c + ".svg");
    }
    if (ctx.cfg.wants("json")) out.push_back(ctx.command + ".json");
    return out;
}

void persist(const Context& ctx, const Outputs& o, std::ostream& out) {
    namespace fs = std::filesystem;
    const fs::path dir(ctx.cfg.out_dir);
    std::vector<std::string> names;
    for (const auto& t : o.tables) names.push_back(t.first);
    std::vector<std::string> chart_names;
    for (const auto& c : o.charts) chart_names.push_back(c.first);
    const auto files = planned_files(ctx, names, chart_names);

    if (ctx.cfg.wants("csv")) {
        for (const auto& [name, table] : o.tables) write_csv((dir / (name + ".csv")).string(), table);
    }
    if (ctx.cfg.wants("svg")) {
        for (const auto& [name, chart] : o.charts) write_text((dir / (name + ".svg")).string(), render_svg(chart));
    }
    if (ctx.cfg.wants("json")) {
        json m{{"schema", kSchemaVersion},
               {"command", ctx.command},
               {"version", PWMSIM_VERSION},
               {"config_hash", ctx.hash},
               {"config", ctx.config_json},
               {"outputs", files},
               {"summary", o.summary},
               {"timing", o.timing}};
        m["seed"] = ctx.cfg.seed ? json(*ctx.cfg.seed) : json(nullptr);
        write_text((dir / (ctx.command + ".json")).string(), m.dump(2) + "\n");
    }
    for (const auto& l : o.lines) out << l << "\n";
    for (const auto& f : files) out << "wrote " << (dir / f).string() << "\n";
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NoConvergence:
        case ErrorKind::NotNormalized:
        case ErrorKind::CacheMiss:
        case ErrorKind::TimingUnstable:
        case ErrorKind::NotHermitian:
            return 3;
        default:
            return 2;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"PWM quantum dynamics simulator", "pwmsim"};
    app.set_version_flag("--version", PWMSIM_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::string formats;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory (overrides output.directory)");
    g.seed_opt = app.add_option("--seed", g.seed, "random seed");
    app.add_option("--format", formats, "comma-separated output formats: csv,json,svg");
    app.add_flag("--quick", g.quick, "reduced study sizes; allows short timing and noise runs");
    app.add_flag("--dry-run", g.dry_run, "validate and print the resolved plan without computing");

    Local l;
    auto add_m = [&](CLI::App* s) { s->add_option("-M,--pulse-number", l.pulse_number, "pulse number M"); };
    auto* sched = app.add_subcommand("schedule", "EAP pulse schedule and waveform overlay");
    add_m(sched);
    sched->add_option("--horizon-us", l.horizon_us, "schedule length (default: one signal period)");
    sched->add_flag("--gaussian", l.gaussian, "also emit the Gaussian pulse train");

    auto* spec = app.add_subcommand("spectrum", "Fourier coefficients of the signal and its PWM train");
    add_m(spec);
    spec->add_option("--n-max", l.n_max, "largest harmonic index (default 5M)");
    spec->add_flag("--gaussian", l.gaussian, "compare against the Gaussian pulse train");

    auto* sim = app.add_subcommand("simulate", "propagate with PWM, PWC and SPO against the reference");
    add_m(sim);
    sim->add_option("--time-us", l.time_us, "final time");
    sim->add_option("--times", l.times, "checkpoints (us)")->delimiter(',');
    sim->add_option("--methods", l.methods, "pwm,pwc,spo")->delimiter(',');

    auto* errc = app.add_subcommand("error", "actual and a-priori error sweeps");
    errc->add_option("--axis", l.axis, "t, M, xi, kappa1 or N");
    errc->add_option("--values", l.values, "axis values for non-time axes")->delimiter(',');
    errc->add_option("--times", l.times, "checkpoints (us)")->delimiter(',');
    errc->add_option("--pulse-numbers", l.pulse_numbers, "pulse numbers")->delimiter(',');
    errc->add_option("--methods", l.methods, "pwm,pwc,spo")->delimiter(',');
    errc->add_option("--time-us", l.time_us, "checkpoint for non-time axes");
    errc->add_flag("--no-priori", l.no_priori, "skip the direct a-priori estimate");
    errc->add_flag("--series", l.series, "add the harmonic-series estimate (time axis, l_max from config)");

    auto* noise = app.add_subcommand("noise", "switching-noise variance study");
    noise->add_option("--delta-us", l.deltas, "noise amplitudes (us)")->delimiter(',');
    noise->add_option("--pulse-numbers", l.pulse_numbers, "pulse numbers")->delimiter(',');
    noise->add_option("--methods", l.methods, "pwm,pwc")->delimiter(',');
    noise->add_option("--trials", l.trials, "trials per point");
    noise->add_option("--time-us", l.time_us, "evolution time");

    auto* bench = app.add_subcommand("bench", "CPU-time comparison of PWM and PWC");
    bench->add_option("--mode", l.mode, "equal-M, equal-eps or qubits");
    bench->add_option("--pulse-numbers", l.pulse_numbers, "pulse numbers")->delimiter(',');
    bench->add_option("--qubits", l.qubits, "qubit counts for the qubit sweep")->delimiter(',');
    bench->add_option("--epsilons", l.epsilons, "target errors for equal-eps")->delimiter(',');
    bench->add_option("--repetitions", l.repetitions, "timed repetitions");
    bench->add_option("--time-us", l.time_us, "evolution time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    try {
        ctx.cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
        RunConfig& c = ctx.cfg;
        if (!g.out.empty()) c.out_dir = g.out;
        if (g.seed_opt->count()) c.seed = g.seed;
        if (!formats.empty()) {
            c.formats.clear();
            std::stringstream ss(formats);
            std::string f;
            while (std::getline(ss, f, ',')) {
                if (f != "csv" && f != "json" && f != "svg") {
                    throw Error(ErrorKind::ConfigInvalid, "unknown format '" + f + "' (csv, json, svg)");
                }
                c.formats.push_back(f);
            }
        }
        if (l.pulse_number) c.pulse_number = *l.pulse_number;
        if (l.n_max) c.n_max = *l.n_max;
        if (l.gaussian) c.gaussian = true;
        if (c.pulse_number < 1) throw Error(ErrorKind::ConfigInvalid, "pulse number must be >= 1");

        if (ctx.command == "schedule") resolve_schedule(c, l);
        if (ctx.command == "spectrum") resolve_spectrum(c, l);
        if (ctx.command == "simulate") resolve_simulate(c, l);
        if (ctx.command == "error") resolve_error(c, l, g.quick);
        if (ctx.command == "noise") resolve_noise(c, l, g.quick);
        if (ctx.command == "bench") resolve_bench(c, l, g.quick);
        ctx.g = g;

        // The output block does not influence results, so it stays out of the hash.
        ctx.config_json = c.to_json();
        ctx.config_json.erase("output");
        ctx.hash = config_hash(json{{"command", ctx.command}, {"config", ctx.config_json}});

        if (g.dry_run) {
            static const std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> files{
                {"schedule", {{"schedule", "schedule_segments", "schedule_waveform"}, {"schedule"}}},
                {"spectrum", {{"spectrum", "scope_deviation"}, {"spectrum"}}},
                {"simulate", {{"simulate"}, {"simulate"}}},
                {"error", {{"error"}, {"error"}}},
                {"noise", {{"noise"}, {"noise"}}},
                {"bench", {{"bench"}, {"bench"}}}};
            const auto& f = files.at(ctx.command);
            json plan{{"command", ctx.command},
                      {"config_hash", ctx.hash},
                      {"config", ctx.config_json},
                      {"output_directory", c.out_dir},
                      {"outputs", planned_files(ctx, f.first, f.second)}};
            // Validate the model and signals without running anything.
            (void)c.model().hamiltonian();
            out << plan.dump(2) << "\n";
            return 0;
        }

        Outputs o;
        if (ctx.command == "schedule") o = cmd_schedule(ctx);
        if (ctx.command == "spectrum") o = cmd_spectrum(ctx);
        if (ctx.command == "simulate") o = cmd_simulate(ctx);
        if (ctx.command == "error") o = cmd_error(ctx, l.series);
        if (ctx.command == "noise") o = cmd_noise(ctx);
        if (ctx.command == "bench") o = cmd_bench(ctx);
        persist(ctx, o, out);
        return 0;
    } catch (const Error& e) {
        err << "pwmsim " << ctx.command << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "pwmsim " << ctx.command << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "pwmsim " << ctx.command << ": unexpected failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace pwmsim::cli
