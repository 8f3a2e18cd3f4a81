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

// Acceptance runner: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never read from the command line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pwmsim/error_analysis.hpp"
#include "pwmsim/experiments.hpp"
#include "pwmsim/io.hpp"
#include "pwmsim/propagators.hpp"
#include "pwmsim/pwm_schedule.hpp"
#include "pwmsim/spectral.hpp"

using namespace pwmsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// N = 1 test model: H = sz/2 + kappa1 u sx/2, u = sin(2 pi 0.05 t), psi0 = |0>.
struct PaperCase {
    ControlledHamiltonian ham;
    PwmParams params;
    SwitchingSequence seq;
    PropagatorCache cache;
    State psi0;

    PaperCase(int m, double t_total, double amp = 1.0, std::optional<double> xi = std::nullopt)
        : ham(make_qubit_model(1, 1.0, 0.0, {ControlSignal::sinusoid(amp, 0.05)})), psi0(State::Zero(2)) {
        psi0(0) = 1.0;
        params = make_pwm_params(ham.controls, m, t_total,
                                 xi ? std::optional<std::vector<double>>(std::vector<double>{*xi}) : std::nullopt);
        seq = build_switching_sequence({eap_widths(ham.controls[0], params)}, params);
        cache = PropagatorCache::build(ham, params.xi, seq);
    }

    [[nodiscard]] std::vector<double> actual(const std::vector<double>& times) const {
        const auto ref = reference_propagate(ham, times);
        return actual_error_curve(ref.result, pwm_propagate(seq, cache, times), psi0).values;
    }
    [[nodiscard]] std::vector<double> priori(const std::vector<double>& times) const {
        return priori_error_direct_curve(seq, cache, ham, psi0, times);
    }
};

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

Outcome c01() {
    const PaperCase a(20, 10.0);
    const double eps = a.actual({10.0})[0];
    const double epp = a.priori({10.0})[0];
    const PaperCase b(80, 60.0);
    const double epp60 = b.priori({60.0})[0];
    const bool ok1 = within(eps, 4e-3, 1.6e-2);
    const bool ok2 = within(epp, 3.7e-3, 1.5e-2);
    const bool ok3 = within(epp60, 1.6e-4, 1.5e-3);
    return {ok1 && ok2 && ok3, "eps(10,M=20)=" + fmt(eps) + (ok1 ? " ok" : " OUT") + " [4e-3,1.6e-2]; eps_p(10,M=20)=" +
                                   fmt(epp) + (ok2 ? " ok" : " OUT") + " [3.7e-3,1.5e-2]; eps_p(60,M=80)=" +
                                   fmt(epp60) + (ok3 ? " ok" : " OUT") + " [1.6e-4,1.5e-3]"};
}

Outcome c02() {
    std::vector<double> times;
    for (int i = 1; i <= 20; ++i) times.push_back(5.0 * i);
    double lo = 1e300, hi = 0.0;
    int used = 0, skipped = 0;
    for (int m : {20, 40, 60, 80, 100}) {
        const PaperCase c(m, times.back());
        const auto eps = c.actual(times);
        const auto epp = c.priori(times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (eps[i] < 1e-5) {
                ++skipped;
                continue;
            }
            const double r = epp[i] / eps[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            ++used;
        }
    }
    return {used > 0 && lo >= 0.1 && hi <= 10.0, "ratio eps_p/eps in [" + fmt(lo) + ", " + fmt(hi) + "] over " +
                                                     std::to_string(used) + " points (t=5..100, M=20..100; " +
                                                     std::to_string(skipped) + " skipped with eps<1e-5); need [0.1, 10]"};
}

Outcome c03() {
    std::vector<double> eps;
    for (int m : {20, 40, 60, 80, 100}) eps.push_back(PaperCase(m, 20.0).actual({20.0})[0]);
    int violations = 0;
    bool large = false;
    for (std::size_t i = 1; i < eps.size(); ++i) {
        if (eps[i] < eps[i - 1]) continue;
        ++violations;
        if (eps[i] > 1.05 * eps[i - 1]) large = true;
    }
    std::string d = "eps(t=20) for M=20..100:";
    for (double e : eps) d += " " + fmt(e);
    d += "; violations=" + std::to_string(violations) + " (allowed <= 1, each <= 5%)";
    return {violations <= 1 && !large, d};
}

Outcome c04() {
    const auto u = ControlSignal::sinusoid(1.0, 0.05);
    auto deviation_at = [&](int m) {
        const auto st = run_spectrum_study(u, m, std::nullopt, 5 * m, false);
        return st;
    };
    const auto s20 = deviation_at(20);
    const double in_scope = s20.train_deviation.in_scope;
    const double side = std::max(std::abs(s20.train.at(19)), std::abs(s20.train.at(21)));
    std::vector<double> ms, dev1;
    for (int m : {20, 40, 80}) {
        const auto st = deviation_at(m);
        ms.push_back(std::log(m));
        dev1.push_back(std::log(std::abs(st.train.at(1) - st.signal.at(1))));
    }
    // Least-squares slope of log deviation against log M.
    const double mx = (ms[0] + ms[1] + ms[2]) / 3.0, my = (dev1[0] + dev1[1] + dev1[2]) / 3.0;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 3; ++i) {
        sxy += (ms[i] - mx) * (dev1[i] - my);
        sxx += (ms[i] - mx) * (ms[i] - mx);
    }
    const double exponent = -sxy / sxx;
    const bool ok1 = in_scope <= 0.01, ok2 = side > 0.1, ok3 = exponent >= 1.7;
    return {ok1 && ok2 && ok3, "M=20 in-scope max deviation=" + fmt(in_scope) + " at n=" +
                                   std::to_string(s20.train_deviation.in_argmax) + (ok1 ? " ok" : " OUT") +
                                   " (<=0.01); max|c_19|,|c_21|=" + fmt(side) + (ok2 ? " ok" : " OUT") +
                                   " (>0.1); n=1 deviation exponent=" + fmt(exponent) + (ok3 ? " ok" : " OUT") +
                                   " (>=1.7)"};
}

Outcome c05() {
    double worst_zero = 0.0, worst_m = 0.0;
    long cases = 0;
    for (int m = 2; m <= 50; ++m) {
        for (int n = -200; n <= 200; ++n) {
            for (auto [branch, k] : {std::pair{CancellationBranch::Minus, 1 - n}, std::pair{CancellationBranch::Plus, 1 + n}}) {
                const Complex s = cancellation_sum(m, n, branch);
                if (k % m != 0) {
                    worst_zero = std::max(worst_zero, std::abs(s));
                } else {
                    worst_m = std::max(worst_m, std::abs(s - Complex(m, 0.0)));
                }
                ++cases;
            }
        }
    }
    return {worst_zero <= 1e-12 && worst_m <= 1e-12,
            std::to_string(cases) + " sums; max |sum| off-resonance=" + fmt(worst_zero) + ", max |sum-M| on-resonance=" +
                fmt(worst_m) + " (tol 1e-12)"};
}

Outcome c06() {
    // Two qubits, two controls, all terms diagonal in the computational basis.
    const Operator z = pauli_z(), id = identity(2);
    const ControlledHamiltonian ham{0.5 * kron(z, id) + 0.25 * kron(id, z),
                                    {0.7 * kron(id, z), 0.4 * kron(z, z)},
                                    {ControlSignal::sinusoid(1.0, 0.05), ControlSignal::sinusoid(0.8, 0.05, 1.0)}};
    const double t = 340.0;
    const auto params = make_pwm_params(ham.controls, 20, t);
    const auto seq = build_switching_sequence(
        {eap_widths(ham.controls[0], params, 0), eap_widths(ham.controls[1], params, 1)}, params);
    const auto cache = PropagatorCache::build(ham, params.xi, seq);
    const Operator u = pwm_propagate(seq, cache, {t}).final();
    const Operator generator =
        t * ham.h0 + ham.controls[0].integrate(0.0, t) * ham.hk[0] + ham.controls[1].integrate(0.0, t) * ham.hk[1];
    const double dist = max_abs(u - expm_hermitian_scaled(generator, 1.0));
    return {seq.segments.size() >= 1000 && dist <= 1e-12,
            std::to_string(seq.segments.size()) + " segments; max|U_pwm - exp(-i int H)|=" + fmt(dist) + " (tol 1e-12)"};
}

Outcome c07() {
    std::vector<double> times;
    for (int i = 0; i <= 20; ++i) times.push_back(i);
    const PaperCase c(20, 20.0);
    const auto ref = reference_propagate(c.ham, times);
    const auto pwm = actual_error_curve(ref.result, pwm_propagate(c.seq, c.cache, times), c.psi0).values;
    const auto spo = actual_error_curve(ref.result, spo_propagate(c.ham, c.params.tau, times), c.psi0).values;
    int bad = 0;
    for (std::size_t i = 0; i < times.size(); ++i) bad += pwm[i] > spo[i] ? 1 : 0;

    const PaperCase big(20, 1.0, 1.0, 1e3);
    const Operator step_pwm = pwm_slice(big.seq, big.cache, 0.0, big.params.tau);
    const Operator step_spo = spo_propagate(big.ham, big.params.tau, {big.params.tau}).final();
    const double dist = max_abs(step_pwm - step_spo);
    return {bad == 0 && dist <= 1e-6, "checkpoints with eps_pwm > eps_spo: " + std::to_string(bad) +
                                          "/21 (eps(20): pwm " + fmt(pwm.back()) + ", spo " + fmt(spo.back()) +
                                          "); xi=1e3 first-step distance=" + fmt(dist) + " (tol 1e-6)"};
}

Outcome c08() {
    // Half-amplitude control with xi = 1: widths up to half an interval.
    const auto u = ControlSignal::sinusoid(0.5, 0.05);
    const auto params = make_pwm_params({u}, 20, 20.0, std::vector<double>{1.0});
    const auto intervals = eap_widths(u, params);
    const auto rect = rect_train_coefficients(intervals, params, 100);
    const auto gauss = gaussian_train_coefficients(intervals, params, 100);
    const auto dev = scope_deviation(rect, gauss.exact, params.scope());
    double wmax = 0.0;
    for (const auto& p : intervals) wmax = std::max(wmax, p.width);
    // Damping at paper scale: first pulse of the M = 20 schedule of sin, xi = 1.
    const auto sin1 = ControlSignal::sinusoid(1.0, 0.05);
    const double tp = eap_widths(sin1, make_pwm_params({sin1}, 20, 20.0, std::vector<double>{1.0})).front().width;
    const double damping = gaussian_damping(1, params.omega_min(), tp);
    const bool ok1 = dev.in_scope <= 2e-3, ok2 = damping >= 0.999;
    return {ok1 && ok2, "max in-scope |c_gauss - c_rect|=" + fmt(dev.in_scope) + " at n=" +
                            std::to_string(dev.in_argmax) + (ok1 ? " ok" : " OUT") + " (<=2e-3); damping(n=1, t_p=" +
                            fmt(tp) + ")=" + fmt(damping) + (ok2 ? " ok" : " OUT") + " (>=0.999; widest pulse " +
                            fmt(wmax) + " gives " + fmt(gaussian_damping(1, params.omega_min(), wmax)) + ")"};
}

Outcome c09() {
    BenchSpec eq;
    eq.model.controls = {ControlSignal::sinusoid(1.0, 0.05)};
    eq.mode = BenchMode::EqualM;
    eq.pulse_numbers = {50, 100, 150, 200};
    eq.t_us = 20.0;
    std::vector<double> g;
    for (const auto& r : run_bench(eq))
        if (r.method == Method::Pwm && r.g) g.push_back(*r.g);
    std::vector<double> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    const double median =
        sorted.empty() ? NAN : 0.5 * (sorted[(sorted.size() - 1) / 2] + sorted[sorted.size() / 2]);

    BenchSpec qs = eq;
    qs.mode = BenchMode::QubitSweep;
    qs.pulse_numbers = {200};
    qs.qubits = {2, 4, 6, 8};
    std::vector<double> gn;
    for (const auto& r : run_bench(qs))
        if (r.method == Method::Pwm && r.g) gn.push_back(*r.g);
    bool monotone = gn.size() == 4;
    for (std::size_t i = 1; i < gn.size(); ++i) monotone = monotone && gn[i] >= gn[i - 1];
    const bool ok1 = median < 0.6, ok2 = monotone, ok3 = !gn.empty() && gn[0] < 1.0;
    std::string d = "N=1 g(M=50..200):";
    for (double v : g) d += " " + fmt(v);
    d += " median=" + fmt(median) + (ok1 ? " ok" : " OUT") + " (<0.6); M=200 g(N=2,4,6,8):";
    for (double v : gn) d += " " + fmt(v);
    d += std::string(ok2 ? " non-decreasing" : " NOT non-decreasing") + (ok3 ? ", g(2)<1" : ", g(2)>=1");
    return {ok1 && ok2 && ok3, d};
}

Outcome c10() {
    NoiseSpec spec;
    spec.model.controls = {ControlSignal::sinusoid(1.0, 0.05)};
    spec.pulse_numbers = {20, 40, 60, 80, 100};
    spec.deltas = {1e-3};
    spec.t_us = 100.0;
    spec.trials = 200;
    spec.seed = 20240601;
    const auto recs = run_noise_study(spec);
    const int m_max = 100;
    const NoiseStudyRecord *pwm = nullptr, *pwc = nullptr;
    for (const auto& r : recs) {
        if (r.pulse_number != m_max) continue;
        (r.method == Method::Pwm ? pwm : pwc) = &r;
    }
    if (!pwm || !pwc) return {false, "missing records at M=100"};
    const bool ok1 = pwm->mean <= pwc->mean, ok2 = pwm->variance <= pwc->variance;
    return {ok1 && ok2, "M=100, 200 trials, t=100: mean pwm " + fmt(pwm->mean) + " vs pwc " + fmt(pwc->mean) +
                            (ok1 ? " ok" : " OUT") + "; variance pwm " + fmt(pwm->variance) + " vs pwc " +
                            fmt(pwc->variance) + (ok2 ? " ok" : " OUT")};
}

Outcome c11() {
    const PaperCase c(20, 10.0);
    std::vector<double> edges{0.0};
    for (const auto& s : c.seq.segments) edges.push_back(s.start + s.duration);
    const auto grid = segment_aligned_grid(edges, 10.0, 10000);
    std::vector<double> at = grid.nodes;
    at.push_back(10.0);
    const auto ref = reference_propagate(c.ham, at);
    const auto pwm = pwm_propagate(c.seq, c.cache, at);
    const auto e = error_operator(grid, ref.result, pwm, c.ham, c.seq, c.params.xi, 10.0);
    return {e.discrepancy() <= 1e-6, std::to_string(grid.nodes.size()) + " nodes; ||U-U_M||_max=" +
                                         fmt(max_abs(e.definition)) + ", discrepancy=" + fmt(e.discrepancy()) +
                                         " (tol 1e-6)"};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

// Bench CSV columns derived from wall time.
std::string strip_timing_columns(const std::string& text) {
    auto t = parse_csv(text);
    for (const char* name : {"seconds", "spread", "g"}) {
        const auto k = t.column(name);
        for (auto& row : t.rows) row[k].clear();
    }
    return render_csv(t);
}

Outcome c12(const std::string& cli) {
    if (cli.empty()) return {false, "no --cli binary given"};
    const fs::path root = fs::current_path() / "acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::string> commands{"schedule", "spectrum", "simulate", "error", "noise", "bench"};
    int files = 0;
    std::vector<std::string> differing;
    for (const auto& cmd : commands) {
        for (const char* run : {"a", "b"}) {
            const fs::path dir = root / run / cmd;
            const std::string line = "\"" + cli + "\" --quick --seed 12345 --format csv,json,svg --out \"" +
                                     dir.string() + "\" " + cmd + " > /dev/null";
            if (std::system(line.c_str()) != 0) return {false, "command failed: " + line};
        }
        for (const auto& entry : fs::directory_iterator(root / "a" / cmd)) {
            const auto name = entry.path().filename();
            const fs::path other = root / "b" / cmd / name;
            std::string x = slurp(entry.path()), y = slurp(other);
            if (name.extension() == ".json") {
                auto jx = nlohmann::json::parse(x), jy = nlohmann::json::parse(y);
                jx.erase("timing");
                jy.erase("timing");
                x = jx.dump();
                y = jy.dump();
            } else if (cmd == "bench" && name.extension() == ".csv") {
                x = strip_timing_columns(x);
                y = strip_timing_columns(y);
            } else if (cmd == "bench" && name.extension() == ".svg") {
                continue;  // plots wall time
            }
            ++files;
            if (x != y) differing.push_back(cmd + "/" + name.string());
        }
    }
    std::string d = std::to_string(files) + " files compared across 6 subcommands";
    if (!differing.empty()) {
        d += "; differing:";
        for (const auto& f : differing) d += " " + f;
    }
    return {files > 0 && differing.empty(), d};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pwmsim acceptance criteria"};
    int only = 0;
    std::string cli;
    app.add_option("--only", only, "run a single criterion (1-12)")->check(CLI::Range(1, 12));
    app.add_option("--cli", cli, "pwmsim executable for the determinism check");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"paper-value reproduction", c01},
        {"priori/actual ratio", c02},
        {"M-refinement", c03},
        {"spectral scope", c04},
        {"cancellation identities", c05},
        {"commuting exactness", c06},
        {"SPO comparison", c07},
        {"Gaussian equivalence", c08},
        {"efficiency", c09},
        {"noise robustness", c10},
        {"error-operator consistency", c11},
        {"determinism", [&] { return c12(cli); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && static_cast<int>(i) + 1 != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char id[8];
        std::snprintf(id, sizeof id, "C%02zu", i + 1);
        std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": " << o.detail << " ["
                  << fmt(secs) << " s]" << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
