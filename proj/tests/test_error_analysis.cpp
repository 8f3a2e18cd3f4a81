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

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pwmsim/error_analysis.hpp"

using namespace pwmsim;
using Catch::Approx;

namespace {

struct Setup {
    ControlledHamiltonian ham;
    PwmParams params;
    SwitchingSequence seq;
    PropagatorCache cache;
    State psi0;
};

Setup make(int m, double t_total, ControlSignal u = ControlSignal::sinusoid(1.0, 0.05), double kappa = 1.0) {
    Setup s{make_qubit_model(1, kappa, 0.0, {u}), {}, {}, {}, State::Zero(2)};
    s.psi0(0) = 1.0;
    s.params = make_pwm_params(s.ham.controls, m, t_total);
    s.seq = build_switching_sequence({eap_widths(s.ham.controls[0], s.params)}, s.params);
    s.cache = PropagatorCache::build(s.ham, s.params.xi, s.seq);
    return s;
}

double actual(const Setup& s, double t) {
    const auto ref = reference_propagate(s.ham, {t});
    return infidelity(ref.result.state(0, s.psi0), pwm_propagate(s.seq, s.cache, {t}).final(), s.psi0);
}

}  // namespace

TEST_CASE("infidelity: bounds and normalisation") {
    State psi0 = State::Zero(2);
    psi0(0) = 1.0;
    const Operator u = expm_hermitian_scaled(pauli_x(), 0.3);
    CHECK(infidelity(u * psi0, u, psi0) == Approx(0.0).margin(1e-15));
    CHECK(infidelity(-psi0, psi0) == Approx(1.0));
    CHECK_THROWS_AS(infidelity(2.0 * psi0, psi0), Error);
    const auto s = make(20, 20.0);
    CHECK(actual(s, 0.0) == 0.0);
}

TEST_CASE("priori direct: vanishes without modulation") {
    const auto s = make(20, 20.0, ControlSignal::constant(1.0, 0.05));
    CHECK(priori_error_direct(s.seq, s.cache, s.ham, s.psi0, 20.0) < 1e-14);
}

TEST_CASE("priori direct: paper point and Riemann oracle") {
    const auto s = make(20, 20.0);
    const double ep = priori_error_direct(s.seq, s.cache, s.ham, s.psi0, 10.0);
    CHECK(ep > 7.4e-3 / 2);
    CHECK(ep < 7.4e-3 * 2);

    const PwmTrajectory traj(s.seq, s.cache, s.psi0);
    const double xi = s.params.xi[0];
    const auto integrand = [&](double t) {
        const State psi = traj.state(t);
        const double hm = xi * s.seq.signs_at(t)[0];
        return (hm - s.ham.controls[0].evaluate(t)) * (psi.adjoint() * s.ham.hk[0] * psi)(0).real();
    };
    const double oracle_value = 0.5 * std::abs(oracle::riemann(integrand, 0.0, 10.0, 4000000));
    CHECK(ep == Approx(oracle_value).epsilon(1e-4));

    const auto curve = priori_error_direct_curve(s.seq, s.cache, s.ham, s.psi0, {2.0, 10.0});
    CHECK(curve[1] == Approx(ep).epsilon(1e-12));
}

TEST_CASE("priori series: empty sum and convergence to the comb limit") {
    const auto s = make(20, 20.0);
    const PwmTrajectory traj(s.seq, s.cache, s.psi0);
    const auto ex = expectation_along([&](double t) { return traj.state(t); }, s.ham.hk);
    const std::vector<PeriodicFourierData> fourier{periodic_fourier(s.ham.controls[0], 8)};
    CHECK(priori_error_series(fourier, ex, 10.0, 20, 0) == 0.0);
    const double limit = priori_error_series_limit(fourier, ex, 10.0, 20);
    const double l25 = priori_error_series(fourier, ex, 10.0, 20, 25);
    const double l200 = priori_error_series(fourier, ex, 10.0, 20, 200);
    CHECK(std::abs(l200 - limit) < std::abs(l25 - limit));
    CHECK(std::abs(l200 - limit) < 0.25 * limit);
}

TEST_CASE("error operator: t=0, no modulation, and the integral identity") {
    const auto s = make(20, 20.0);
    auto run = [](const Setup& st, double t, std::size_t points) {
        const std::vector<double> edges(st.seq.segments.size() + 1, 0.0);
        std::vector<double> e;
        for (const auto& g : st.seq.segments) e.push_back(g.start);
        e.push_back(st.seq.total);
        const auto grid = segment_aligned_grid(e, t, points);
        std::vector<double> at = grid.nodes;
        at.push_back(t);
        const auto ref = reference_propagate(st.ham, at);
        const auto pwm = pwm_propagate(st.seq, st.cache, at);
        return error_operator(grid, ref.result, pwm, st.ham, st.seq, st.params.xi, t);
    };
    const auto e0 = run(s, 0.0, 100);
    CHECK(max_abs(e0.definition) == 0.0);
    CHECK(max_abs(e0.integral) == 0.0);

    const auto flat = make(20, 20.0, ControlSignal::constant(1.0, 0.05));
    const auto ef = run(flat, 10.0, 400);
    CHECK(max_abs(ef.definition) < 1e-12);
    CHECK(max_abs(ef.integral) < 1e-12);

    const auto e = run(s, 10.0, 2000);
    CHECK(e.discrepancy() < 1e-6);
    CHECK(max_abs(e.definition) > 1e-3);
}

TEST_CASE("error operator: trajectories off the grid are rejected") {
    const auto s = make(20, 20.0);
    std::vector<double> e;
    for (const auto& g : s.seq.segments) e.push_back(g.start);
    e.push_back(s.seq.total);
    const auto grid = segment_aligned_grid(e, 5.0, 200);
    const auto ref = reference_propagate(s.ham, {5.0});
    const auto pwm = pwm_propagate(s.seq, s.cache, {5.0});
    try {
        (void)error_operator(grid, ref.result, pwm, s.ham, s.seq, s.params.xi, 5.0);
        FAIL("expected GridMismatch");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::GridMismatch);
    }
}

TEST_CASE("property: priori and actual errors stay on the same order", "[property]") {
    const auto s = make(20, 20.0);
    std::vector<double> times;
    for (int i = 1; i <= 20; ++i) times.push_back(i);
    const auto ref = reference_propagate(s.ham, times);
    const auto pwm = pwm_propagate(s.seq, s.cache, times);
    const auto act = actual_error_curve(ref.result, pwm, s.psi0);
    const auto pri = priori_error_direct_curve(s.seq, s.cache, s.ham, s.psi0, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(act.values[i] <= 1.0);
        if (act.values[i] < 1e-5) continue;
        CHECK(pri[i] / act.values[i] >= 0.1);
        CHECK(pri[i] / act.values[i] <= 10.0);
    }
}

TEST_CASE("property: error grows with weak coupling", "[property]") {
    double last = 0.0;
    for (double kappa : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        const double e = actual(make(20, 20.0, ControlSignal::sinusoid(1.0, 0.05), kappa), 20.0);
        CHECK(e > last);
        last = e;
    }
}
