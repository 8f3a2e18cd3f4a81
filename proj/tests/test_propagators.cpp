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

struct Pwm {
    ControlledHamiltonian ham;
    PwmParams params;
    SwitchingSequence seq;
    PropagatorCache cache;
};

Pwm build(ControlledHamiltonian ham, int m, double t_total, std::optional<std::vector<double>> xi = std::nullopt) {
    Pwm p{std::move(ham), {}, {}, {}};
    p.params = make_pwm_params(p.ham.controls, m, t_total, xi);
    std::vector<std::vector<PulseInterval>> per;
    for (std::size_t k = 0; k < p.ham.controls.size(); ++k) per.push_back(eap_widths(p.ham.controls[k], p.params, k));
    p.seq = build_switching_sequence(per, p.params);
    p.cache = PropagatorCache::build(p.ham, p.params.xi, p.seq);
    return p;
}

ControlledHamiltonian paper_model() { return make_qubit_model(1, 1.0, 0.0, {ControlSignal::sinusoid(1.0, 0.05)}); }

State ground(Eigen::Index dim) {
    State s = State::Zero(dim);
    s(0) = 1.0;
    return s;
}

double eps(const Operator& ref, const Operator& u) { return infidelity(ref * ground(ref.rows()), u, ground(u.rows())); }

}  // namespace

TEST_CASE("cache: entries follow the occurring sign vectors") {
    CHECK(build(paper_model(), 20, 20.0).cache.size() == 3);
    const auto positive = build(make_qubit_model(1, 1.0, 0.0, {ControlSignal::constant(0.5, 0.05)}), 20, 20.0,
                                std::vector<double>{1.0});
    CHECK(positive.cache.size() == 2);
    const auto two = build(make_qubit_model(1, 1.0, 1.0,
                                            {ControlSignal::sinusoid(1.0, 0.05),
                                             ControlSignal::sinusoid(1.0, 0.05, oracle::kPi / 3)}),
                           20, 20.0);
    CHECK(two.cache.size() <= 9);
    CHECK(two.cache.size() == two.seq.sign_set().size());
    SignVector missing;
    missing.push_back(1);
    missing.push_back(1);
    missing.push_back(1);
    CHECK_THROWS_AS(two.cache.index_of(missing), Error);
}

TEST_CASE("pwm: zero-duration sequence is the identity") {
    const auto ham = paper_model();
    const auto seq = layout_sequence(1, {});
    const auto cache = PropagatorCache::build(ham, {1.0}, seq);
    const auto r = pwm_propagate(seq, cache, {0.0});
    CHECK(max_abs(r.final() - identity(2)) == 0.0);
}

TEST_CASE("pwm: commuting model equals the analytic exponential") {
    const auto u = ControlSignal::sinusoid(1.0, 0.05);
    const ControlledHamiltonian ham{pauli_z(), {0.3 * pauli_z()}, {u}};
    const auto p = build(ham, 20, 20.0);
    for (double t : {3.7, 10.0, 20.0}) {
        const Operator exact = expm_hermitian_scaled(t * pauli_z() + 0.3 * u.integrate(0.0, t) * pauli_z(), 1.0);
        // EAP reproduces the area only at interval ends.
        if (std::abs(t - std::round(t)) < 1e-12) {
            CHECK(max_abs(pwm_propagate(p.seq, p.cache, {t}).final() - exact) < 1e-12);
        }
    }
    const auto ref = reference_propagate(ham, {20.0});
    CHECK(max_abs(ref.result.final() - expm_hermitian_scaled(20.0 * pauli_z(), 1.0)) < 1e-12);
    const auto spo = spo_propagate(ham, 1.0, {20.0});
    CHECK(max_abs(spo.final() - expm_hermitian_scaled(20.0 * pauli_z(), 1.0)) < 1e-12);
}

TEST_CASE("pwm: paper model error at t=10, M=20") {
    const auto p = build(paper_model(), 20, 20.0);
    const auto ref = reference_propagate(p.ham, {10.0});
    const double e = eps(ref.result.final(), pwm_propagate(p.seq, p.cache, {10.0}).final());
    CHECK(e > 8.2e-3 / 2);
    CHECK(e < 8.2e-3 * 2);
}

TEST_CASE("pwc: constant Hamiltonian is exact; midpoint rule is second order") {
    const ControlledHamiltonian still = make_qubit_model(1, 1.0, 0.0, {ControlSignal::constant(0.0, 0.05)});
    const auto r = pwc_propagate(still, 0.7, {10.0});
    CHECK(max_abs(r.final() - expm_hermitian_scaled(still.h0, 10.0)) < 1e-13);
    CHECK(reference_propagate(still, {10.0}, {1.0, 1, 1 << 14, 1e-10}).refinement == 1);

    const auto ham = paper_model();
    const auto ref = reference_propagate(ham, {10.0});
    const double e1 = eps(ref.result.final(), pwc_propagate(ham, 1.0, {10.0}).final());
    const double e2 = eps(ref.result.final(), pwc_propagate(ham, 0.5, {10.0}).final());
    CHECK(e1 / e2 == Approx(4.0).margin(1.0));

    const auto p = build(ham, 20, 20.0);
    const double ep = eps(ref.result.final(), pwm_propagate(p.seq, p.cache, {10.0}).final());
    CHECK(e1 > ep / 10);
    CHECK(e1 < ep * 10);
}

TEST_CASE("pwc: memoised mode reproduces the plain mode") {
    const auto ham = paper_model();
    const auto a = pwc_propagate(ham, 1.0, {5.0, 20.0});
    const auto b = pwc_propagate(ham, 1.0, {5.0, 20.0}, PwcOptions{true});
    CHECK(max_abs(a.final() - b.final()) < 1e-13);
    CHECK(b.diagonalizations <= a.diagonalizations);
}

TEST_CASE("spo: PWM beats SPO on the paper grid and approaches it for large amplitude") {
    const auto ham = paper_model();
    std::vector<double> checkpoints;
    for (int i = 1; i <= 20; ++i) checkpoints.push_back(i);
    const auto ref = reference_propagate(ham, checkpoints);
    const auto p = build(ham, 20, 20.0);
    const auto pw = pwm_propagate(p.seq, p.cache, checkpoints);
    const auto sp = spo_propagate(ham, 1.0, checkpoints);
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        CHECK(eps(ref.result.propagators[i], pw.propagators[i]) <= eps(ref.result.propagators[i], sp.propagators[i]));
    }
    const auto big = build(ham, 20, 20.0, std::vector<double>{1e3});
    const auto one = pwm_propagate(big.seq, big.cache, {1.0}).final();
    CHECK(max_abs(one - spo_propagate(ham, 1.0, {1.0}).final()) <= 1e-6);
}

TEST_CASE("reference: converged on the paper model and checked by RK4") {
    const auto ham = paper_model();
    const auto ref = reference_propagate(ham, {20.0});
    CHECK(ref.self_consistency <= 1e-10);
    const auto h = [&](double t) -> oracle::Mat { return ham.at(t); };
    const State rk = oracle::rk4(h, ground(2), 0.0, 20.0, 40000);
    CHECK((ref.result.final() * ground(2) - rk).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reference: refinement cap raises NoConvergence") {
    try {
        (void)reference_propagate(paper_model(), {20.0}, {1.0, 1, 4, 1e-15});
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoConvergence);
    }
}

TEST_CASE("property: unitarity after ten thousand segments", "[property]") {
    const auto p = build(paper_model(), 1700, 60.0);
    REQUIRE(p.seq.segments.size() >= 10000);
    CHECK(unitarity_defect(pwm_propagate(p.seq, p.cache, {60.0}).final()) < 1e-9);
}

TEST_CASE("property: composition of PWM slices", "[property]") {
    const auto p = build(paper_model(), 20, 20.0);
    for (double t1 : {0.3, 4.0, 7.77, 12.5}) {
        for (double t2 : {13.0, 17.2, 20.0}) {
            const Operator direct = pwm_propagate(p.seq, p.cache, {t2}).final();
            const Operator split = pwm_slice(p.seq, p.cache, t1, t2) * pwm_slice(p.seq, p.cache, 0.0, t1);
            CHECK(max_abs(direct - split) < 1e-12);
            const PwmTrajectory traj(p.seq, p.cache, ground(2), true);
            CHECK(max_abs(traj.propagator(t2) - direct) < 1e-12);
        }
    }
}

TEST_CASE("property: amplitude covariance and M refinement", "[property]") {
    const auto ham = paper_model();
    const auto ref = reference_propagate(ham, {20.0});
    // Raising xi moves PWM monotonically toward its SPO limit, never past it.
    const double e_spo = eps(ref.result.final(), spo_propagate(ham, 1.0, {20.0}).final());
    double last = 0.0;
    for (double xi : {1.0, 1.5, 2.0, 4.0, 10.0, 100.0}) {
        const auto a = build(ham, 20, 20.0, std::vector<double>{xi});
        const double e = eps(ref.result.final(), pwm_propagate(a.seq, a.cache, {20.0}).final());
        CHECK(e > last);
        CHECK(e < e_spo);
        last = e;
    }

    double last_pwm = 1.0, last_pwc = 1.0;
    for (int m : {20, 40, 60, 80, 100}) {
        const auto p = build(ham, m, 20.0);
        const double e_pwm = eps(ref.result.final(), pwm_propagate(p.seq, p.cache, {20.0}).final());
        const double e_pwc = eps(ref.result.final(), pwc_propagate(ham, p.params.tau, {20.0}).final());
        CHECK(e_pwm < last_pwm);
        CHECK(e_pwc < last_pwc);
        last_pwm = e_pwm;
        last_pwc = e_pwc;
    }
}
