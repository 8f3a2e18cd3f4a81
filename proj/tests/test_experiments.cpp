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

#include <atomic>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "pwmsim/experiments.hpp"

using namespace pwmsim;
using Catch::Approx;

namespace {

ModelSpec paper_model() {
    ModelSpec m;
    m.controls = {ControlSignal::sinusoid(1.0, 0.05)};
    return m;
}

}  // namespace

TEST_CASE("sweep over time: curves descend with M") {
    SweepSpec s;
    s.model = paper_model();
    s.values = {5, 10, 15, 20};
    s.pulse_numbers = {20, 40, 60, 80, 100};
    s.priori = true;
    const auto rec = run_sweep(s);
    REQUIRE(rec.size() == 5);
    for (std::size_t i = 1; i < rec.size(); ++i) {
        CHECK(rec[i].pulse_number > rec[i - 1].pulse_number);
        CHECK(rec[i].actual.values.back() < rec[i - 1].actual.values.back());
        REQUIRE(rec[i].priori.has_value());
    }
    CHECK(rec[0].actual.values[1] == Approx(7.37e-3).epsilon(0.01));
}

TEST_CASE("sweep over xi: infeasible amplitudes run with clamping") {
    SweepSpec s;
    s.model = paper_model();
    s.axis = SweepAxis::Xi;
    s.values = {0.5, 1.0, 2.0};
    const auto rec = run_sweep(s);
    REQUIRE(rec.size() == 3);
    CHECK_FALSE(rec[0].eap_feasible);
    CHECK(rec[0].clamped_widths > 0);
    CHECK(rec[1].eap_feasible);
    CHECK(rec[2].eap_feasible);
    CHECK(rec[0].actual.values[0] > rec[1].actual.values[0]);
}

TEST_CASE("sweep over kappa and qubits") {
    SweepSpec s;
    s.model = paper_model();
    s.axis = SweepAxis::Kappa1;
    s.values = {1, 2, 5, 10};
    const auto rec = run_sweep(s);
    REQUIRE(rec.size() == 4);
    CHECK(rec[1].actual.values[0] > rec[0].actual.values[0]);
    for (const auto& r : rec) CHECK(std::isfinite(r.actual.values[0]));

    s.axis = SweepAxis::Qubits;
    s.values = {1, 2, 3};
    const auto q = run_sweep(s);
    REQUIRE(q.size() == 3);
    for (const auto& r : q) CHECK(r.actual.values[0] < 1.0);
}

TEST_CASE("sweep rejects the noise axis and bad input") {
    SweepSpec s;
    s.model = paper_model();
    s.axis = SweepAxis::Delta;
    s.values = {1e-3};
    CHECK_THROWS_AS(run_sweep(s), Error);
    s.axis = SweepAxis::Time;
    s.values = {3, 2};
    CHECK_THROWS_AS(run_sweep(s), Error);
    CHECK_THROWS_AS(parse_axis("omega"), Error);
    CHECK(parse_method("pwc") == Method::Pwc);
}

TEST_CASE("bench guards and a quick equal-M point") {
    BenchSpec b;
    b.model = paper_model();
    b.pulse_numbers = {100};
    b.repetitions = 1;
    CHECK_THROWS_AS(run_bench(b), Error);
    b.quick = true;
    b.repetitions = 3;
    const auto rec = run_bench(b);
    bool seen = false;
    for (const auto& r : rec) {
        if (r.g) {
            seen = true;
            CHECK(*r.g > 0.0);
            CHECK(*r.g < 1.0);
        }
        CHECK(r.seconds > 0.0);
    }
    CHECK(seen);
}

TEST_CASE("bench equal-epsilon reaches the target closely") {
    BenchSpec b;
    b.model = paper_model();
    b.mode = BenchMode::EqualEpsilon;
    b.target_epsilons = {1e-3};
    b.quick = true;
    b.repetitions = 3;
    const auto rec = run_bench(b);
    REQUIRE_FALSE(rec.empty());
    for (const auto& r : rec) {
        REQUIRE(r.epsilon.has_value());
        CHECK(*r.epsilon <= 1e-3);
        CHECK(*r.epsilon >= 0.9e-3);
    }
}

TEST_CASE("noise: zero amplitude reproduces the deterministic error") {
    NoiseSpec n;
    n.model = paper_model();
    n.pulse_numbers = {20};
    n.deltas = {0.0};
    n.trials = 5;
    n.quick = true;
    n.seed = 11;
    const auto rec = run_noise_study(n);
    REQUIRE(rec.size() == 2);
    for (const auto& r : rec) CHECK(r.variance == 0.0);

    SweepSpec s;
    s.model = paper_model();
    s.values = {100.0};
    s.methods = {Method::Pwm, Method::Pwc};
    const auto det = run_sweep(s);
    CHECK(rec[0].mean == Approx(det[0].actual.values[0]).epsilon(1e-9));
    CHECK(rec[1].mean == Approx(det[1].actual.values[0]).epsilon(1e-9));
}

TEST_CASE("noise: results independent of thread count and reproducible") {
    NoiseSpec n;
    n.model = paper_model();
    n.pulse_numbers = {20, 40};
    n.trials = 12;
    n.quick = true;
    n.seed = 2024;
    n.threads = 1;
    const auto a = run_noise_study(n);
    n.threads = 3;
    const auto b = run_noise_study(n);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean == b[i].mean);
        CHECK(a[i].variance == b[i].variance);
        CHECK(a[i].variance > 0.0);
    }
    n.trials = 50;
    n.quick = false;
    CHECK_THROWS_AS(run_noise_study(n), Error);
    n.quick = true;
    n.methods = {Method::Spo};
    CHECK_THROWS_AS(run_noise_study(n), Error);
}

TEST_CASE("derive_seed and parallel_for") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t a = 0; a < 10; ++a)
        for (std::uint64_t b = 0; b < 10; ++b) seeds.insert(derive_seed(7, {a, b}));
    CHECK(seeds.size() == 100);
    CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
    CHECK(derive_seed(7, {1, 2}) != derive_seed(8, {1, 2}));

    std::vector<int> out(100, 0);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 31) throw Error(ErrorKind::InvalidArgument, std::to_string(i));
        });
        FAIL("expected a rethrow");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(": 7") != std::string::npos);
    }
}

TEST_CASE("spectrum study: closed-form and FFT paths") {
    const auto st = run_spectrum_study(ControlSignal::sinusoid(1.0, 0.05), 20, std::nullopt, std::nullopt, true);
    CHECK_FALSE(st.fft_path);
    CHECK(st.train.n_max == 100);
    CHECK(st.train_deviation.out_scope > 0.1);
    REQUIRE(st.gaussian_deviation.has_value());

    const auto dc = run_spectrum_study(ControlSignal::constant(0.5, 0.05), 20, std::nullopt, 40, false);
    CHECK(std::abs(dc.signal.at(0) - Complex(0.5, 0.0)) < 1e-12);
    CHECK(std::abs(dc.train.at(0) - Complex(0.5, 0.0)) < 1e-12);
    for (int n = 1; n <= 40; ++n) {
        CHECK(std::abs(dc.signal.at(n)) < 1e-12);
        CHECK(std::abs(dc.train.at(n)) < 1e-12);
    }

    const auto inc = run_spectrum_study(
        ControlSignal::sum_of_sinusoids({{1.0, 0.02, 0.0}, {1.0, 0.02 * std::sqrt(2.0), 0.0}}), 20, std::nullopt, 60,
        false);
    CHECK(inc.fft_path);
}
