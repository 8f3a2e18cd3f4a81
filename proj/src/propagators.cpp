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

#include "pwmsim/propagators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

namespace pwmsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_checkpoints(const std::vector<double>& checkpoints, double horizon) {
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (!(checkpoints[i] >= 0.0) || checkpoints[i] > horizon * (1.0 + 1e-12) + 1e-12) {
            throw Error(ErrorKind::OutOfRange, "checkpoint " + std::to_string(checkpoints[i]) + " outside [0, " +
                                                   std::to_string(horizon) + "]");
        }
        if (i > 0 && checkpoints[i] < checkpoints[i - 1]) {
            throw Error(ErrorKind::InvalidArgument, "checkpoints must be non-decreasing");
        }
    }
}

// rows of v scaled by exp(-i t lambda_j)
void apply_phases(Operator& v, const EigenSystem& es, double t) {
    for (Eigen::Index j = 0; j < es.dim(); ++j) {
        const double a = -t * es.values(j);
        v.row(j) *= Complex(std::cos(a), std::sin(a));
    }
}

// Step partition of [0, t_end]: the grid k*tau plus extra cut points.
std::vector<double> partition(double tau, double t_end, std::vector<double> cuts) {
    std::vector<double> pts;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / tau - 1e-9));
    pts.reserve(steps + cuts.size() + 2);
    for (std::size_t k = 0; k <= steps; ++k) {
        pts.push_back(std::min(static_cast<double>(k) * tau, t_end));
    }
    for (double c : cuts) {
        if (c > 0.0 && c < t_end) {
            pts.push_back(c);
        }
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    out.reserve(pts.size());
    for (double p : pts) {
        if (out.empty() || p - out.back() > 1e-13 * std::max(1.0, t_end)) {
            out.push_back(p);
        }
    }
    if (out.size() == 1 && t_end > 0.0) {
        out.push_back(t_end);
    }
    out.back() = std::max(out.back(), t_end);
    return out;
}

// Merged run of a single cache entry.
struct Run {
    double start;
    double duration;
    std::size_t entry;
};

std::vector<Run> merged_runs(const SwitchingSequence& seq, const PropagatorCache& cache) {
    std::vector<Run> runs;
    runs.reserve(seq.segments.size());
    for (const auto& s : seq.segments) {
        if (s.duration <= 0.0) {
            continue;
        }
        const std::size_t e = cache.index_of(s.signs);
        if (!runs.empty() && runs.back().entry == e) {
            runs.back().duration += s.duration;
        } else {
            runs.push_back(Run{s.start, s.duration, e});
        }
    }
    return runs;
}

Operator midpoint_step(const Operator& h, double dt) {
    const EigenSystem es = eig_hermitian(h);
    return es.propagator(dt);
}

SimulationResult midpoint_run(const ControlledHamiltonian& ham, double tau, const std::vector<double>& checkpoints,
                              bool split_breakpoints, bool memoize) {
    SimulationResult r;
    r.method = "pwc";
    r.times = checkpoints;
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "step tau must be positive");
    }
    if (checkpoints.empty()) {
        return r;
    }
    const double t_end = checkpoints.back();
    std::vector<double> cuts(checkpoints.begin(), checkpoints.end());
    if (split_breakpoints) {
        const auto bp = ham.breakpoints(0.0, t_end);
        cuts.insert(cuts.end(), bp.begin(), bp.end());
    }
    const auto pts = partition(tau, t_end, std::move(cuts));

    std::unordered_map<std::string, EigenSystem> memo;
    auto key_of = [&](double t) {
        std::string key;
        for (const auto& u : ham.controls) {
            key += std::to_string(std::llround(u.evaluate(t) * 1e12));
            key += ',';
        }
        return key;
    };

    const auto start = Clock::now();
    Operator u = identity(ham.dim());
    std::size_t next = 0;
    while (next < checkpoints.size() && checkpoints[next] <= 0.0) {
        r.propagators.push_back(u);
        ++next;
    }
    for (std::size_t i = 0; i + 1 < pts.size() && next < checkpoints.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        const double mid = 0.5 * (a + b);
        if (memoize) {
            const auto key = key_of(mid);
            auto it = memo.find(key);
            if (it == memo.end()) {
                it = memo.emplace(key, eig_hermitian(ham.at(mid))).first;
                ++r.diagonalizations;
            }
            u = it->second.propagator(b - a) * u;
        } else {
            u = midpoint_step(ham.at(mid), b - a) * u;
            ++r.diagonalizations;
        }
        ++r.steps;
        while (next < checkpoints.size() && checkpoints[next] <= b * (1.0 + 1e-14)) {
            r.propagators.push_back(u);
            ++next;
        }
    }
    while (r.propagators.size() < checkpoints.size()) {
        r.propagators.push_back(u);
    }
    r.wall_seconds = seconds_since(start);
    return r;
}

}  // namespace

Operator ControlledHamiltonian::at(double t) const {
    Operator h = h0;
    for (std::size_t k = 0; k < hk.size(); ++k) {
        h += controls[k].evaluate(t) * hk[k];
    }
    return h;
}

Operator ControlledHamiltonian::switched(const SignVector& signs, const std::vector<double>& xi) const {
    if (signs.size() != hk.size() || xi.size() != hk.size()) {
        throw Error(ErrorKind::DimensionMismatch, "sign vector, xi and control operators differ in length");
    }
    Operator h = h0;
    for (std::size_t k = 0; k < hk.size(); ++k) {
        if (signs[k] != 0) {
            h += (signs[k] * xi[k]) * hk[k];
        }
    }
    return h;
}

void ControlledHamiltonian::validate() const {
    if (h0.rows() == 0 || h0.rows() != h0.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "H0 must be a non-empty square matrix");
    }
    require_hermitian(h0, "H0");
    if (hk.size() != controls.size()) {
        throw Error(ErrorKind::DimensionMismatch, "one control signal per control operator is required");
    }
    for (std::size_t k = 0; k < hk.size(); ++k) {
        if (hk[k].rows() != h0.rows() || hk[k].cols() != h0.cols()) {
            throw Error(ErrorKind::DimensionMismatch, "H" + std::to_string(k + 1) + " has the wrong shape");
        }
        require_hermitian(hk[k], "H" + std::to_string(k + 1));
    }
}

std::vector<double> ControlledHamiltonian::breakpoints(double a, double b) const {
    std::vector<double> out;
    for (const auto& u : controls) {
        const auto bp = u.breakpoints(a, b);
        out.insert(out.end(), bp.begin(), bp.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ControlledHamiltonian make_qubit_model(int n_qubits, double kappa1, double kappa2,
                                       std::vector<ControlSignal> controls) {
    if (controls.empty() || controls.size() > 2) {
        throw Error(ErrorKind::InvalidArgument, "the qubit model takes one or two controls");
    }
    auto q = nqubit_hamiltonian(n_qubits, kappa1, kappa2);
    ControlledHamiltonian ham;
    ham.h0 = std::move(q.h0);
    ham.hk.push_back(std::move(q.h1));
    if (controls.size() == 2) {
        ham.hk.push_back(std::move(q.h2));
    }
    ham.controls = std::move(controls);
    return ham;
}

PropagatorCache PropagatorCache::build(const Operator& h0, const std::vector<Operator>& hk,
                                       const std::vector<double>& xi, const std::set<SignVector>& signs_needed) {
    const auto start = Clock::now();
    require_hermitian(h0, "H0");
    if (xi.size() != hk.size()) {
        throw Error(ErrorKind::DimensionMismatch, "one xi per control operator is required");
    }
    for (std::size_t k = 0; k < hk.size(); ++k) {
        if (hk[k].rows() != h0.rows() || hk[k].cols() != h0.cols()) {
            throw Error(ErrorKind::DimensionMismatch, "control operator shape differs from H0");
        }
        require_hermitian(hk[k], "H" + std::to_string(k + 1));
    }
    PropagatorCache cache;
    cache.xi_ = xi;
    cache.dim_ = h0.rows();
    for (const auto& s : signs_needed) {  // std::set order: deterministic
        if (s.size() != hk.size()) {
            throw Error(ErrorKind::DimensionMismatch, "sign vector length differs from control count");
        }
        Operator h = h0;
        for (std::size_t k = 0; k < hk.size(); ++k) {
            if (s[k] != 0) {
                h += (s[k] * xi[k]) * hk[k];
            }
        }
        cache.keys_.push_back(s);
        cache.systems_.push_back(eig_hermitian(h));
    }
    const std::size_t n = cache.systems_.size();
    cache.transitions_.resize(n * n);
    for (std::size_t to = 0; to < n; ++to) {
        for (std::size_t from = 0; from < n; ++from) {
            cache.transitions_[to * n + from] = cache.systems_[to].vectors.adjoint() * cache.systems_[from].vectors;
        }
    }
    cache.build_seconds_ = seconds_since(start);
    return cache;
}

PropagatorCache PropagatorCache::build(const ControlledHamiltonian& ham, const std::vector<double>& xi,
                                       const SwitchingSequence& seq) {
    return build(ham.h0, ham.hk, xi, seq.sign_set());
}

std::size_t PropagatorCache::index_of(const SignVector& signs) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), signs);
    if (it == keys_.end() || *it != signs) {
        std::string key;
        for (auto s : signs) {
            key += std::to_string(static_cast<int>(s)) + " ";
        }
        throw Error(ErrorKind::CacheMiss, "no eigensystem for sign vector [ " + key + "]");
    }
    return static_cast<std::size_t>(it - keys_.begin());
}

const Operator& PropagatorCache::transition(std::size_t from, std::size_t to) const {
    return transitions_.at(to * systems_.size() + from);
}

SimulationResult pwm_propagate(const SwitchingSequence& seq, const PropagatorCache& cache,
                               const std::vector<double>& checkpoints) {
    require_checkpoints(checkpoints, seq.total);
    SimulationResult r;
    r.method = "pwm";
    r.times = checkpoints;
    const auto start = Clock::now();
    const auto runs = merged_runs(seq, cache);
    const Eigen::Index dim = cache.dim();

    if (runs.empty()) {
        r.propagators.assign(checkpoints.size(), identity(dim));
        r.wall_seconds = seconds_since(start);
        return r;
    }
    // v = D_cur^dag U: U carried in the eigenbasis of the active entry.
    std::size_t cur = runs.front().entry;
    Operator v = cache.system(cur).vectors.adjoint();
    Operator scratch(dim, dim);
    std::size_t next = 0;
    double pos = 0.0;
    auto record = [&]() { r.propagators.push_back(cache.system(cur).vectors * v); };

    for (const auto& run : runs) {
        if (run.entry != cur) {
            scratch.noalias() = cache.transition(cur, run.entry) * v;
            v.swap(scratch);
            cur = run.entry;
        }
        const double end = run.start + run.duration;
        while (next < checkpoints.size() && checkpoints[next] <= end) {
            const double dt = checkpoints[next] - pos;
            if (dt > 0.0) {
                apply_phases(v, cache.system(cur), dt);
                ++r.steps;
                pos = checkpoints[next];
            }
            record();
            ++next;
        }
        if (end > pos) {
            apply_phases(v, cache.system(cur), end - pos);
            ++r.steps;
            pos = end;
        }
        if (next == checkpoints.size()) {
            break;
        }
    }
    while (r.propagators.size() < checkpoints.size()) {
        record();  // checkpoints at the horizon within round-off
    }
    r.wall_seconds = seconds_since(start);
    return r;
}

Operator pwm_slice(const SwitchingSequence& seq, const PropagatorCache& cache, double t0, double t1) {
    if (t1 < t0) {
        throw Error(ErrorKind::InvalidArgument, "slice end precedes start");
    }
    Operator u = identity(cache.dim());
    for (const auto& s : seq.segments) {
        const double a = std::max(t0, s.start);
        const double b = std::min(t1, s.start + s.duration);
        if (b > a) {
            u = cache.at(s.signs).propagator(b - a) * u;
        }
    }
    return u;
}

PwmTrajectory::PwmTrajectory(const SwitchingSequence& seq, const PropagatorCache& cache, const State& psi0,
                             bool keep_propagators)
    : cache_(&cache) {
    if (psi0.size() != cache.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "initial state dimension differs from the Hamiltonian");
    }
    State psi = psi0;
    Operator u = identity(cache.dim());
    for (const auto& s : seq.segments) {
        if (s.duration <= 0.0) {
            continue;
        }
        const std::size_t e = cache.index_of(s.signs);
        edges_.push_back(s.start);
        entry_.push_back(e);
        signs_.push_back(s.signs);
        start_states_.push_back(psi);
        const Operator step = cache.system(e).propagator(s.duration);
        psi = step * psi;
        if (keep_propagators) {
            start_props_.push_back(u);
            u = step * u;
        }
    }
    if (edges_.empty()) {
        edges_.push_back(0.0);
        entry_.push_back(0);
        signs_.emplace_back(seq.controls, 0);
        start_states_.push_back(psi);
        if (keep_propagators) {
            start_props_.push_back(u);
        }
        edges_.push_back(0.0);
    } else {
        edges_.push_back(seq.segments.back().start + seq.segments.back().duration);
    }
}

std::size_t PwmTrajectory::segment_index(double t) const {
    auto it = std::upper_bound(edges_.begin(), edges_.end() - 1, t);
    if (it == edges_.begin()) {
        return 0;
    }
    return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

State PwmTrajectory::state(double t) const {
    const std::size_t i = segment_index(t);
    if (cache_->size() == 0) {
        return start_states_[i];
    }
    const auto& es = cache_->system(entry_[i]);
    const double dt = t - edges_[i];
    return es.vectors * (es.phases(dt).asDiagonal() * (es.vectors.adjoint() * start_states_[i]));
}

Operator PwmTrajectory::propagator(double t) const {
    if (start_props_.empty()) {
        throw Error(ErrorKind::InvalidArgument, "trajectory built without propagators");
    }
    const std::size_t i = segment_index(t);
    if (cache_->size() == 0) {
        return start_props_[i];
    }
    return cache_->system(entry_[i]).propagator(t - edges_[i]) * start_props_[i];
}

SimulationResult pwc_propagate(const ControlledHamiltonian& ham, double tau, const std::vector<double>& checkpoints,
                               PwcOptions options) {
    ham.validate();
    require_checkpoints(checkpoints, checkpoints.empty() ? 0.0 : checkpoints.back());
    auto r = midpoint_run(ham, tau, checkpoints, false, options.memoize);
    r.method = options.memoize ? "pwc_memo" : "pwc";
    return r;
}

Operator pwc_propagate_noisy(const ControlledHamiltonian& ham, double tau, std::size_t steps,
                             const std::vector<double>& deltas) {
    if (deltas.size() != steps) {
        throw Error(ErrorKind::DimensionMismatch, "one duration jitter per step is required");
    }
    Operator u = identity(ham.dim());
    for (std::size_t j = 0; j < steps; ++j) {
        const double mid = (static_cast<double>(j) + 0.5) * tau;
        u = midpoint_step(ham.at(mid), std::max(0.0, tau + deltas[j])) * u;
    }
    return u;
}

SimulationResult spo_propagate(const ControlledHamiltonian& ham, double tau, const std::vector<double>& checkpoints) {
    ham.validate();
    require_checkpoints(checkpoints, checkpoints.empty() ? 0.0 : checkpoints.back());
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "step tau must be positive");
    }
    SimulationResult r;
    r.method = "spo";
    r.times = checkpoints;
    if (checkpoints.empty()) {
        return r;
    }
    const auto start = Clock::now();
    const EigenSystem e0 = eig_hermitian(ham.h0);
    ++r.diagonalizations;
    std::optional<EigenSystem> e1;
    if (ham.hk.size() == 1) {
        e1 = eig_hermitian(ham.hk[0]);
        ++r.diagonalizations;
    }
    const auto pts = partition(tau, checkpoints.back(), checkpoints);
    Operator u = identity(ham.dim());
    std::size_t next = 0;
    while (next < checkpoints.size() && checkpoints[next] <= 0.0) {
        r.propagators.push_back(u);
        ++next;
    }
    for (std::size_t i = 0; i + 1 < pts.size() && next < checkpoints.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        const Operator half = e0.propagator(0.5 * (b - a));
        Operator kick;
        if (e1) {
            kick = e1->propagator(ham.controls[0].integrate(a, b));
        } else {
            Operator g = Operator::Zero(ham.dim(), ham.dim());
            for (std::size_t k = 0; k < ham.hk.size(); ++k) {
                g += ham.controls[k].integrate(a, b) * ham.hk[k];
            }
            kick = eig_hermitian(g).propagator(1.0);
            ++r.diagonalizations;
        }
        u = half * kick * half * u;
        ++r.steps;
        while (next < checkpoints.size() && checkpoints[next] <= b * (1.0 + 1e-14)) {
            r.propagators.push_back(u);
            ++next;
        }
    }
    while (r.propagators.size() < checkpoints.size()) {
        r.propagators.push_back(u);
    }
    r.wall_seconds = seconds_since(start);
    return r;
}

ReferenceResult reference_propagate(const ControlledHamiltonian& ham, const std::vector<double>& checkpoints,
                                    ReferenceOptions options) {
    ham.validate();
    require_checkpoints(checkpoints, checkpoints.empty() ? 0.0 : checkpoints.back());
    if (options.initial_refinement < 1 || !(options.base_tau > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "refinement must be >= 1 and base tau positive");
    }
    const auto start = Clock::now();
    auto level = [&](int refinement) {
        return midpoint_run(ham, options.base_tau / refinement, checkpoints, true, false);
    };
    auto distance = [](const std::vector<Operator>& a, const std::vector<Operator>& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            d = std::max(d, max_abs(a[i] - b[i]));
        }
        return d;
    };
    auto extrapolate = [](const SimulationResult& coarse, const SimulationResult& fine) {
        std::vector<Operator> out(fine.propagators.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = (4.0 * fine.propagators[i] - coarse.propagators[i]) / 3.0;
        }
        return out;
    };

    int r = options.initial_refinement;
    SimulationResult coarse = level(r);
    std::vector<Operator> prev_extrap;
    double last_gap = std::numeric_limits<double>::infinity();
    while (2 * r <= options.max_refinement) {
        SimulationResult fine = level(2 * r);
        const double plain = distance(coarse.propagators, fine.propagators);
        auto extrap = extrapolate(coarse, fine);
        ReferenceResult out;
        out.refinement = r;
        if (plain <= options.tolerance) {
            out.result = std::move(fine);
            out.self_consistency = plain;
        } else if (!prev_extrap.empty() && distance(prev_extrap, extrap) <= options.tolerance) {
            out.self_consistency = distance(prev_extrap, extrap);
            out.result = std::move(fine);
            out.result.propagators = std::move(extrap);
        } else {
            last_gap = prev_extrap.empty() ? plain : std::min(plain, distance(prev_extrap, extrap));
            prev_extrap = std::move(extrap);
            coarse = std::move(fine);
            r *= 2;
            continue;
        }
        out.result.method = "reference";
        out.result.wall_seconds = seconds_since(start);
        return out;
    }
    throw Error(ErrorKind::NoConvergence, "reference not converged at refinement cap " +
                                              std::to_string(options.max_refinement) +
                                              " (last gap " + std::to_string(last_gap) + ")");
}

}  // namespace pwmsim
