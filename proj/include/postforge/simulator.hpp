// Copyright 2026 The Postforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/// Dense statevector execution with unnormalized postselection.
///
/// Postselection projects without renormalizing, so the squared norm of the
/// final state is the cumulative postselection success probability p_post.
/// Measurements are never collapses: their outcome statistics are read off
/// the final state, conditioned on postselection success.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "postforge/circuit.hpp"
#include "postforge/circuit_io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace postforge {

inline constexpr std::size_t kMaxDenseQubits = 24;
inline constexpr std::size_t kMaxUnitaryQubits = 10;
inline constexpr double kZeroOverlapThreshold = 1e-300;

class StateVector;
inline void apply_gate(StateVector &state, const Gate &g);
inline void apply_postselect(StateVector &state, const Postselect &p);

/// Dense amplitude vector. It also tracks "known" qubits: every amplitude
/// whose index disagrees with `known_value` on `known_mask` is exactly zero.
/// Kernels iterate only over that subspace; any external mutable access
/// forgets the knowledge.
class StateVector {
   public:
    explicit StateVector(std::size_t num_qubits, std::uint64_t basis = 0, Complex amplitude = 1.0)
        : num_qubits_(num_qubits) {
        if (num_qubits > kMaxDenseQubits) {
            throw TooWide("dense simulation is limited to " + std::to_string(kMaxDenseQubits) + " qubits, got " +
                          std::to_string(num_qubits));
        }
        amps_.assign(std::size_t{1} << num_qubits, Complex{0, 0});
        if (basis >= amps_.size()) {
            throw InvalidArgument("basis index out of range");
        }
        amps_[basis] = amplitude;
        known_mask_ = amps_.size() - 1;
        known_value_ = basis;
    }
    static StateVector from_amplitudes(std::vector<Complex> amps) {
        StateVector s(width_for_dim(amps.size()));
        s.amps_ = std::move(amps);
        s.forget();
        return s;
    }

    std::size_t num_qubits() const {
        return num_qubits_;
    }
    std::size_t size() const {
        return amps_.size();
    }
    Complex operator[](std::uint64_t i) const {
        return amps_[i];
    }
    Complex &operator[](std::uint64_t i) {
        forget();
        return amps_[i];
    }
    const std::vector<Complex> &amplitudes() const {
        return amps_;
    }
    std::vector<Complex> &amplitudes() {
        forget();
        return amps_;
    }
    /// Sum of |a|^2 in index order, so results do not depend on threading.
    /// Skipped entries are exact zeros and do not change the sum.
    double squared_norm() const;

    std::uint64_t known_mask() const {
        return known_mask_;
    }
    std::uint64_t known_value() const {
        return known_value_;
    }
    void forget() {
        known_mask_ = 0;
        known_value_ = 0;
    }
    /// Moves the q = 1 part into the returned state; both halves then know q.
    StateVector split_off(Qubit q);

   private:
    friend void apply_gate(StateVector &, const Gate &);
    friend void apply_postselect(StateVector &, const Postselect &);

    std::size_t num_qubits_;
    std::vector<Complex> amps_;
    std::uint64_t known_mask_ = 0;
    std::uint64_t known_value_ = 0;
};

namespace detail {

inline std::uint64_t deposit_zeros(std::uint64_t i, const std::vector<unsigned> &sorted_positions) {
    for (unsigned p : sorted_positions) {
        const std::uint64_t low = i & ((std::uint64_t{1} << p) - 1);
        i = ((i >> p) << (p + 1)) | low;
    }
    return i;
}

inline std::uint64_t full_mask(std::size_t n) {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

/// Calls f(base) for every index whose `fixed_mask` bits equal `set_mask`.
template <typename F>
void for_each_base(std::size_t n, std::uint64_t fixed_mask, std::uint64_t set_mask, F &&f) {
    const std::uint64_t free = full_mask(n) & ~fixed_mask;
#ifdef _OPENMP
    constexpr int kSplitBits = 6;
    if (std::popcount(free) >= 15 + kSplitBits && omp_get_max_threads() > 1) {
        // Split on the highest free bits; each chunk walks the rest.
        std::vector<unsigned> top;
        for (int b = 63; b >= 0 && top.size() < kSplitBits; b--) {
            if ((free >> b) & 1) {
                top.push_back(static_cast<unsigned>(b));
            }
        }
        std::uint64_t top_mask = 0;
        for (unsigned b : top) {
            top_mask |= std::uint64_t{1} << b;
        }
        const std::uint64_t low = free & ~top_mask;
#pragma omp parallel for schedule(static)
        for (int chunk = 0; chunk < (1 << kSplitBits); chunk++) {
            std::uint64_t base = set_mask;
            for (int k = 0; k < kSplitBits; k++) {
                if ((chunk >> k) & 1) {
                    base |= std::uint64_t{1} << top[k];
                }
            }
            std::uint64_t sub = 0;
            do {
                f(base | sub);
                sub = (sub - low) & low;
            } while (sub != 0);
        }
        return;
    }
#endif
    std::uint64_t sub = 0;
    do {
        f(set_mask | sub);
        sub = (sub - free) & free;
    } while (sub != 0);
}

template <typename F>
void for_each_base(std::size_t n, const std::vector<unsigned> &fixed, std::uint64_t set_mask, F &&f) {
    std::uint64_t mask = 0;
    for (unsigned q : fixed) {
        mask |= std::uint64_t{1} << q;
    }
    for_each_base(n, mask, set_mask, std::forward<F>(f));
}

struct GateFrame {
    std::vector<Qubit> targets;
    std::uint64_t target_mask = 0;
    std::uint64_t fixed_mask = 0;
    std::uint64_t set_mask = 0;
    std::vector<std::uint64_t> offsets;
    /// Some control is known to be unsatisfied: the gate is the identity here.
    bool inert = false;
    /// Every control is known (and satisfied).
    bool controls_known = true;
};

inline GateFrame frame_for(const Gate &g, std::size_t n, std::uint64_t known_mask = 0, std::uint64_t known_value = 0) {
    GateFrame f;
    f.targets = g.targets;
    std::vector<Control> controls = g.controls;
    if (g.kind == GateKind::kCX) {
        controls.push_back({g.targets[0], true});
        f.targets = {g.targets[1]};
    }
    for (Qubit q : f.targets) {
        if (q >= n) {
            throw InvalidArgument("gate qubit " + std::to_string(q) + " out of range");
        }
        f.target_mask |= std::uint64_t{1} << q;
    }
    for (const auto &c : controls) {
        if (c.qubit >= n) {
            throw InvalidArgument("control qubit " + std::to_string(c.qubit) + " out of range");
        }
        const std::uint64_t bit = std::uint64_t{1} << c.qubit;
        f.fixed_mask |= bit;
        if (c.polarity) {
            f.set_mask |= bit;
        }
        if (known_mask & bit) {
            if (static_cast<bool>(known_value & bit) != c.polarity) {
                f.inert = true;
            }
        } else {
            f.controls_known = false;
        }
    }
    // Known non-target qubits are pinned to their values.
    const std::uint64_t pinned = known_mask & ~f.target_mask & ~f.fixed_mask;
    f.fixed_mask |= f.target_mask | pinned;
    f.set_mask |= known_value & pinned;
    const std::size_t dim = std::size_t{1} << f.targets.size();
    f.offsets.resize(dim);
    for (std::size_t j = 0; j < dim; j++) {
        std::uint64_t off = 0;
        for (std::size_t k = 0; k < f.targets.size(); k++) {
            if ((j >> k) & 1) {
                off |= std::uint64_t{1} << f.targets[k];
            }
        }
        f.offsets[j] = off;
    }
    return f;
}

inline std::vector<std::vector<std::uint64_t>> permutation_cycles(const std::vector<std::uint64_t> &perm) {
    std::vector<std::vector<std::uint64_t>> cycles;
    std::vector<bool> seen(perm.size(), false);
    for (std::uint64_t s = 0; s < perm.size(); s++) {
        if (seen[s] || perm[s] == s) {
            continue;
        }
        std::vector<std::uint64_t> cyc;
        for (std::uint64_t j = s; !seen[j]; j = perm[j]) {
            seen[j] = true;
            cyc.push_back(j);
        }
        cycles.push_back(std::move(cyc));
    }
    return cycles;
}

/// Local index of the targets in a known basis value.
inline std::uint64_t local_index(const GateFrame &f, std::uint64_t value) {
    std::uint64_t j = 0;
    for (std::size_t k = 0; k < f.targets.size(); k++) {
        if ((value >> f.targets[k]) & 1) {
            j |= std::uint64_t{1} << k;
        }
    }
    return j;
}

}  // namespace detail

inline double StateVector::squared_norm() const {
    double s = 0;
    detail::for_each_base(num_qubits_, known_mask_, known_value_, [&](std::uint64_t i) { s += std::norm(amps_[i]); });
    return s;
}

inline StateVector StateVector::split_off(Qubit q) {
    const std::uint64_t bit = std::uint64_t{1} << q;
    StateVector one(num_qubits_, 0, 0.0);
    const std::uint64_t pinned = known_mask_ & ~bit;
    detail::for_each_base(num_qubits_, pinned | bit, (known_value_ & pinned) | bit, [&](std::uint64_t i) {
        one.amps_[i] = amps_[i];
        amps_[i] = 0;
    });
    one.known_mask_ = known_mask_ | bit;
    one.known_value_ = (known_value_ & ~bit) | bit;
    known_mask_ |= bit;
    known_value_ &= ~bit;
    return one;
}

inline void apply_gate(StateVector &state, const Gate &g) {
    const auto f = detail::frame_for(g, state.num_qubits(), state.known_mask_, state.known_value_);
    if (f.inert) {
        return;
    }
    auto &a = state.amps_;
    const std::size_t n = state.num_qubits();
    const bool targets_known = (state.known_mask_ & f.target_mask) == f.target_mask;
    // Basis-state-preserving gates keep known targets known when every control is known.
    auto update_known = [&](const std::function<std::uint64_t(std::uint64_t)> &local_map) {
        if (targets_known && f.controls_known) {
            const std::uint64_t j = local_map(detail::local_index(f, state.known_value_));
            state.known_value_ = (state.known_value_ & ~f.target_mask) | f.offsets[j];
        } else {
            state.known_mask_ &= ~f.target_mask;
            state.known_value_ &= state.known_mask_;
        }
    };
    switch (g.kind) {
        case GateKind::kX:
        case GateKind::kCX: {
            const std::uint64_t bit = f.offsets[1];
            detail::for_each_base(n, f.fixed_mask, f.set_mask, [&](std::uint64_t b) { std::swap(a[b], a[b | bit]); });
            update_known([](std::uint64_t j) { return j ^ 1; });
            return;
        }
        case GateKind::kT:
        case GateKind::kTdg: {
            const std::uint64_t bit = f.offsets[1];
            const Complex phase = std::polar(1.0, (g.kind == GateKind::kT ? 1 : -1) * std::numbers::pi / 4);
            detail::for_each_base(n, f.fixed_mask, f.set_mask, [&](std::uint64_t b) { a[b | bit] *= phase; });
            return;
        }
        case GateKind::kH: {
            const std::uint64_t bit = f.offsets[1];
            // The double nearest 1/sqrt(2) is slightly high, which makes the
            // norm creep upward by ~1e-16 per layer; scaling in extended
            // precision leaves only unbiased rounding.
            const long double s = 1.0L / std::sqrt(2.0L);
            detail::for_each_base(n, f.fixed_mask, f.set_mask, [&](std::uint64_t b) {
                const Complex x0 = a[b];
                const Complex x1 = a[b | bit];
                const long double r0 = x0.real(), i0 = x0.imag(), r1 = x1.real(), i1 = x1.imag();
                a[b] = Complex(static_cast<double>(s * (r0 + r1)), static_cast<double>(s * (i0 + i1)));
                a[b | bit] = Complex(static_cast<double>(s * (r0 - r1)), static_cast<double>(s * (i0 - i1)));
            });
            state.known_mask_ &= ~f.target_mask;
            state.known_value_ &= state.known_mask_;
            return;
        }
        case GateKind::kOpaque: break;
    }
    const OpaqueUnitary &u = *g.opaque;
    if (u.width != f.targets.size()) {
        throw InvalidArgument("opaque gate '" + u.label + "' applied to the wrong number of qubits");
    }
    if (u.is_permutation()) {
        const auto cycles = detail::permutation_cycles(u.permutation);
        // amplitude at local j moves to local perm[j]
        detail::for_each_base(n, f.fixed_mask, f.set_mask, [&](std::uint64_t b) {
            for (const auto &cyc : cycles) {
                Complex carry = a[b | f.offsets[cyc.back()]];
                for (std::size_t i = cyc.size(); i-- > 1;) {
                    a[b | f.offsets[cyc[i]]] = a[b | f.offsets[cyc[i - 1]]];
                }
                a[b | f.offsets[cyc[0]]] = carry;
            }
        });
        update_known([&](std::uint64_t j) { return u.permutation[j]; });
        return;
    }
    constexpr std::size_t kMaxDim = 64;
    const std::size_t dim = u.dim();
    if (dim > kMaxDim) {
        throw TooWide("dense opaque gates are limited to 6 qubits in simulation");
    }
    const Matrix &m = u.matrix;
    detail::for_each_base(n, f.fixed_mask, f.set_mask, [&](std::uint64_t b) {
        std::array<Complex, kMaxDim> in;
        for (std::size_t j = 0; j < dim; j++) {
            in[j] = a[b | f.offsets[j]];
        }
        for (std::size_t r = 0; r < dim; r++) {
            Complex acc = 0;
            for (std::size_t j = 0; j < dim; j++) {
                acc += m(r, j) * in[j];
            }
            a[b | f.offsets[r]] = acc;
        }
    });
    state.known_mask_ &= ~f.target_mask;
    state.known_value_ &= state.known_mask_;
}

/// Projects qubit q onto |target> without renormalizing.
inline void apply_postselect(StateVector &state, const Postselect &p) {
    if (p.qubit >= state.num_qubits()) {
        throw InvalidArgument("postselect qubit out of range");
    }
    auto &a = state.amps_;
    const std::uint64_t bit = std::uint64_t{1} << p.qubit;
    const bool basis_target = p.target == PostTarget::kZero || p.target == PostTarget::kOne;
    const std::uint64_t want = p.target == PostTarget::kOne ? bit : 0;
    if (basis_target && (state.known_mask_ & bit)) {
        if ((state.known_value_ & bit) != want) {
            std::fill(a.begin(), a.end(), Complex{0, 0});
            throw ZeroOverlap("postselection on qubit " + std::to_string(p.qubit) + " has zero overlap");
        }
        return;
    }
    const double s = 1.0 / std::sqrt(2.0);
    const std::uint64_t pinned = state.known_mask_ & ~bit;
    detail::for_each_base(state.num_qubits(), pinned | bit, state.known_value_ & pinned, [&](std::uint64_t b) {
        switch (p.target) {
            case PostTarget::kOne: a[b] = 0; break;
            case PostTarget::kZero: a[b | bit] = 0; break;
            case PostTarget::kPlus:
            case PostTarget::kMinus: {
                const double sign = p.target == PostTarget::kPlus ? 1.0 : -1.0;
                const Complex overlap = s * (a[b] + sign * a[b | bit]);
                a[b] = s * overlap;
                a[b | bit] = sign * s * overlap;
                break;
            }
        }
    });
    if (basis_target) {
        state.known_mask_ |= bit;
        state.known_value_ = (state.known_value_ & ~bit) | want;
    } else {
        state.known_mask_ &= ~bit;
        state.known_value_ &= state.known_mask_;
    }
    if (state.squared_norm() < kZeroOverlapThreshold) {
        throw ZeroOverlap("postselection on qubit " + std::to_string(p.qubit) + " has zero overlap");
    }
}

/// Gates multiply the state; postselections project; measures are deferred
/// to report time and leave the state untouched.
inline void apply_instruction(StateVector &state, const Instruction &ins) {
    if (const auto *g = std::get_if<Gate>(&ins)) {
        apply_gate(state, *g);
    } else if (const auto *p = std::get_if<Postselect>(&ins)) {
        apply_postselect(state, *p);
    }
}

/// Amplitudes on the qubits not listed in `zero_qubits` (ascending order,
/// little-endian) restricted to the subspace where every listed qubit is 0.
inline std::vector<Complex> restrict_to_zero(const StateVector &state, const std::vector<Qubit> &zero_qubits) {
    std::vector<unsigned> fixed(zero_qubits.begin(), zero_qubits.end());
    std::sort(fixed.begin(), fixed.end());
    std::vector<Complex> out(std::size_t{1} << (state.num_qubits() - fixed.size()));
    for (std::uint64_t i = 0; i < out.size(); i++) {
        out[i] = state[detail::deposit_zeros(i, fixed)];
    }
    return out;
}

// --------------------------------------------------------------------------
// Reports

struct MeasureStat {
    std::string label;
    Qubit qubit = 0;
    /// Unnormalized mass with the measured qubit at 1 (after postselection).
    double mass_one = 0;
};

class SimulationReport {
   public:
    double p_post = 0;
    std::vector<MeasureStat> measures;
    /// Unnormalized joint outcome masses over `measures` (bit i = measure i);
    /// empty when there are more than 16 measures.
    std::vector<double> joint_mass;
    /// Unnormalized mass with each register's content non-zero.
    std::vector<std::pair<std::string, double>> register_nonzero_mass;
    std::vector<Register> registers;
    std::optional<StateVector> final_state;

    /// (P[label = 0 | post], P[label = 1 | post]).
    std::pair<double, double> conditional(const std::string &label) const {
        for (const auto &m : measures) {
            if (m.label == label) {
                const double p1 = p_post > 0 ? m.mass_one / p_post : 0.0;
                return {1.0 - p1, p1};
            }
        }
        throw InvalidArgument("no measurement labelled '" + label + "'");
    }
    double joint_conditional(std::uint64_t outcome) const {
        if (outcome >= joint_mass.size()) {
            throw InvalidArgument("joint outcome out of range");
        }
        return p_post > 0 ? joint_mass[outcome] / p_post : 0.0;
    }
    double nonzero_mass(const std::string &reg) const {
        for (const auto &[name, v] : register_nonzero_mass) {
            if (name == reg) {
                return v;
            }
        }
        throw InvalidArgument("no register named '" + reg + "'");
    }
    const StateVector &state() const {
        if (!final_state) {
            throw InvalidArgument("report carries no final state");
        }
        return *final_state;
    }
};

namespace detail {

inline std::vector<Measure> collect_measures(const Circuit &c) {
    std::vector<Measure> ms;
    const auto &ins = c.instructions();
    for (std::size_t i = 0; i < ins.size(); i++) {
        const auto *m = std::get_if<Measure>(&ins[i]);
        if (m == nullptr) {
            continue;
        }
        for (std::size_t j = i + 1; j < ins.size(); j++) {
            if (const auto *g = std::get_if<Gate>(&ins[j])) {
                auto acted = g->acted_qubits();
                if (std::find(acted.begin(), acted.end(), m->qubit) != acted.end()) {
                    throw NonTerminalMarkers("measure '" + m->label + "' is followed by a gate acting on qubit " +
                                             std::to_string(m->qubit));
                }
            }
        }
        ms.push_back(*m);
    }
    return ms;
}

inline std::uint64_t register_mask(const Register &r) {
    return ((r.length >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << r.length) - 1))) << r.start;
}

/// Accumulates `weight * |amp|^2` at basis index `idx` into the report.
inline void accumulate(SimulationReport &rep, std::uint64_t idx, double mass) {
    rep.p_post += mass;
    std::uint64_t joint = 0;
    for (std::size_t k = 0; k < rep.measures.size(); k++) {
        if ((idx >> rep.measures[k].qubit) & 1) {
            rep.measures[k].mass_one += mass;
            joint |= std::uint64_t{1} << k;
        }
    }
    if (!rep.joint_mass.empty()) {
        rep.joint_mass[joint] += mass;
    }
    for (std::size_t r = 0; r < rep.registers.size(); r++) {
        if (idx & register_mask(rep.registers[r])) {
            rep.register_nonzero_mass[r].second += mass;
        }
    }
}

inline SimulationReport empty_report(const Circuit &c, const std::vector<Measure> &ms) {
    SimulationReport rep;
    for (const auto &m : ms) {
        rep.measures.push_back({m.label, m.qubit, 0.0});
    }
    if (ms.size() <= 16) {
        rep.joint_mass.assign(std::size_t{1} << ms.size(), 0.0);
    }
    rep.registers = c.registers();
    for (const auto &r : c.registers()) {
        rep.register_nonzero_mass.emplace_back(r.name, 0.0);
    }
    return rep;
}

}  // namespace detail

namespace detail {

/// Instruction index from which qubit q is only ever read as a control, or
/// nullopt when no such point precedes a control use.
inline std::vector<std::optional<std::size_t>> control_only_points(const Circuit &c) {
    const std::size_t n = c.num_qubits();
    std::vector<std::size_t> last_modified(n, 0);
    std::vector<bool> modified(n, false);
    std::vector<std::optional<std::size_t>> last_control(n);
    const auto &ins = c.instructions();
    for (std::size_t i = 0; i < ins.size(); i++) {
        if (const auto *g = std::get_if<Gate>(&ins[i])) {
            for (Qubit q : g->acted_qubits()) {
                last_modified[q] = i;
                modified[q] = true;
            }
            if (g->kind == GateKind::kT || g->kind == GateKind::kTdg) {
                // Diagonal: reads the target like a control.
                last_control[g->targets[0]] = i;
            }
            for (const auto &ctl : g->controls) {
                last_control[ctl.qubit] = i;
            }
            if (g->kind == GateKind::kCX) {
                last_control[g->targets[0]] = i;
            }
        } else if (const auto *p = std::get_if<Postselect>(&ins[i])) {
            if (p->target == PostTarget::kPlus || p->target == PostTarget::kMinus) {
                last_modified[p->qubit] = i;
                modified[p->qubit] = true;
            }
        }
    }
    std::vector<std::optional<std::size_t>> out(n);
    for (std::size_t q = 0; q < n; q++) {
        const std::size_t from = modified[q] ? last_modified[q] + 1 : 0;
        if (last_control[q] && *last_control[q] >= from) {
            out[q] = from;
        }
    }
    return out;
}

inline constexpr std::size_t kMaxBranchAmplitudes = std::size_t{1} << 25;

}  // namespace detail

/// Runs `c` on `state`. Qubits that are only read as controls from some
/// point on are split into separate branches there (exact projections with
/// disjoint support), so every branch knows their value.
inline SimulationReport run(const Circuit &c, StateVector state) {
    if (state.num_qubits() != c.num_qubits()) {
        throw LayoutMismatch("initial state has " + std::to_string(state.num_qubits()) + " qubits, circuit has " +
                             std::to_string(c.num_qubits()));
    }
    const auto measures = detail::collect_measures(c);
    const auto split_points = detail::control_only_points(c);
    std::vector<StateVector> branches;
    branches.push_back(std::move(state));
    const auto &ins = c.instructions();
    for (std::size_t i = 0; i < ins.size(); i++) {
        for (Qubit q = 0; q < split_points.size(); q++) {
            if (split_points[q] != i) {
                continue;
            }
            const std::uint64_t bit = std::uint64_t{1} << q;
            std::vector<StateVector> next;
            for (auto &b : branches) {
                const bool room = (next.size() + branches.size() + 1) * b.size() <= detail::kMaxBranchAmplitudes;
                if ((b.known_mask() & bit) || !room) {
                    next.push_back(std::move(b));
                    continue;
                }
                StateVector one = b.split_off(q);
                if (b.squared_norm() > 0) {
                    next.push_back(std::move(b));
                }
                if (one.squared_norm() > 0) {
                    next.push_back(std::move(one));
                }
            }
            branches = std::move(next);
        }
        const bool is_post = std::holds_alternative<Postselect>(ins[i]);
        std::vector<StateVector> alive;
        for (auto &b : branches) {
            try {
                apply_instruction(b, ins[i]);
                alive.push_back(std::move(b));
            } catch (const ZeroOverlap &) {
                if (branches.size() == 1 || !is_post) {
                    throw;
                }
            }
        }
        if (alive.empty()) {
            throw ZeroOverlap("postselection has zero overlap on every branch");
        }
        branches = std::move(alive);
    }
    SimulationReport rep = detail::empty_report(c, measures);
    StateVector total = std::move(branches.front());
    for (std::size_t k = 1; k < branches.size(); k++) {
        const auto &src = std::as_const(branches[k]).amplitudes();
        auto &dst = total.amplitudes();
        for (std::uint64_t i = 0; i < src.size(); i++) {
            dst[i] += src[i];
        }
    }
    const auto &a = std::as_const(total).amplitudes();
    for (std::uint64_t i = 0; i < a.size(); i++) {
        const double m = std::norm(a[i]);
        if (m != 0) {
            detail::accumulate(rep, i, m);
        }
    }
    rep.final_state = std::move(total);
    return rep;
}

inline SimulationReport run(const Circuit &c, std::uint64_t basis = 0) {
    return run(c, StateVector(c.num_qubits(), basis));
}

/// Dense unitary of a marker-free circuit, assembled column by column.
inline Matrix unitary_of(const Circuit &c) {
    if (!c.is_unitary()) {
        throw NonUnitaryInput("unitary_of needs a circuit without postselect/measure markers");
    }
    if (c.num_qubits() > kMaxUnitaryQubits) {
        throw TooWide("unitary_of is limited to " + std::to_string(kMaxUnitaryQubits) + " qubits");
    }
    const std::size_t dim = std::size_t{1} << c.num_qubits();
    Matrix u(dim, dim);
    for (std::size_t col = 0; col < dim; col++) {
        StateVector s(c.num_qubits(), col);
        for (const auto &ins : c.instructions()) {
            apply_gate(s, std::get<Gate>(ins));
        }
        for (std::size_t r = 0; r < dim; r++) {
            u(r, col) = s[r];
        }
    }
    return u;
}

struct RestrictedUnitary {
    /// Action on `data` qubits (little-endian in the listed order) with every
    /// other qubit starting at |0>.
    Matrix matrix;
    /// Largest amplitude left on a basis state with some non-data qubit set.
    double leakage = 0;
};

inline RestrictedUnitary restricted_unitary(const Circuit &c, const std::vector<Qubit> &data) {
    if (!c.is_unitary()) {
        throw NonUnitaryInput("restricted_unitary needs a circuit without markers");
    }
    if (data.size() > 12) {
        throw TooWide("restricted_unitary is limited to 12 data qubits");
    }
    const std::size_t dim = std::size_t{1} << data.size();
    std::uint64_t data_mask = 0;
    for (Qubit q : data) {
        data_mask |= std::uint64_t{1} << q;
    }
    auto embed = [&](std::uint64_t j) {
        std::uint64_t idx = 0;
        for (std::size_t k = 0; k < data.size(); k++) {
            if ((j >> k) & 1) {
                idx |= std::uint64_t{1} << data[k];
            }
        }
        return idx;
    };
    RestrictedUnitary out{Matrix(dim, dim), 0.0};
    for (std::size_t col = 0; col < dim; col++) {
        StateVector s(c.num_qubits(), embed(col));
        for (const auto &ins : c.instructions()) {
            apply_gate(s, std::get<Gate>(ins));
        }
        for (std::size_t r = 0; r < dim; r++) {
            out.matrix(r, col) = s[embed(r)];
        }
        for (std::uint64_t i = 0; i < s.size(); i++) {
            if (i & ~data_mask) {
                out.leakage = std::max(out.leakage, std::abs(s[i]));
            }
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// Mixed-input enumeration

namespace detail {

/// Moves every postselection as early as it can go: past instructions that do
/// not change its qubit's computational-basis value. The projector commutes
/// with all of those, so the final state is unchanged.
inline std::vector<Instruction> hoist_postselections(const Circuit &c) {
    std::vector<Instruction> out;
    for (const auto &ins : c.instructions()) {
        const auto *p = std::get_if<Postselect>(&ins);
        if (p == nullptr) {
            out.push_back(ins);
            continue;
        }
        std::size_t pos = out.size();
        while (pos > 0) {
            const auto *g = std::get_if<Gate>(&out[pos - 1]);
            if (g != nullptr) {
                auto acted = g->acted_qubits();
                if (std::find(acted.begin(), acted.end(), p->qubit) != acted.end()) {
                    break;
                }
                if (p->target == PostTarget::kPlus || p->target == PostTarget::kMinus) {
                    auto qs = g->qubits();
                    if (std::find(qs.begin(), qs.end(), p->qubit) != qs.end()) {
                        break;
                    }
                }
            }
            pos--;
        }
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), ins);
    }
    return out;
}

inline bool is_classical(const Gate &g) {
    return g.kind == GateKind::kX || g.kind == GateKind::kCX || g.kind == GateKind::kT ||
           g.kind == GateKind::kTdg || (g.kind == GateKind::kOpaque && g.opaque->is_permutation());
}

/// Applies a classical gate to a single basis state in place.
inline void apply_classical(std::uint64_t &idx, Complex &amp, const Gate &g) {
    for (const auto &c : g.controls) {
        if (((idx >> c.qubit) & 1) != (c.polarity ? 1u : 0u)) {
            return;
        }
    }
    switch (g.kind) {
        case GateKind::kX: idx ^= std::uint64_t{1} << g.targets[0]; return;
        case GateKind::kCX:
            if ((idx >> g.targets[0]) & 1) {
                idx ^= std::uint64_t{1} << g.targets[1];
            }
            return;
        case GateKind::kT:
        case GateKind::kTdg:
            if ((idx >> g.targets[0]) & 1) {
                amp *= std::polar(1.0, (g.kind == GateKind::kT ? 1 : -1) * std::numbers::pi / 4);
            }
            return;
        default: break;
    }
    std::uint64_t local = 0;
    for (std::size_t k = 0; k < g.targets.size(); k++) {
        local |= ((idx >> g.targets[k]) & 1) << k;
        idx &= ~(std::uint64_t{1} << g.targets[k]);
    }
    const std::uint64_t image = g.opaque->permutation[local];
    for (std::size_t k = 0; k < g.targets.size(); k++) {
        idx |= ((image >> k) & 1) << g.targets[k];
    }
}

}  // namespace detail

/// Statistics of the circuit on input |0><0|_clean (x) (I/2)^{(x) m}: every
/// basis state of the m non-clean qubits is run with weight 2^-m and the
/// unnormalized masses are summed in a fixed order. Branches are tracked as a
/// single basis state until the first non-classical gate, and postselections
/// are hoisted, so branches killed early cost almost nothing.
inline SimulationReport run_dqc1_mixed(const Circuit &c, Qubit clean) {
    const std::size_t n = c.num_qubits();
    if (clean >= n) {
        throw InvalidArgument("clean qubit out of range");
    }
    if (n > kMaxDenseQubits) {
        throw TooWide("mixed enumeration is limited to " + std::to_string(kMaxDenseQubits) + " qubits");
    }
    const auto measures = detail::collect_measures(c);
    const auto program = detail::hoist_postselections(c);
    SimulationReport total = detail::empty_report(c, measures);
    const std::size_t m = n - 1;
    const double weight = std::ldexp(1.0, -static_cast<int>(m));
    const std::uint64_t branches = std::uint64_t{1} << m;

    for (std::uint64_t b = 0; b < branches; b++) {
        std::uint64_t idx = detail::deposit_zeros(b, {clean});
        Complex amp = 1.0;
        std::size_t pc = 0;
        bool dead = false;
        for (; pc < program.size(); pc++) {
            const auto &ins = program[pc];
            if (const auto *g = std::get_if<Gate>(&ins)) {
                if (!detail::is_classical(*g)) {
                    break;
                }
                detail::apply_classical(idx, amp, *g);
            } else if (const auto *p = std::get_if<Postselect>(&ins)) {
                if (p->target == PostTarget::kPlus || p->target == PostTarget::kMinus) {
                    break;
                }
                const bool bit = (idx >> p->qubit) & 1;
                if (bit != (p->target == PostTarget::kOne)) {
                    dead = true;
                    break;
                }
            }
        }
        if (dead) {
            continue;
        }
        if (pc == program.size()) {
            detail::accumulate(total, idx, weight * std::norm(amp));
            continue;
        }
        StateVector s(n, idx, amp);
        try {
            for (; pc < program.size(); pc++) {
                apply_instruction(s, program[pc]);
            }
        } catch (const ZeroOverlap &) {
            continue;
        }
        const auto &a = s.amplitudes();
        for (std::uint64_t i = 0; i < a.size(); i++) {
            const double mass = std::norm(a[i]);
            if (mass != 0) {
                detail::accumulate(total, i, weight * mass);
            }
        }
    }
    if (total.p_post < kZeroOverlapThreshold && c.postselect_count() > 0) {
        throw ZeroOverlap("every branch of the mixed input fails postselection");
    }
    return total;
}

/// `p_post <v>`, `cond <label> <p0> <p1>`, `mass <REG>!=0 <v>` lines.
inline std::string format_report(const SimulationReport &rep) {
    std::string out = "p_post " + format_statistic(rep.p_post) + "\n";
    for (const auto &m : rep.measures) {
        auto [p0, p1] = rep.conditional(m.label);
        out += "cond " + m.label + " " + format_statistic(p0) + " " + format_statistic(p1) + "\n";
    }
    for (const auto &[name, v] : rep.register_nonzero_mass) {
        out += "mass " + name + "!=0 " + format_statistic(v) + "\n";
    }
    return out;
}

}  // namespace postforge
