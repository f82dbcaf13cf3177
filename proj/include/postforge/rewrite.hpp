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

/// Structural rewrites over `Circuit`. All functions return fresh circuits.

#include <set>
#include <string>
#include <vector>

#include "postforge/circuit.hpp"

namespace postforge {

namespace detail {

// Gates that map |t> to |1>, applied before postselecting |1>.
inline std::vector<GateKind> basis_change_to_one(PostTarget t) {
    switch (t) {
        case PostTarget::kZero: return {GateKind::kX};
        case PostTarget::kPlus: return {GateKind::kH, GateKind::kX};
        case PostTarget::kMinus: return {GateKind::kH};
        case PostTarget::kOne: return {};
    }
    return {};
}

inline bool touched_after(const Circuit &c, std::size_t pos, Qubit q) {
    const auto &ins = c.instructions();
    for (std::size_t i = pos + 1; i < ins.size(); i++) {
        auto qs = instruction_qubits(ins[i]);
        if (std::find(qs.begin(), qs.end(), q) != qs.end()) {
            return true;
        }
    }
    return false;
}

inline Circuit copy_header(const Circuit &c, std::size_t width) {
    Circuit out(width);
    for (const auto &r : c.registers()) {
        out.add_register(r.name, r.start, r.length);
    }
    out.set_metadata(c.metadata());
    out.set_terminal_measures(c.terminal_measures());
    return out;
}

}  // namespace detail

/// Rewrites every Postselect{q, t != 1} as a basis change U with U|t> = |1>
/// followed by Postselect{q, 1}. If q is used again later in the circuit the
/// inverse basis change is emitted after the postselection, so the qubit is
/// left in |t> as the original circuit leaves it; a terminal postselection is
/// left in |1>.
inline Circuit desugar_postselections(const Circuit &c) {
    Circuit out = detail::copy_header(c, c.num_qubits());
    const auto &ins = c.instructions();
    for (std::size_t i = 0; i < ins.size(); i++) {
        const auto *p = std::get_if<Postselect>(&ins[i]);
        if (p == nullptr || p->target == PostTarget::kOne) {
            out.add(ins[i]);
            continue;
        }
        auto change = detail::basis_change_to_one(p->target);
        for (GateKind k : change) {
            out.gate(k, {p->qubit});
        }
        out.post(p->qubit, PostTarget::kOne);
        if (detail::touched_after(c, i, p->qubit)) {
            for (auto it = change.rbegin(); it != change.rend(); ++it) {
                out.gate(*it, {p->qubit});
            }
        }
    }
    return out;
}

/// Replaces k >= 1 terminal Postselect{q_i, 1} markers by a fresh ancilla that
/// receives AND(q_1..q_k) and is postselected instead. The ancilla is the new
/// highest qubit, in register "AGG" when the circuit declares registers.
inline Circuit aggregate_postselections(const Circuit &c) {
    const auto &ins = c.instructions();
    std::vector<Qubit> posted;
    for (std::size_t i = 0; i < ins.size(); i++) {
        const auto *p = std::get_if<Postselect>(&ins[i]);
        const auto *m = std::get_if<Measure>(&ins[i]);
        if (p == nullptr && m == nullptr) {
            continue;
        }
        Qubit q = p ? p->qubit : m->qubit;
        for (std::size_t j = i + 1; j < ins.size(); j++) {
            const auto *g = std::get_if<Gate>(&ins[j]);
            if (g == nullptr) {
                continue;
            }
            auto acted = g->acted_qubits();
            if (std::find(acted.begin(), acted.end(), q) != acted.end()) {
                if (p) {
                    throw NonTerminalPostselect("postselection on qubit " + std::to_string(q) + " at instruction " +
                                                std::to_string(i) + " is followed by a gate acting on it");
                }
                throw NonTerminalMarkers("measure on qubit " + std::to_string(q) + " is followed by a gate acting on it");
            }
        }
        if (p) {
            if (p->target != PostTarget::kOne) {
                throw InvalidArgument("aggregate_postselections expects target |1>; desugar first");
            }
            posted.push_back(p->qubit);
        }
    }
    if (posted.empty()) {
        throw InvalidArgument("no postselections to aggregate");
    }
    const Qubit anc = static_cast<Qubit>(c.num_qubits());
    Circuit out = detail::copy_header(c, c.num_qubits() + 1);
    if (!c.registers().empty()) {
        out.add_register("AGG", anc, 1);
    }
    for (const auto &i : ins) {
        if (std::holds_alternative<Gate>(i)) {
            out.add(i);
        }
    }
    std::vector<Control> ctrls;
    for (Qubit q : posted) {
        ctrls.push_back({q, true});
    }
    out.gate(GateKind::kX, {anc}, ctrls);
    out.post(anc, PostTarget::kOne);
    for (const auto &i : ins) {
        if (std::holds_alternative<Measure>(i)) {
            out.add(i);
        }
    }
    return out;
}

/// Adds `controls` (with per-control polarity) to every gate of a unitary
/// circuit. Where the control condition fails the result acts as identity;
/// where it holds it acts as `c`.
inline Circuit controlled_wrap(const Circuit &c, const std::vector<Qubit> &controls, const std::vector<bool> &polarity) {
    if (!c.is_unitary()) {
        throw NonUnitaryInput("controlled_wrap needs a circuit without postselect/measure markers");
    }
    if (controls.size() != polarity.size()) {
        throw InvalidArgument("one polarity per control required");
    }
    std::set<Qubit> used;
    for (const auto &i : c.instructions()) {
        for (Qubit q : instruction_qubits(i)) {
            used.insert(q);
        }
    }
    std::set<Qubit> seen;
    for (Qubit q : controls) {
        if (q >= c.num_qubits()) {
            throw InvalidArgument("control qubit " + std::to_string(q) + " out of range");
        }
        if (used.count(q) || !seen.insert(q).second) {
            throw InvalidArgument("control qubit " + std::to_string(q) + " overlaps the wrapped circuit");
        }
    }
    Circuit out = detail::copy_header(c, c.num_qubits());
    for (const auto &i : c.instructions()) {
        Gate g = std::get<Gate>(i);
        for (std::size_t k = 0; k < controls.size(); k++) {
            g.controls.push_back({controls[k], polarity[k]});
        }
        out.add(std::move(g));
    }
    return out;
}

/// `c` repeated `times` times in sequence.
inline Circuit repeat(const Circuit &c, std::size_t times) {
    Circuit out = detail::copy_header(c, c.num_qubits());
    for (std::size_t r = 0; r < times; r++) {
        out.append(c);
    }
    return out;
}

}  // namespace postforge

namespace postforge {

/// Relabels qubit i of `c` as `mapping[i]` inside a circuit of `width` qubits.
/// Registers are dropped; markers are remapped too.
inline Circuit remap(const Circuit &c, const std::vector<Qubit> &mapping, std::size_t width) {
    if (mapping.size() != c.num_qubits()) {
        throw LayoutMismatch("remap needs one destination per source qubit");
    }
    for (Qubit q : mapping) {
        if (q >= width) {
            throw LayoutMismatch("remap destination out of range");
        }
    }
    Circuit out(width);
    for (const auto &ins : c.instructions()) {
        if (const auto *g = std::get_if<Gate>(&ins)) {
            Gate r = *g;
            for (auto &q : r.targets) {
                q = mapping[q];
            }
            for (auto &ctl : r.controls) {
                ctl.qubit = mapping[ctl.qubit];
            }
            out.add(std::move(r));
        } else if (const auto *p = std::get_if<Postselect>(&ins)) {
            out.post(mapping[p->qubit], p->target);
        } else {
            const auto &m = std::get<Measure>(ins);
            out.measure(mapping[m.qubit], m.label);
        }
    }
    return out;
}

}  // namespace postforge
