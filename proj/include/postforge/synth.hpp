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

/// Gate synthesis for multi-controlled gates and counters.
///
/// Multi-controlled X uses a clean-ancilla ladder of Toffolis, and every
/// Toffoli is lowered to the standard 6-CNOT / 7-T network. Elementary counts
/// (CNOT + T + T† + X, see GateStats::elementary_count) obey
///
///     count(synth_mcx(k))                <= 26 k
///     count(synth_controlled_inc(n, k))  <= 52 (k + n^2)
///
/// for every k >= 1, n >= 1 (AND or OR mode). synth_mcx(0) is a single X.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "postforge/circuit.hpp"
#include "postforge/rewrite.hpp"

namespace postforge {

inline constexpr std::size_t kMcxCountSlope = 26;
inline constexpr std::size_t kControlledIncCountSlope = 52;
inline constexpr std::size_t kControlledIncCountOffset = 0;

struct SynthResult {
    Circuit circuit;
    /// Controls first, then targets; the qubits the operator is defined on.
    std::vector<Qubit> data;
    /// Start at |0> and are returned to |0>.
    std::vector<Qubit> ancillas;
};

enum class ControlMode { kAnd, kOr };

namespace synth_detail {

inline std::size_t mcx_ancillas(std::size_t k) {
    return k > 2 ? k - 2 : 0;
}

inline std::vector<Qubit> iota(Qubit from, std::size_t count) {
    std::vector<Qubit> v(count);
    for (std::size_t i = 0; i < count; i++) {
        v[i] = from + static_cast<Qubit>(i);
    }
    return v;
}

inline void emit_toffoli(Circuit &c, Qubit a, Qubit b, Qubit t) {
    c.h(t);
    c.cx(b, t);
    c.tdg(t);
    c.cx(a, t);
    c.t(t);
    c.cx(b, t);
    c.tdg(t);
    c.cx(a, t);
    c.t(b);
    c.t(t);
    c.h(t);
    c.cx(a, b);
    c.t(a);
    c.tdg(b);
    c.cx(a, b);
}

/// Appends AND(controls) -> flip target, using ancillas[0 .. k-3] as a ladder.
inline void emit_mcx(Circuit &c, const std::vector<Control> &controls, Qubit target, const std::vector<Qubit> &anc) {
    const std::size_t k = controls.size();
    if (anc.size() < mcx_ancillas(k)) {
        throw InvalidArgument("multi-controlled X with " + std::to_string(k) + " controls needs " +
                              std::to_string(mcx_ancillas(k)) + " ancillas");
    }
    for (const auto &ctl : controls) {
        if (!ctl.polarity) {
            c.x(ctl.qubit);
        }
    }
    if (k == 0) {
        c.x(target);
    } else if (k == 1) {
        c.cx(controls[0].qubit, target);
    } else if (k == 2) {
        emit_toffoli(c, controls[0].qubit, controls[1].qubit, target);
    } else {
        std::vector<std::array<Qubit, 3>> ladder;
        ladder.push_back({controls[0].qubit, controls[1].qubit, anc[0]});
        for (std::size_t i = 1; i + 2 < k; i++) {
            ladder.push_back({controls[i + 1].qubit, anc[i - 1], anc[i]});
        }
        for (const auto &s : ladder) {
            emit_toffoli(c, s[0], s[1], s[2]);
        }
        emit_toffoli(c, controls[k - 1].qubit, anc[k - 3], target);
        for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
            emit_toffoli(c, (*it)[0], (*it)[1], (*it)[2]);
        }
    }
    for (const auto &ctl : controls) {
        if (!ctl.polarity) {
            c.x(ctl.qubit);
        }
    }
}

/// flag ^= OR(controls): De Morgan over an all-zero-polarity AND.
inline void emit_or_flag(Circuit &c, const std::vector<Qubit> &controls, Qubit flag, const std::vector<Qubit> &anc) {
    std::vector<Control> zeros;
    for (Qubit q : controls) {
        zeros.push_back({q, false});
    }
    emit_mcx(c, zeros, flag, anc);
    c.x(flag);
}

/// Increments the little-endian `counter` when every extra control fires:
/// bit j flips iff bits 0..j-1 are all one, applied from the top bit down.
inline void emit_inc_cascade(Circuit &c, const std::vector<Qubit> &counter, const std::vector<Control> &extra,
                             const std::vector<Qubit> &anc) {
    for (std::size_t j = counter.size(); j-- > 0;) {
        std::vector<Control> ctl = extra;
        for (std::size_t i = 0; i < j; i++) {
            ctl.push_back({counter[i], true});
        }
        emit_mcx(c, ctl, counter[j], anc);
    }
}

inline void check_base_gate(const Gate &g) {
    if (!g.controls.empty()) {
        throw UnsupportedGate("base gate must be uncontrolled");
    }
    if (g.kind == GateKind::kOpaque && (!g.opaque || g.opaque->width > 2)) {
        throw UnsupportedGate("opaque base gate must act on one or two qubits");
    }
}

inline Circuit named(std::size_t width, const std::vector<std::pair<std::string, std::vector<Qubit>>> &regs) {
    Circuit c(width);
    for (const auto &[name, qs] : regs) {
        if (!qs.empty()) {
            c.add_register(name, qs.front(), qs.size());
        }
    }
    return c;
}

inline std::vector<Qubit> concat(std::vector<Qubit> a, const std::vector<Qubit> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace synth_detail

/// AND_k(X) over controls 0..k-1 (per-control polarity, default all one) onto
/// target k, with k-2 ladder ancillas after the target.
inline SynthResult synth_mcx(std::size_t k, std::vector<bool> polarities = {}) {
    using namespace synth_detail;
    if (polarities.empty()) {
        polarities.assign(k, true);
    }
    if (polarities.size() != k) {
        throw InvalidArgument("one polarity per control required");
    }
    const auto controls = iota(0, k);
    const Qubit target = static_cast<Qubit>(k);
    const auto anc = iota(target + 1, mcx_ancillas(k));
    Circuit c = named(k + 1 + anc.size(), {{"CTRL", controls}, {"TGT", {target}}, {"ANC", anc}});
    std::vector<Control> ctl;
    for (std::size_t i = 0; i < k; i++) {
        ctl.push_back({controls[i], static_cast<bool>(polarities[i])});
    }
    emit_mcx(c, ctl, target, anc);
    c.set_metadata("synth mcx k=" + std::to_string(k));
    return {std::move(c), concat(controls, {target}), anc};
}

namespace synth_detail {

inline SynthResult controlled_gate(const Gate &g, std::size_t k, ControlMode mode) {
    check_base_gate(g);
    if (k == 0) {
        throw InvalidArgument("controlled gate needs k >= 1");
    }
    const std::size_t arity = g.kind == GateKind::kCX ? 2 : (g.kind == GateKind::kOpaque ? g.opaque->width : 1);
    const auto controls = iota(0, k);
    const auto targets = iota(static_cast<Qubit>(k), arity);
    Gate placed = g;
    placed.targets = targets;
    if (k == 1) {
        placed.controls = {{controls[0], true}};
        Circuit c = named(k + arity, {{"CTRL", controls}, {"TGT", targets}});
        c.add(placed);
        return {std::move(c), concat(controls, targets), {}};
    }
    const Qubit flag = static_cast<Qubit>(k + arity);
    const auto ladder = iota(flag + 1, mcx_ancillas(k));
    auto anc = concat({flag}, ladder);
    Circuit c = named(k + arity + anc.size(), {{"CTRL", controls}, {"TGT", targets}, {"ANC", anc}});
    std::vector<Control> all_one;
    for (Qubit q : controls) {
        all_one.push_back({q, true});
    }
    auto compute = [&] {
        if (mode == ControlMode::kAnd) {
            emit_mcx(c, all_one, flag, ladder);
        } else {
            emit_or_flag(c, controls, flag, ladder);
        }
    };
    compute();
    placed.controls = {{flag, true}};
    c.add(placed);
    if (mode == ControlMode::kAnd) {
        emit_mcx(c, all_one, flag, ladder);
    } else {
        c.x(flag);
        std::vector<Control> zeros;
        for (Qubit q : controls) {
            zeros.push_back({q, false});
        }
        emit_mcx(c, zeros, flag, ladder);
    }
    return {std::move(c), concat(controls, targets), anc};
}

}  // namespace synth_detail

/// AND_k(g): AND_k(X) onto a clean flag, AND(g) from the flag, AND_k(X) again.
/// `g` is an uncontrolled gate on one or two qubits (targets are reassigned).
inline SynthResult synth_controlled_gate(const Gate &g, std::size_t k) {
    auto r = synth_detail::controlled_gate(g, k, ControlMode::kAnd);
    r.circuit.set_metadata("synth and-controlled " + std::string(gate_kind_name(g.kind)) + " k=" + std::to_string(k));
    return r;
}

/// OR_k(g): g fires unless every control is zero.
inline SynthResult synth_or_controlled_gate(const Gate &g, std::size_t k) {
    auto r = synth_detail::controlled_gate(g, k, ControlMode::kOr);
    r.circuit.set_metadata("synth or-controlled " + std::string(gate_kind_name(g.kind)) + " k=" + std::to_string(k));
    return r;
}

/// INC over Z_{2^n} on qubits 0..n-1 (qubit 0 least significant).
inline SynthResult synth_inc_pow2(std::size_t n) {
    using namespace synth_detail;
    if (n == 0) {
        throw InvalidArgument("counter width must be >= 1");
    }
    const auto counter = iota(0, n);
    const auto anc = iota(static_cast<Qubit>(n), n >= 1 ? mcx_ancillas(n - 1) : 0);
    Circuit c = named(n + anc.size(), {{"CNT", counter}, {"ANC", anc}});
    emit_inc_cascade(c, counter, {}, anc);
    c.set_metadata("synth inc n=" + std::to_string(n));
    return {std::move(c), counter, anc};
}

/// AND_k(INC_{2^n}) or OR_k(INC_{2^n}); controls 0..k-1, counter k..k+n-1.
inline SynthResult synth_controlled_inc(std::size_t n, std::size_t k, ControlMode mode) {
    using namespace synth_detail;
    if (n == 0 || k == 0) {
        throw InvalidArgument("controlled increment needs n >= 1 and k >= 1");
    }
    const auto controls = iota(0, k);
    const auto counter = iota(static_cast<Qubit>(k), n);
    const Qubit next = static_cast<Qubit>(k + n);
    Circuit c(0);
    std::vector<Qubit> anc;
    if (k == 1) {
        anc = iota(next, mcx_ancillas(n));
        c = named(k + n + anc.size(), {{"CTRL", controls}, {"CNT", counter}, {"ANC", anc}});
        emit_inc_cascade(c, counter, {{controls[0], true}}, anc);
    } else {
        const Qubit flag = next;
        const auto ladder = iota(flag + 1, std::max(mcx_ancillas(k), mcx_ancillas(n)));
        anc = concat({flag}, ladder);
        c = named(k + n + anc.size(), {{"CTRL", controls}, {"CNT", counter}, {"ANC", anc}});
        std::vector<Control> all_one;
        std::vector<Control> zeros;
        for (Qubit q : controls) {
            all_one.push_back({q, true});
            zeros.push_back({q, false});
        }
        if (mode == ControlMode::kAnd) {
            emit_mcx(c, all_one, flag, ladder);
        } else {
            emit_or_flag(c, controls, flag, ladder);
        }
        emit_inc_cascade(c, counter, {{flag, true}}, ladder);
        if (mode == ControlMode::kAnd) {
            emit_mcx(c, all_one, flag, ladder);
        } else {
            c.x(flag);
            emit_mcx(c, zeros, flag, ladder);
        }
    }
    c.set_metadata(std::string("synth ") + (mode == ControlMode::kAnd ? "and" : "or") +
                   "-controlled inc n=" + std::to_string(n) + " k=" + std::to_string(k));
    return {std::move(c), concat(controls, counter), anc};
}

/// The permutation |j> -> |j+1 mod M> for j < M, identity for j >= M.
inline OpaquePtr inc_mod_permutation(std::size_t modulus, std::size_t width) {
    if (width == 0 || width >= 32 || modulus < 2 || modulus > (std::size_t{1} << width)) {
        throw InvalidArgument("inc_mod needs 2 <= M <= 2^width");
    }
    std::vector<std::uint64_t> perm(std::size_t{1} << width);
    for (std::size_t j = 0; j < perm.size(); j++) {
        perm[j] = j < modulus ? (j + 1) % modulus : j;
    }
    return make_permutation("incmod_" + std::to_string(modulus), width, std::move(perm));
}

/// Modular increment emitted as a single opaque permutation gate.
inline SynthResult synth_inc_mod(std::size_t modulus, std::size_t width) {
    auto perm = inc_mod_permutation(modulus, width);
    const auto q = synth_detail::iota(0, width);
    Circuit c = synth_detail::named(width, {{"CNT", q}});
    c.unitary(perm, q);
    c.set_metadata("synth incmod M=" + std::to_string(modulus));
    return {std::move(c), q, {}};
}

/// W = (H x I) CNOT (H x I): flips qubit 1 iff qubit 0 is in |->.
inline SynthResult gadget_w_basis() {
    Circuit c = synth_detail::named(2, {{"CTRL", {0}}, {"TGT", {1}}});
    c.h(0).cx(0, 1).h(0);
    c.set_metadata("gadget w");
    return {std::move(c), {0, 1}, {}};
}

/// q2 ^= q0 OR q1 on basis states, with q0 and q1 restored:
/// X q0, X q1, Toffoli(q0, q1 -> q2), X q0, X q1, X q2.
inline SynthResult gadget_or3() {
    Circuit c = synth_detail::named(3, {{"IN", {0, 1}}, {"OUT", {2}}});
    c.x(0).x(1);
    c.gate(GateKind::kCX, {1, 2}, {{0, true}});
    c.x(0).x(1).x(2);
    c.set_metadata("gadget or3");
    return {std::move(c), {0, 1, 2}, {}};
}

// --------------------------------------------------------------------------
// Dense operators by definition, used by the CLI to report residuals.

namespace reference {

inline Matrix permutation_matrix(std::size_t dim, const std::function<std::uint64_t(std::uint64_t)> &f) {
    Matrix m = Matrix::Zero(dim, dim);
    for (std::uint64_t j = 0; j < dim; j++) {
        m(f(j), j) = 1;
    }
    return m;
}

/// Operator on (controls, targets) applying `base` when the control
/// predicate holds; controls are the low bits.
inline Matrix controlled(const Matrix &base, std::size_t k, ControlMode mode, const std::vector<bool> &pol = {}) {
    const std::size_t tdim = base.rows();
    const std::size_t cdim = std::size_t{1} << k;
    Matrix m = Matrix::Zero(cdim * tdim, cdim * tdim);
    for (std::uint64_t cv = 0; cv < cdim; cv++) {
        bool fire = mode == ControlMode::kAnd;
        if (mode == ControlMode::kAnd) {
            for (std::size_t i = 0; i < k; i++) {
                const bool want = pol.empty() ? true : static_cast<bool>(pol[i]);
                fire = fire && (((cv >> i) & 1) == (want ? 1u : 0u));
            }
        } else {
            fire = cv != 0;
        }
        for (std::uint64_t r = 0; r < tdim; r++) {
            for (std::uint64_t c = 0; c < tdim; c++) {
                m(cv + cdim * r, cv + cdim * c) = fire ? base(r, c) : (r == c ? Complex(1) : Complex(0));
            }
        }
    }
    return m;
}

inline Matrix increment(std::size_t n) {
    const std::size_t dim = std::size_t{1} << n;
    return permutation_matrix(dim, [&](std::uint64_t j) { return (j + 1) % dim; });
}

inline Matrix inc_mod(std::size_t modulus, std::size_t width) {
    return permutation_matrix(std::size_t{1} << width,
                              [&](std::uint64_t j) { return j < modulus ? (j + 1) % modulus : j; });
}

}  // namespace reference

}  // namespace postforge
