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

/// Circuit builders for the postselection-elimination pipeline.
///
/// Qubit layout, low index to high:
///
///   R1 | R2 (m-1) | COIN | LCU | K | C | D | ANC (q1 q2 q3) | W
///
/// R1..R2 hold the automaton configuration (R1 is the accept flag), COIN is
/// the reusable coin, LCU the block-encoding ancilla. Stage circuits use
/// prefixes of this layout: Q_x on (R, K), V_x adds C, U_+/U_- add D and ANC,
/// the final circuit adds W.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "postforge/automaton.hpp"
#include "postforge/block_encoding.hpp"
#include "postforge/circuit.hpp"
#include "postforge/oracle.hpp"
#include "postforge/rewrite.hpp"
#include "postforge/simulator.hpp"
#include "postforge/synth.hpp"

namespace postforge {

inline constexpr unsigned kMaxRepetitions = 8;

inline std::size_t bits_for(std::uint64_t max_value) {
    std::size_t w = 0;
    while ((std::uint64_t{1} << w) <= max_value) {
        w++;
    }
    return std::max<std::size_t>(w, 1);
}

struct RegisterLayout {
    unsigned m = 1;      // configuration width
    unsigned steps = 1;  // T
    unsigned r = 1;
    std::size_t k_width = 1;
    std::size_t c_width = 1;
    std::size_t d_width = 1;

    std::size_t ell() const {
        return m + 2;
    }
    Qubit flag() const {
        return 0;
    }
    Qubit coin() const {
        return m;
    }
    Qubit lcu() const {
        return m + 1;
    }
    Qubit k_start() const {
        return static_cast<Qubit>(ell());
    }
    Qubit c_start() const {
        return static_cast<Qubit>(k_start() + k_width);
    }
    Qubit d_start() const {
        return static_cast<Qubit>(c_start() + c_width);
    }
    Qubit anc_start() const {
        return static_cast<Qubit>(d_start() + d_width);
    }
    Qubit w() const {
        return static_cast<Qubit>(anc_start() + 3);
    }

    std::size_t width_qx() const {
        return ell() + k_width;
    }
    std::size_t width_vx() const {
        return width_qx() + c_width;
    }
    std::size_t width_accumulator() const {
        return width_vx() + d_width + 3;
    }
    std::size_t width_final() const {
        return width_accumulator() + 1;
    }

    std::vector<Qubit> span(Qubit start, std::size_t len) const {
        std::vector<Qubit> v;
        for (std::size_t i = 0; i < len; i++) {
            v.push_back(start + static_cast<Qubit>(i));
        }
        return v;
    }
    std::vector<Qubit> r_qubits() const {
        return span(0, ell());
    }
    std::vector<Qubit> k_qubits() const {
        return span(k_start(), k_width);
    }
    std::vector<Qubit> c_qubits() const {
        return span(c_start(), c_width);
    }
    std::vector<Qubit> d_qubits() const {
        return span(d_start(), d_width);
    }
    /// Postselections in the reference Q_x: T coin rounds, m-1 collapses, one combiner.
    std::size_t qx_postselects() const {
        return steps + m;
    }

    /// Declares the registers that fit in `width` qubits.
    void declare(Circuit &c) const {
        const std::size_t n = c.num_qubits();
        c.add_register("R1", flag(), 1);
        if (m > 1) {
            c.add_register("R2", 1, m - 1);
        }
        c.add_register("COIN", coin(), 1);
        c.add_register("LCU", lcu(), 1);
        c.add_register("K", k_start(), k_width);
        if (n >= width_vx()) {
            c.add_register("C", c_start(), c_width);
        }
        if (n >= width_accumulator()) {
            c.add_register("D", d_start(), d_width);
            c.add_register("ANC", anc_start(), 3);
        }
        if (n >= width_final()) {
            c.add_register("W", w(), 1);
        }
    }
};

/// Smallest layout for `aut` at repetition count r. C is the narrowest
/// counter exceeding the postselect count; D is wide enough that its event
/// count (at most two per loop iteration) never wraps back to zero.
inline RegisterLayout make_layout(const Automaton &aut, unsigned r, std::optional<std::size_t> c_width = {},
                                  std::optional<std::size_t> d_width = {}) {
    aut.validate();
    if (r < 1 || r > kMaxRepetitions) {
        throw InvalidArgument("repetition count must be in [1, " + std::to_string(kMaxRepetitions) + "]");
    }
    RegisterLayout l;
    l.m = aut.width;
    l.steps = aut.steps;
    l.r = r;
    l.k_width = bits_for(aut.steps);
    l.c_width = c_width.value_or(bits_for(l.qx_postselects() + 1));
    l.d_width = d_width.value_or(bits_for(2ull * (aut.steps + 1) * r));
    if (l.c_width == 0 || l.d_width == 0) {
        throw InvalidArgument("counter widths must be >= 1");
    }
    return l;
}

namespace pipeline_detail {

inline std::string provenance(const Automaton &aut, const RegisterLayout &l, const std::string &stage) {
    return "stage=" + stage + " p_a=" + accept_probability_unchecked(aut).to_string() + " m=" +
           std::to_string(aut.width) + " T=" + std::to_string(aut.steps) + " r=" + std::to_string(l.r) +
           " N_C=" + std::to_string(l.c_width) + " N_D=" + std::to_string(l.d_width);
}

inline OpaquePtr increment_gate(std::size_t width) {
    std::vector<std::uint64_t> perm(std::size_t{1} << width);
    for (std::size_t j = 0; j < perm.size(); j++) {
        perm[j] = (j + 1) % perm.size();
    }
    return make_permutation("inc_" + std::to_string(width), width, std::move(perm));
}

inline std::vector<Control> all_zero(const std::vector<Qubit> &qs) {
    std::vector<Control> v;
    for (Qubit q : qs) {
        v.push_back({q, false});
    }
    return v;
}

inline void check_layout(const Automaton &aut, const RegisterLayout &l) {
    if (l.m != aut.width || l.steps != aut.steps) {
        throw LayoutMismatch("layout was made for a different automaton");
    }
    if ((std::uint64_t{1} << l.k_width) < aut.steps + 1) {
        throw LayoutTooSmall("K register cannot hold T+1 values");
    }
}

}  // namespace pipeline_detail

/// Combiner for index k: maps flag amplitudes (1-p, p) to
/// (1/2 + p, 2^(T-k) (1/2 - p)).
inline Eigen::Matrix2d combiner_matrix(unsigned steps, unsigned k) {
    const double g = std::ldexp(1.0, static_cast<int>(steps) - static_cast<int>(k) - 1);
    Eigen::Matrix2d m;
    m << 0.5, 1.5, g, -g;
    return m;
}

/// The coin-round permutation on (config, coin): (c, b) -> (perm_b(c), b).
inline OpaquePtr coin_step_gate(const Automaton &aut) {
    const std::size_t nc = aut.num_configs();
    std::vector<std::uint64_t> perm(2 * nc);
    for (std::size_t b = 0; b < 2; b++) {
        for (std::size_t c = 0; c < nc; c++) {
            perm[c + nc * b] = aut.perm(static_cast<unsigned>(b))[c] + nc * b;
        }
    }
    return make_permutation("coinstep", aut.width + 1, std::move(perm));
}

/// Postselection circuit on (R, K): from |0>_R |k>_K, conditioning on every
/// postselection leaves a state proportional to Psi_k on R1, zero elsewhere in R.
inline Circuit build_qx(const Automaton &aut, const RegisterLayout &l) {
    const Dyadic p = accept_probability(aut);
    (void)p;
    pipeline_detail::check_layout(aut, l);
    Circuit c(l.width_qx());
    l.declare(c);
    c.set_metadata(pipeline_detail::provenance(aut, l, "qx"));
    for (unsigned i = 0; i < aut.width; i++) {
        if ((aut.init >> i) & 1) {
            c.x(i);
        }
    }
    std::vector<Qubit> step_targets;
    for (unsigned i = 0; i < aut.width; i++) {
        step_targets.push_back(i);
    }
    step_targets.push_back(l.coin());
    const auto step = coin_step_gate(aut);
    for (unsigned t = 0; t < aut.steps; t++) {
        c.h(l.coin());
        c.unitary(step, step_targets);
        c.h(l.coin());
        c.x(l.coin()).post(l.coin()).x(l.coin());
    }
    for (unsigned i = 1; i < aut.width; i++) {
        c.h(i);
        c.x(i).post(i).x(i);
    }
    const auto kq = l.k_qubits();
    for (unsigned k = 0; k <= aut.steps; k++) {
        auto be = block_encode_2x2(combiner_matrix(aut.steps, k), "comb" + std::to_string(k));
        std::vector<Control> pattern;
        for (std::size_t j = 0; j < kq.size(); j++) {
            pattern.push_back({kq[j], static_cast<bool>((k >> j) & 1)});
        }
        c.unitary(be.unitary, {l.flag(), l.lcu()}, pattern);
    }
    c.x(l.lcu()).post(l.lcu()).x(l.lcu());
    return c;
}

/// V_x plus, for each replaced postselection, the instruction counts after
/// which the Q_x prefix and the V_x prefix correspond.
struct TracedVx {
    Circuit circuit;
    std::vector<std::size_t> qx_prefix;
    std::vector<std::size_t> vx_prefix;
};

/// Replaces every `post q 1` of `qx` with X q, controlled INC on a fresh
/// counter register C of width `counter_width`, X q.
inline TracedVx build_vx_traced(const Circuit &qx, std::size_t counter_width) {
    const std::size_t posts = qx.postselect_count();
    if (counter_width == 0 || counter_width >= 32 || (std::uint64_t{1} << counter_width) - 1 <= posts) {
        throw CounterTooSmall("counter of width " + std::to_string(counter_width) + " cannot count " +
                              std::to_string(posts) + " postselections without wrapping");
    }
    const std::size_t base = qx.num_qubits();
    Circuit out(base + counter_width);
    for (const auto &r : qx.registers()) {
        out.add_register(r.name, r.start, r.length);
    }
    out.add_register("C", static_cast<Qubit>(base), counter_width);
    out.set_metadata(qx.metadata() + " unitarized");
    std::vector<Qubit> counter;
    for (std::size_t i = 0; i < counter_width; i++) {
        counter.push_back(static_cast<Qubit>(base + i));
    }
    const auto inc = pipeline_detail::increment_gate(counter_width);
    TracedVx traced{Circuit(0), {}, {}};
    for (std::size_t i = 0; i < qx.instructions().size(); i++) {
        const auto &ins = qx.instructions()[i];
        if (const auto *p = std::get_if<Postselect>(&ins)) {
            if (p->target != PostTarget::kOne) {
                throw InvalidArgument("V_x needs every postselection desugared to target 1");
            }
            out.x(p->qubit);
            out.unitary(inc, counter, {{p->qubit, true}});
            out.x(p->qubit);
            traced.qx_prefix.push_back(i + 1);
            traced.vx_prefix.push_back(out.instructions().size());
        } else if (std::holds_alternative<Measure>(ins)) {
            throw InvalidArgument("V_x input must not contain measurements");
        } else {
            out.add(ins);
        }
    }
    traced.circuit = std::move(out);
    return traced;
}

inline Circuit build_vx(const Circuit &qx, std::size_t counter_width) {
    return build_vx_traced(qx, counter_width).circuit;
}

enum class Sign { kPlus, kMinus };

/// The accumulator loop, T+1 iterations on (R, K, C, D, ANC), then the K
/// increments undone. Its all-zero amplitude concentrates
/// gamma * prod_k alpha_k^2 (sign +) or gamma * prod_k beta_k^2 (sign -).
inline Circuit build_accumulator(const Circuit &vx, const RegisterLayout &l, Sign sign) {
    if (vx.num_qubits() != l.width_vx()) {
        throw LayoutMismatch("V_x width does not match the layout");
    }
    Circuit u(l.width_accumulator());
    l.declare(u);
    u.set_metadata(vx.metadata() + (sign == Sign::kPlus ? " accumulator=+" : " accumulator=-"));
    const Qubit q1 = l.anc_start();
    const Qubit q2 = q1 + 1;
    const Qubit q3 = q1 + 2;
    const auto cq = l.c_qubits();
    const auto dq = l.d_qubits();
    const auto kq = l.k_qubits();
    auto rc = l.r_qubits();
    rc.insert(rc.end(), cq.begin(), cq.end());
    const auto inc_d = pipeline_detail::increment_gate(l.d_width);
    const auto dec_d = inverse_opaque(*inc_d);
    const auto step_k = inc_mod_permutation(l.steps + 1, l.k_width);

    Circuit mark(l.width_accumulator());
    // q1 = [C != 0]
    mark.x(q1);
    mark.gate(GateKind::kX, {q1}, pipeline_detail::all_zero(cq));
    // q2 = [R1 in the rejected basis state]
    mark.append(remap(gadget_w_basis().circuit, {l.flag(), q2}, mark.num_qubits()));
    if (sign == Sign::kMinus) {
        mark.x(q2);
    }
    // q3 = q1 OR q2
    mark.append(remap(gadget_or3().circuit, {q1, q2, q3}, mark.num_qubits()));

    Circuit vx_wide = vx;
    vx_wide.widen(l.width_accumulator());
    const Circuit undo_vx = controlled_wrap(inverse(vx_wide), dq, std::vector<bool>(dq.size(), false));

    for (unsigned it = 0; it <= l.steps; it++) {
        u.append(vx);
        u.append(mark);
        u.unitary(inc_d, dq, {{q3, true}});
        u.append(inverse(mark));
        u.append(undo_vx);
        u.unitary(inc_d, dq);
        u.unitary(dec_d, dq, pipeline_detail::all_zero(rc));
        u.unitary(step_k, kq);
    }
    const auto unstep_k = inverse_opaque(*step_k);
    for (unsigned it = 0; it <= l.steps; it++) {
        u.unitary(unstep_k, kq);
    }
    return u;
}

/// H on W, (U_+)^r if W = 0, (U_-)^r if W = 1, then postselect D = 0 and
/// measure W. W = 0 favors p_a < 1/2 (reject), W = 1 favors accept.
inline Circuit build_final(const Circuit &uplus, const Circuit &uminus, const RegisterLayout &l) {
    if (uplus.num_qubits() != uminus.num_qubits() || uplus.num_qubits() != l.width_accumulator()) {
        throw LayoutMismatch("accumulators do not share the layout");
    }
    if (l.r < 1) {
        throw InvalidArgument("repetition count must be >= 1");
    }
    Circuit f(l.width_final());
    l.declare(f);
    f.set_metadata(uplus.metadata() + " final");
    const Qubit w = l.w();
    f.h(w);
    for (const auto &[u, pol] : {std::pair{&uplus, false}, std::pair{&uminus, true}}) {
        Circuit wide = *u;
        wide.widen(l.width_final());
        const Circuit body = controlled_wrap(repeat(wide, l.r), {w}, {pol});
        f.append(body);
    }
    for (Qubit d : l.d_qubits()) {
        f.x(d);
    }
    for (Qubit d : l.d_qubits()) {
        f.post(d);
    }
    f.measure(w, "W");
    f.set_terminal_measures(true);
    return f;
}

struct GammaSet {
    std::vector<double> gamma_k;
    double gamma = 1;  // prod gamma_k^2
    double worst_residual = 0;
};

/// gamma_k for each k from V_x runs on |0>_R |0>_C |k>_K.
inline GammaSet measure_gammas(const Circuit &vx, const Spectrum &s, const RegisterLayout &l) {
    GammaSet g;
    for (unsigned k = 0; k <= l.steps; k++) {
        const std::uint64_t base = std::uint64_t{k} << l.k_start();
        const auto rep = run(vx, base);
        const auto m = measure_gamma(rep.state(), s, k, {l.flag(), l.c_qubits(), base});
        g.gamma_k.push_back(m.gamma);
        g.gamma *= m.gamma * m.gamma;
        g.worst_residual = std::max(g.worst_residual, m.proportionality_residual);
    }
    return g;
}

struct PipelineOptions {
    unsigned r = 1;
    std::optional<std::size_t> c_width;
    std::optional<std::size_t> d_width;
    bool measure_gamma = true;
};

struct BuildArtifacts {
    RegisterLayout layout;
    Dyadic p_a;
    Spectrum spectrum;
    Circuit qx;
    Circuit vx;
    Circuit uplus;
    Circuit uminus;
    Circuit final;
    GammaSet gammas;
};

inline BuildArtifacts build_pipeline(const Automaton &aut, const PipelineOptions &opt = {}) {
    BuildArtifacts a;
    a.p_a = accept_probability(aut);
    a.layout = make_layout(aut, opt.r, opt.c_width, opt.d_width);
    a.spectrum = make_spectrum(a.p_a, aut.steps);
    a.qx = build_qx(aut, a.layout);
    a.vx = build_vx(a.qx, a.layout.c_width);
    if (opt.measure_gamma) {
        a.gammas = measure_gammas(a.vx, a.spectrum, a.layout);
    }
    a.uplus = build_accumulator(a.vx, a.layout, Sign::kPlus);
    a.uminus = build_accumulator(a.vx, a.layout, Sign::kMinus);
    a.final = build_final(a.uplus, a.uminus, a.layout);
    a.uplus.set_metadata(pipeline_detail::provenance(aut, a.layout, "uplus"));
    a.uminus.set_metadata(pipeline_detail::provenance(aut, a.layout, "uminus"));
    a.vx.set_metadata(pipeline_detail::provenance(aut, a.layout, "vx"));
    a.final.set_metadata(pipeline_detail::provenance(aut, a.layout, "final"));
    return a;
}

// --------------------------------------------------------------------------
// One-clean-qubit wrappers.

/// Wraps a unitary-then-terminal circuit on m qubits for the one-clean-qubit
/// model: the clean qubit (index m) is flipped iff every dirty qubit is zero,
/// then `ux` runs, then clean and `post_qubit` are postselected and `output`
/// measured.
inline Circuit wrap_dqc1(const Circuit &ux, Qubit post_qubit, Qubit output) {
    const std::size_t m = ux.num_qubits();
    if (post_qubit >= m || output >= m) {
        throw InvalidArgument("postselect/output qubit out of range");
    }
    bool seen_marker = false;
    for (const auto &ins : ux.instructions()) {
        if (std::holds_alternative<Gate>(ins)) {
            if (seen_marker) {
                throw NonTerminalMarkers("gate after a postselect/measure marker");
            }
        } else {
            seen_marker = true;
        }
    }
    Circuit c(m + 1);
    for (const auto &r : ux.registers()) {
        c.add_register(r.name, r.start, r.length);
    }
    if (!ux.registers().empty()) {
        c.add_register("CLEAN", static_cast<Qubit>(m), 1);
    }
    c.set_metadata(ux.metadata() + " dqc1");
    std::vector<Qubit> dirty;
    for (std::size_t q = 0; q < m; q++) {
        dirty.push_back(static_cast<Qubit>(q));
    }
    const Qubit clean = static_cast<Qubit>(m);
    c.gate(GateKind::kX, {clean}, pipeline_detail::all_zero(dirty));
    for (const auto &ins : ux.instructions()) {
        if (std::holds_alternative<Gate>(ins)) {
            c.add(ins);
        }
    }
    c.post(clean);
    c.post(post_qubit);
    c.measure(output, "W");
    c.set_terminal_measures(true);
    return c;
}

/// m Bell pairs (qubit i with partner m+i); the kept half (0..m-1) is
/// measured as b0..b{m-1}.
inline Circuit bell_mixed_prep(std::size_t m) {
    if (m < 1) {
        throw InvalidArgument("bell_mixed_prep needs m >= 1");
    }
    Circuit c(2 * m);
    c.add_register("KEPT", 0, m);
    c.add_register("PARTNER", static_cast<Qubit>(m), m);
    for (std::size_t i = 0; i < m; i++) {
        c.h(static_cast<Qubit>(i));
        c.cx(static_cast<Qubit>(i), static_cast<Qubit>(m + i));
    }
    for (std::size_t i = 0; i < m; i++) {
        c.measure(static_cast<Qubit>(i), "b" + std::to_string(i));
    }
    c.set_terminal_measures(true);
    return c;
}

// --------------------------------------------------------------------------
// End-to-end decision.

enum class Verdict { kReject, kAccept };

inline const char *verdict_name(Verdict v) {
    return v == Verdict::kAccept ? "accept" : "reject";
}

struct DecisionReport {
    Verdict verdict = Verdict::kReject;
    Verdict truth = Verdict::kReject;
    Dyadic p_a;
    unsigned r = 1;
    double p_post = 0;
    double p_w0 = 0;
    double p_w1 = 0;
    double p_correct = 0;
    double bound = 0;      // 1 - 2^-r
    double threshold = 0;  // 2^-r
    OutcomePair predicted;
    std::size_t qubits = 0;
    bool dqc1 = false;

    bool correct() const {
        return verdict == truth;
    }
    bool bound_met() const {
        return p_correct > bound && (r != 1 || p_correct > kSingleRoundBound);
    }
};

inline DecisionReport decide(const Automaton &aut, unsigned r, bool dqc1 = false) {
    PipelineOptions opt;
    opt.r = r;
    opt.measure_gamma = false;
    const BuildArtifacts a = build_pipeline(aut, opt);
    DecisionReport d;
    d.p_a = a.p_a;
    d.r = r;
    d.truth = a.p_a > Dyadic::half() ? Verdict::kAccept : Verdict::kReject;
    d.bound = repetition_bound(r);
    d.threshold = std::ldexp(1.0, -static_cast<int>(r));
    d.predicted = predicted_conditional_acceptance(a.spectrum, r);
    d.dqc1 = dqc1;
    SimulationReport rep;
    if (dqc1) {
        const Circuit agg = aggregate_postselections(a.final);
        const Qubit p = static_cast<Qubit>(agg.num_qubits() - 1);
        const Circuit wrapped = wrap_dqc1(agg, p, a.layout.w());
        d.qubits = wrapped.num_qubits();
        rep = run_dqc1_mixed(wrapped, static_cast<Qubit>(agg.num_qubits()));
    } else {
        d.qubits = a.final.num_qubits();
        rep = run(a.final, 0);
    }
    d.p_post = rep.p_post;
    std::tie(d.p_w0, d.p_w1) = rep.conditional("W");
    d.verdict = d.p_w1 > d.p_w0 ? Verdict::kAccept : Verdict::kReject;
    d.p_correct = d.truth == Verdict::kAccept ? d.p_w1 : d.p_w0;
    return d;
}

inline std::string format_decision(const DecisionReport &d) {
    std::string out;
    out += "verdict " + std::string(verdict_name(d.verdict)) + "\n";
    out += "p_a " + d.p_a.to_string() + "\n";
    out += "p_post " + format_statistic(d.p_post) + "\n";
    out += "p_correct " + format_statistic(d.p_correct) + "\n";
    out += "bound " + format_statistic(d.bound) + "\n";
    out += "d " + format_statistic(d.threshold) + "\n";
    out += "truth " + std::string(verdict_name(d.truth)) + "\n";
    out += "cond W " + format_statistic(d.p_w0) + " " + format_statistic(d.p_w1) + "\n";
    out += "predicted W " + format_statistic(d.predicted.p0) + " " + format_statistic(d.predicted.p1) + "\n";
    out += "qubits " + std::to_string(d.qubits) + "\n";
    return out;
}

}  // namespace postforge
