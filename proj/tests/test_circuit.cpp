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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "postforge/circuit.hpp"
#include "postforge/circuit_io.hpp"
#include "postforge/rewrite.hpp"
#include "postforge/simulator.hpp"

using namespace postforge;

namespace {

bool has_violation(const Circuit &c, const std::string &needle) {
    for (const auto &v : validate(c)) {
        if (v.message.find(needle) != std::string::npos) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST(Validate, AcceptsRegisteredThreeQubitCircuit) {
    Circuit c(3);
    c.add_register("R", 0, 2).add_register("W", 2, 1);
    c.h(0).cx(0, 1).post(1).measure(2, "w");
    EXPECT_TRUE(validate(c).empty());
}

TEST(Validate, FlagsDuplicateQubitAtPosition) {
    Circuit c(2);
    c.cx(0, 0);
    const auto v = validate(c);
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v.front().position, 0u);
    EXPECT_NE(v.front().message.find("duplicate qubit in instruction 0"), std::string::npos);
}

TEST(Validate, FlagsNonUnitaryOpaqueGate) {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 0) = 2;
    OpaqueUnitary bad{"bad", 1, {}, m};
    Circuit c(1);
    c.unitary(std::make_shared<const OpaqueUnitary>(bad), {0});
    EXPECT_TRUE(has_violation(c, "non-unitary opaque gate in instruction 0"));
}

TEST(Validate, FlagsOutOfRangeAndRegisterProblems) {
    Circuit c(2);
    c.x(5);
    EXPECT_FALSE(validate(c).empty());

    Circuit overlap(3);
    overlap.add_register("A", 0, 2).add_register("B", 1, 2);
    EXPECT_FALSE(validate(overlap).empty());

    Circuit gap(3);
    gap.add_register("A", 0, 2);
    EXPECT_FALSE(validate(gap).empty());
}

TEST(Validate, TerminalDisciplineIsChecked) {
    Circuit c(2);
    c.measure(0, "a").x(1).set_terminal_measures(true);
    EXPECT_TRUE(has_violation(c, "measure before last gate"));
    c.set_terminal_measures(false);
    EXPECT_FALSE(has_violation(c, "measure before last gate"));
}

TEST(Opaque, ShapeAndBijectionChecks) {
    // Non-unitary matrices are representable; validate() reports them.
    Circuit c(1);
    c.unitary(make_opaque_matrix("m", Matrix::Identity(2, 2) * 1.5), {0});
    EXPECT_TRUE(has_violation(c, "non-unitary opaque gate"));
    EXPECT_THROW(make_opaque_matrix("m", Matrix::Identity(3, 3)), InvalidArgument);
    EXPECT_THROW(make_permutation("p", 1, {0, 0}), InvalidArgument);
    EXPECT_THROW(make_permutation("p", 1, {0, 2}), InvalidArgument);
}

TEST(Opaque, InverseLabelsAndContent) {
    auto p = make_permutation("p", 2, {1, 2, 3, 0});
    auto pi = inverse_opaque(*p);
    EXPECT_EQ(pi->label, "p^-1");
    EXPECT_EQ(pi->permutation, (std::vector<std::uint64_t>{3, 0, 1, 2}));
    EXPECT_EQ(inverse_opaque(*pi)->label, "p");
    Matrix m(2, 2);
    m << Complex(0, 1), 0, 0, 1;
    auto u = make_opaque_matrix("u", m);
    auto ud = inverse_opaque(*u);
    EXPECT_EQ(ud->label, "u^dg");
    EXPECT_LT(oracle::max_abs_diff(ud->matrix * u->matrix, Matrix::Identity(2, 2)), 1e-12);
}

TEST(Inverse, CircuitInverseComposesToIdentity) {
    Circuit c(3);
    c.h(0).t(1).cx(0, 2).tdg(2).gate(GateKind::kH, {1}, {{0, false}});
    c.unitary(make_permutation("p", 2, {2, 0, 3, 1}), {1, 2}, {{0, true}});
    Circuit both = c;
    both.append(inverse(c));
    EXPECT_LT(oracle::max_abs_diff(oracle::circuit_operator(both), oracle::Mat::Identity(8, 8)), 1e-12);
    Circuit with_marker(1);
    with_marker.post(0);
    EXPECT_THROW(inverse(with_marker), NonUnitaryInput);
}

TEST(Append, RejectsWiderCircuit) {
    Circuit a(2);
    Circuit b(3);
    EXPECT_THROW(a.append(b), LayoutMismatch);
}

TEST(Stats, CountsByKindAndControls) {
    Circuit c(3);
    c.x(0).cx(0, 1).t(2).tdg(2).h(1).gate(GateKind::kX, {2}, {{0, true}, {1, false}}).post(2).measure(0, "m");
    const auto s = gate_stats(c);
    EXPECT_EQ(s.gates, 6u);
    EXPECT_EQ(s.count("ctrl2-x"), 1u);
    EXPECT_EQ(s.elementary_count(), 4u);
    EXPECT_EQ(s.postselects, 1u);
    EXPECT_EQ(s.measures, 1u);
}

TEST(Format, RoundTripPreservesEverything) {
    Circuit c(4);
    c.add_register("A", 0, 2).add_register("B", 2, 2);
    c.set_metadata("first line\nsecond line");
    Matrix m(2, 2);
    m << 0.6, 0.8, Complex(0, 0.8), Complex(0, -0.6);
    c.unitary(make_opaque_matrix("blk", m), {1}, {{0, false}});
    c.unitary(make_permutation("rot", 2, {1, 2, 3, 0}), {2, 3});
    c.h(0).gate(GateKind::kCX, {1, 2}, {{0, true}, {3, false}});
    c.post(0, PostTarget::kPlus).post(1, PostTarget::kMinus).post(2, PostTarget::kZero).measure(3, "out");
    c.set_terminal_measures(true);
    const std::string text = format_circuit(c);
    const Circuit back = parse_circuit(text);
    EXPECT_EQ(format_circuit(back), text);
    EXPECT_EQ(back.metadata(), c.metadata());
    EXPECT_TRUE(back.terminal_measures());
    EXPECT_LT(oracle::max_abs_diff(oracle::circuit_operator(back), oracle::circuit_operator(c)), 1e-15);
}

TEST(Format, ParsesHandWrittenFile) {
    const Circuit c = parse_circuit(
        "# a comment\n"
        "qubits 2\n"
        "perm swap: 0 2 1 3\n"
        "h 0   # trailing comment\n"
        "ctrl 0 1 : u swap 0 1\n"
        "post 0 1\n"
        "measure 1 m\n");
    ASSERT_EQ(c.instructions().size(), 4u);
    const auto &g = std::get<Gate>(c.instructions()[1]);
    EXPECT_EQ(g.kind, GateKind::kOpaque);
    ASSERT_EQ(g.controls.size(), 1u);
    EXPECT_FALSE(g.controls[0].polarity);
}

TEST(Format, ReportsErrorsWithLineNumbers) {
    try {
        parse_circuit("qubits 2\nh 0\nfrobnicate 1\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    EXPECT_THROW(parse_circuit("h 0\n"), ParseError);
    EXPECT_THROW(parse_circuit("qubits 1\npost 0 2\n"), ParseError);
    EXPECT_THROW(parse_circuit("qubits 1\nu nope 0\n"), ParseError);
    EXPECT_THROW(parse_circuit("qubits 1\nmatrix m\n1,0 0,0\n"), ParseError);
}

TEST(Format, RejectsConflictingLabels) {
    Circuit c(1);
    c.unitary(make_permutation("p", 1, {1, 0}), {0});
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    m *= Complex(0, 1);
    c.unitary(make_opaque_matrix("p", m), {0});
    EXPECT_THROW(format_circuit(c), InvalidArgument);
}

TEST(Desugar, EachTargetMatchesProjectorSemantics) {
    for (PostTarget t : {PostTarget::kZero, PostTarget::kOne, PostTarget::kPlus, PostTarget::kMinus}) {
        Circuit c(2);
        c.h(0).t(0).cx(0, 1).h(0).post(0, t).h(0);
        const Circuit d = desugar_postselections(c);
        for (const auto &ins : d.instructions()) {
            if (const auto *p = std::get_if<Postselect>(&ins)) {
                EXPECT_EQ(p->target, PostTarget::kOne);
            }
        }
        // Same operator: the restore step runs because qubit 0 is used later.
        EXPECT_LT(oracle::max_abs_diff(oracle::circuit_operator(d), oracle::circuit_operator(c)), 1e-12);
    }
}

TEST(Desugar, SkipsRestoreWhenQubitIsDone) {
    Circuit c(1);
    c.h(0).post(0, PostTarget::kZero);
    const Circuit d = desugar_postselections(c);
    ASSERT_EQ(d.instructions().size(), 3u);  // h, x, post
    EXPECT_TRUE(std::holds_alternative<Postselect>(d.instructions().back()));
}

TEST(Aggregate, SinglePostselectionWithSameStatistics) {
    Circuit c(3);
    c.add_register("Q", 0, 3);
    c.h(0).h(1).cx(0, 2).post(0).post(1).measure(2, "o");
    const Circuit a = aggregate_postselections(c);
    EXPECT_EQ(a.num_qubits(), 4u);
    EXPECT_EQ(a.postselect_count(), 1u);
    EXPECT_NE(a.find_register("AGG"), nullptr);
    const auto r1 = run(c);
    const auto r2 = run(a);
    EXPECT_NEAR(r1.p_post, r2.p_post, 1e-12);
    EXPECT_NEAR(r1.conditional("o").second, r2.conditional("o").second, 1e-12);
}

TEST(Aggregate, RejectsNonTerminalPostselection) {
    Circuit c(2);
    c.h(0).post(0).h(0);
    EXPECT_THROW(aggregate_postselections(c), NonTerminalPostselect);
    Circuit ok(2);
    ok.h(0).post(0).cx(0, 1);  // only read as a control afterwards
    EXPECT_NO_THROW(aggregate_postselections(ok));
}

TEST(ControlledWrap, AddsControlToEveryGate) {
    Circuit c(3);
    c.h(0).cx(0, 1);
    const Circuit w = controlled_wrap(c, {2}, {false});
    for (const auto &ins : w.instructions()) {
        const auto &g = std::get<Gate>(ins);
        ASSERT_EQ(g.controls.back().qubit, 2u);
        EXPECT_FALSE(g.controls.back().polarity);
    }
    const auto op = oracle::circuit_operator(w);
    const auto inner = oracle::circuit_operator(
        [] {
            Circuit k(2);
            k.h(0).cx(0, 1);
            return k;
        }());
    EXPECT_LT(oracle::max_abs_diff(op.topLeftCorner(4, 4), inner), 1e-12);
    EXPECT_LT(oracle::max_abs_diff(op.bottomRightCorner(4, 4), oracle::Mat::Identity(4, 4)), 1e-12);
    EXPECT_THROW(controlled_wrap(c, {1}, {true}), InvalidArgument);
    Circuit m(2);
    m.post(0);
    EXPECT_THROW(controlled_wrap(m, {1}, {true}), NonUnitaryInput);
}

TEST(Remap, MovesGatesAndMarkers) {
    Circuit c(2);
    c.cx(0, 1).post(1).measure(0, "a");
    const Circuit r = remap(c, {3, 1}, 4);
    EXPECT_EQ(std::get<Gate>(r.instructions()[0]).targets, (std::vector<Qubit>{3, 1}));
    EXPECT_EQ(std::get<Postselect>(r.instructions()[1]).qubit, 1u);
    EXPECT_EQ(std::get<Measure>(r.instructions()[2]).qubit, 3u);
    EXPECT_THROW(remap(c, {0}, 4), LayoutMismatch);
    EXPECT_THROW(remap(c, {0, 9}, 4), LayoutMismatch);
}

TEST(Repeat, ConcatenatesInstructionLists) {
    Circuit c(1);
    c.h(0).t(0);
    EXPECT_EQ(repeat(c, 3).instructions().size(), 6u);
    EXPECT_TRUE(repeat(c, 0).instructions().empty());
}
