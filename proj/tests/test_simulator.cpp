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

#include <random>

#include "oracles.hpp"
#include "postforge/circuit.hpp"
#include "postforge/simulator.hpp"
#include "postforge/synth.hpp"

using namespace postforge;

namespace {

/// Random circuit over the whole gate set, including multi-controlled and
/// opaque gates, for property checks.
Circuit random_circuit(std::size_t n, std::size_t gates, std::mt19937 &rng) {
    Circuit c(n);
    std::uniform_int_distribution<int> kind(0, 6);
    std::uniform_int_distribution<Qubit> qubit(0, static_cast<Qubit>(n - 1));
    auto swap4 = make_permutation("rot", 2, {1, 2, 3, 0});
    Matrix m(4, 4);
    const double s = 0.5;
    m << s, s, s, s, s, Complex(0, s), -s, Complex(0, -s), s, -s, s, -s, s, Complex(0, -s), -s, Complex(0, s);
    auto fourier = make_opaque_matrix("qft2", m);
    for (std::size_t i = 0; i < gates; i++) {
        const Qubit a = qubit(rng);
        Qubit b = qubit(rng);
        while (b == a) {
            b = qubit(rng);
        }
        Qubit ctl = qubit(rng);
        while (ctl == a || ctl == b) {
            ctl = qubit(rng);
        }
        switch (kind(rng)) {
            case 0: c.h(a); break;
            case 1: c.t(a); break;
            case 2: c.tdg(a).x(b); break;
            case 3: c.cx(a, b); break;
            case 4: c.gate(GateKind::kH, {a}, {{b, static_cast<bool>(rng() & 1)}}); break;
            case 5: c.unitary(swap4, {a, b}, {{ctl, static_cast<bool>(rng() & 1)}}); break;
            default: c.unitary(fourier, {a, b}); break;
        }
    }
    return c;
}

oracle::Vec as_vec(const StateVector &s) {
    oracle::Vec v(s.size());
    for (std::size_t i = 0; i < s.size(); i++) {
        v(i) = s[i];
    }
    return v;
}

}  // namespace

TEST(Apply, HadamardOnZero) {
    StateVector s(1);
    apply_instruction(s, make_gate(GateKind::kH, {0}));
    EXPECT_NEAR(s[0].real(), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s[1].real(), 1 / std::sqrt(2.0), 1e-15);
}

TEST(Apply, PostselectProjectsWithoutRenormalizing) {
    StateVector s = StateVector::from_amplitudes({0.6, 0.8});
    apply_instruction(s, Postselect{0, PostTarget::kOne});
    EXPECT_EQ(s[0], Complex(0));
    EXPECT_NEAR(s[1].real(), 0.8, 1e-15);
    EXPECT_NEAR(s.squared_norm(), 0.64, 1e-15);
}

TEST(Apply, PostselectOnOrthogonalStateThrows) {
    StateVector s(1);
    EXPECT_THROW(apply_instruction(s, Postselect{0, PostTarget::kOne}), ZeroOverlap);
    StateVector t = StateVector::from_amplitudes({1, 0});
    EXPECT_THROW(apply_instruction(t, Postselect{0, PostTarget::kOne}), ZeroOverlap);
}

TEST(Apply, PlusAndMinusTargetsMatchProjector) {
    for (PostTarget t : {PostTarget::kPlus, PostTarget::kMinus}) {
        StateVector s = StateVector::from_amplitudes({0.6, Complex(0, 0.8)});
        apply_instruction(s, Postselect{0, t});
        const double sign = t == PostTarget::kPlus ? 1 : -1;
        const Complex overlap = (0.6 + sign * Complex(0, 0.8)) / std::sqrt(2.0);
        EXPECT_NEAR(std::abs(s[0] - overlap / std::sqrt(2.0)), 0, 1e-15);
        EXPECT_NEAR(std::abs(s[1] - sign * overlap / std::sqrt(2.0)), 0, 1e-15);
    }
}

TEST(Run, EmptyCircuitHasUnitPostProbability) {
    Circuit c(2);
    EXPECT_EQ(run(c).p_post, 1.0);
}

TEST(Run, PostThenMeasureIsCertain) {
    Circuit c(1);
    c.h(0).post(0).measure(0, "acc");
    const auto rep = run(c);
    EXPECT_NEAR(rep.p_post, 0.5, 1e-15);
    EXPECT_NEAR(rep.conditional("acc").second, 1.0, 1e-15);
    EXPECT_NEAR(rep.conditional("acc").first, 0.0, 1e-15);
}

TEST(Run, ConditionalProbabilitiesSumToOneAndJointIsConsistent) {
    std::mt19937 rng(7);
    Circuit c = random_circuit(5, 40, rng);
    c.post(4).measure(0, "a").measure(1, "b");
    const auto rep = run(c);
    const auto [a0, a1] = rep.conditional("a");
    EXPECT_NEAR(a0 + a1, 1.0, 1e-12);
    double joint = 0;
    for (std::uint64_t o = 0; o < 4; o++) {
        joint += rep.joint_conditional(o);
    }
    EXPECT_NEAR(joint, 1.0, 1e-12);
    EXPECT_NEAR(rep.joint_conditional(2) + rep.joint_conditional(3), rep.conditional("b").second, 1e-12);
}

TEST(Run, RegisterNonzeroMass) {
    Circuit c(3);
    c.add_register("A", 0, 1).add_register("B", 1, 2);
    c.h(1);
    const auto rep = run(c);
    EXPECT_NEAR(rep.nonzero_mass("B"), 0.5, 1e-15);
    EXPECT_NEAR(rep.nonzero_mass("A"), 0.0, 1e-15);
    EXPECT_NE(format_report(rep).find("mass B!=0 0.5"), std::string::npos);
}

TEST(Run, NonTerminalMeasureIsRejected) {
    Circuit c(1);
    c.measure(0, "m").h(0);
    EXPECT_THROW(run(c), NonTerminalMarkers);
}

TEST(Run, MatchesBruteForceOperatorOnRandomCircuits) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; trial++) {
        Circuit c = random_circuit(5, 30, rng);
        const std::uint64_t input = rng() % 32;
        const auto rep = run(c, input);
        const oracle::Vec expect = oracle::circuit_operator(c).col(static_cast<Eigen::Index>(input));
        EXPECT_LT((as_vec(rep.state()) - expect).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
    }
}

TEST(Run, KnownBitTrackingDoesNotChangeResults) {
    // from_amplitudes starts with nothing known, so every kernel walks the
    // full vector; results must agree exactly with the tracked run.
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; trial++) {
        Circuit c = random_circuit(6, 40, rng);
        c.post(static_cast<Qubit>(trial % 6));
        const std::uint64_t input = rng() % 64;
        std::vector<Complex> amps(64, 0.0);
        amps[input] = 1.0;
        SimulationReport a;
        SimulationReport b;
        try {
            a = run(c, input);
        } catch (const ZeroOverlap &) {
            EXPECT_THROW(run(c, StateVector::from_amplitudes(amps)), ZeroOverlap);
            continue;
        }
        b = run(c, StateVector::from_amplitudes(amps));
        EXPECT_EQ(a.state().amplitudes(), b.state().amplitudes()) << "trial " << trial;
        EXPECT_EQ(a.p_post, b.p_post);
    }
}

TEST(Run, ControlOnlyBranchSplitMatchesOperator) {
    // Qubit 3 is only a control after its Hadamard, so the run splits on it.
    std::mt19937 rng(3);
    Circuit body = random_circuit(3, 30, rng);
    Circuit c(4);
    c.h(3);
    for (const auto &ins : body.instructions()) {
        Gate g = std::get<Gate>(ins);
        g.controls.push_back({3, static_cast<bool>(rng() & 1)});
        c.add(g);
    }
    c.post(0).measure(3, "w");
    const auto rep = run(c);
    const oracle::Vec expect = oracle::circuit_operator(c).col(0);
    EXPECT_LT((as_vec(rep.state()) - expect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(rep.p_post, expect.squaredNorm(), 1e-12);
}

TEST(Properties, NormConservationOverManyGates) {
    std::mt19937 rng(1);
    const Circuit c = random_circuit(8, 100000, rng);
    StateVector s(8);
    for (const auto &ins : c.instructions()) {
        apply_instruction(s, ins);
    }
    EXPECT_NEAR(s.squared_norm(), 1.0, 1e-12);
}

TEST(Properties, LinearityOnUnitaryCircuits) {
    std::mt19937 rng(2);
    const Circuit c = random_circuit(4, 50, rng);
    const Complex a(0.3, 0.4);
    const Complex b(-0.5, 0.1);
    const auto r1 = run(c, 3).state();
    const auto r2 = run(c, 9).state();
    std::vector<Complex> mix(16, 0.0);
    mix[3] = a;
    mix[9] = b;
    const auto r = run(c, StateVector::from_amplitudes(mix)).state();
    for (std::size_t i = 0; i < 16; i++) {
        EXPECT_NEAR(std::abs(r[i] - (a * r1[i] + b * r2[i])), 0, 1e-12);
    }
}

TEST(Properties, PostselectionsOnDistinctQubitsCommute) {
    std::mt19937 rng(4);
    Circuit c = random_circuit(4, 30, rng);
    Circuit x = c;
    Circuit y = c;
    x.post(0).post(2, PostTarget::kPlus);
    y.post(2, PostTarget::kPlus).post(0);
    const auto sx = run(x).state();
    const auto sy = run(y).state();
    for (std::size_t i = 0; i < 16; i++) {
        EXPECT_NEAR(std::abs(sx[i] - sy[i]), 0, 1e-12);
    }
}

TEST(Properties, RunsAreBitIdentical) {
    std::mt19937 rng(9);
    Circuit c = random_circuit(10, 200, rng);
    c.post(1).measure(2, "m");
    const auto a = run(c);
    const auto b = run(c);
    EXPECT_EQ(format_report(a), format_report(b));
    EXPECT_EQ(a.state().amplitudes(), b.state().amplitudes());
}

TEST(UnitaryOf, BasicGates) {
    Circuit x(1);
    x.x(0);
    const Matrix u = unitary_of(x);
    EXPECT_EQ(u(0, 1), Complex(1));
    EXPECT_EQ(u(1, 0), Complex(1));
    Circuit hh(1);
    hh.h(0).h(0);
    EXPECT_LT(oracle::max_abs_diff(unitary_of(hh), Matrix::Identity(2, 2)), 1e-12);
}

TEST(UnitaryOf, IncrementIsCyclicShift) {
    const auto inc = synth_inc_pow2(3);
    const Matrix u = unitary_of(inc.circuit);
    const auto shift = oracle::permutation(8, [](std::uint64_t j) { return (j + 1) % 8; });
    // Restricted to ancilla = 0 (the synth uses one ladder ancilla at n=3).
    const std::size_t d = 8;
    EXPECT_LT(oracle::max_abs_diff(u.topLeftCorner(d, d), shift), 1e-12);
}

TEST(UnitaryOf, Limits) {
    EXPECT_THROW(unitary_of(Circuit(11)), TooWide);
    Circuit c(1);
    c.post(0);
    EXPECT_THROW(unitary_of(c), NonUnitaryInput);
    EXPECT_THROW(StateVector(25), TooWide);
}

TEST(RestrictedUnitary, ReportsLeakage) {
    Circuit c(2);
    c.cx(0, 1);  // writes into qubit 1, which is not a data qubit
    const auto r = restricted_unitary(c, {0});
    EXPECT_NEAR(r.leakage, 1.0, 1e-15);
}

TEST(Dqc1Mixed, IdentityKeepsCleanQubitAtZero) {
    Circuit c(3);
    c.measure(2, "clean");
    const auto rep = run_dqc1_mixed(c, 2);
    EXPECT_NEAR(rep.conditional("clean").first, 1.0, 1e-15);
    EXPECT_NEAR(rep.p_post, 1.0, 1e-15);
}

TEST(Dqc1Mixed, MixedQubitIsUniform) {
    Circuit c(2);
    c.measure(0, "m");
    const auto rep = run_dqc1_mixed(c, 1);
    EXPECT_NEAR(rep.conditional("m").first, 0.5, 1e-15);
    EXPECT_NEAR(rep.conditional("m").second, 0.5, 1e-15);
}

TEST(Dqc1Mixed, MatchesExplicitEnumeration) {
    std::mt19937 rng(12);
    Circuit c = random_circuit(4, 30, rng);
    c.post(1).measure(0, "o");
    const auto rep = run_dqc1_mixed(c, 3);
    double p_post = 0;
    double mass1 = 0;
    const oracle::Mat op = oracle::circuit_operator(c);
    for (std::uint64_t b = 0; b < 8; b++) {
        const oracle::Vec out = op.col(static_cast<Eigen::Index>(b));
        for (std::uint64_t i = 0; i < 16; i++) {
            p_post += std::norm(out(i)) / 8;
            if (i & 1) {
                mass1 += std::norm(out(i)) / 8;
            }
        }
    }
    EXPECT_NEAR(rep.p_post, p_post, 1e-12);
    EXPECT_NEAR(rep.conditional("o").second, mass1 / p_post, 1e-12);
}

TEST(Dqc1Mixed, AllBranchesFailingThrows) {
    Circuit c(2);
    c.post(1);  // the clean qubit stays |0>
    EXPECT_THROW(run_dqc1_mixed(c, 1), ZeroOverlap);
}

TEST(Report, FormatHasExpectedLines) {
    Circuit c(1);
    c.h(0).measure(0, "m");
    const std::string text = format_report(run(c));
    EXPECT_NE(text.find("p_post 1\n"), std::string::npos);
    EXPECT_NE(text.find("cond m 0.5"), std::string::npos);
}
