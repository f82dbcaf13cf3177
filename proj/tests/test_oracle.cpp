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

#include <cmath>

#include "oracles.hpp"
#include "postforge/oracle.hpp"

using namespace postforge;

namespace {

Dyadic dy(long long a, unsigned e) {
    return Dyadic{a, e};
}

}  // namespace

TEST(PsiK, CertainAcceptance) {
    const PsiK p = psi_k(dy(2, 1), 1, 1);
    EXPECT_NEAR(p.coeff0, 1.5, 1e-15);
    EXPECT_NEAR(p.coeff1, -0.5, 1e-15);
    EXPECT_NEAR(p.alpha, 0.70711, 1e-5);
    EXPECT_NEAR(p.beta, 1.41421, 1e-5);
}

TEST(PsiK, CertainRejection) {
    const PsiK p = psi_k(dy(0, 2), 2, 2);
    EXPECT_NEAR(p.coeff0, 0.5, 1e-15);
    EXPECT_NEAR(p.coeff1, 0.5, 1e-15);
    EXPECT_EQ(p.beta, 0.0);
}

TEST(PsiK, ThreeEighths) {
    const PsiK p = psi_k(dy(3, 3), 3, 0);
    EXPECT_NEAR(p.coeff0, 0.875, 1e-15);
    EXPECT_NEAR(p.coeff1, 1.0, 1e-15);
    EXPECT_NEAR(p.alpha, 1.32583, 1e-5);
    EXPECT_NEAR(p.beta, -0.08839, 1e-5);
}

TEST(PsiK, OverlapsPreserveNorm) {
    for (unsigned t = 1; t <= 6; t++) {
        for (long long a = 0; a <= (1LL << t); a++) {
            if (a == (1LL << (t - 1))) {
                continue;
            }
            for (unsigned k = 0; k <= t; k++) {
                const PsiK p = psi_k(dy(a, t), t, k);
                const auto ref = oracle::target_state(std::ldexp(double(a), -int(t)), t, k);
                EXPECT_NEAR(p.coeff0, ref.c0, 1e-12);
                EXPECT_NEAR(p.coeff1, ref.c1, 1e-12);
                EXPECT_NEAR(p.alpha * p.alpha + p.beta * p.beta, p.norm() * p.norm(), 1e-9 * p.norm() * p.norm());
            }
        }
    }
}

TEST(PsiK, RejectsHalfAndBadIndex) {
    EXPECT_THROW(psi_k(dy(1, 1), 1, 0), HalfProbability);
    EXPECT_THROW(psi_k(dy(1, 2), 2, 3), InvalidArgument);
}

TEST(Spectrum, GapWitnessExistsForEveryDyadic) {
    for (unsigned t = 1; t <= 6; t++) {
        for (long long a = 0; a <= (1LL << t); a++) {
            if (a == (1LL << (t - 1))) {
                continue;
            }
            const Spectrum s = make_spectrum(dy(a, t), t);
            const auto w = gap_witness(s);
            ASSERT_TRUE(w.has_value()) << a << "/2^" << t;
            const auto &psi = s.psi[*w];
            const double lo = std::min(std::abs(psi.alpha), std::abs(psi.beta));
            const double hi = std::max(std::abs(psi.alpha), std::abs(psi.beta));
            EXPECT_LE(lo * lo / (hi * hi), 9.0 / 25.0 + 1e-12);
            // The favored overlap dominates for every k.
            const bool rejects = 2 * a < (1LL << t);
            for (const auto &q : s.psi) {
                if (rejects) {
                    EXPECT_GT(std::abs(q.alpha), std::abs(q.beta));
                } else {
                    EXPECT_LT(std::abs(q.alpha), std::abs(q.beta));
                }
            }
        }
    }
}

TEST(Prediction, MatchesProductFormula) {
    for (unsigned t = 1; t <= 5; t++) {
        for (long long a = 0; a <= (1LL << t); a++) {
            if (a == (1LL << (t - 1))) {
                continue;
            }
            for (unsigned r = 1; r <= 5; r++) {
                const auto got = predicted_conditional_acceptance(dy(a, t), t, r);
                const long double ref = oracle::favored_reject_probability(std::ldexp(double(a), -int(t)), t, r);
                EXPECT_NEAR(got.p0, static_cast<double>(ref), 1e-12);
                EXPECT_NEAR(got.p0 + got.p1, 1.0, 1e-15);
            }
        }
    }
}

TEST(Prediction, ClearsTheBoundsAndImprovesWithRepetition) {
    EXPECT_DOUBLE_EQ(kSingleRoundBound, 625.0 / 706.0);
    for (unsigned t = 1; t <= 6; t++) {
        for (long long a = 0; a <= (1LL << t); a++) {
            if (a == (1LL << (t - 1))) {
                continue;
            }
            const bool rejects = 2 * a < (1LL << t);
            double prev = 0;
            for (unsigned r = 1; r <= 8; r++) {
                const auto o = predicted_conditional_acceptance(dy(a, t), t, r);
                const double correct = rejects ? o.p0 : o.p1;
                if (r == 1) {
                    EXPECT_GT(correct, kSingleRoundBound);
                }
                EXPECT_GT(correct, repetition_bound(r));
                EXPECT_GE(correct, prev);
                prev = correct;
            }
        }
    }
}

TEST(Prediction, ExtremesAreCertain) {
    const auto zero = predicted_conditional_acceptance(dy(0, 3), 3, 1);
    EXPECT_EQ(zero.p0, 1.0);
    EXPECT_EQ(zero.p1, 0.0);
    const auto one = predicted_conditional_acceptance(dy(8, 3), 3, 2);
    EXPECT_GT(one.p1, 1 - 1e-12);
    EXPECT_THROW(predicted_conditional_acceptance(dy(1, 3), 3, 0), InvalidArgument);
}

TEST(Prediction, LogSumHandlesZeros) {
    EXPECT_FALSE(log_abs_sum({1.0, 0.0}).has_value());
    EXPECT_NEAR(*log_abs_sum({2.0, -0.5}), 0.0, 1e-15);
}

TEST(RepetitionBound, Values) {
    EXPECT_DOUBLE_EQ(repetition_bound(1), 0.5);
    EXPECT_DOUBLE_EQ(repetition_bound(3), 0.875);
}

TEST(Gamma, RecoversScaleAndRejectsWrongShape) {
    const Spectrum s = make_spectrum(dy(3, 3), 3);
    const PsiK &psi = s.psi[1];
    // Flag on qubit 0, counter on qubits 1..2, spectator qubit 3 fixed at 1.
    StateVector st(4);
    st[0] = 0;
    const double g = 0.25;
    st[0b1000] = g * psi.coeff0;
    st[0b1001] = g * psi.coeff1;
    st[0b0010] = 0.3;  // counter nonzero, ignored
    GoodBranch where{0, {1, 2}, 0b1000};
    const auto m = measure_gamma(st, s, 1, where);
    EXPECT_NEAR(m.gamma, g, 1e-14);
    EXPECT_LT(m.proportionality_residual, 1e-14);
    EXPECT_EQ(m.stray_mass, 0.0);

    StateVector bad(4);
    bad[0] = 0;
    bad[0b1000] = psi.coeff1;
    bad[0b1001] = psi.coeff0;
    EXPECT_THROW(measure_gamma(bad, s, 1, where), DegenerateBranch);
    EXPECT_THROW(measure_gamma(StateVector(4, 0b0010), s, 1, where), DegenerateBranch);
}
