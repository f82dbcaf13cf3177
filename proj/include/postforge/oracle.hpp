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

/// Closed-form expectations for the pipeline: the per-k target states, their
/// overlaps with |+> and |->, and the predicted decision statistics.

#include <cmath>
#include <optional>
#include <vector>

#include "postforge/automaton.hpp"
#include "postforge/simulator.hpp"

namespace postforge {

/// Ratio slack used by the gap argument: some k has min^2 (1 + delta) < max^2.
inline constexpr double kGapDelta = 16.0 / 9.0;
/// Bound on the favored branch probability for a single repetition.
inline constexpr double kSingleRoundBound = 625.0 / 706.0;

struct PsiK {
    double coeff0 = 0;  // weight of |0>
    double coeff1 = 0;  // weight of |1>
    double alpha = 0;   // <+|psi>
    double beta = 0;    // <-|psi>
    double norm() const {
        return std::hypot(coeff0, coeff1);
    }
};

namespace oracle_detail {

inline void check_not_half(const Dyadic &p) {
    if (p == Dyadic::half()) {
        throw HalfProbability("acceptance probability is exactly 1/2");
    }
}

}  // namespace oracle_detail

/// (1/2 + p, 2^(T-k) (1/2 - p)) with its |+>/|-> overlaps. The coefficients
/// are exact dyadics before conversion to double.
inline PsiK psi_k(const Dyadic &p, unsigned steps, unsigned k) {
    oracle_detail::check_not_half(p);
    if (k > steps) {
        throw InvalidArgument("k must be in [0, T]");
    }
    const Dyadic c0 = Dyadic::half() + p;
    Dyadic c1 = Dyadic::half() - p;
    c1.numerator <<= (steps - k);
    PsiK out;
    out.coeff0 = c0.to_double();
    out.coeff1 = c1.to_double();
    const Dyadic sum = c0 + c1;
    const Dyadic diff = c0 - c1;
    out.alpha = sum.to_double() / std::sqrt(2.0);
    out.beta = diff.to_double() / std::sqrt(2.0);
    return out;
}

struct Spectrum {
    Dyadic p_a;
    double p_a_value = 0;
    unsigned steps = 0;
    std::vector<PsiK> psi;  // indexed by k = 0..T
    double delta = kGapDelta;
};

inline Spectrum make_spectrum(const Dyadic &p, unsigned steps) {
    Spectrum s;
    s.p_a = p;
    s.p_a_value = p.to_double();
    s.steps = steps;
    for (unsigned k = 0; k <= steps; k++) {
        s.psi.push_back(psi_k(p, steps, k));
    }
    return s;
}

inline Spectrum make_spectrum(const Automaton &aut) {
    return make_spectrum(accept_probability(aut), aut.steps);
}

/// First k whose overlap ratio min^2 / max^2 is at most 9/25.
inline std::optional<unsigned> gap_witness(const Spectrum &s) {
    for (unsigned k = 0; k < s.psi.size(); k++) {
        const double a = std::abs(s.psi[k].alpha);
        const double b = std::abs(s.psi[k].beta);
        const double lo = std::min(a, b);
        const double hi = std::max(a, b);
        if (lo * lo * (1 + s.delta) < hi * hi) {
            return k;
        }
    }
    return std::nullopt;
}

/// Sum of log|x| over a sequence, or nullopt when some entry is zero.
inline std::optional<double> log_abs_sum(const std::vector<double> &xs) {
    double acc = 0;
    for (double x : xs) {
        if (x == 0) {
            return std::nullopt;
        }
        acc += std::log(std::abs(x));
    }
    return acc;
}

struct OutcomePair {
    double p0 = 0;  // P[W = 0 | post]
    double p1 = 0;  // P[W = 1 | post]
};

/// P[W=0] = A / (A + B) with A = prod alpha_k^{4r}, B = prod beta_k^{4r}.
inline OutcomePair predicted_conditional_acceptance(const Spectrum &s, unsigned r) {
    if (r < 1) {
        throw InvalidArgument("repetition count must be >= 1");
    }
    std::vector<double> alphas;
    std::vector<double> betas;
    for (const auto &p : s.psi) {
        alphas.push_back(p.alpha);
        betas.push_back(p.beta);
    }
    const auto la = log_abs_sum(alphas);
    const auto lb = log_abs_sum(betas);
    if (!la && !lb) {
        throw DegenerateBranch("both accumulator branches vanish");
    }
    if (!lb) {
        return {1, 0};
    }
    if (!la) {
        return {0, 1};
    }
    const double d = 4.0 * r * (*lb - *la);
    // 1 / (1 + e^d) without overflow.
    const double p0 = d > 0 ? std::exp(-d) / (1 + std::exp(-d)) : 1 / (1 + std::exp(d));
    return {p0, 1 - p0};
}

inline OutcomePair predicted_conditional_acceptance(const Dyadic &p, unsigned steps, unsigned r) {
    return predicted_conditional_acceptance(make_spectrum(p, steps), r);
}

/// Lower bound on the favored branch probability after r repetitions.
inline double repetition_bound(unsigned r) {
    return 1 - std::ldexp(1.0, -static_cast<int>(r));
}

/// Where the good branch of a V_x run lives: the flag qubit, the counter
/// register that must read zero, and the basis index of the remaining qubits
/// (flag bit cleared).
struct GoodBranch {
    Qubit flag = 0;
    std::vector<Qubit> counter;
    std::uint64_t base_index = 0;
};

struct GammaMeasurement {
    double gamma = 0;
    /// Sine of the angle between the C=0 flag amplitudes and Psi_k.
    double proportionality_residual = 0;
    /// C=0 mass outside the two expected amplitudes.
    double stray_mass = 0;
};

inline constexpr double kGoodBranchTolerance = 1e-9;

/// gamma_k = |C=0 component| / |Psi_k|, after checking that the component is
/// proportional to Psi_k on the flag with every other qubit at its base value.
inline GammaMeasurement measure_gamma(const StateVector &state, const Spectrum &s, unsigned k,
                                      const GoodBranch &where) {
    if (k >= s.psi.size()) {
        throw InvalidArgument("k must be in [0, T]");
    }
    std::uint64_t cmask = 0;
    for (Qubit q : where.counter) {
        cmask |= std::uint64_t{1} << q;
    }
    const std::uint64_t fbit = std::uint64_t{1} << where.flag;
    const std::uint64_t i0 = where.base_index & ~fbit;
    const std::uint64_t i1 = i0 | fbit;
    double zero_mass = 0;
    for (std::uint64_t i = 0; i < state.size(); i++) {
        if ((i & cmask) == 0) {
            zero_mass += std::norm(state[i]);
        }
    }
    if (zero_mass < 1e-300) {
        throw DegenerateBranch("good branch carries no amplitude");
    }
    const Complex a0 = state[i0];
    const Complex a1 = state[i1];
    const PsiK &psi = s.psi[k];
    const double good = std::norm(a0) + std::norm(a1);
    GammaMeasurement g;
    g.gamma = std::sqrt(zero_mass) / psi.norm();
    g.stray_mass = std::max(0.0, zero_mass - good);
    g.proportionality_residual =
        good > 0 ? std::abs(a0 * psi.coeff1 - a1 * psi.coeff0) / (std::sqrt(good) * psi.norm()) : 1.0;
    if (g.stray_mass > kGoodBranchTolerance * zero_mass ||
        g.proportionality_residual > kGoodBranchTolerance) {
        throw DegenerateBranch("good branch is not proportional to the target state");
    }
    return g;
}

}  // namespace postforge
