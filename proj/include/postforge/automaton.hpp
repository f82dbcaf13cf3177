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

/// Reversible fair-coin automaton with exact dyadic acceptance probability.
///
/// Each step draws a fair coin b and applies the permutation perm[b] to the
/// configuration. Bit 0 of a configuration is the accept flag.

#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "postforge/error.hpp"

namespace postforge {

using BigInt = boost::multiprecision::cpp_int;

/// numerator / 2^exponent, never rounded and never silently reduced.
struct Dyadic {
    BigInt numerator = 0;
    unsigned exponent = 0;

    static Dyadic integer(long long v) {
        return {BigInt(v), 0};
    }
    static Dyadic half() {
        return {BigInt(1), 1};
    }

    /// Same value at a larger exponent.
    Dyadic scaled_to(unsigned e) const {
        if (e < exponent) {
            throw InvalidArgument("cannot lower a dyadic exponent without reducing");
        }
        return {numerator << (e - exponent), e};
    }
    Dyadic reduced() const {
        Dyadic d = *this;
        while (d.exponent > 0 && (d.numerator & 1) == 0) {
            d.numerator >>= 1;
            d.exponent--;
        }
        return d;
    }
    double to_double() const {
        return std::ldexp(numerator.convert_to<double>(), -static_cast<int>(exponent));
    }
    std::string to_string() const {
        return numerator.str() + "/2^" + std::to_string(exponent);
    }

    friend Dyadic operator+(const Dyadic &a, const Dyadic &b) {
        const unsigned e = std::max(a.exponent, b.exponent);
        return {a.scaled_to(e).numerator + b.scaled_to(e).numerator, e};
    }
    friend Dyadic operator-(const Dyadic &a, const Dyadic &b) {
        const unsigned e = std::max(a.exponent, b.exponent);
        return {a.scaled_to(e).numerator - b.scaled_to(e).numerator, e};
    }
    friend int compare(const Dyadic &a, const Dyadic &b) {
        const unsigned e = std::max(a.exponent, b.exponent);
        const BigInt x = a.scaled_to(e).numerator;
        const BigInt y = b.scaled_to(e).numerator;
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    friend bool operator==(const Dyadic &a, const Dyadic &b) {
        return compare(a, b) == 0;
    }
    friend bool operator<(const Dyadic &a, const Dyadic &b) {
        return compare(a, b) < 0;
    }
    friend bool operator>(const Dyadic &a, const Dyadic &b) {
        return compare(a, b) > 0;
    }
    /// Division by two: exact, bumps the exponent.
    Dyadic halved() const {
        return {numerator, exponent + 1};
    }
};

inline constexpr unsigned kMaxConfigWidth = 10;
inline constexpr unsigned kMaxSteps = 20;

struct Automaton {
    unsigned width = 1;  // configuration bits; bit 0 is the accept flag
    std::vector<std::uint32_t> perm0;
    std::vector<std::uint32_t> perm1;
    std::uint32_t init = 0;
    unsigned steps = 1;

    std::size_t num_configs() const {
        return std::size_t{1} << width;
    }
    const std::vector<std::uint32_t> &perm(unsigned coin) const {
        return coin == 0 ? perm0 : perm1;
    }

    void validate() const {
        if (width < 1 || width > kMaxConfigWidth) {
            throw InvalidArgument("automaton width must be in [1, " + std::to_string(kMaxConfigWidth) + "]");
        }
        if (steps < 1 || steps > kMaxSteps) {
            throw InvalidArgument("automaton step count must be in [1, " + std::to_string(kMaxSteps) + "]");
        }
        if (init >= num_configs()) {
            throw InvalidArgument("initial configuration out of range");
        }
        for (const auto *p : {&perm0, &perm1}) {
            if (p->size() != num_configs()) {
                throw InvalidArgument("permutation table must have 2^m entries");
            }
            std::vector<bool> seen(p->size(), false);
            for (auto v : *p) {
                if (v >= p->size() || seen[v]) {
                    throw InvalidArgument("permutation table is not a bijection");
                }
                seen[v] = true;
            }
        }
    }
};

/// Exact distribution over configurations after t steps; entry i has
/// exponent t (numerator counts coin strings reaching i).
inline std::vector<Dyadic> step_distribution(const Automaton &aut, unsigned t) {
    aut.validate();
    if (t > aut.steps) {
        throw InvalidArgument("step index beyond T");
    }
    std::vector<BigInt> counts(aut.num_configs(), 0);
    counts[aut.init] = 1;
    for (unsigned s = 0; s < t; s++) {
        std::vector<BigInt> next(counts.size(), 0);
        for (std::size_t c = 0; c < counts.size(); c++) {
            if (counts[c] != 0) {
                next[aut.perm0[c]] += counts[c];
                next[aut.perm1[c]] += counts[c];
            }
        }
        counts = std::move(next);
    }
    std::vector<Dyadic> out;
    out.reserve(counts.size());
    for (auto &v : counts) {
        out.push_back({std::move(v), t});
    }
    return out;
}

/// p_a with denominator exponent exactly T, without the half check.
inline Dyadic accept_probability_unchecked(const Automaton &aut) {
    const auto dist = step_distribution(aut, aut.steps);
    Dyadic p{0, aut.steps};
    for (std::size_t c = 1; c < dist.size(); c += 2) {
        p.numerator += dist[c].numerator;
    }
    return p;
}

inline Dyadic accept_probability(const Automaton &aut) {
    Dyadic p = accept_probability_unchecked(aut);
    if (p == Dyadic::half()) {
        throw HalfProbability("acceptance probability is exactly 1/2");
    }
    return p;
}

// --------------------------------------------------------------------------
// Text format:  m <width> / T <steps> / init <config> / perm0 ... / perm1 ...
// '#' starts a comment.

inline Automaton parse_automaton(std::istream &in) {
    Automaton a;
    std::optional<unsigned> m;
    std::optional<unsigned> t;
    std::optional<std::uint32_t> init;
    bool have0 = false;
    bool have1 = false;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string &msg) { throw ParseError("automaton line " + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, line)) {
        lineno++;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) {
            continue;
        }
        auto read_one = [&]() -> long long {
            long long v;
            if (!(ls >> v) || v < 0) {
                fail("expected a non-negative integer after '" + key + "'");
            }
            return v;
        };
        if (key == "m") {
            m = static_cast<unsigned>(read_one());
        } else if (key == "T") {
            t = static_cast<unsigned>(read_one());
        } else if (key == "init") {
            init = static_cast<std::uint32_t>(read_one());
        } else if (key == "perm0" || key == "perm1") {
            auto &dst = key == "perm0" ? a.perm0 : a.perm1;
            (key == "perm0" ? have0 : have1) = true;
            long long v;
            while (ls >> v) {
                if (v < 0) {
                    fail("negative permutation entry");
                }
                dst.push_back(static_cast<std::uint32_t>(v));
            }
            if (!ls.eof()) {
                fail("bad permutation entry");
            }
        } else {
            fail("unknown key '" + key + "'");
        }
        std::string extra;
        if (key != "perm0" && key != "perm1" && (ls >> extra)) {
            fail("trailing text after '" + key + "'");
        }
    }
    if (!m || !t || !init || !have0 || !have1) {
        throw ParseError("automaton needs m, T, init, perm0 and perm1");
    }
    a.width = *m;
    a.steps = *t;
    a.init = *init;
    try {
        a.validate();
    } catch (const InvalidArgument &e) {
        throw ParseError(std::string("automaton: ") + e.what());
    }
    return a;
}

inline Automaton parse_automaton(const std::string &text) {
    std::istringstream in(text);
    return parse_automaton(in);
}

inline Automaton read_automaton_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open automaton file '" + path + "'");
    }
    return parse_automaton(in);
}

inline std::string format_automaton(const Automaton &a) {
    std::ostringstream out;
    out << "m " << a.width << "\nT " << a.steps << "\ninit " << a.init << "\nperm0";
    for (auto v : a.perm0) {
        out << ' ' << v;
    }
    out << "\nperm1";
    for (auto v : a.perm1) {
        out << ' ' << v;
    }
    out << '\n';
    return out.str();
}

/// Same machine with the accept flag negated: p_a becomes 1 - p_a.
inline Automaton flag_complement(const Automaton &a) {
    Automaton b = a;
    const std::uint32_t mask = 1;
    b.init = a.init ^ mask;
    for (std::size_t c = 0; c < a.num_configs(); c++) {
        b.perm0[c ^ mask] = a.perm0[c] ^ mask;
        b.perm1[c ^ mask] = a.perm1[c] ^ mask;
    }
    return b;
}

/// Conjugates by a configuration relabeling `sigma` that fixes bit 0 of
/// every configuration; p_a is unchanged.
inline Automaton relabel(const Automaton &a, const std::vector<std::uint32_t> &sigma) {
    if (sigma.size() != a.num_configs()) {
        throw InvalidArgument("relabeling must cover every configuration");
    }
    std::vector<bool> seen(sigma.size(), false);
    for (std::size_t c = 0; c < sigma.size(); c++) {
        if (sigma[c] >= sigma.size() || seen[sigma[c]] || ((sigma[c] ^ c) & 1) != 0) {
            throw InvalidArgument("relabeling must be a bijection preserving the accept flag");
        }
        seen[sigma[c]] = true;
    }
    Automaton b = a;
    b.init = sigma[a.init];
    for (std::size_t c = 0; c < a.num_configs(); c++) {
        b.perm0[sigma[c]] = sigma[a.perm0[c]];
        b.perm1[sigma[c]] = sigma[a.perm1[c]];
    }
    return b;
}

}  // namespace postforge
