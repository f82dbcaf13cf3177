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

/// Circuit intermediate representation: gates from the set {H, X, T, T†, CNOT},
/// opaque unitaries (explicit matrices or permutations), controlled versions of
/// those, and postselect / measure markers, laid out over named registers.
///
/// Conventions used throughout the library:
///   * qubit 0 is the least significant bit of a global basis index;
///   * inside a multi-qubit gate, the i-th listed target contributes bit i of
///     the gate's local basis index, so register values are little-endian;
///   * controls carry a polarity (fire on |1> when true, on |0> when false).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "postforge/error.hpp"

namespace postforge {

using Qubit = std::uint32_t;
using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kMatrixTolerance = 1e-9;

enum class GateKind { kH, kX, kT, kTdg, kCX, kOpaque };

/// A labelled unitary outside the primitive set. Either a basis permutation
/// (`permutation[j]` is the image of local index j) or a dense matrix.
struct OpaqueUnitary {
    std::string label;
    std::size_t width = 0;
    std::vector<std::uint64_t> permutation;
    Matrix matrix;

    bool is_permutation() const {
        return !permutation.empty();
    }
    std::size_t dim() const {
        return std::size_t{1} << width;
    }
    Matrix dense() const {
        if (!is_permutation()) {
            return matrix;
        }
        Matrix m = Matrix::Zero(dim(), dim());
        for (std::size_t j = 0; j < permutation.size(); j++) {
            m(permutation[j], j) = 1.0;
        }
        return m;
    }
    bool same_content(const OpaqueUnitary &other) const {
        if (width != other.width || permutation != other.permutation) {
            return false;
        }
        if (is_permutation()) {
            return true;
        }
        return matrix.rows() == other.matrix.rows() && matrix.cols() == other.matrix.cols() &&
               matrix == other.matrix;
    }
};
using OpaquePtr = std::shared_ptr<const OpaqueUnitary>;

inline std::size_t width_for_dim(std::size_t dim) {
    std::size_t w = 0;
    while ((std::size_t{1} << w) < dim) {
        w++;
    }
    if ((std::size_t{1} << w) != dim || dim < 2) {
        throw InvalidArgument("opaque gate dimension must be a power of two >= 2, got " + std::to_string(dim));
    }
    return w;
}

inline OpaquePtr make_opaque_matrix(std::string label, Matrix m) {
    if (m.rows() != m.cols()) {
        throw InvalidArgument("opaque matrix '" + label + "' is not square");
    }
    auto u = std::make_shared<OpaqueUnitary>();
    u->label = std::move(label);
    u->width = width_for_dim(static_cast<std::size_t>(m.rows()));
    u->matrix = std::move(m);
    return u;
}

inline OpaquePtr make_permutation(std::string label, std::size_t width, std::vector<std::uint64_t> perm) {
    if (perm.size() != (std::size_t{1} << width) || width == 0) {
        throw InvalidArgument("permutation '" + label + "' must list 2^width images");
    }
    std::vector<bool> hit(perm.size(), false);
    for (auto v : perm) {
        if (v >= perm.size() || hit[v]) {
            throw InvalidArgument("permutation '" + label + "' is not a bijection");
        }
        hit[v] = true;
    }
    auto u = std::make_shared<OpaqueUnitary>();
    u->label = std::move(label);
    u->width = width;
    u->permutation = std::move(perm);
    return u;
}

inline OpaquePtr inverse_opaque(const OpaqueUnitary &u) {
    std::string label = u.label;
    bool stripped = false;
    for (const char *suffix : {"^dg", "^-1"}) {
        std::string s = suffix;
        if (label.size() > s.size() && label.compare(label.size() - s.size(), s.size(), s) == 0) {
            label.resize(label.size() - s.size());
            stripped = true;
            break;
        }
    }
    if (u.is_permutation()) {
        std::vector<std::uint64_t> inv(u.permutation.size());
        for (std::size_t j = 0; j < u.permutation.size(); j++) {
            inv[u.permutation[j]] = j;
        }
        return make_permutation(stripped ? label : label + "^-1", u.width, std::move(inv));
    }
    return make_opaque_matrix(stripped ? label : label + "^dg", u.matrix.adjoint());
}

struct Control {
    Qubit qubit = 0;
    bool polarity = true;

    bool operator==(const Control &) const = default;
};

struct Gate {
    GateKind kind = GateKind::kX;
    /// CX lists {control, target}; opaque gates list `opaque->width` qubits.
    std::vector<Qubit> targets;
    std::vector<Control> controls;
    OpaquePtr opaque;

    std::vector<Qubit> qubits() const {
        std::vector<Qubit> q = targets;
        for (const auto &c : controls) {
            q.push_back(c.qubit);
        }
        return q;
    }
    /// Qubits whose computational-basis value the gate can change.
    std::vector<Qubit> acted_qubits() const {
        if (kind == GateKind::kCX) {
            return {targets[1]};
        }
        if (kind == GateKind::kT || kind == GateKind::kTdg) {
            return {};
        }
        return targets;
    }
};

enum class PostTarget { kZero, kOne, kPlus, kMinus };

struct Postselect {
    Qubit qubit = 0;
    PostTarget target = PostTarget::kOne;
};

struct Measure {
    Qubit qubit = 0;
    std::string label;
};

using Instruction = std::variant<Gate, Postselect, Measure>;

struct Register {
    std::string name;
    Qubit start = 0;
    std::size_t length = 0;

    std::vector<Qubit> qubits() const {
        std::vector<Qubit> q(length);
        for (std::size_t i = 0; i < length; i++) {
            q[i] = start + static_cast<Qubit>(i);
        }
        return q;
    }
    bool contains(Qubit q) const {
        return q >= start && q < start + length;
    }
};

inline const char *gate_kind_name(GateKind k) {
    switch (k) {
        case GateKind::kH: return "h";
        case GateKind::kX: return "x";
        case GateKind::kT: return "t";
        case GateKind::kTdg: return "tdg";
        case GateKind::kCX: return "cx";
        case GateKind::kOpaque: return "u";
    }
    return "?";
}

inline Gate make_gate(GateKind kind, std::vector<Qubit> targets, std::vector<Control> controls = {}) {
    Gate g;
    g.kind = kind;
    g.targets = std::move(targets);
    g.controls = std::move(controls);
    return g;
}

inline Gate make_opaque_gate(OpaquePtr u, std::vector<Qubit> targets, std::vector<Control> controls = {}) {
    Gate g;
    g.kind = GateKind::kOpaque;
    g.targets = std::move(targets);
    g.controls = std::move(controls);
    g.opaque = std::move(u);
    return g;
}

inline Gate inverse(const Gate &g) {
    Gate r = g;
    switch (g.kind) {
        case GateKind::kT: r.kind = GateKind::kTdg; break;
        case GateKind::kTdg: r.kind = GateKind::kT; break;
        case GateKind::kOpaque: r.opaque = inverse_opaque(*g.opaque); break;
        default: break;
    }
    return r;
}

/// The action of the gate on its targets alone (controls stripped), in the
/// local little-endian basis of `targets`.
inline Matrix target_matrix(const Gate &g) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (g.kind) {
        case GateKind::kH: {
            Matrix m(2, 2);
            m << s, s, s, -s;
            return m;
        }
        case GateKind::kX: {
            Matrix m(2, 2);
            m << 0, 1, 1, 0;
            return m;
        }
        case GateKind::kT:
        case GateKind::kTdg: {
            Matrix m = Matrix::Identity(2, 2);
            m(1, 1) = std::polar(1.0, (g.kind == GateKind::kT ? 1 : -1) * std::numbers::pi / 4);
            return m;
        }
        case GateKind::kCX: {
            // local index = control + 2 * target
            Matrix m = Matrix::Zero(4, 4);
            m(0, 0) = 1;
            m(2, 2) = 1;
            m(3, 1) = 1;
            m(1, 3) = 1;
            return m;
        }
        case GateKind::kOpaque: return g.opaque->dense();
    }
    return {};
}

class Circuit {
   public:
    explicit Circuit(std::size_t num_qubits = 0) : num_qubits_(num_qubits) {
    }

    std::size_t num_qubits() const {
        return num_qubits_;
    }
    const std::vector<Instruction> &instructions() const {
        return instructions_;
    }
    const std::vector<Register> &registers() const {
        return registers_;
    }
    const std::string &metadata() const {
        return metadata_;
    }
    /// When set, validation requires every Measure to follow the last gate.
    bool terminal_measures() const {
        return terminal_measures_;
    }

    Circuit &set_metadata(std::string m) {
        metadata_ = std::move(m);
        return *this;
    }
    Circuit &set_terminal_measures(bool flag) {
        terminal_measures_ = flag;
        return *this;
    }
    Circuit &add_register(std::string name, Qubit start, std::size_t length) {
        registers_.push_back(Register{std::move(name), start, length});
        return *this;
    }
    /// Grows the qubit count; existing instructions keep their indices.
    Circuit &widen(std::size_t num_qubits) {
        if (num_qubits < num_qubits_) {
            throw InvalidArgument("cannot shrink a circuit");
        }
        num_qubits_ = num_qubits;
        return *this;
    }

    Circuit &add(Instruction ins) {
        instructions_.push_back(std::move(ins));
        return *this;
    }
    Circuit &gate(GateKind kind, std::vector<Qubit> targets, std::vector<Control> controls = {}) {
        return add(make_gate(kind, std::move(targets), std::move(controls)));
    }
    Circuit &h(Qubit q) {
        return gate(GateKind::kH, {q});
    }
    Circuit &x(Qubit q) {
        return gate(GateKind::kX, {q});
    }
    Circuit &t(Qubit q) {
        return gate(GateKind::kT, {q});
    }
    Circuit &tdg(Qubit q) {
        return gate(GateKind::kTdg, {q});
    }
    Circuit &cx(Qubit c, Qubit t) {
        return gate(GateKind::kCX, {c, t});
    }
    Circuit &unitary(OpaquePtr u, std::vector<Qubit> targets, std::vector<Control> controls = {}) {
        return add(make_opaque_gate(std::move(u), std::move(targets), std::move(controls)));
    }
    Circuit &post(Qubit q, PostTarget target = PostTarget::kOne) {
        return add(Postselect{q, target});
    }
    Circuit &measure(Qubit q, std::string label) {
        return add(Measure{q, std::move(label)});
    }
    /// Appends the instructions of `other`, which must not be wider.
    Circuit &append(const Circuit &other) {
        if (other.num_qubits_ > num_qubits_) {
            throw LayoutMismatch("appended circuit has " + std::to_string(other.num_qubits_) +
                                 " qubits, target has " + std::to_string(num_qubits_));
        }
        instructions_.insert(instructions_.end(), other.instructions_.begin(), other.instructions_.end());
        return *this;
    }

    const Register *find_register(const std::string &name) const {
        for (const auto &r : registers_) {
            if (r.name == name) {
                return &r;
            }
        }
        return nullptr;
    }
    const Register &reg(const std::string &name) const {
        const Register *r = find_register(name);
        if (r == nullptr) {
            throw InvalidArgument("no register named '" + name + "'");
        }
        return *r;
    }

    bool is_unitary() const {
        return std::all_of(instructions_.begin(), instructions_.end(),
                           [](const Instruction &i) { return std::holds_alternative<Gate>(i); });
    }
    std::size_t postselect_count() const {
        return std::count_if(instructions_.begin(), instructions_.end(),
                             [](const Instruction &i) { return std::holds_alternative<Postselect>(i); });
    }

   private:
    std::size_t num_qubits_;
    std::vector<Register> registers_;
    std::vector<Instruction> instructions_;
    std::string metadata_;
    bool terminal_measures_ = false;
};

inline std::vector<Qubit> instruction_qubits(const Instruction &ins) {
    if (const auto *g = std::get_if<Gate>(&ins)) {
        return g->qubits();
    }
    if (const auto *p = std::get_if<Postselect>(&ins)) {
        return {p->qubit};
    }
    return {std::get<Measure>(ins).qubit};
}

/// Inverse of a unitary circuit: reversed order, each gate inverted.
inline Circuit inverse(const Circuit &c) {
    if (!c.is_unitary()) {
        throw NonUnitaryInput("only unitary circuits can be inverted");
    }
    Circuit r(c.num_qubits());
    for (const auto &reg : c.registers()) {
        r.add_register(reg.name, reg.start, reg.length);
    }
    const auto &ins = c.instructions();
    for (auto it = ins.rbegin(); it != ins.rend(); ++it) {
        r.add(inverse(std::get<Gate>(*it)));
    }
    return r;
}

// --------------------------------------------------------------------------
// Validation

struct Violation {
    std::optional<std::size_t> position;
    std::string message;
};

inline double unitarity_defect(const Matrix &m) {
    Matrix d = m.adjoint() * m - Matrix::Identity(m.rows(), m.cols());
    return d.cwiseAbs().maxCoeff();
}

inline std::vector<Violation> validate(const Circuit &c) {
    std::vector<Violation> out;
    auto at = [&](std::size_t i, std::string msg) { out.push_back({i, msg + " in instruction " + std::to_string(i)}); };
    const std::size_t n = c.num_qubits();

    std::vector<int> owner(n, -1);
    for (std::size_t r = 0; r < c.registers().size(); r++) {
        const auto &reg = c.registers()[r];
        if (reg.length == 0 || reg.start + reg.length > n) {
            out.push_back({std::nullopt, "register " + reg.name + " out of range"});
            continue;
        }
        for (Qubit q : reg.qubits()) {
            if (owner[q] >= 0) {
                out.push_back({std::nullopt, "registers " + c.registers()[owner[q]].name + " and " + reg.name +
                                                 " overlap at qubit " + std::to_string(q)});
            }
            owner[q] = static_cast<int>(r);
        }
    }
    if (!c.registers().empty()) {
        for (std::size_t q = 0; q < n; q++) {
            if (owner[q] < 0) {
                out.push_back({std::nullopt, "qubit " + std::to_string(q) + " not covered by any register"});
            }
        }
    }

    std::optional<std::size_t> last_gate;
    std::optional<std::size_t> first_measure;
    for (std::size_t i = 0; i < c.instructions().size(); i++) {
        const auto &ins = c.instructions()[i];
        auto qs = instruction_qubits(ins);
        bool in_range = true;
        for (Qubit q : qs) {
            if (q >= n) {
                at(i, "qubit " + std::to_string(q) + " out of range");
                in_range = false;
            }
        }
        auto sorted = qs;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            at(i, "duplicate qubit");
        }
        if (const auto *g = std::get_if<Gate>(&ins)) {
            last_gate = i;
            std::size_t expected = 1;
            if (g->kind == GateKind::kCX) {
                expected = 2;
            } else if (g->kind == GateKind::kOpaque) {
                if (!g->opaque) {
                    at(i, "opaque gate without definition");
                    continue;
                }
                expected = g->opaque->width;
                if (g->opaque->is_permutation()) {
                    std::vector<bool> seen(g->opaque->dim(), false);
                    bool ok = g->opaque->permutation.size() == g->opaque->dim();
                    for (auto v : g->opaque->permutation) {
                        if (v >= seen.size() || seen[v]) {
                            ok = false;
                            break;
                        }
                        seen[v] = true;
                    }
                    if (!ok) {
                        at(i, "non-unitary opaque gate");
                    }
                } else if (unitarity_defect(g->opaque->matrix) > kMatrixTolerance) {
                    at(i, "non-unitary opaque gate");
                }
            }
            if (g->targets.size() != expected) {
                at(i, "wrong target count");
            }
        } else if (std::holds_alternative<Measure>(ins)) {
            if (!first_measure) {
                first_measure = i;
            }
        }
        (void)in_range;
    }
    if (c.terminal_measures() && first_measure && last_gate && *first_measure < *last_gate) {
        out.push_back({*first_measure, "measure before last gate in unitary-then-terminal circuit at instruction " +
                                           std::to_string(*first_measure)});
    }
    return out;
}

// --------------------------------------------------------------------------
// Statistics

struct GateStats {
    /// Keyed by gate kind; controlled gates are keyed "ctrl<k>-<kind>".
    std::map<std::string, std::size_t> by_kind;
    std::size_t gates = 0;
    std::size_t postselects = 0;
    std::size_t measures = 0;
    std::size_t qubits = 0;

    std::size_t count(const std::string &key) const {
        auto it = by_kind.find(key);
        return it == by_kind.end() ? 0 : it->second;
    }
    /// Uncontrolled CNOT, T, T† and X gates: the elementary count audited
    /// against the multi-controlled and increment constructions.
    std::size_t elementary_count() const {
        return count("cx") + count("t") + count("tdg") + count("x");
    }
};

inline GateStats gate_stats(const Circuit &c) {
    GateStats s;
    s.qubits = c.num_qubits();
    for (const auto &ins : c.instructions()) {
        if (const auto *g = std::get_if<Gate>(&ins)) {
            std::string key = gate_kind_name(g->kind);
            if (!g->controls.empty()) {
                key = "ctrl" + std::to_string(g->controls.size()) + "-" + key;
            }
            s.by_kind[key]++;
            s.gates++;
        } else if (std::holds_alternative<Postselect>(ins)) {
            s.postselects++;
        } else {
            s.measures++;
        }
    }
    return s;
}

}  // namespace postforge
