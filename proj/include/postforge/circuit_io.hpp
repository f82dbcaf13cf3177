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

/// Line-oriented circuit text format.
///
///     qubits N
///     meta TEXT                      (optional, repeatable)
///     terminal                       (unitary-then-terminal discipline flag)
///     reg NAME START LEN
///     perm LABEL: j0 j1 ...          (permutation definition)
///     matrix LABEL                   (dense definition, followed by one line
///     re,im re,im ...                 per row of whitespace-separated pairs)
///     h Q | x Q | t Q | tdg Q | cx C T | u LABEL Q [Q ...]
///     ctrl P Q : <gate line>         (P = polarity 0/1; may be nested)
///     post Q {0|1|+|-}
///     measure Q LABEL
///
/// '#' starts a comment. Numbers are written with 17 significant digits so
/// that emit(parse(emit(c))) == emit(c) byte for byte.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "postforge/circuit.hpp"

namespace postforge {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// 15 significant digits: enough to diff reports, without round-trip noise.
inline std::string format_statistic(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

namespace detail {

inline const char *post_target_token(PostTarget t) {
    switch (t) {
        case PostTarget::kZero: return "0";
        case PostTarget::kOne: return "1";
        case PostTarget::kPlus: return "+";
        case PostTarget::kMinus: return "-";
    }
    return "?";
}

inline void check_label(const std::string &label) {
    if (label.empty()) {
        throw InvalidArgument("empty opaque gate label");
    }
    for (char ch : label) {
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == '#' || ch == ':') {
            throw InvalidArgument("opaque gate label '" + label + "' contains a reserved character");
        }
    }
}

inline void emit_definition(std::ostream &out, const OpaqueUnitary &u) {
    if (u.is_permutation()) {
        out << "perm " << u.label << ":";
        for (auto v : u.permutation) {
            out << ' ' << v;
        }
        out << '\n';
        return;
    }
    out << "matrix " << u.label << '\n';
    for (Eigen::Index r = 0; r < u.matrix.rows(); r++) {
        for (Eigen::Index col = 0; col < u.matrix.cols(); col++) {
            if (col) {
                out << ' ';
            }
            out << format_double(u.matrix(r, col).real()) << ',' << format_double(u.matrix(r, col).imag());
        }
        out << '\n';
    }
}

inline void emit_gate(std::ostream &out, const Gate &g) {
    for (const auto &c : g.controls) {
        out << "ctrl " << (c.polarity ? 1 : 0) << ' ' << c.qubit << " : ";
    }
    out << gate_kind_name(g.kind);
    if (g.kind == GateKind::kOpaque) {
        out << ' ' << g.opaque->label;
    }
    for (Qubit q : g.targets) {
        out << ' ' << q;
    }
}

}  // namespace detail

inline std::string format_circuit(const Circuit &c) {
    std::ostringstream out;
    out << "qubits " << c.num_qubits() << '\n';
    if (!c.metadata().empty()) {
        std::istringstream lines(c.metadata());
        std::string line;
        while (std::getline(lines, line)) {
            out << "meta " << line << '\n';
        }
    }
    if (c.terminal_measures()) {
        out << "terminal\n";
    }
    for (const auto &r : c.registers()) {
        out << "reg " << r.name << ' ' << r.start << ' ' << r.length << '\n';
    }
    std::unordered_map<std::string, const OpaqueUnitary *> defined;
    for (const auto &ins : c.instructions()) {
        const auto *g = std::get_if<Gate>(&ins);
        if (g == nullptr || g->kind != GateKind::kOpaque) {
            continue;
        }
        detail::check_label(g->opaque->label);
        auto [it, fresh] = defined.emplace(g->opaque->label, g->opaque.get());
        if (fresh) {
            detail::emit_definition(out, *g->opaque);
        } else if (it->second != g->opaque.get() && !it->second->same_content(*g->opaque)) {
            throw InvalidArgument("two different opaque gates share the label '" + g->opaque->label + "'");
        }
    }
    for (const auto &ins : c.instructions()) {
        if (const auto *g = std::get_if<Gate>(&ins)) {
            detail::emit_gate(out, *g);
        } else if (const auto *p = std::get_if<Postselect>(&ins)) {
            out << "post " << p->qubit << ' ' << detail::post_target_token(p->target);
        } else {
            const auto &m = std::get<Measure>(ins);
            out << "measure " << m.qubit << ' ' << m.label;
        }
        out << '\n';
    }
    return out.str();
}

namespace detail {

inline std::vector<std::string> tokenize(const std::string &line) {
    std::vector<std::string> toks;
    std::istringstream in(line);
    std::string t;
    while (in >> t) {
        toks.push_back(t);
    }
    return toks;
}

inline std::uint64_t parse_uint(const std::string &s, std::size_t line_no) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-') {
        throw ParseError("line " + std::to_string(line_no) + ": expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

inline double parse_real(const std::string &s, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used != s.size() || s.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": expected a number, got '" + s + "'");
    }
    return v;
}

class CircuitParser {
   public:
    explicit CircuitParser(std::istream &in) : in_(in) {
    }

    Circuit parse() {
        std::vector<std::string> meta;
        bool saw_qubits = false;
        std::string raw;
        while (next_line(raw)) {
            auto toks = tokenize(raw);
            if (toks.empty()) {
                continue;
            }
            const std::string &head = toks[0];
            if (head == "meta") {
                auto pos = raw.find("meta");
                std::string rest = raw.substr(pos + 4);
                if (!rest.empty() && rest[0] == ' ') {
                    rest.erase(0, 1);
                }
                meta.push_back(rest);
                continue;
            }
            if (head == "qubits") {
                expect(toks.size() == 2, "qubits N");
                circuit_.widen(parse_uint(toks[1], line_no_));
                saw_qubits = true;
                continue;
            }
            if (!saw_qubits) {
                fail("expected 'qubits N' before '" + head + "'");
            }
            if (head == "terminal") {
                circuit_.set_terminal_measures(true);
            } else if (head == "reg") {
                expect(toks.size() == 4, "reg NAME START LEN");
                circuit_.add_register(toks[1], static_cast<Qubit>(parse_uint(toks[2], line_no_)),
                                      parse_uint(toks[3], line_no_));
            } else if (head == "perm") {
                parse_perm(toks);
            } else if (head == "matrix") {
                parse_matrix(toks);
            } else if (head == "post") {
                expect(toks.size() == 3, "post Q {0|1|+|-}");
                circuit_.post(qubit(toks[1]), post_target(toks[2]));
            } else if (head == "measure") {
                expect(toks.size() == 3, "measure Q LABEL");
                circuit_.measure(qubit(toks[1]), toks[2]);
            } else {
                circuit_.add(parse_gate(toks, 0));
            }
        }
        if (!saw_qubits) {
            throw ParseError("missing 'qubits N' line");
        }
        std::string joined;
        for (std::size_t i = 0; i < meta.size(); i++) {
            joined += (i ? "\n" : "") + meta[i];
        }
        circuit_.set_metadata(joined);
        return std::move(circuit_);
    }

   private:
    bool next_line(std::string &line) {
        while (std::getline(in_, line)) {
            line_no_++;
            auto hash = line.find('#');
            if (hash != std::string::npos) {
                line.resize(hash);
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string &msg) const {
        throw ParseError("line " + std::to_string(line_no_) + ": " + msg);
    }
    void expect(bool ok, const char *usage) const {
        if (!ok) {
            fail(std::string("expected '") + usage + "'");
        }
    }
    Qubit qubit(const std::string &s) const {
        return static_cast<Qubit>(parse_uint(s, line_no_));
    }
    PostTarget post_target(const std::string &s) const {
        if (s == "0") return PostTarget::kZero;
        if (s == "1") return PostTarget::kOne;
        if (s == "+") return PostTarget::kPlus;
        if (s == "-") return PostTarget::kMinus;
        fail("postselect target must be one of 0 1 + -");
    }

    void define(OpaquePtr u) {
        if (opaque_.count(u->label)) {
            fail("opaque gate '" + u->label + "' defined twice");
        }
        opaque_[u->label] = std::move(u);
    }

    void parse_perm(const std::vector<std::string> &toks) {
        expect(toks.size() >= 2, "perm LABEL: j0 j1 ...");
        std::string label = toks[1];
        std::size_t first = 2;
        if (!label.empty() && label.back() == ':') {
            label.pop_back();
        } else {
            expect(toks.size() > 2 && toks[2] == ":", "perm LABEL: j0 j1 ...");
            first = 3;
        }
        std::vector<std::uint64_t> perm;
        for (std::size_t i = first; i < toks.size(); i++) {
            perm.push_back(parse_uint(toks[i], line_no_));
        }
        try {
            const std::size_t width = width_for_dim(perm.size());
            define(make_permutation(label, width, std::move(perm)));
        } catch (const InvalidArgument &e) {
            fail(e.what());
        }
    }

    void parse_matrix(const std::vector<std::string> &toks) {
        expect(toks.size() == 2, "matrix LABEL");
        std::vector<std::vector<Complex>> rows;
        std::string raw;
        std::size_t dim = 0;
        while ((rows.empty() || rows.size() < dim) && next_line(raw)) {
            auto cells = tokenize(raw);
            if (cells.empty()) {
                continue;
            }
            std::vector<Complex> row;
            for (const auto &cell : cells) {
                auto comma = cell.find(',');
                if (comma == std::string::npos) {
                    fail("matrix entry must be 're,im', got '" + cell + "'");
                }
                row.emplace_back(parse_real(cell.substr(0, comma), line_no_),
                                 parse_real(cell.substr(comma + 1), line_no_));
            }
            if (rows.empty()) {
                dim = row.size();
            } else if (row.size() != dim) {
                fail("ragged matrix row");
            }
            rows.push_back(std::move(row));
        }
        if (rows.size() != dim || dim == 0) {
            fail("matrix '" + toks[1] + "' is truncated");
        }
        Matrix m(dim, dim);
        for (std::size_t r = 0; r < dim; r++) {
            for (std::size_t c = 0; c < dim; c++) {
                m(r, c) = rows[r][c];
            }
        }
        try {
            define(make_opaque_matrix(toks[1], std::move(m)));
        } catch (const InvalidArgument &e) {
            fail(e.what());
        }
    }

    Gate parse_gate(const std::vector<std::string> &toks, std::size_t at) {
        expect(at < toks.size(), "gate");
        const std::string &name = toks[at];
        if (name == "ctrl") {
            expect(at + 3 < toks.size() && toks[at + 3] == ":", "ctrl P Q : <gate>");
            auto pol = parse_uint(toks[at + 1], line_no_);
            expect(pol <= 1, "ctrl polarity 0 or 1");
            Control c{qubit(toks[at + 2]), pol == 1};
            Gate inner = parse_gate(toks, at + 4);
            inner.controls.insert(inner.controls.begin(), c);
            return inner;
        }
        auto rest = [&](std::size_t from) {
            std::vector<Qubit> qs;
            for (std::size_t i = from; i < toks.size(); i++) {
                qs.push_back(qubit(toks[i]));
            }
            return qs;
        };
        static const std::unordered_map<std::string, GateKind> kinds = {
            {"h", GateKind::kH}, {"x", GateKind::kX}, {"t", GateKind::kT}, {"tdg", GateKind::kTdg}, {"cx", GateKind::kCX}};
        if (name == "u") {
            expect(at + 2 < toks.size(), "u LABEL Q [Q ...]");
            auto it = opaque_.find(toks[at + 1]);
            if (it == opaque_.end()) {
                fail("undefined opaque gate '" + toks[at + 1] + "'");
            }
            auto qs = rest(at + 2);
            expect(qs.size() == it->second->width, "u LABEL with one qubit per opaque-gate qubit");
            return make_opaque_gate(it->second, qs);
        }
        auto it = kinds.find(name);
        if (it == kinds.end()) {
            fail("unknown instruction '" + name + "'");
        }
        auto qs = rest(at + 1);
        expect(qs.size() == (it->second == GateKind::kCX ? 2u : 1u), "gate qubit count");
        return make_gate(it->second, qs);
    }

    std::istream &in_;
    std::size_t line_no_ = 0;
    Circuit circuit_;
    std::unordered_map<std::string, OpaquePtr> opaque_;
};

}  // namespace detail

inline Circuit parse_circuit(std::istream &in) {
    return detail::CircuitParser(in).parse();
}

inline Circuit parse_circuit(const std::string &text) {
    std::istringstream in(text);
    return parse_circuit(in);
}

inline Circuit read_circuit_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open circuit file '" + path + "'");
    }
    return parse_circuit(in);
}

inline void write_circuit_file(const std::string &path, const Circuit &c) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write circuit file '" + path + "'");
    }
    out << format_circuit(c);
}

}  // namespace postforge
