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

/// Command-line driver: synth, build, sim, decide.
///
/// Exit codes: 0 success, 1 check failed (verdict, bound or residual),
/// 2 usage, 3 ZeroOverlap, 4 HalfProbability, 5 other construction errors.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "postforge/automaton.hpp"
#include "postforge/circuit.hpp"
#include "postforge/circuit_io.hpp"
#include "postforge/pipeline.hpp"
#include "postforge/simulator.hpp"
#include "postforge/synth.hpp"

namespace postforge {

enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
    kExitZeroOverlap = 3,
    kExitHalfProbability = 4,
    kExitConstruction = 5,
};

inline constexpr double kDefaultTolerance = 1e-9;

/// POSTFORGE_TOL if set and positive, else the default.
inline double tolerance_from_env() {
    if (const char *v = std::getenv("POSTFORGE_TOL")) {
        try {
            const double t = std::stod(v);
            if (t > 0) {
                return t;
            }
        } catch (const std::exception &) {
        }
    }
    return kDefaultTolerance;
}

namespace cli_detail {

struct SynthArgs {
    std::string kind;
    std::size_t k = 2;
    std::size_t n = 2;
    std::size_t modulus = 3;
    std::size_t width = 2;
    std::string mode = "and";
    std::string gate = "x";
    std::string output;
};

inline Gate base_gate(const std::string &name) {
    if (name == "x") {
        return make_gate(GateKind::kX, {0});
    }
    if (name == "h") {
        return make_gate(GateKind::kH, {0});
    }
    if (name == "t") {
        return make_gate(GateKind::kT, {0});
    }
    throw InvalidArgument("unknown base gate '" + name + "'");
}

inline Matrix w_reference() {
    const double s = 1 / std::sqrt(2.0);
    Matrix h1 = Matrix::Zero(4, 4);  // H on qubit 0 (low bit)
    h1 << s, s, 0, 0, s, -s, 0, 0, 0, 0, s, s, 0, 0, s, -s;
    const Matrix cx = target_matrix(make_gate(GateKind::kCX, {0, 1}));
    return h1 * cx * h1;
}

inline Matrix or3_reference() {
    return reference::permutation_matrix(8, [](std::uint64_t j) {
        const std::uint64_t bit = ((j & 1) | ((j >> 1) & 1)) << 2;
        return j ^ bit;
    });
}

inline int cmd_synth(const SynthArgs &a, double tol, std::ostream &out) {
    SynthResult res;
    Matrix expected;
    const ControlMode mode = a.mode == "or" ? ControlMode::kOr : ControlMode::kAnd;
    if (a.kind == "mcx") {
        res = synth_mcx(a.k);
        expected = a.k == 0 ? target_matrix(base_gate("x")) : reference::controlled(target_matrix(base_gate("x")), a.k, ControlMode::kAnd);
    } else if (a.kind == "cgate") {
        const Gate g = base_gate(a.gate);
        res = mode == ControlMode::kAnd ? synth_controlled_gate(g, a.k) : synth_or_controlled_gate(g, a.k);
        expected = reference::controlled(target_matrix(g), a.k, mode);
    } else if (a.kind == "cinc") {
        res = synth_controlled_inc(a.n, a.k, mode);
        expected = reference::controlled(reference::increment(a.n), a.k, mode);
    } else if (a.kind == "inc") {
        res = synth_inc_pow2(a.n);
        expected = reference::increment(a.n);
    } else if (a.kind == "incmod") {
        res = synth_inc_mod(a.modulus, a.width);
        expected = reference::inc_mod(a.modulus, a.width);
    } else if (a.kind == "w") {
        res = gadget_w_basis();
        expected = w_reference();
    } else if (a.kind == "or3") {
        res = gadget_or3();
        expected = or3_reference();
    } else {
        throw InvalidArgument("unknown synth kind '" + a.kind + "'");
    }
    const auto ru = restricted_unitary(res.circuit, res.data);
    const double residual = (ru.matrix - expected).cwiseAbs().maxCoeff();
    if (!a.output.empty()) {
        write_circuit_file(a.output, res.circuit);
    }
    const GateStats st = gate_stats(res.circuit);
    out << "kind " << a.kind << "\n";
    out << "qubits " << res.circuit.num_qubits() << "\n";
    out << "ancillas " << res.ancillas.size() << "\n";
    out << "residual " << format_statistic(residual) << "\n";
    out << "leakage " << format_statistic(ru.leakage) << "\n";
    out << "gates " << st.gates << "\n";
    out << "elementary " << st.elementary_count() << "\n";
    for (const auto &[name, count] : st.by_kind) {
        out << "count " << name << " " << count << "\n";
    }
    if (a.output.empty()) {
        out << format_circuit(res.circuit);
    }
    return residual <= tol && ru.leakage <= tol ? kExitOk : kExitCheckFailed;
}

inline int cmd_build(const std::string &aut_path, const std::string &stage, unsigned r,
                     std::optional<std::size_t> counter, const std::string &output, std::ostream &out) {
    const Automaton aut = read_automaton_file(aut_path);
    accept_probability(aut);
    const RegisterLayout l = make_layout(aut, r, counter);
    Circuit c;
    const Circuit qx = build_qx(aut, l);
    if (stage == "qx") {
        c = qx;
    } else {
        Circuit vx = build_vx(qx, l.c_width);
        vx.set_metadata(pipeline_detail::provenance(aut, l, "vx"));
        if (stage == "vx") {
            c = vx;
        } else if (stage == "uplus" || stage == "uminus") {
            c = build_accumulator(vx, l, stage == "uplus" ? Sign::kPlus : Sign::kMinus);
            c.set_metadata(pipeline_detail::provenance(aut, l, stage));
        } else {
            c = build_final(build_accumulator(vx, l, Sign::kPlus), build_accumulator(vx, l, Sign::kMinus), l);
            c.set_metadata(pipeline_detail::provenance(aut, l, "final"));
        }
    }
    if (output.empty()) {
        out << format_circuit(c);
    } else {
        write_circuit_file(output, c);
        out << "wrote " << output << " qubits " << c.num_qubits() << " instructions " << c.instructions().size()
            << "\n";
    }
    return kExitOk;
}

inline int cmd_sim(const std::string &path, std::optional<Qubit> clean, std::ostream &out) {
    const Circuit c = read_circuit_file(path);
    const auto problems = validate(c);
    if (!problems.empty()) {
        throw InvalidArgument("invalid circuit: " + problems.front().message);
    }
    const SimulationReport rep = clean ? run_dqc1_mixed(c, *clean) : run(c, 0);
    out << format_report(rep);
    return kExitOk;
}

inline int cmd_decide(const std::string &aut_path, unsigned r, bool dqc1, double tol, std::ostream &out) {
    const Automaton aut = read_automaton_file(aut_path);
    const DecisionReport d = decide(aut, r, dqc1);
    out << format_decision(d);
    const bool matches = std::abs(d.p_w0 - d.predicted.p0) <= tol;
    out << "check verdict " << (d.correct() ? "pass" : "fail") << "\n";
    out << "check bound " << (d.bound_met() ? "pass" : "fail") << "\n";
    out << "check predicted " << (matches ? "pass" : "fail") << "\n";
    return d.correct() && d.bound_met() && matches ? kExitOk : kExitCheckFailed;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"postforge: postselection-elimination circuit compiler and simulator"};
    app.require_subcommand(1);

    cli_detail::SynthArgs sa;
    auto *synth = app.add_subcommand("synth", "synthesize a gadget and verify it against its definition");
    synth->add_option("kind", sa.kind, "mcx | cgate | cinc | inc | incmod | w | or3")
        ->required()
        ->check(CLI::IsMember({"mcx", "cgate", "cinc", "inc", "incmod", "w", "or3"}));
    synth->add_option("--k", sa.k, "number of controls")->check(CLI::Range(0, 10));
    synth->add_option("--n", sa.n, "counter width")->check(CLI::Range(1, 10));
    synth->add_option("--M", sa.modulus, "modulus for incmod")->check(CLI::Range(2, 1 << 10));
    synth->add_option("--width", sa.width, "register width for incmod")->check(CLI::Range(1, 10));
    synth->add_option("--mode", sa.mode, "and | or")->check(CLI::IsMember({"and", "or"}));
    synth->add_option("--gate", sa.gate, "base gate for cgate: x | h | t")->check(CLI::IsMember({"x", "h", "t"}));
    synth->add_option("-o,--output", sa.output, "circuit file to write");

    std::string aut_path;
    std::string stage = "final";
    unsigned r = 1;
    std::optional<std::size_t> counter;
    std::string output;
    auto *build = app.add_subcommand("build", "build a pipeline stage circuit for an automaton");
    build->add_option("automaton", aut_path)->required()->check(CLI::ExistingFile);
    build->add_option("--stage", stage)->check(CLI::IsMember({"qx", "vx", "uplus", "uminus", "final"}));
    build->add_option("--r", r, "repetitions")->check(CLI::Range(1u, kMaxRepetitions));
    build->add_option("--N", counter, "counter width override for C")->check(CLI::Range(1, 30));
    build->add_option("-o,--output", output);

    std::string circuit_path;
    std::optional<Qubit> clean;
    auto *sim = app.add_subcommand("sim", "simulate a circuit file");
    sim->add_option("circuit", circuit_path)->required()->check(CLI::ExistingFile);
    sim->add_option("--dqc1-clean", clean, "clean qubit index for mixed-input enumeration");

    bool dqc1 = false;
    auto *dec = app.add_subcommand("decide", "build, simulate and decide p_a > 1/2");
    dec->add_option("automaton", aut_path)->required()->check(CLI::ExistingFile);
    dec->add_option("--r", r, "repetitions")->check(CLI::Range(1u, kMaxRepetitions));
    dec->add_flag("--dqc1", dqc1, "route through the one-clean-qubit wrapper");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const double tol = tolerance_from_env();
    try {
        if (*synth) {
            return cli_detail::cmd_synth(sa, tol, out);
        }
        if (*build) {
            return cli_detail::cmd_build(aut_path, stage, r, counter, output, out);
        }
        if (*sim) {
            return cli_detail::cmd_sim(circuit_path, clean, out);
        }
        return cli_detail::cmd_decide(aut_path, r, dqc1, tol, out);
    } catch (const Error &e) {
        err << "error " << error_code_name(e.code()) << ": " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::kZeroOverlap: return kExitZeroOverlap;
            case ErrorCode::kHalfProbability: return kExitHalfProbability;
            case ErrorCode::kInvalidArgument:
            case ErrorCode::kParse: return kExitUsage;
            default: return kExitConstruction;
        }
    }
}

inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    std::vector<const char *> argv{"postforge"};
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace postforge
