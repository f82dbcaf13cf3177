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

#include <string>

#include "postforge/automaton.hpp"
#include "postforge/circuit.hpp"

namespace fixtures {

inline std::string data_path(const std::string &name) {
    return std::string(POSTFORGE_DATA_DIR) + "/" + name;
}

inline postforge::Automaton load(const std::string &name) {
    return postforge::read_automaton_file(data_path(name));
}

/// The first `n` instructions of `c`, same width and registers.
inline postforge::Circuit prefix(const postforge::Circuit &c, std::size_t n) {
    postforge::Circuit out(c.num_qubits());
    for (const auto &r : c.registers()) {
        out.add_register(r.name, r.start, r.length);
    }
    for (std::size_t i = 0; i < n; i++) {
        out.add(c.instructions()[i]);
    }
    return out;
}

}  // namespace fixtures
