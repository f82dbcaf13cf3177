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

#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "postforge/cli.hpp"

using namespace postforge;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(const std::vector<std::string> &args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string temp_path(const std::string &name) {
    return (std::filesystem::temp_directory_path() / ("postforge_test_" + name)).string();
}

bool contains(const std::string &hay, const std::string &needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST(Cli, SynthIncrementVerifies) {
    const auto r = cli({"synth", "inc", "--n", "3"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(contains(r.out, "kind inc"));
    EXPECT_TRUE(contains(r.out, "residual"));
}

TEST(Cli, SynthEveryKind) {
    for (const auto &args : std::vector<std::vector<std::string>>{
             std::vector<std::string>{"synth", "mcx", "--k", "3"},
             {"synth", "cgate", "--k", "2", "--gate", "h", "--mode", "or"},
             {"synth", "cinc", "--k", "2", "--n", "2"},
             {"synth", "incmod", "--M", "5", "--width", "3"},
             {"synth", "w"},
             {"synth", "or3"},
         }) {
        const auto r = cli(args);
        EXPECT_EQ(r.code, kExitOk) << args[1] << ": " << r.err;
    }
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"synth", "bogus"}).code, kExitUsage);
    EXPECT_EQ(cli({"synth", "inc", "--n", "11"}).code, kExitUsage);
    EXPECT_EQ(cli({"decide", fixtures::data_path("missing.aut")}).code, kExitUsage);
    EXPECT_EQ(cli({"decide", fixtures::data_path("a38.aut"), "--r", "9"}).code, kExitUsage);
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, BuildThenSimulate) {
    const std::string path = temp_path("qx.circ");
    const auto b = cli({"build", fixtures::data_path("a38.aut"), "--stage", "qx", "-o", path});
    ASSERT_EQ(b.code, kExitOk) << b.err;
    const auto s = cli({"sim", path});
    EXPECT_EQ(s.code, kExitOk) << s.err;
    EXPECT_TRUE(contains(s.out, "p_post "));
    std::filesystem::remove(path);
}

TEST(Cli, BuildPrintsCircuitWithoutOutputFile) {
    const auto b = cli({"build", fixtures::data_path("a38.aut"), "--stage", "vx"});
    EXPECT_EQ(b.code, kExitOk) << b.err;
    EXPECT_FALSE(b.out.empty());
}

TEST(Cli, CounterTooSmallIsAConstructionError) {
    const auto b = cli({"build", fixtures::data_path("a38.aut"), "--stage", "vx", "--N", "2"});
    EXPECT_EQ(b.code, kExitConstruction);
    EXPECT_TRUE(contains(b.err, "CounterTooSmall"));
}

TEST(Cli, ZeroOverlapExitCode) {
    Circuit c(1);
    c.x(0).post(0, PostTarget::kZero);
    const std::string path = temp_path("dead.circ");
    write_circuit_file(path, c);
    const auto r = cli({"sim", path});
    EXPECT_EQ(r.code, kExitZeroOverlap);
    std::filesystem::remove(path);
}

TEST(Cli, DecideThreeEighths) {
    const auto r = cli({"decide", fixtures::data_path("a38.aut"), "--r", "1"});
    EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
    EXPECT_TRUE(contains(r.out, "verdict reject"));
    EXPECT_TRUE(contains(r.out, "check bound pass"));
}

TEST(Cli, DecideDqc1) {
    const auto r = cli({"decide", fixtures::data_path("a58.aut"), "--dqc1"});
    EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
    EXPECT_TRUE(contains(r.out, "verdict accept"));
}

TEST(Cli, DecideHalfExitCode) {
    const auto r = cli({"decide", fixtures::data_path("half.aut")});
    EXPECT_EQ(r.code, kExitHalfProbability);
    EXPECT_TRUE(contains(r.err, "HalfProbability"));
}
