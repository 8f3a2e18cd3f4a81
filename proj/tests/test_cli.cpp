// Copyright 2026 The pwmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "pwmsim/cli.hpp"
#include "pwmsim/io.hpp"

using namespace pwmsim;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "pwmsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
    auto p = fs::temp_directory_path() / "pwmsim_test_cli" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("cli: usage and validation exit codes") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"schedule", "-M", "zero"}).code == 2);
    CHECK(run({"schedule", "-M", "0"}).code == 2);
    CHECK(run({"--format", "png", "schedule"}).code == 2);

    const auto dir = fresh("bad");
    std::ofstream(dir / "c.json") << R"({"model": {"qbits": 2}})";
    const auto r = run({"--config", (dir / "c.json").string(), "schedule"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("model.qbits"));

    // Noise studies must be seeded.
    CHECK(run({"--quick", "--out", dir.string(), "noise"}).code == 2);
    CHECK(cli::exit_code(ErrorKind::NoConvergence) == 3);
    CHECK(cli::exit_code(ErrorKind::ConfigInvalid) == 2);
}

TEST_CASE("cli: dry run prints the resolved plan and writes nothing") {
    const auto dir = fresh("dry");
    const auto r = run({"--dry-run", "--quick", "--seed", "7", "--out", (dir / "o").string(), "noise"});
    REQUIRE(r.code == 0);
    const auto plan = nlohmann::json::parse(r.out);
    CHECK(plan["command"] == "noise");
    CHECK(plan["config"]["seed"] == 7);
    CHECK(plan["config"]["study"]["trials"] == 20);
    CHECK(plan["config_hash"].get<std::string>().size() == 16);
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("cli: schedule output") {
    const auto dir = fresh("schedule");
    REQUIRE(run({"--out", dir.string(), "--format", "csv", "schedule"}).code == 0);
    const auto t = read_csv((dir / "schedule.csv").string());
    CHECK(t.kind == "schedule");
    REQUIRE(t.rows.size() == 20);
    CHECK(t.number(0, "width_us") ==
          Approx(0.1557919).margin(5e-7));
    CHECK_FALSE(fs::exists(dir / "schedule.svg"));
    CHECK(run({"--out", dir.string(), "schedule", "--horizon-us", "-1"}).code == 2);
    REQUIRE(run({"--out", dir.string(), "--format", "csv", "schedule", "--horizon-us", "0"}).code == 0);
    CHECK(read_csv((dir / "schedule.csv").string()).rows.empty());
}

TEST_CASE("cli: error sweep contains the reference point") {
    const auto dir = fresh("error");
    REQUIRE(run({"--out", dir.string(), "--format", "csv,json,svg", "error", "--times", "10,20", "--pulse-numbers", "20"}).code == 0);
    const auto t = read_csv((dir / "error.csv").string());
    bool found = false;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.number(i, "t_us") == 10.0 && t.number(i, "pulse_number") == 20.0) {
            found = true;
            CHECK(t.number(i, "actual") == Approx(7.37e-3).epsilon(0.01));
            CHECK(t.number(i, "priori_direct") >= t.number(i, "actual"));
        }
    }
    CHECK(found);
    const auto manifest = nlohmann::json::parse(slurp(dir / "error.json"));
    CHECK(manifest["config_hash"] == t.config_hash);
    CHECK(fs::exists(dir / "error.svg"));
}

TEST_CASE("cli: noise without noise has zero variance") {
    const auto dir = fresh("noise");
    REQUIRE(run({"--quick", "--seed", "3", "--out", dir.string(), "noise", "--delta-us", "0", "--pulse-numbers",
                 "20", "--trials", "5", "--time-us", "20"})
                .code == 0);
    const auto t = read_csv((dir / "noise.csv").string());
    REQUIRE_FALSE(t.rows.empty());
    for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(t.number(i, "variance") == 0.0);
}

TEST_CASE("cli: spectrum of a constant control is pure DC") {
    const auto dir = fresh("dc");
    std::ofstream(dir / "c.json")
        << R"({"model": {"signals": [{"kind": "constant", "value": 0.5, "freq_mhz": 0.05}]}})";
    REQUIRE(run({"--config", (dir / "c.json").string(), "--out", dir.string(), "--format", "csv", "spectrum", "-M",
                 "10"})
                .code == 0);
    const auto t = read_csv((dir / "spectrum.csv").string());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i][t.column("series")] != "signal") continue;
        const double n = t.number(i, "n");
        CHECK(t.number(i, "abs") == Approx(n == 0.0 ? 0.5 : 0.0).margin(1e-12));
    }
}

TEST_CASE("cli: reruns are byte identical outside timing") {
    const auto a = fresh("det_a");
    const auto b = fresh("det_b");
    for (const auto& d : {a, b})
        REQUIRE(run({"--quick", "--seed", "11", "--out", d.string(), "--format", "csv,json,svg", "noise", "--pulse-numbers", "20", "--trials",
                     "8", "--time-us", "20"})
                    .code == 0);
    CHECK(slurp(a / "noise.csv") == slurp(b / "noise.csv"));
    REQUIRE(fs::exists(a / "noise.svg"));
    CHECK(slurp(a / "noise.svg") == slurp(b / "noise.svg"));
    auto ja = nlohmann::json::parse(slurp(a / "noise.json"));
    auto jb = nlohmann::json::parse(slurp(b / "noise.json"));
    ja.erase("timing");
    jb.erase("timing");
    CHECK(ja == jb);
}

TEST_CASE("cli: installed binary agrees with in-process runs") {
    const char* bin = std::getenv("PWMSIM_BIN");
    if (!bin) SKIP("PWMSIM_BIN not set");
    const auto dir = fresh("bin");
    const std::string cmd = std::string(bin) + " --out " + dir.string() + " --format csv schedule > /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const auto d2 = fresh("bin_inproc");
    REQUIRE(run({"--out", d2.string(), "--format", "csv", "schedule"}).code == 0);
    CHECK(slurp(dir / "schedule.csv") == slurp(d2 / "schedule.csv"));
    CHECK(WEXITSTATUS(std::system((std::string(bin) + " nope 2> /dev/null").c_str())) == 2);
}
