// Copyright 2026 The diqkd-ps Authors
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


#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with `args` and shell `redirect`, capturing the pipe and the
// exit status.
Result run_redirected(const std::string &args, const std::string &redirect) {
    const std::string cmd = std::string(DIQKD_CLI_PATH) + " " + args + " " + redirect;
    Result r;
    FILE *pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

Result run(const std::string &args) { return run_redirected(args, "2>/dev/null"); }

Result run_stderr(const std::string &args) { return run_redirected(args, "2>&1 1>/dev/null"); }

std::string config_path(const std::string &name) { return std::string(DIQKD_CONFIG_DIR) + "/" + name; }

fs::path write_temp(const std::string &name, const std::string &text) {
    const fs::path dir = fs::temp_directory_path() / "diqkd_cli_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string value_of(const std::string &record, const std::string &key) {
    std::istringstream in(record);
    for (std::string line; std::getline(in, line);)
        if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
    return "";
}

TEST(Rate, ExampleConfig) {
    const Result r = run("rate --config " + config_path("example_point.json"));
    EXPECT_EQ(r.code, 0);
    const std::string rate = value_of(r.out, "rate");
    ASSERT_FALSE(rate.empty()) << r.out;
    EXPECT_NEAR(std::stod(rate), 7.9e-5, 1.5e-5);
    EXPECT_EQ(value_of(r.out, "solver_status"), "optimal");
}

TEST(Rate, FullRetention) {
    const Result r = run("rate --config " + config_path("example_point_p1.json"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NEAR(std::stod(value_of(r.out, "H_min")), 0.03676, 2e-3);
    EXPECT_NEAR(std::stod(value_of(r.out, "H_EC")), 0.6501, 5e-4);
    EXPECT_EQ(value_of(r.out, "p_V"), "1");
}

TEST(Rate, CsvOutput) {
    const fs::path csv = fs::temp_directory_path() / "diqkd_cli_test" / "rate.csv";
    fs::create_directories(csv.parent_path());
    const Result r = run("rate --config " + config_path("example_point.json") + " --out " + csv.string());
    EXPECT_EQ(r.code, 0);
    const std::string text = read_file(csv);
    EXPECT_EQ(text.substr(0, text.find('\n')), "eta,theta,phi_a1,phi_a2,phi_b1,phi_b2,phi_b3,p,p_V,H_min,H_EC,rate,solver_status,gap");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Rate, LevelOverride) {
    const Result r = run("rate --config " + config_path("example_point.json") + " --level 1");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(value_of(r.out, "level"), "1");
}

TEST(Errors, OutOfRangeEfficiency) {
    const fs::path cfg = write_temp("eta.json", R"({"protocol": {"theta": 0.4, "alice": [0, 1], "bob": [0, 1, 2], "p": 0.1},
                                                   "detector": {"eta": 1.2}})");
    EXPECT_EQ(run("rate --config " + cfg.string()).code, 1);
    EXPECT_NE(run_stderr("rate --config " + cfg.string()).out.find("detector.eta"), std::string::npos);
}

TEST(Errors, UnknownKey) {
    const fs::path cfg = write_temp("unknown.json", R"({"detector": {"eta": 0.9, "colour": "red"}})");
    EXPECT_EQ(run("rate --config " + cfg.string()).code, 1);
    EXPECT_NE(run_stderr("rate --config " + cfg.string()).out.find("detector.colour"), std::string::npos);
}

TEST(Errors, BadFlags) {
    EXPECT_EQ(run("rate --config " + config_path("example_point.json") + " --level 9").code, 1);
    EXPECT_EQ(run("rate --no-such-flag").code, 1);
    EXPECT_EQ(run("rate --config /nonexistent.json").code, 1);
    EXPECT_EQ(run("").code, 1);
}

TEST(Errors, NoRateExitsTwo) {
    const fs::path cfg = write_temp("empty.json", R"({"protocol": {"theta": 0.4, "alice": [0, 1], "bob": [0, 1, 2], "p": 0.0},
                                                     "detector": {"eta": 0.0}})");
    const Result r = run("rate --config " + cfg.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(value_of(r.out, "rate"), "none");
}

TEST(Scan, NoThresholdInRange) {
    const fs::path cfg = write_temp("noscan.json", R"({"scan": {"eta_min": 0.95, "eta_max": 1.0},
                                                      "optimizer": {"budget": 200, "restarts": 2}})");
    const Result r = run("scan --baseline --config " + cfg.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(value_of(r.out, "threshold"), "none");
    EXPECT_NE(r.out.find("no threshold in range"), std::string::npos);
}

TEST(Scan, BaselineThreshold) {
    const Result r = run("scan --config " + config_path("baseline_scan.json"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NEAR(std::stod(value_of(r.out, "threshold")), 0.924, 0.003);
}

TEST(Curve, ThreePointGridAndDeterminism) {
    const fs::path cfg = write_temp("curve.json", R"({"curve": {"grid": [0.99, 0.95, 0.85]},
                                                     "optimizer": {"budget": 200, "restarts": 2, "seed": 5}})");
    const fs::path a = cfg.parent_path() / "curve_a.csv", b = cfg.parent_path() / "curve_b.csv";
    EXPECT_EQ(run("curve --baseline --config " + cfg.string() + " --out " + a.string()).code, 0);
    EXPECT_EQ(run("curve --baseline --parallel 2 --config " + cfg.string() + " --out " + b.string()).code, 0);
    const std::string text = read_file(a);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
    EXPECT_NE(text.find(",nokey,nokey,"), std::string::npos);
    EXPECT_EQ(text, read_file(b));
}

TEST(Curve, EmptyGridIsConfigError) {
    EXPECT_EQ(run("curve --baseline").code, 1);
}

TEST(Selftest, Passes) {
    const Result r = run("selftest");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("0 failed"), std::string::npos);
    EXPECT_GE(std::count(r.out.begin(), r.out.end(), '\n'), 13);
}

TEST(Selftest, InjectedFaultExitsThree) {
    const Result r = run("selftest --inject-fault");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("FAIL sdp_tsirelson_anchor"), std::string::npos);
}

}  // namespace
