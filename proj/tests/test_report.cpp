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


#include <algorithm>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "diqkd/report.hpp"

namespace diqkd {
namespace {

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, sep);) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

RatePoint sample_point() {
    RatePoint rp;
    rp.params.detector = {0.8, 0.0};
    rp.params.state.theta = 0.394;
    rp.params.angles.alice = {2.084, -2.853};
    rp.params.angles.bob = {-2.272, 2.926, -1.905};
    rp.params.p = 0.00527;
    rp.retained = 0.0030103868;
    rp.guess = 0.95985756;
    rp.h_min = 0.0591078;
    rp.h_ec = 0.0326943;
    rp.rate = rp.retained * (rp.h_min - rp.h_ec);
    rp.status = "optimal";
    rp.gap = 3e-9;
    rp.iterations = 27;
    return rp;
}

TEST(Format, TwelveSignificantDigits) {
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(7.9e-5), "7.9e-05");
    EXPECT_EQ(format_number(0.394), "0.394");
    EXPECT_EQ(format_number(kNoKey), "nokey");
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, HeaderColumns) {
    const auto cols = split(kCsvHeader, ',');
    EXPECT_EQ(cols, (std::vector<std::string>{"eta", "theta", "phi_a1", "phi_a2", "phi_b1", "phi_b2", "phi_b3", "p", "p_V",
                                              "H_min", "H_EC", "rate", "solver_status", "gap"}));
}

TEST(Csv, RowsAreRectangular) {
    RatePoint nokey = sample_point();
    nokey.rate = kNoKey;
    nokey.status = "nokey";
    RatePoint failed = sample_point();
    failed.rate.reset();
    failed.status = "numerical_failure";
    std::ostringstream out;
    write_csv(out, {sample_point(), nokey, failed});
    std::istringstream in(out.str());
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], kCsvHeader);
    for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(split(lines[i], ',').size(), 14u) << lines[i];
    EXPECT_EQ(split(lines[2], ',')[11], "nokey");
    EXPECT_EQ(split(lines[3], ',')[11], "nan");
    EXPECT_EQ(split(lines[3], ',')[12], "numerical_failure");
}

TEST(Csv, RowValues) {
    const auto cells = split(csv_row(sample_point()), ',');
    EXPECT_EQ(cells[0], "0.8");
    EXPECT_EQ(cells[1], "0.394");
    EXPECT_EQ(cells[7], "0.00527");
    EXPECT_EQ(cells[12], "optimal");
    EXPECT_NEAR(std::stod(cells[11]), *sample_point().rate, 1e-16);
}

TEST(Record, KeyValueLines) {
    RatePoint rp = sample_point();
    rp.warnings = {"solver stopped near-optimal"};
    std::ostringstream out;
    write_record(out, rp);
    const std::string text = out.str();
    std::istringstream in(text);
    std::vector<std::string> keys;
    for (std::string l; std::getline(in, l);) {
        const auto pos = l.find(" = ");
        ASSERT_NE(pos, std::string::npos) << l;
        keys.push_back(l.substr(0, pos));
    }
    for (const char *k : {"eta", "theta", "p", "p_V", "G", "H_min", "H_EC", "rate", "solver_status", "gap", "warning"})
        EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
    EXPECT_NE(text.find("H_min = 0.0591078\n"), std::string::npos);
    EXPECT_NE(text.find("solver_status = optimal\n"), std::string::npos);
}

TEST(Record, MissingRate) {
    RatePoint rp = sample_point();
    rp.rate.reset();
    std::ostringstream out;
    write_record(out, rp);
    EXPECT_NE(out.str().find("rate = none\n"), std::string::npos);
}

TEST(Record, Threshold) {
    ThresholdResult found;
    found.threshold = 0.6875;
    found.lower = 0.68;
    found.upper = 0.695;
    std::ostringstream a;
    write_record(a, found);
    EXPECT_NE(a.str().find("threshold = 0.6875\n"), std::string::npos);
    EXPECT_NE(a.str().find("bracket_lower = 0.68\n"), std::string::npos);

    ThresholdResult none;
    none.lower = 0.95;
    none.upper = 1.0;
    std::ostringstream b;
    write_record(b, none);
    EXPECT_NE(b.str().find("threshold = none\n"), std::string::npos);
    EXPECT_NE(b.str().find("no threshold in range"), std::string::npos);
}

}  // namespace
}  // namespace diqkd
