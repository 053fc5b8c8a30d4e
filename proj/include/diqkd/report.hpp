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


#pragma once

// Report writers: one CSV row per RatePoint and a "key = value" text record.

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "diqkd/entropy.hpp"
#include "diqkd/optimize.hpp"

namespace diqkd {

inline constexpr const char *kCsvHeader = "eta,theta,phi_a1,phi_a2,phi_b1,phi_b2,phi_b3,p,p_V,H_min,H_EC,rate,solver_status,gap";

/// 12 significant digits; "nokey" for the baseline no-key sentinel.
inline std::string format_number(double v) {
    if (v == kNoKey) return "nokey";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string csv_row(const RatePoint &rp) {
    const ProtocolParams &pp = rp.params;
    const double cells[] = {pp.detector.eta, pp.state.theta, pp.angles.alice[0], pp.angles.alice[1], pp.angles.bob[0],
                            pp.angles.bob[1], pp.angles.bob[2], pp.p, rp.retained, rp.h_min, rp.h_ec,
                            rp.rate.value_or(std::numeric_limits<double>::quiet_NaN())};
    std::string row;
    for (double c : cells) row += format_number(c) + ",";
    row += rp.status + "," + format_number(rp.gap);
    return row;
}

inline void write_csv(std::ostream &out, const std::vector<RatePoint> &rows) {
    out << kCsvHeader << '\n';
    for (const auto &r : rows) out << csv_row(r) << '\n';
}

inline void write_record(std::ostream &out, const RatePoint &rp) {
    const ProtocolParams &pp = rp.params;
    auto line = [&](const char *key, const std::string &value) { out << key << " = " << value << '\n'; };
    line("eta", format_number(pp.detector.eta));
    line("dark", format_number(pp.detector.dark));
    line("visibility", format_number(pp.state.visibility));
    line("theta", format_number(pp.state.theta));
    line("phi_a1", format_number(pp.angles.alice[0]));
    line("phi_a2", format_number(pp.angles.alice[1]));
    line("phi_b1", format_number(pp.angles.bob[0]));
    line("phi_b2", format_number(pp.angles.bob[1]));
    line("phi_b3", format_number(pp.angles.bob[2]));
    line("p", format_number(pp.p));
    line("level", rp.level);
    line("p_V", format_number(rp.retained));
    line("G", format_number(rp.guess));
    line("H_min", format_number(rp.h_min));
    line("H_EC", format_number(rp.h_ec));
    line("rate", rp.rate ? format_number(*rp.rate) : "none");
    line("solver_status", rp.status);
    line("gap", format_number(rp.gap));
    line("iterations", std::to_string(rp.iterations));
    for (const auto &w : rp.warnings) line("warning", w);
}

inline void write_record(std::ostream &out, const ThresholdResult &tr) {
    if (tr.threshold) {
        out << "threshold = " << format_number(*tr.threshold) << '\n';
    } else {
        out << "threshold = none\n";
        out << "note = no threshold in range\n";
    }
    out << "bracket_lower = " << format_number(tr.lower) << '\n';
    out << "bracket_upper = " << format_number(tr.upper) << '\n';
    out << "probes = " << tr.probes.size() << '\n';
}

}  // namespace diqkd
