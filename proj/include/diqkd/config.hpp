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

// Run configuration: one JSON document, checked against a fixed schema before
// anything is computed. Unknown keys are errors and every error names the
// offending field by its dotted path.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diqkd/entropy.hpp"
#include "diqkd/errors.hpp"
#include "diqkd/optimize.hpp"
#include "diqkd/relaxation.hpp"

namespace diqkd {

struct RunConfig {
    // protocol
    bool has_protocol = false;
    double theta = std::numbers::pi / 4;
    std::array<double, kAliceInputs> alice{};
    std::array<double, kBobInputs> bob{};
    double p = 1.0;
    // detector and source
    double eta = 1.0;
    double dark = 0.0;
    double visibility = 1.0;
    // relaxation and solver
    std::string level = "2";
    double solver_tolerance = 1e-8;
    bool binary_ec = false;
    // optimizer
    int budget = 2000;
    int restarts = 8;
    double optimizer_tolerance = 1e-7;
    std::uint64_t seed = 1;
    int parallel = 0;
    double log10_p_min = kLog10PMin;
    // scan and curve
    double eta_min = 0.66;
    double eta_max = 0.75;
    double bracket = 0.002;
    double step = 0.01;
    std::vector<double> grid;
    // baseline
    bool baseline = false;
    bool baseline_free_theta = false;
    // outputs
    std::string csv;
    std::string report;

    friend bool operator==(const RunConfig &, const RunConfig &) = default;

    ProtocolParams protocol() const {
        ProtocolParams pp;
        pp.state.theta = theta;
        pp.state.visibility = visibility;
        pp.angles.alice = alice;
        pp.angles.bob = bob;
        pp.p = p;
        pp.detector = {eta, dark};
        return pp;
    }

    StateParams state() const {
        StateParams sp;
        sp.theta = theta;
        sp.visibility = visibility;
        return sp;
    }

    DetectorParams detector() const { return {eta, dark}; }

    OptimizationBudget optimization_budget() const { return {budget, restarts, optimizer_tolerance, seed, parallel}; }

    RateOptions rate_options() const { return {npa::RelaxationLevel::parse(level), solver_tolerance, binary_ec}; }

    SearchOptions search_options() const {
        SearchOptions so;
        so.rate = rate_options();
        so.baseline = baseline;
        return so;
    }

    SearchSpace search_space() const {
        if (baseline) return SearchSpace::baseline(baseline_free_theta);
        SearchSpace s;
        s.lower[kLogP] = log10_p_min;
        return s;
    }

    ScanOptions scan_options() const { return {eta_min, eta_max, bracket, step}; }

    /// Starting point of a search: the configured protocol, if any.
    std::optional<Point> warm_start() const {
        if (!has_protocol) return std::nullopt;
        return encode(protocol());
    }
};

namespace detail {

using nlohmann::json;

// Schema walker: each accessor removes the key it reads so leftovers are
// reported as unknown.
class Section {
   public:
    Section(json node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (!node_.is_object()) throw ParameterError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string &key) const { return node_.contains(key); }

    std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    void read(const std::string &key, T &out) {
        if (!node_.contains(key)) return;
        json v = node_[key];
        node_.erase(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ParameterError(field(key), "expected a number");
                out = v.get<double>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ParameterError(field(key), "expected true or false");
                out = v.get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ParameterError(field(key), "expected an integer");
                if (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0)
                    throw ParameterError(field(key), "expected a non-negative integer");
                out = v.get<T>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (v.is_number_integer()) {
                    out = std::to_string(v.get<std::int64_t>());
                } else {
                    if (!v.is_string()) throw ParameterError(field(key), "expected a string");
                    out = v.get<std::string>();
                }
            } else {
                if (!v.is_array()) throw ParameterError(field(key), "expected an array of numbers");
                out.clear();
                for (const auto &e : v) {
                    if (!e.is_number()) throw ParameterError(field(key), "expected an array of numbers");
                    out.push_back(e.get<double>());
                }
            }
        } catch (const json::exception &e) {
            throw ParameterError(field(key), e.what());
        }
    }

    template <std::size_t N>
    void read_array(const std::string &key, std::array<double, N> &out) {
        if (!node_.contains(key)) return;
        std::vector<double> v;
        read(key, v);
        if (v.size() != N) throw ParameterError(field(key), "expected exactly " + std::to_string(N) + " angles");
        std::copy(v.begin(), v.end(), out.begin());
    }

    Section child(const std::string &key) {
        json v = node_.contains(key) ? node_[key] : json::object();
        node_.erase(key);
        return Section(std::move(v), field(key));
    }

    void finish() const {
        if (!node_.empty()) throw ParameterError(field(node_.begin().key()), "unknown key");
    }

   private:
    json node_;
    std::string path_;
};

inline void check_config(const RunConfig &c) {
    auto need = [](bool ok, const char *field, const std::string &what) { require(ok, field, what); };
    need(in_closed(c.theta, 0.0, std::numbers::pi / 2), "protocol.theta", "must lie in [0, pi/2]");
    for (double a : c.alice) need(std::abs(a) <= std::numbers::pi + kAngleSlack, "protocol.alice", "angles must lie in [-pi, pi]");
    for (double b : c.bob) need(std::abs(b) <= std::numbers::pi + kAngleSlack, "protocol.bob", "angles must lie in [-pi, pi]");
    need(in_closed(c.p, 0.0, 1.0), "protocol.p", "must lie in [0, 1]");
    need(in_closed(c.eta, 0.0, 1.0), "detector.eta", "must lie in [0, 1]");
    need(c.dark >= 0.0 && c.dark < 1.0, "detector.dark", "must lie in [0, 1)");
    need(in_closed(c.visibility, 0.0, 1.0), "source.visibility", "must lie in [0, 1]");
    try {
        const auto lvl = npa::RelaxationLevel::parse(c.level);
        need(lvl.depth >= 1 && lvl.depth <= npa::kMaxTractableDepth, "solver.level", "expected 1..4 or 2ab");
    } catch (const ParameterError &) {
        throw ParameterError("solver.level", "expected 1..4 or 2ab, got '" + c.level + "'");
    }
    need(c.solver_tolerance > 0 && c.solver_tolerance < 1, "solver.tolerance", "must lie in (0, 1)");
    need(c.budget > 0, "optimizer.budget", "must be positive");
    need(c.restarts > 0, "optimizer.restarts", "must be positive");
    need(c.optimizer_tolerance > 0, "optimizer.tolerance", "must be positive");
    need(c.parallel >= 0, "optimizer.parallel", "must be non-negative");
    need(c.log10_p_min < 0.0, "optimizer.log10_p_min", "must be negative");
    need(in_closed(c.eta_min, 0.0, 1.0), "scan.eta_min", "must lie in [0, 1]");
    need(in_closed(c.eta_max, 0.0, 1.0) && c.eta_max > c.eta_min, "scan.eta_max", "must lie in (eta_min, 1]");
    need(c.bracket > 0, "scan.bracket", "must be positive");
    need(c.step > 0, "scan.step", "must be positive");
    for (double e : c.grid) need(in_closed(e, 0.0, 1.0), "curve.grid", "efficiencies must lie in [0, 1]");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json &doc) {
    RunConfig c;
    detail::Section root(doc, "");
    if (root.has("protocol")) {
        c.has_protocol = true;
        auto s = root.child("protocol");
        s.read("theta", c.theta);
        s.read_array("alice", c.alice);
        s.read_array("bob", c.bob);
        s.read("p", c.p);
        s.finish();
    }
    {
        auto s = root.child("detector");
        s.read("eta", c.eta);
        s.read("dark", c.dark);
        s.finish();
    }
    {
        auto s = root.child("source");
        s.read("visibility", c.visibility);
        s.finish();
    }
    {
        auto s = root.child("solver");
        s.read("level", c.level);
        s.read("tolerance", c.solver_tolerance);
        s.read("binary_ec", c.binary_ec);
        s.finish();
    }
    {
        auto s = root.child("optimizer");
        s.read("budget", c.budget);
        s.read("restarts", c.restarts);
        s.read("tolerance", c.optimizer_tolerance);
        s.read("seed", c.seed);
        s.read("parallel", c.parallel);
        s.read("log10_p_min", c.log10_p_min);
        s.finish();
    }
    {
        auto s = root.child("scan");
        s.read("eta_min", c.eta_min);
        s.read("eta_max", c.eta_max);
        s.read("bracket", c.bracket);
        s.read("step", c.step);
        s.finish();
    }
    {
        auto s = root.child("curve");
        s.read("grid", c.grid);
        s.finish();
    }
    {
        auto s = root.child("baseline");
        s.read("enabled", c.baseline);
        s.read("free_theta", c.baseline_free_theta);
        s.finish();
    }
    {
        auto s = root.child("output");
        s.read("csv", c.csv);
        s.read("report", c.report);
        s.finish();
    }
    root.finish();
    detail::check_config(c);
    return c;
}

inline RunConfig parse_config_text(const std::string &text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParameterError("<document>", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline RunConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("--config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline nlohmann::json to_json(const RunConfig &c) {
    nlohmann::json doc;
    if (c.has_protocol)
        doc["protocol"] = {{"theta", c.theta}, {"alice", c.alice}, {"bob", c.bob}, {"p", c.p}};
    doc["detector"] = {{"eta", c.eta}, {"dark", c.dark}};
    doc["source"] = {{"visibility", c.visibility}};
    doc["solver"] = {{"level", c.level}, {"tolerance", c.solver_tolerance}, {"binary_ec", c.binary_ec}};
    doc["optimizer"] = {{"budget", c.budget},
                        {"restarts", c.restarts},
                        {"tolerance", c.optimizer_tolerance},
                        {"seed", c.seed},
                        {"parallel", c.parallel},
                        {"log10_p_min", c.log10_p_min}};
    doc["scan"] = {{"eta_min", c.eta_min}, {"eta_max", c.eta_max}, {"bracket", c.bracket}, {"step", c.step}};
    doc["curve"] = {{"grid", c.grid}};
    doc["baseline"] = {{"enabled", c.baseline}, {"free_theta", c.baseline_free_theta}};
    doc["output"] = {{"csv", c.csv}, {"report", c.report}};
    return doc;
}

}  // namespace diqkd
