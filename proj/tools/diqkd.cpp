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


// Command-line front end: rate, scan, curve and selftest.
// Exit codes: 0 success, 1 config error, 2 solver failure, 3 selftest failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "diqkd/config.hpp"
#include "diqkd/errors.hpp"
#include "diqkd/optimize.hpp"
#include "diqkd/report.hpp"
#include "diqkd/selftest.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;
constexpr int kSelftestFailure = 3;

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::string> level;
    std::optional<int> budget;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallel;
    bool baseline = false;
    bool inject_fault = false;
};

diqkd::RunConfig resolve(const Flags &f) {
    diqkd::RunConfig c = f.config.empty() ? diqkd::parse_config_text("{}") : diqkd::load_config(f.config);
    if (f.level) c.level = *f.level;
    if (f.budget) c.budget = *f.budget;
    if (f.seed) c.seed = *f.seed;
    if (f.parallel) c.parallel = *f.parallel;
    if (f.baseline) c.baseline = true;
    if (!f.out.empty()) c.csv = f.out;
    // Re-validate with the overrides applied.
    return diqkd::parse_config(diqkd::to_json(c));
}

std::ofstream open_output(const std::string &path) {
    std::ofstream out(path);
    if (!out) throw diqkd::ParameterError("--out", "cannot write '" + path + "'");
    return out;
}

void progress(const diqkd::ProgressEvent &ev) {
    using Kind = diqkd::ProgressEvent::Kind;
    if (ev.kind == Kind::point_started) std::fprintf(stderr, "[eta %.6g] started\n", ev.eta);
    if (ev.kind == Kind::point_finished)
        std::fprintf(stderr, "[eta %.6g] finished after %d evaluations, rate %s\n", ev.eta, ev.evaluations,
                     diqkd::format_number(ev.best_rate).c_str());
}

int cmd_rate(const Flags &f) {
    const diqkd::RunConfig c = resolve(f);
    if (!c.has_protocol) throw diqkd::ParameterError("protocol", "rate needs theta, alice, bob and p");
    const diqkd::ProtocolParams pp = c.protocol();
    const diqkd::RatePoint rp = c.baseline ? diqkd::baseline_point(pp) : diqkd::key_rate(pp, c.rate_options());
    diqkd::write_record(std::cout, rp);
    if (!c.csv.empty()) {
        auto out = open_output(c.csv);
        diqkd::write_csv(out, {rp});
    }
    if (!c.report.empty()) {
        auto out = open_output(c.report);
        diqkd::write_record(out, rp);
    }
    return rp.rate ? kOk : kSolverFailure;
}

int cmd_scan(const Flags &f) {
    const diqkd::RunConfig c = resolve(f);
    const auto tr = diqkd::threshold_scan(c.detector(), c.state(), c.search_space(), c.optimization_budget(),
                                          c.scan_options(), c.search_options(), c.warm_start(), progress);
    diqkd::write_record(std::cout, tr);
    std::vector<diqkd::RatePoint> rows;
    for (const auto &probe : tr.probes) rows.push_back(probe.result.best);
    if (!c.csv.empty()) {
        auto out = open_output(c.csv);
        diqkd::write_csv(out, rows);
    } else {
        diqkd::write_csv(std::cout, rows);
    }
    if (!c.report.empty()) {
        auto out = open_output(c.report);
        diqkd::write_record(out, tr);
    }
    return kOk;
}

int cmd_curve(const Flags &f) {
    const diqkd::RunConfig c = resolve(f);
    if (c.grid.empty()) throw diqkd::ParameterError("curve.grid", "curve needs a non-empty efficiency grid");
    const auto cr = diqkd::curve(c.grid, c.detector(), c.state(), c.search_space(), c.optimization_budget(),
                                 c.search_options(), c.warm_start(), progress);
    for (const auto &w : cr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!c.csv.empty()) {
        auto out = open_output(c.csv);
        diqkd::write_csv(out, cr.points);
    } else {
        diqkd::write_csv(std::cout, cr.points);
    }
    return kOk;
}

int cmd_selftest(const Flags &f) {
    diqkd::SelftestOptions opt;
    opt.perturb_constraint = f.inject_fault;
    const auto results = diqkd::run_selftest(opt);
    int failed = 0;
    for (const auto &r : results) {
        std::printf("%s %-28s %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
        failed += !r.passed;
    }
    std::printf("%zu checks, %d failed\n", results.size(), failed);
    return failed ? kSelftestFailure : kOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Device-independent QKD key rates with random post-selection"};
    app.require_subcommand(1);
    Flags flags;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "CSV output path");
        sub->add_option("--level", flags.level, "relaxation level: 1..4 or 2ab");
        sub->add_option("--budget", flags.budget, "rate evaluations per optimized point");
        sub->add_option("--seed", flags.seed, "restart sampling seed");
        sub->add_option("--parallel", flags.parallel, "worker threads (0 = hardware)");
    };
    CLI::App *rate = app.add_subcommand("rate", "evaluate one configuration");
    common(rate);
    CLI::App *scan = app.add_subcommand("scan", "locate the threshold efficiency");
    common(scan);
    scan->add_flag("--baseline", flags.baseline, "use the standard CHSH analysis");
    CLI::App *curve = app.add_subcommand("curve", "optimized rate over an efficiency grid");
    common(curve);
    curve->add_flag("--baseline", flags.baseline, "use the standard CHSH analysis");
    CLI::App *selftest = app.add_subcommand("selftest", "run the invariant suite");
    selftest->add_flag("--inject-fault", flags.inject_fault)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*rate) return cmd_rate(flags);
        if (*scan) return cmd_scan(flags);
        if (*curve) return cmd_curve(flags);
        return cmd_selftest(flags);
    } catch (const diqkd::ParameterError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverFailure;
    }
}
