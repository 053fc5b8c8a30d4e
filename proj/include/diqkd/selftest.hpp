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

// Fast invariant suite behind the `selftest` subcommand: model identities,
// word counts, entropy bookkeeping and the SDP anchor values.

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "diqkd/entropy.hpp"
#include "diqkd/guessing.hpp"
#include "diqkd/model.hpp"
#include "diqkd/relaxation.hpp"

namespace diqkd {

struct SelftestOptions {
    /// Negative control: shifts one behavior constraint of every SDP anchor
    /// so those checks must fail.
    bool perturb_constraint = false;
    std::uint64_t seed = 20260101;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

namespace detail {

struct RandomDraws {
    std::mt19937_64 rng;
    explicit RandomDraws(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

    ProtocolParams protocol(double eta_lo, double vis_lo, double dark_hi) {
        ProtocolParams pp;
        pp.state.theta = uniform(0, std::numbers::pi / 2);
        pp.state.visibility = uniform(vis_lo, 1.0);
        for (double &a : pp.angles.alice) a = uniform(-std::numbers::pi, std::numbers::pi);
        for (double &b : pp.angles.bob) b = uniform(-std::numbers::pi, std::numbers::pi);
        pp.p = uniform(0.0, 1.0);
        pp.detector = {uniform(eta_lo, 1.0), dark_hi > 0 ? uniform(0.0, dark_hi) : 0.0};
        return pp;
    }
};

inline npa::BinaryWeights unit_weights() { return {{{1, 1}, {1, 1}}}; }

inline double anchor_guess(const BinaryBehavior &pb, npa::RelaxationLevel level, bool perturb) {
    auto gp = npa::assemble_guessing_program(pb, unit_weights(), npa::shared_relaxation(level));
    if (perturb) gp.problem.set_equality_rhs(0, gp.problem.equalities()[0].rhs + 0.05);
    const auto sol = npa::solve(gp);
    return sol.usable() ? sol.objective : std::numeric_limits<double>::quiet_NaN();
}

inline BinaryBehavior tsirelson_behavior() {
    MeasurementConfig mc;
    mc.alice = {0, std::numbers::pi / 2};
    mc.bob = {std::numbers::pi / 4, -std::numbers::pi / 4, 0};
    return binary_behavior({std::numbers::pi / 4, 1.0}, mc, {1.0, 0.0});
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace detail

inline std::vector<CheckResult> run_selftest(const SelftestOptions &opt = {}) {
    using detail::fmt;
    std::vector<CheckResult> out;
    auto check = [&](const std::string &name, const std::function<std::pair<bool, std::string>()> &body) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r{name};
        try {
            std::tie(r.passed, r.detail) = body();
        } catch (const std::exception &e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(r);
    };
    detail::RandomDraws draws(opt.seed);

    check("words_level1", [] {
        const auto rel = npa::build_relaxation({1, false});
        return std::pair{rel.dim() == 6 && rel.num_variables() == 16,
                         std::to_string(rel.dim()) + " words, " + std::to_string(rel.num_variables()) + " moments"};
    });
    check("words_level2", [] {
        const auto rel = npa::build_relaxation({2, false});
        return std::pair{rel.dim() == 20 && rel.num_variables() == 79,
                         std::to_string(rel.dim()) + " words, " + std::to_string(rel.num_variables()) + " moments"};
    });
    check("canonical_reduction", [] {
        using npa::Symbol;
        const auto w = npa::canonicalize({Symbol::A2, Symbol::B3, Symbol::B3, Symbol::A2});
        return std::pair{w.to_string() == "A2B3", w.to_string()};
    });
    check("behavior_normalization", [&] {
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            const auto pp = draws.protocol(0.0, 0.0, 0.01);
            const auto tb = behavior(pp.state, pp.angles, pp.detector);
            for (int x = 0; x < kAliceInputs; ++x)
                for (int y = 0; y < kBobInputs; ++y) {
                    double s = 0;
                    for (int a = 0; a < kClickOutcomes; ++a)
                        for (int b = 0; b < kClickOutcomes; ++b) {
                            s += tb(x, y, a, b);
                            if (tb(x, y, a, b) < -1e-12) worst = std::max(worst, -tb(x, y, a, b));
                        }
                    worst = std::max(worst, std::abs(s - 1));
                }
        }
        return std::pair{worst <= 1e-12, "worst deviation " + fmt(worst)};
    });
    check("behavior_no_signaling", [&] {
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            const auto pp = draws.protocol(0.0, 0.0, 0.01);
            const auto tb = behavior(pp.state, pp.angles, pp.detector);
            for (int o = 0; o < kClickOutcomes; ++o) {
                for (int x = 0; x < kAliceInputs; ++x)
                    for (int y = 1; y < kBobInputs; ++y)
                        worst = std::max(worst, std::abs(tb.alice_marginal(x, y, o) - tb.alice_marginal(x, 0, o)));
                for (int y = 0; y < kBobInputs; ++y)
                    worst = std::max(worst, std::abs(tb.bob_marginal(1, y, o) - tb.bob_marginal(0, y, o)));
            }
        }
        return std::pair{worst <= 1e-12, "worst marginal difference " + fmt(worst)};
    });
    check("binarization_paths_agree", [&] {
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            const auto pp = draws.protocol(0.0, 0.0, 0.01);
            const auto a = binarize(behavior(pp.state, pp.angles, pp.detector));
            const auto b = binary_behavior(pp.state, pp.angles, pp.detector);
            for (int x = 0; x < kAliceInputs; ++x)
                for (int y = 0; y < kBobInputs; ++y)
                    for (int s = 0; s < 2; ++s)
                        for (int t = 0; t < 2; ++t) worst = std::max(worst, std::abs(a(x, y, s, t) - b(x, y, s, t)));
        }
        return std::pair{worst <= 1e-12, "worst difference " + fmt(worst)};
    });
    check("retain_weights", [] {
        const double p = 0.00527;
        const auto w = ps_weights({p});
        const bool ok = w.binary[0][0] == 1 && w.binary[0][1] == p && w.binary[1][0] == p && w.binary[1][1] == p * p &&
                        w.ternary[2][3] == p * p && w.ternary[0][2] == p && w.ternary[3][0] == p;
        return std::pair{ok, "omega_11 = " + fmt(w.binary[1][1])};
    });
    check("p1_recovery", [&] {
        double worst = 0;
        for (int i = 0; i < 20; ++i) {
            auto pp = draws.protocol(0.0, 0.0, 0.01);
            const auto tb = behavior(pp.state, pp.angles, pp.detector);
            const auto psd = postselected_distribution(tb, ps_weights({1.0}));
            worst = std::max(worst, std::abs(psd.retained - 1.0));
            for (int b = 0; b < kClickOutcomes; ++b) {
                double merged = 0;
                for (int a = 1; a < kClickOutcomes; ++a) merged += tb(0, 2, a, b);
                worst = std::max(worst, std::abs(psd(0, b) - tb(0, 2, 0, b)));
                worst = std::max(worst, std::abs(psd(1, b) - merged));
            }
        }
        return std::pair{worst <= 1e-12, "worst deviation " + fmt(worst)};
    });
    check("ec_cost_oracle", [&] {
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            PostSelectedDistribution psd;
            psd.bob_symbols = i % 2 ? 4 : 3;
            double total = 0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < psd.bob_symbols; ++b) total += psd.table[a][b] = draws.uniform(0, 1);
            for (auto &row : psd.table)
                for (double &v : row) v /= total;
            // H(A|B) = sum_b P(b) H(A|B=b), in nats then converted.
            double h = 0;
            for (int b = 0; b < psd.bob_symbols; ++b) {
                const double pb = psd(0, b) + psd(1, b);
                for (int a = 0; a < 2; ++a)
                    if (psd(a, b) > 0) h -= psd(a, b) * std::log(psd(a, b) / pb);
            }
            worst = std::max(worst, std::abs(ec_cost(psd) - h / std::numbers::ln2));
        }
        return std::pair{worst <= 1e-10, "worst difference " + fmt(worst)};
    });
    check("ec_cost_limits", [] {
        PostSelectedDistribution corr, unif;
        corr.table[0][0] = corr.table[1][1] = 0.5;
        unif.table[0][0] = unif.table[0][1] = unif.table[1][0] = unif.table[1][1] = 0.25;
        const double c = ec_cost(corr), u = ec_cost(unif);
        return std::pair{std::abs(c) <= 1e-15 && std::abs(u - 1) <= 1e-15, "correlated " + fmt(c) + ", uniform " + fmt(u)};
    });
    check("sdp_deterministic_anchor", [&] {
        BinaryBehavior det;
        for (int x = 0; x < kAliceInputs; ++x)
            for (int y = 0; y < kBobInputs; ++y) det(x, y, 0, 0) = 1;
        const double g = detail::anchor_guess(det, {2, false}, opt.perturb_constraint);
        return std::pair{std::abs(g - 1) <= 1e-7, "G = " + fmt(g)};
    });
    check("sdp_tsirelson_anchor", [&] {
        const double g = detail::anchor_guess(detail::tsirelson_behavior(), {2, false}, opt.perturb_constraint);
        return std::pair{std::abs(g - 0.5) <= 1e-4, "G = " + fmt(g)};
    });
    check("sdp_weight_scaling", [&] {
        const auto pp = draws.protocol(0.8, 0.95, 0.0);
        const auto pb = binary_behavior(pp.state, pp.angles, pp.detector);
        const auto rel = npa::shared_relaxation({2, false});
        const npa::BinaryWeights w{{{1.0, 0.3}, {0.3, 0.09}}};
        npa::BinaryWeights w3 = w;
        for (auto &row : w3)
            for (double &v : row) v *= 3;
        const auto s1 = npa::solve(npa::assemble_guessing_program(pb, w, rel));
        const auto s3 = npa::solve(npa::assemble_guessing_program(pb, w3, rel));
        const double rel_err = std::abs(s3.objective - 3 * s1.objective) / std::abs(3 * s1.objective);
        return std::pair{s1.usable() && s3.usable() && rel_err <= 1e-8, "relative error " + fmt(rel_err)};
    });
    check("sdp_classical_lower_bound", [&] {
        const auto rel = npa::shared_relaxation({2, false});
        double worst = -1;
        for (int i = 0; i < 50; ++i) {
            const auto pp = draws.protocol(0.7, 0.95, 0.0);
            const auto pb = binary_behavior(pp.state, pp.angles, pp.detector);
            const auto w = ps_weights({pp.p}).binary;
            const auto sol = npa::solve(npa::assemble_guessing_program(pb, w, rel));
            if (!sol.usable()) return std::pair{false, "solve " + std::to_string(i) + ": " + sdp::to_string(sol.status)};
            double classical = 0;
            for (int a = 0; a < 2; ++a) {
                double s = 0;
                for (int b = 0; b < 2; ++b) s += w[a][b] * pb(MeasurementConfig::key_x, MeasurementConfig::key_y, a, b);
                classical = std::max(classical, s);
            }
            worst = std::max(worst, classical - sol.objective);
        }
        return std::pair{worst <= 1e-7, "largest shortfall " + fmt(worst)};
    });
    check("sdp_level_monotonicity", [&] {
        const auto rel1 = npa::shared_relaxation({1, false});
        const auto rel2 = npa::shared_relaxation({2, false});
        double worst = -1;
        for (int i = 0; i < 20; ++i) {
            const auto pp = draws.protocol(0.7, 0.9, 0.0);
            const auto pb = binary_behavior(pp.state, pp.angles, pp.detector);
            const auto w = ps_weights({pp.p}).binary;
            const auto s1 = npa::solve(npa::assemble_guessing_program(pb, w, rel1));
            const auto s2 = npa::solve(npa::assemble_guessing_program(pb, w, rel2));
            if (!s1.usable() || !s2.usable()) return std::pair{false, "solve " + std::to_string(i) + " failed"};
            worst = std::max(worst, s2.objective - s1.objective);
        }
        return std::pair{worst <= 1e-6, "largest G2 - G1 " + fmt(worst)};
    });
    check("sdp_detects_infeasible", [] {
        BinaryBehavior pr;
        for (int x = 0; x < kAliceInputs; ++x)
            for (int y = 0; y < kBobInputs; ++y)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) pr(x, y, a, b) = ((a ^ b) == (x == 1 && y == 1)) ? 0.5 : 0.0;
        const auto sol = npa::solve(npa::assemble_guessing_program(pr, detail::unit_weights(), npa::shared_relaxation({2, false})));
        return std::pair{sol.status == sdp::Status::infeasible, sdp::to_string(sol.status)};
    });
    check("baseline_tsirelson", [] {
        ProtocolParams pp;
        pp.angles.alice = {0, std::numbers::pi / 2};
        pp.angles.bob = {std::numbers::pi / 4, -std::numbers::pi / 4, 0};
        const double r = baseline_chsh_rate(pp);
        return std::pair{std::abs(r - 1) <= 1e-12, "rate " + fmt(r)};
    });
    check("rate_identity", [&] {
        const auto pp = draws.protocol(0.85, 0.98, 0.0);
        const auto rp = key_rate(pp);
        if (!rp.rate) return std::pair{false, "solve failed: " + rp.status};
        const double d = std::abs(*rp.rate - rp.retained * (rp.h_min - rp.h_ec));
        return std::pair{d <= 1e-12 && rp.h_min >= 0 && rp.h_min <= 1 && rp.h_ec >= 0, "residual " + fmt(d)};
    });
    return out;
}

}  // namespace diqkd
