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

// Random post-selection bookkeeping and the asymptotic key rate: retain
// weights, the retained fraction, the post-selected key distribution, the
// min-entropy from the guessing SDP and the one-way error-correction cost.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "diqkd/errors.hpp"
#include "diqkd/guessing.hpp"
#include "diqkd/model.hpp"
#include "diqkd/relaxation.hpp"

namespace diqkd {

struct PostSelectionPolicy {
    /// Probability of keeping a round for each party whose outcome is not "0".
    double p = 1.0;
};

inline void validate(const PostSelectionPolicy &policy) {
    detail::require(detail::in_closed(policy.p, 0.0, 1.0), "p", "retain probability must lie in [0, 1]");
}

/// omega_ab = p^(number of parties with a non-"0" outcome), for the binary
/// view and for the full click-outcome view.
struct PSWeights {
    npa::BinaryWeights binary{};
    std::array<std::array<double, kClickOutcomes>, kClickOutcomes> ternary{};
};

inline PSWeights ps_weights(const PostSelectionPolicy &policy) {
    validate(policy);
    PSWeights w;
    auto weight = [&](int a, int b) { return std::pow(policy.p, (a != 0) + (b != 0)); };
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) w.binary[a][b] = weight(a, b);
    for (int a = 0; a < kClickOutcomes; ++a)
        for (int b = 0; b < kClickOutcomes; ++b) w.ternary[a][b] = weight(a, b);
    return w;
}

inline double retained_fraction(const TernaryBehavior &tb, const PSWeights &w, int x = MeasurementConfig::key_x,
                                int y = MeasurementConfig::key_y) {
    double pv = 0;
    for (int a = 0; a < kClickOutcomes; ++a)
        for (int b = 0; b < kClickOutcomes; ++b) pv += w.ternary[a][b] * tb(x, y, a, b);
    if (!(pv > 0)) throw EmptyKeySet("post-selection retains no key rounds");
    return std::min(pv, 1.0);
}

/// Key-round distribution after post-selection. Alice's non-"0" outcomes are
/// merged into 1; Bob keeps his click outcomes (the double-click column only
/// when it carries probability).
struct PostSelectedDistribution {
    std::array<std::array<double, kClickOutcomes>, 2> table{};
    int bob_symbols = 3;
    double retained = 1.0;

    double operator()(int a, int b) const { return table[a][b]; }
};

inline PostSelectedDistribution postselected_distribution(const TernaryBehavior &tb, const PSWeights &w,
                                                          int x = MeasurementConfig::key_x,
                                                          int y = MeasurementConfig::key_y) {
    PostSelectedDistribution psd;
    psd.retained = retained_fraction(tb, w, x, y);
    for (int a = 0; a < kClickOutcomes; ++a)
        for (int b = 0; b < kClickOutcomes; ++b)
            psd.table[a == 0 ? 0 : 1][b] += w.ternary[a][b] * tb(x, y, a, b) / psd.retained;
    psd.bob_symbols = psd.table[0][kDoubleClick] + psd.table[1][kDoubleClick] > 0 ? kClickOutcomes : 3;
    return psd;
}

namespace detail {

inline double plogp(double x) { return x > 0 ? -x * std::log2(x) : 0.0; }

}  // namespace detail

inline double binary_entropy(double q) { return detail::plogp(q) + detail::plogp(1.0 - q); }

/// H(A|B) of the post-selected key distribution, in bits.
inline double ec_cost(const PostSelectedDistribution &psd) {
    double joint = 0, bob = 0;
    for (int b = 0; b < psd.bob_symbols; ++b) {
        joint += detail::plogp(psd(0, b)) + detail::plogp(psd(1, b));
        bob += detail::plogp(psd(0, b) + psd(1, b));
    }
    return std::max(joint - bob, 0.0);
}

/// Bob's outcomes merged to binary as well; for comparison runs only.
inline PostSelectedDistribution binarize_bob(const PostSelectedDistribution &psd) {
    PostSelectedDistribution out;
    out.bob_symbols = 2;
    out.retained = psd.retained;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < psd.bob_symbols; ++b) out.table[a][b == 0 ? 0 : 1] += psd(a, b);
    return out;
}

struct MinEntropy {
    std::optional<double> h_min;
    double guess = std::numeric_limits<double>::quiet_NaN();
    sdp::Status status = sdp::Status::numerical_failure;
    double gap = 0;
    int iterations = 0;
    std::string message;
    std::vector<std::string> warnings;
};

/// H_min = -log2(G) where G is the guessing SDP optimum normalized by p_V. The
/// weights are divided by p_V before solving so the optimum is G itself.
inline MinEntropy min_entropy(const BinaryBehavior &pb, const PSWeights &w, double retained,
                              npa::RelaxationLevel level = {}, double tolerance = 1e-8) {
    if (!(retained > 0)) throw EmptyKeySet("post-selection retains no key rounds");
    npa::BinaryWeights scaled = w.binary;
    for (auto &row : scaled)
        for (double &v : row) v /= retained;
    const auto program = npa::assemble_guessing_program(pb, scaled, npa::shared_relaxation(level));
    const auto sol = npa::solve(program, tolerance);

    MinEntropy out;
    out.status = sol.status;
    out.gap = sol.gap;
    out.iterations = sol.iterations;
    out.message = sol.message;
    if (!sol.usable()) return out;
    if (sol.status == sdp::Status::near_optimal)
        out.warnings.push_back("solver stopped near-optimal (gap " + std::to_string(sol.gap) + "): " + sol.message);
    out.guess = sol.objective;
    double h = -std::log2(std::max(sol.objective, std::numeric_limits<double>::min()));
    if (h < 0) {
        out.warnings.push_back("guessing probability " + std::to_string(sol.objective) + " above 1; H_min clamped to 0");
        h = 0;
    } else if (h > 1) {
        out.warnings.push_back("guessing probability " + std::to_string(sol.objective) + " below 1/2; H_min clamped to 1");
        h = 1;
    }
    out.h_min = h;
    return out;
}

/// Everything that defines one protocol configuration.
struct ProtocolParams {
    StateParams state;
    MeasurementConfig angles;
    double p = 1.0;
    DetectorParams detector;
};

inline void validate(const ProtocolParams &pp) {
    validate(pp.state);
    validate(pp.angles);
    validate(PostSelectionPolicy{pp.p});
    validate(pp.detector);
}

struct RateOptions {
    npa::RelaxationLevel level{};
    double tolerance = 1e-8;
    /// Error correction on binarized Bob outcomes instead of click outcomes.
    bool binary_ec = false;
};

inline constexpr double kNoKey = -std::numeric_limits<double>::infinity();

/// One evaluated configuration. `rate` is empty when the SDP failed.
struct RatePoint {
    ProtocolParams params;
    std::string level = "2";
    double retained = std::numeric_limits<double>::quiet_NaN();
    double guess = std::numeric_limits<double>::quiet_NaN();
    double h_min = std::numeric_limits<double>::quiet_NaN();
    double h_ec = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> rate;
    std::string status = "not_evaluated";
    double gap = 0;
    int iterations = 0;
    std::vector<std::string> warnings;

    bool has_key() const { return rate && *rate > 0; }
};

inline RatePoint key_rate(const ProtocolParams &pp, const RateOptions &opt = {}) {
    validate(pp);
    RatePoint rp;
    rp.params = pp;
    rp.level = opt.level.to_string();
    const TernaryBehavior tb = behavior(pp.state, pp.angles, pp.detector);
    const PSWeights w = ps_weights({pp.p});
    PostSelectedDistribution psd;
    try {
        psd = postselected_distribution(tb, w);
    } catch (const EmptyKeySet &e) {
        rp.status = "empty_key_set";
        rp.warnings.push_back(e.what());
        return rp;
    }
    rp.retained = psd.retained;
    rp.h_ec = ec_cost(opt.binary_ec ? binarize_bob(psd) : psd);

    const MinEntropy me = min_entropy(binarize(tb), w, psd.retained, opt.level, opt.tolerance);
    rp.status = sdp::to_string(me.status);
    rp.gap = me.gap;
    rp.iterations = me.iterations;
    rp.guess = me.guess;
    rp.warnings = me.warnings;
    if (!me.h_min) {
        if (!me.message.empty()) rp.warnings.push_back(me.message);
        return rp;
    }
    rp.h_min = *me.h_min;
    rp.rate = rp.retained * (rp.h_min - rp.h_ec);
    return rp;
}

/// E_xy = sum_ab (-1)^(a+b) P(a,b|x,y).
inline double correlator(const BinaryBehavior &pb, int x, int y) {
    return pb(x, y, 0, 0) + pb(x, y, 1, 1) - pb(x, y, 0, 1) - pb(x, y, 1, 0);
}

/// Largest of the four CHSH combinations over Alice's inputs and Bob's first
/// two inputs.
inline double chsh_value(const BinaryBehavior &pb) {
    const double e00 = correlator(pb, 0, 0), e01 = correlator(pb, 0, 1);
    const double e10 = correlator(pb, 1, 0), e11 = correlator(pb, 1, 1);
    const double s = e00 + e01 + e10 + e11;
    double best = -std::numeric_limits<double>::infinity();
    for (double odd : {e00, e01, e10, e11}) best = std::max(best, std::abs(s - 2 * odd));
    return best;
}

/// Disagreement probability on the key inputs.
inline double key_qber(const BinaryBehavior &pb) {
    return pb(MeasurementConfig::key_x, MeasurementConfig::key_y, 0, 1) +
           pb(MeasurementConfig::key_x, MeasurementConfig::key_y, 1, 0);
}

/// Standard CHSH-based rate without post-selection; kNoKey when S <= 2.
inline double baseline_chsh_rate(const ProtocolParams &pp) {
    validate(pp);
    const BinaryBehavior pb = binary_behavior(pp.state, pp.angles, pp.detector);
    const double s = chsh_value(pb);
    if (!(s > 2.0)) return kNoKey;
    const double half = std::min(s / 2, std::numbers::sqrt2);
    return 1.0 - binary_entropy(key_qber(pb)) - binary_entropy((1.0 + std::sqrt(half * half - 1.0)) / 2.0);
}

/// The baseline as a RatePoint: p = p_V = 1, H_min is the CHSH entropy bound.
inline RatePoint baseline_point(const ProtocolParams &pp) {
    validate(pp);
    RatePoint rp;
    rp.params = pp;
    rp.params.p = 1.0;
    rp.level = "chsh";
    rp.retained = 1.0;
    const BinaryBehavior pb = binary_behavior(pp.state, pp.angles, pp.detector);
    const double s = chsh_value(pb);
    rp.h_ec = binary_entropy(key_qber(pb));
    if (!(s > 2.0)) {
        rp.h_min = 0.0;
        rp.rate = kNoKey;
        rp.status = "nokey";
        return rp;
    }
    const double half = std::min(s / 2, std::numbers::sqrt2);
    rp.h_min = 1.0 - binary_entropy((1.0 + std::sqrt(half * half - 1.0)) / 2.0);
    rp.rate = rp.h_min - rp.h_ec;
    rp.status = "baseline";
    return rp;
}

}  // namespace diqkd
