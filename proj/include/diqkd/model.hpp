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

// Photonic source and detector model: a partially entangled two-qubit state
// measured in the x-z plane by two-detector stations with finite efficiency
// and dark counts. Everything here is an exact distribution; nothing is sampled.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "diqkd/errors.hpp"

namespace diqkd {

inline constexpr int kAliceInputs = 2;
inline constexpr int kBobInputs = 3;
inline constexpr int kClickOutcomes = 4;

/// Click patterns of one station (first detector, second detector).
enum Outcome : int {
    kFirstClick = 0,
    kSecondClick = 1,
    kNoClick = 2,
    kDoubleClick = 3,
};

struct StateParams {
    double theta = std::numbers::pi / 4;
    double visibility = 1.0;
    /// Mean photon-pair number of a Poisson source. Reserved: only 0 (a
    /// single pair per round) is modeled.
    double mean_pairs = 0.0;
};

/// Planar measurement angles. Inputs are 0-based here: Alice x in {0,1}, Bob y
/// in {0,1,2}; the key rounds use Alice's first and Bob's third setting.
struct MeasurementConfig {
    std::array<double, kAliceInputs> alice{};
    std::array<double, kBobInputs> bob{};
    static constexpr int key_x = 0;
    static constexpr int key_y = 2;
};

struct DetectorParams {
    double eta = 1.0;
    double dark = 0.0;
};

namespace detail {

inline void require(bool ok, const char *field, const std::string &what) {
    if (!ok) {
        throw ParameterError(field, what);
    }
}

inline bool in_closed(double v, double lo, double hi) { return v >= lo && v <= hi; }

constexpr double kAngleSlack = 1e-12;

}  // namespace detail

inline void validate(const StateParams &sp) {
    using detail::require;
    require(detail::in_closed(sp.theta, 0.0, std::numbers::pi / 2), "theta", "must lie in [0, pi/2]");
    require(detail::in_closed(sp.visibility, 0.0, 1.0), "visibility", "must lie in [0, 1]");
    require(sp.mean_pairs == 0.0, "mean_pairs",
            "multi-pair Poisson emission is not modeled; only 0 is accepted");
}

inline void validate(const MeasurementConfig &mc) {
    const double lim = std::numbers::pi + detail::kAngleSlack;
    for (double a : mc.alice) {
        detail::require(detail::in_closed(a, -lim, lim), "angles_alice", "angles must lie in [-pi, pi]");
    }
    for (double b : mc.bob) {
        detail::require(detail::in_closed(b, -lim, lim), "angles_bob", "angles must lie in [-pi, pi]");
    }
}

inline void validate(const DetectorParams &det) {
    detail::require(detail::in_closed(det.eta, 0.0, 1.0), "eta", "must lie in [0, 1]");
    detail::require(det.dark >= 0.0 && det.dark < 1.0, "dark", "must lie in [0, 1)");
}

/// Joint click statistics P(a,b|x,y) over the four click patterns.
class TernaryBehavior {
   public:
    double operator()(int x, int y, int a, int b) const { return p_[index(x, y, a, b)]; }
    double &operator()(int x, int y, int a, int b) { return p_[index(x, y, a, b)]; }

    double alice_marginal(int x, int y, int a) const {
        double s = 0;
        for (int b = 0; b < kClickOutcomes; ++b) s += (*this)(x, y, a, b);
        return s;
    }
    double bob_marginal(int x, int y, int b) const {
        double s = 0;
        for (int a = 0; a < kClickOutcomes; ++a) s += (*this)(x, y, a, b);
        return s;
    }

   private:
    static constexpr std::size_t index(int x, int y, int a, int b) {
        return ((static_cast<std::size_t>(x) * kBobInputs + y) * kClickOutcomes + a) * kClickOutcomes + b;
    }
    std::array<double, kAliceInputs * kBobInputs * kClickOutcomes * kClickOutcomes> p_{};
};

/// Two-outcome view: outcome 0 is "first detector only", everything else is 1.
class BinaryBehavior {
   public:
    double operator()(int x, int y, int a, int b) const { return p_[index(x, y, a, b)]; }
    double &operator()(int x, int y, int a, int b) { return p_[index(x, y, a, b)]; }

    double alice_marginal(int x, int y, int a) const { return (*this)(x, y, a, 0) + (*this)(x, y, a, 1); }
    double bob_marginal(int x, int y, int b) const { return (*this)(x, y, 0, b) + (*this)(x, y, 1, b); }

   private:
    static constexpr std::size_t index(int x, int y, int a, int b) {
        return ((static_cast<std::size_t>(x) * kBobInputs + y) * 2 + a) * 2 + b;
    }
    std::array<double, kAliceInputs * kBobInputs * 4> p_{};
};

using Effect = Eigen::Matrix2d;
using DensityMatrix = Eigen::Matrix4d;

/// rho = V |psi><psi| + (1-V) I/4 with |psi> = cos(theta)|00> + sin(theta)|11>.
inline DensityMatrix build_state(const StateParams &sp) {
    validate(sp);
    Eigen::Vector4d psi(std::cos(sp.theta), 0.0, 0.0, std::sin(sp.theta));
    return sp.visibility * (psi * psi.transpose()) + (1.0 - sp.visibility) * DensityMatrix::Identity() / 4.0;
}

/// cos(phi) sigma_z + sin(phi) sigma_x
inline Effect planar_observable(double phi) {
    Effect m;
    m << std::cos(phi), std::sin(phi), std::sin(phi), -std::cos(phi);
    return m;
}

/// POVM of one two-detector station, indexed by Outcome. The photon reaches
/// the first (second) detector through (1 +- Pi)/2 with probability eta; each
/// detector that did not receive the photon then fires independently with
/// probability `dark`.
inline std::array<Effect, kClickOutcomes> outcome_effects(double phi, const DetectorParams &det) {
    validate(det);
    const Effect id = Effect::Identity();
    const Effect pi = planar_observable(phi);
    const double eta = det.eta;
    const double d = det.dark;

    const Effect to_first = eta * (id + pi) / 2.0;
    const Effect to_second = eta * (id - pi) / 2.0;
    const double lost = 1.0 - eta;

    std::array<Effect, kClickOutcomes> e;
    e[kFirstClick] = (1 - d) * to_first + d * (1 - d) * lost * id;
    e[kSecondClick] = (1 - d) * to_second + d * (1 - d) * lost * id;
    e[kNoClick] = (1 - d) * (1 - d) * lost * id;
    e[kDoubleClick] = d * (to_first + to_second) + d * d * lost * id;
    return e;
}

/// Outcome-0 effect and its complement, built without going through the
/// four click patterns.
inline std::array<Effect, 2> binary_effects(double phi, const DetectorParams &det) {
    validate(det);
    const Effect id = Effect::Identity();
    const double d = det.dark;
    const Effect zero = (1 - d) * det.eta * (id + planar_observable(phi)) / 2.0 + d * (1 - d) * (1 - det.eta) * id;
    return {zero, id - zero};
}

namespace detail {

// Tr[rho (E (x) F)] for 2x2 E, F.
inline double joint_expectation(const DensityMatrix &rho, const Effect &e, const Effect &f) {
    double s = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) s += rho(2 * j + l, 2 * i + k) * e(i, j) * f(k, l);
    return s;
}

}  // namespace detail

inline TernaryBehavior behavior(const StateParams &sp, const MeasurementConfig &mc, const DetectorParams &det) {
    validate(mc);
    const DensityMatrix rho = build_state(sp);
    std::array<std::array<Effect, kClickOutcomes>, kAliceInputs> ea;
    std::array<std::array<Effect, kClickOutcomes>, kBobInputs> eb;
    for (int x = 0; x < kAliceInputs; ++x) ea[x] = outcome_effects(mc.alice[x], det);
    for (int y = 0; y < kBobInputs; ++y) eb[y] = outcome_effects(mc.bob[y], det);

    TernaryBehavior tb;
    for (int x = 0; x < kAliceInputs; ++x)
        for (int y = 0; y < kBobInputs; ++y)
            for (int a = 0; a < kClickOutcomes; ++a)
                for (int b = 0; b < kClickOutcomes; ++b) tb(x, y, a, b) = detail::joint_expectation(rho, ea[x][a], eb[y][b]);
    return tb;
}

inline BinaryBehavior binarize(const TernaryBehavior &tb) {
    BinaryBehavior pb;
    for (int x = 0; x < kAliceInputs; ++x)
        for (int y = 0; y < kBobInputs; ++y)
            for (int a = 0; a < kClickOutcomes; ++a)
                for (int b = 0; b < kClickOutcomes; ++b) pb(x, y, a == 0 ? 0 : 1, b == 0 ? 0 : 1) += tb(x, y, a, b);
    return pb;
}

/// Binary behavior computed straight from binary_effects.
inline BinaryBehavior binary_behavior(const StateParams &sp, const MeasurementConfig &mc, const DetectorParams &det) {
    validate(mc);
    const DensityMatrix rho = build_state(sp);
    BinaryBehavior pb;
    for (int x = 0; x < kAliceInputs; ++x) {
        const auto ea = binary_effects(mc.alice[x], det);
        for (int y = 0; y < kBobInputs; ++y) {
            const auto eb = binary_effects(mc.bob[y], det);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) pb(x, y, a, b) = detail::joint_expectation(rho, ea[a], eb[b]);
        }
    }
    return pb;
}

/// Largest deviation from normalization and no-signaling over all slices.
template <typename Behavior>
double consistency_violation(const Behavior &beh, int outcomes) {
    double worst = 0;
    for (int x = 0; x < kAliceInputs; ++x)
        for (int y = 0; y < kBobInputs; ++y) {
            double total = 0;
            for (int a = 0; a < outcomes; ++a)
                for (int b = 0; b < outcomes; ++b) total += beh(x, y, a, b);
            worst = std::max(worst, std::abs(total - 1.0));
        }
    for (int x = 0; x < kAliceInputs; ++x)
        for (int a = 0; a < outcomes; ++a)
            for (int y = 1; y < kBobInputs; ++y)
                worst = std::max(worst, std::abs(beh.alice_marginal(x, y, a) - beh.alice_marginal(x, 0, a)));
    for (int y = 0; y < kBobInputs; ++y)
        for (int b = 0; b < outcomes; ++b)
            for (int x = 1; x < kAliceInputs; ++x)
                worst = std::max(worst, std::abs(beh.bob_marginal(x, y, b) - beh.bob_marginal(0, y, b)));
    return worst;
}

inline double consistency_violation(const TernaryBehavior &tb) { return consistency_violation(tb, kClickOutcomes); }
inline double consistency_violation(const BinaryBehavior &pb) { return consistency_violation(pb, 2); }

}  // namespace diqkd
