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


#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "diqkd/optimize.hpp"

namespace diqkd {
namespace {

constexpr double kPi = std::numbers::pi;

ProtocolParams example_point() {
    ProtocolParams pp;
    pp.state.theta = 0.394;
    pp.angles.alice = {2.084, -2.853};
    pp.angles.bob = {-2.272, 2.926, -1.905};
    pp.p = 0.00527;
    return pp;
}

ProtocolParams chsh_point() {
    ProtocolParams pp;
    pp.angles.alice = {0.0, kPi / 2};
    pp.angles.bob = {kPi / 4, -kPi / 4, 0.0};
    return pp;
}

OptimizationBudget small_budget(int evals, int restarts = 2, int parallel = 1) {
    OptimizationBudget b;
    b.max_evaluations = evals;
    b.restarts = restarts;
    b.parallelism = parallel;
    return b;
}

SearchOptions baseline_options() {
    SearchOptions o;
    o.baseline = true;
    return o;
}

TEST(Space, DefaultBounds) {
    const SearchSpace s;
    EXPECT_EQ(s.dimension(), 7);
    EXPECT_EQ(s.lower[kLogP], -8.0);
    EXPECT_EQ(s.upper[kLogP], 0.0);
    EXPECT_EQ(s.upper[kTheta], kPi / 2);
    const SearchSpace b = SearchSpace::baseline();
    EXPECT_EQ(b.dimension(), 5);
    EXPECT_FALSE(b.active[kLogP]);
    EXPECT_EQ(SearchSpace::baseline(true).dimension(), 6);
}

TEST(Space, ClipStaysInside) {
    const SearchSpace s;
    const Point wild{-1.0, 4.0, -7.0, 3.2, -3.2, 10.0, -11.0};
    const Point c = s.clip(wild);
    EXPECT_TRUE(s.contains(c));
    EXPECT_EQ(c[kTheta], 0.0);
    EXPECT_EQ(c[kLogP], -8.0);
    // Angles are periodic and wrap instead of sticking to a bound.
    EXPECT_NEAR(c[kAlice0], 4.0 - 2 * kPi, 1e-12);
    EXPECT_NEAR(c[kAlice1], -7.0 + 2 * kPi, 1e-12);
    EXPECT_NEAR(c[kBob0], 3.2 - 2 * kPi, 1e-12);
    EXPECT_FALSE(s.contains(wild));
}

TEST(Space, RejectsBadBounds) {
    SearchSpace s;
    s.upper[kLogP] = 0.5;
    EXPECT_THROW(validate(s), ParameterError);
    s = SearchSpace{};
    s.lower[kTheta] = 1.0;
    s.upper[kTheta] = 0.5;
    EXPECT_THROW(validate(s), ParameterError);
}

TEST(Encoding, RoundTrip) {
    const ProtocolParams pp = example_point();
    const ProtocolParams back = decode(encode(pp), pp.state, {0.8, 0.0});
    EXPECT_NEAR(back.p, pp.p, 1e-15);
    EXPECT_EQ(back.state.theta, pp.state.theta);
    EXPECT_EQ(back.angles.bob, pp.angles.bob);
    EXPECT_EQ(back.detector.eta, 0.8);
}

TEST(Budget, Validation) {
    EXPECT_THROW(validate(small_budget(0)), ParameterError);
    OptimizationBudget b;
    b.restarts = 0;
    EXPECT_THROW(validate(b), ParameterError);
}

TEST(Halton, SeededAndInUnitCube) {
    const auto a = detail::halton_points(16, 5, 7);
    const auto b = detail::halton_points(16, 5, 7);
    const auto c = detail::halton_points(16, 5, 8);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    for (const auto &pt : a)
        for (double v : pt) {
            EXPECT_GE(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
}

TEST(OptimizePoint, BaselineIdealDetector) {
    const auto r = optimize_point({1.0, 0.0}, {}, SearchSpace::baseline(), small_budget(300), baseline_options());
    ASSERT_TRUE(r.best.rate.has_value());
    EXPECT_GT(*r.best.rate, 0.99);
    EXPECT_LE(r.evaluations, 300);
}

TEST(OptimizePoint, IdealDetectorNearOneBit) {
    ProtocolParams start = chsh_point();
    start.state.theta = 0.7;
    start.angles.alice = {0.1, 1.5};
    start.p = 0.5;
    const auto r = optimize_point({1.0, 0.0}, {}, SearchSpace{}, small_budget(250, 1), {}, encode(start));
    ASSERT_TRUE(r.best.rate.has_value());
    EXPECT_GT(*r.best.rate, 0.99);
    EXPECT_NEAR(r.best.params.state.theta, kPi / 4, 0.1);
    EXPECT_GT(r.best.params.p, 0.5);
}

TEST(OptimizePoint, NoKeyAtLowEfficiency) {
    const auto r = optimize_point({0.60, 0.0}, {}, SearchSpace{}, small_budget(120, 2), {}, encode(example_point()));
    ASSERT_TRUE(r.best.rate.has_value());
    EXPECT_FALSE(r.best.has_key());
}

TEST(OptimizePoint, ResultInsideBounds) {
    const SearchSpace s;
    const auto r = optimize_point({0.85, 0.0}, {}, s, small_budget(100, 2), {}, encode(example_point()));
    EXPECT_TRUE(s.contains(r.coordinates));
    EXPECT_TRUE(s.contains(encode(r.best.params)));
    EXPECT_LE(r.evaluations, 100);
}

TEST(OptimizePoint, WarmStartNeverLosesTheStart) {
    const ProtocolParams pp = example_point();
    ProtocolParams at = pp;
    at.detector.eta = 0.8;
    const double start = *key_rate(at).rate;
    const auto r = optimize_point({0.8, 0.0}, {}, SearchSpace{}, small_budget(60, 1), {}, encode(pp));
    EXPECT_GE(*r.best.rate, start - 1e-12);
}

TEST(OptimizePoint, Deterministic) {
    const auto a = optimize_point({0.85, 0.0}, {}, SearchSpace{}, small_budget(120, 3), {}, encode(example_point()));
    const auto b = optimize_point({0.85, 0.0}, {}, SearchSpace{}, small_budget(120, 3), {}, encode(example_point()));
    EXPECT_EQ(a.coordinates, b.coordinates);
    EXPECT_EQ(*a.best.rate, *b.best.rate);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(OptimizePoint, ParallelMatchesSequential) {
    const auto a = optimize_point({0.95, 0.0}, {}, SearchSpace::baseline(), small_budget(400, 4, 1), baseline_options());
    const auto b = optimize_point({0.95, 0.0}, {}, SearchSpace::baseline(), small_budget(400, 4, 4), baseline_options());
    EXPECT_EQ(a.coordinates, b.coordinates);
    EXPECT_EQ(*a.best.rate, *b.best.rate);
}

TEST(OptimizePoint, ReverifiesAtConfiguredLevel) {
    SearchOptions o;
    o.rate.level = {1};
    const auto r = optimize_point({0.9, 0.0}, {}, SearchSpace{}, small_budget(40, 1), o, encode(example_point()));
    EXPECT_EQ(r.best.level, "1");
}

TEST(OptimizePoint, ProgressEvents) {
    std::vector<ProgressEvent::Kind> kinds;
    optimize_point({0.95, 0.0}, {}, SearchSpace::baseline(), small_budget(200, 2), baseline_options(), std::nullopt,
                   [&](const ProgressEvent &e) { kinds.push_back(e.kind); });
    ASSERT_GE(kinds.size(), 3u);
    EXPECT_EQ(kinds.front(), ProgressEvent::Kind::point_started);
    EXPECT_EQ(kinds.back(), ProgressEvent::Kind::point_finished);
    EXPECT_NE(std::find(kinds.begin(), kinds.end(), ProgressEvent::Kind::restart_finished), kinds.end());
}

TEST(Threshold, BaselineScan) {
    ScanOptions so{0.90, 0.95, 0.002, 0.01};
    const auto tr = threshold_scan({1.0, 0.0}, {}, SearchSpace::baseline(), small_budget(300, 4), so, baseline_options(),
                                   encode(chsh_point()));
    ASSERT_TRUE(tr.threshold.has_value());
    EXPECT_NEAR(*tr.threshold, 0.924, 0.003);
    EXPECT_LE(tr.upper - tr.lower, 0.002);
    for (const auto &pr : tr.probes) {
        if (pr.eta >= tr.upper) EXPECT_TRUE(pr.result.best.has_key()) << pr.eta;
        if (pr.eta <= tr.lower) EXPECT_FALSE(pr.result.best.has_key()) << pr.eta;
    }
}

TEST(Threshold, NoSignChange) {
    ScanOptions so{0.95, 1.0, 0.002, 0.025};
    const auto tr = threshold_scan({1.0, 0.0}, {}, SearchSpace::baseline(), small_budget(300, 4), so, baseline_options(),
                                   encode(chsh_point()));
    EXPECT_FALSE(tr.threshold.has_value());
    ASSERT_EQ(tr.probes.size(), 3u);
    EXPECT_EQ(tr.probes.back().eta, 0.95);
    for (const auto &pr : tr.probes) EXPECT_TRUE(pr.result.best.has_key()) << pr.eta;
}

TEST(Threshold, RejectsBadRange) {
    EXPECT_THROW(threshold_scan({}, {}, SearchSpace{}, small_budget(10), {0.8, 0.7, 0.01}), ParameterError);
}

TEST(Curve, SingletonMatchesOptimizePoint) {
    const auto c = curve({0.93}, {1.0, 0.0}, {}, SearchSpace::baseline(), small_budget(200, 2), baseline_options());
    const auto p = optimize_point({0.93, 0.0}, {}, SearchSpace::baseline(), small_budget(200, 2), baseline_options());
    ASSERT_EQ(c.points.size(), 1u);
    EXPECT_EQ(*c.points[0].rate, *p.best.rate);
    EXPECT_EQ(c.points[0].params.angles.bob, p.best.params.angles.bob);
}

TEST(Curve, RatesFallWithLoss) {
    const auto c = curve({0.84, 0.82, 0.8}, {1.0, 0.0}, {}, SearchSpace{}, small_budget(150, 1), {}, encode(example_point()));
    ASSERT_EQ(c.points.size(), 3u);
    for (const auto &p : c.points) ASSERT_TRUE(p.rate.has_value());
    EXPECT_EQ(c.points[0].params.detector.eta, 0.84);
    EXPECT_EQ(c.points[2].params.detector.eta, 0.8);
    EXPECT_GT(*c.points[0].rate, *c.points[1].rate);
    EXPECT_GT(*c.points[1].rate, *c.points[2].rate);
}

TEST(Curve, GridOrderKeptAndNoKeySentinel) {
    const auto c = curve({0.8, 0.99}, {1.0, 0.0}, {}, SearchSpace::baseline(), small_budget(200, 2), baseline_options());
    EXPECT_EQ(c.points[0].params.detector.eta, 0.8);
    EXPECT_EQ(c.points[1].params.detector.eta, 0.99);
    EXPECT_EQ(c.points[0].status, "nokey");
    EXPECT_TRUE(c.points[1].has_key());
}

TEST(Curve, WarmStartDominance) {
    const std::vector<double> grid{0.97, 0.95, 0.93};
    const auto warm = curve(grid, {}, {}, SearchSpace::baseline(), small_budget(200, 2), baseline_options(), encode(chsh_point()));
    const auto cold = curve(grid, {}, {}, SearchSpace::baseline(), small_budget(200, 2), baseline_options());
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_GE(*warm.points[i].rate, *cold.points[i].rate - 1e-6) << grid[i];
}

}  // namespace
}  // namespace diqkd
