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
#include <random>

#include <gtest/gtest.h>

#include "diqkd/sdp.hpp"

namespace diqkd::sdp {
namespace {

// max <C, X> over X >= 0 with trace 1, written over the entries of X.
double lambda_max_program(const Eigen::MatrixXd &c, Result &res) {
    const int n = static_cast<int>(c.rows());
    Problem prob({n}, n * (n + 1) / 2);
    std::vector<std::pair<int, double>> trace;
    int var = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++var) {
            prob.add_coefficient(var, 0, i, j, 1.0);
            prob.set_objective(var, i == j ? c(i, i) : 2 * c(i, j));
            if (i == j) trace.push_back({var, 1.0});
        }
    prob.add_equality(trace, 1.0);
    res = solve(prob);
    return res.objective;
}

TEST(Solve, LargestEigenvalue) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int n : {2, 3, 5, 8}) {
        Eigen::MatrixXd c(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = g(rng);
        c = (c + c.transpose()).eval() / 2;
        Result res;
        const double got = lambda_max_program(c, res);
        EXPECT_EQ(res.status, Status::optimal) << res.message;
        EXPECT_NEAR(got, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().maxCoeff(), 1e-7) << "n=" << n;
    }
}

TEST(Solve, BoundaryOfTwoByTwo) {
    // max y s.t. [[1, y], [y, 1]] >= 0.
    Problem prob({2}, 1);
    prob.add_constant(0, 0, 0, 1.0);
    prob.add_constant(0, 1, 1, 1.0);
    prob.add_coefficient(0, 0, 0, 1, 1.0);
    prob.set_objective(0, 1.0);
    const Result res = solve(prob);
    EXPECT_TRUE(res.usable());
    EXPECT_NEAR(res.objective, 1.0, 1e-7);
}

TEST(Solve, LinearProgramWithEquality) {
    // max y1 + y2, y1 <= 2, y2 <= 3, y1 - y2 = 0.5.
    Problem prob({1, 1}, 2);
    prob.add_constant(0, 0, 0, 2.0);
    prob.add_coefficient(0, 0, 0, 0, -1.0);
    prob.add_constant(1, 0, 0, 3.0);
    prob.add_coefficient(1, 1, 0, 0, -1.0);
    prob.add_equality({{0, 1.0}, {1, -1.0}}, 0.5);
    prob.set_objective(0, 1.0);
    prob.set_objective(1, 1.0);
    const Result res = solve(prob);
    EXPECT_EQ(res.status, Status::optimal);
    EXPECT_NEAR(res.objective, 3.5, 1e-7);
    EXPECT_NEAR(res.y[0], 2.0, 1e-6);
    EXPECT_NEAR(res.y[1], 1.5, 1e-6);
}

TEST(Solve, DetectsInfeasibility) {
    // y >= 1 and y <= 0.
    Problem prob({1, 1}, 1);
    prob.add_constant(0, 0, 0, -1.0);
    prob.add_coefficient(0, 0, 0, 0, 1.0);
    prob.add_coefficient(0, 1, 0, 0, -1.0);
    prob.set_objective(0, 1.0);
    EXPECT_EQ(solve(prob).status, Status::infeasible);
}

TEST(Solve, SolutionSatisfiesConstraints) {
    Eigen::MatrixXd c(3, 3);
    c << 1, 2, 0, 2, -1, 0.5, 0, 0.5, 0.3;
    const int n = 3;
    Problem prob({n}, 6);
    std::vector<std::pair<int, double>> trace;
    int var = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++var) {
            prob.add_coefficient(var, 0, i, j, 1.0);
            prob.set_objective(var, i == j ? c(i, i) : 2 * c(i, j));
            if (i == j) trace.push_back({var, 1.0});
        }
    prob.add_equality(trace, 1.0);
    const Result res = solve(prob);
    const Eigen::MatrixXd x = prob.block_value(0, res.y);
    EXPECT_NEAR(x.trace(), 1.0, 1e-8);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x).eigenvalues().minCoeff(), -1e-7);
    EXPECT_LE(res.gap, 1e-8);
}

TEST(Problem, RejectsBadIndices) {
    Problem prob({2}, 1);
    EXPECT_THROW(prob.add_coefficient(1, 0, 0, 0, 1.0), ParameterError);
    EXPECT_THROW(prob.add_coefficient(0, 1, 0, 0, 1.0), ParameterError);
    EXPECT_THROW(prob.add_coefficient(0, 0, 2, 0, 1.0), ParameterError);
    EXPECT_THROW(Problem({0}, 1), ParameterError);
}

TEST(Status, Names) {
    EXPECT_EQ(to_string(Status::optimal), "optimal");
    EXPECT_EQ(to_string(Status::near_optimal), "near_optimal");
    EXPECT_EQ(to_string(Status::infeasible), "infeasible");
    EXPECT_EQ(to_string(Status::numerical_failure), "numerical_failure");
}

}  // namespace
}  // namespace diqkd::sdp
