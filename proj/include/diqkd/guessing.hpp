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

// Eve's omega-weighted guessing probability as a two-block moment SDP. Block e
// holds the sub-normalized correlations P'_e that appear when Eve guesses e;
// the blocks must add up to the observed binary behavior.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diqkd/errors.hpp"
#include "diqkd/model.hpp"
#include "diqkd/relaxation.hpp"
#include "diqkd/sdp.hpp"

namespace diqkd::npa {

/// omega[a][b] for binary outcomes a, b.
using BinaryWeights = std::array<std::array<double, 2>, 2>;

inline constexpr int kEveGuesses = 2;
inline constexpr double kSignalingTolerance = 1e-9;

struct GuessingProgram {
    std::shared_ptr<const MomentRelaxation> relaxation;
    sdp::Problem problem;
    BinaryWeights weights{};
    int key_x = MeasurementConfig::key_x;
    int key_y = MeasurementConfig::key_y;

    int block_variables() const { return relaxation->num_variables(); }
    /// Global SDP variable of moment `w` in Eve's block e.
    int variable(int e, const OperatorWord &w) const { return e * block_variables() + relaxation->variable(w); }
};

struct SdpSolution {
    sdp::Status status = sdp::Status::numerical_failure;
    double objective = 0;
    double gap = 0;
    int iterations = 0;
    std::string message;
    /// Moment vector of each Eve block, indexed like MomentRelaxation::moments.
    std::array<Eigen::VectorXd, kEveGuesses> moments;
    std::shared_ptr<const MomentRelaxation> relaxation;

    bool usable() const { return status == sdp::Status::optimal || status == sdp::Status::near_optimal; }

    Eigen::MatrixXd gamma(int e) const {
        const auto &idx = relaxation->entry_index;
        Eigen::MatrixXd g(idx.rows(), idx.cols());
        for (int i = 0; i < idx.rows(); ++i)
            for (int j = 0; j < idx.cols(); ++j) g(i, j) = moments[e][idx(i, j)];
        return g;
    }
};

namespace detail {

struct LinearForm {
    std::vector<std::pair<int, double>> terms;
    void add(int var, double c) { terms.emplace_back(var, c); }
};

}  // namespace detail

/// P'_e(a,b|x,y) as an affine form of block-e moments.
inline std::vector<std::pair<int, double>> subbehavior_form(const GuessingProgram &gp, int e, int x, int y, int a, int b) {
    const OperatorWord ab = canonicalize({alice_symbol(x), bob_symbol(y)});
    const OperatorWord aw = canonicalize({alice_symbol(x)});
    const OperatorWord bw = canonicalize({bob_symbol(y)});
    const int v_ab = gp.variable(e, ab), v_a = gp.variable(e, aw), v_b = gp.variable(e, bw), v_t = gp.variable(e, OperatorWord{});
    detail::LinearForm f;
    if (a == 0 && b == 0) {
        f.add(v_ab, 1);
    } else if (a == 0) {
        f.add(v_a, 1), f.add(v_ab, -1);
    } else if (b == 0) {
        f.add(v_b, 1), f.add(v_ab, -1);
    } else {
        f.add(v_t, 1), f.add(v_a, -1), f.add(v_b, -1), f.add(v_ab, 1);
    }
    return f.terms;
}

inline GuessingProgram assemble_guessing_program(const BinaryBehavior &pb, const BinaryWeights &weights,
                                                 std::shared_ptr<const MomentRelaxation> relaxation,
                                                 int key_x = MeasurementConfig::key_x,
                                                 int key_y = MeasurementConfig::key_y) {
    if (consistency_violation(pb) > kSignalingTolerance)
        throw InconsistentInput("behavior violates normalization or no-signaling beyond 1e-9");
    const int nv = relaxation->num_variables();
    const int dim = relaxation->dim();
    GuessingProgram gp{relaxation, sdp::Problem({dim, dim}, kEveGuesses * nv), weights, key_x, key_y};

    for (int e = 0; e < kEveGuesses; ++e)
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) gp.problem.add_coefficient(e * nv + relaxation->entry_index(i, j), e, i, j, 1.0);

    auto both_blocks = [&](const OperatorWord &w) {
        return std::vector<std::pair<int, double>>{{gp.variable(0, w), 1.0}, {gp.variable(1, w), 1.0}};
    };
    for (int x = 0; x < kAliceInputs; ++x)
        for (int y = 0; y < kBobInputs; ++y)
            gp.problem.add_equality(both_blocks(canonicalize({alice_symbol(x), bob_symbol(y)})), pb(x, y, 0, 0));
    for (int x = 0; x < kAliceInputs; ++x) {
        double marginal = 0;
        for (int y = 0; y < kBobInputs; ++y) marginal += pb.alice_marginal(x, y, 0);
        gp.problem.add_equality(both_blocks(canonicalize({alice_symbol(x)})), marginal / kBobInputs);
    }
    for (int y = 0; y < kBobInputs; ++y) {
        double marginal = 0;
        for (int x = 0; x < kAliceInputs; ++x) marginal += pb.bob_marginal(x, y, 0);
        gp.problem.add_equality(both_blocks(canonicalize({bob_symbol(y)})), marginal / kAliceInputs);
    }
    gp.problem.add_equality(both_blocks(OperatorWord{}), 1.0);

    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (auto [var, c] : subbehavior_form(gp, a, key_x, key_y, a, b)) gp.problem.add_objective(var, weights[a][b] * c);
    return gp;
}

inline SdpSolution solve(const GuessingProgram &gp, double tolerance = 1e-8) {
    sdp::Options opt;
    opt.tolerance = tolerance;
    const sdp::Result r = sdp::solve(gp.problem, opt);
    SdpSolution sol;
    sol.status = r.status;
    sol.objective = r.objective;
    sol.gap = r.gap;
    sol.iterations = r.iterations;
    sol.message = r.message;
    sol.relaxation = gp.relaxation;
    const int nv = gp.block_variables();
    for (int e = 0; e < kEveGuesses; ++e)
        sol.moments[e] = r.y.size() == kEveGuesses * nv ? Eigen::VectorXd(r.y.segment(e * nv, nv)) : Eigen::VectorXd::Zero(nv);
    return sol;
}

}  // namespace diqkd::npa
