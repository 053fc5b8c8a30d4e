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

// Primal-dual interior-point solver for block-diagonal linear matrix
// inequalities with additional linear equalities:
//
//     maximize    c'y
//     subject to  F0 + sum_i y_i F_i  is PSD   (block diagonal, real symmetric)
//                 E y = d
//
// Internally this is the SDPA dual form with A_i = -F_i, C = F0; the paired
// primal is  min <C,X> + d'lambda  s.t.  A(X) + E'lambda = c, X PSD.
// Search directions are HKM with a Mehrotra predictor-corrector step.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "diqkd/errors.hpp"

namespace diqkd::sdp {

struct Entry {
    int block;
    int row;
    int col;
    double value;
};

class Problem {
   public:
    Problem(std::vector<int> block_sizes, int num_vars)
        : block_sizes_(std::move(block_sizes)), coefficients_(num_vars), objective_(Eigen::VectorXd::Zero(num_vars)) {
        for (int s : block_sizes_)
            if (s <= 0) throw ParameterError("block_sizes", "blocks must be non-empty");
    }

    /// Adds `value` at (row,col) and (col,row) of F_var.
    void add_coefficient(int var, int block, int row, int col, double value) {
        check(block, row, col);
        if (var < 0 || var >= num_vars()) throw ParameterError("var", "index out of range");
        coefficients_[var].push_back(ordered(block, row, col, value));
    }

    void add_constant(int block, int row, int col, double value) {
        check(block, row, col);
        constant_.push_back(ordered(block, row, col, value));
    }

    void add_equality(const std::vector<std::pair<int, double>> &terms, double rhs) {
        equalities_.push_back({terms, rhs});
    }

    void set_equality_rhs(int row, double rhs) {
        if (row < 0 || row >= num_equalities()) throw ParameterError("row", "equality index out of range");
        equalities_[row].rhs = rhs;
    }

    void set_objective(int var, double coef) { objective_[var] = coef; }
    void add_objective(int var, double coef) { objective_[var] += coef; }

    int num_vars() const { return static_cast<int>(coefficients_.size()); }
    int num_equalities() const { return static_cast<int>(equalities_.size()); }
    const std::vector<int> &block_sizes() const { return block_sizes_; }
    const std::vector<Entry> &coefficients(int var) const { return coefficients_[var]; }
    const std::vector<Entry> &constant() const { return constant_; }
    const Eigen::VectorXd &objective() const { return objective_; }

    struct Equality {
        std::vector<std::pair<int, double>> terms;
        double rhs;
    };
    const std::vector<Equality> &equalities() const { return equalities_; }

    /// F0 + sum_i y_i F_i for one block.
    Eigen::MatrixXd block_value(int block, const Eigen::VectorXd &y) const {
        const int n = block_sizes_[block];
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        auto put = [&](const Entry &e, double scale) {
            if (e.block != block) return;
            m(e.row, e.col) += scale * e.value;
            if (e.row != e.col) m(e.col, e.row) += scale * e.value;
        };
        for (const auto &e : constant_) put(e, 1.0);
        for (int i = 0; i < num_vars(); ++i)
            for (const auto &e : coefficients_[i]) put(e, y[i]);
        return m;
    }

   private:
    void check(int block, int row, int col) const {
        if (block < 0 || block >= static_cast<int>(block_sizes_.size())) throw ParameterError("block", "index out of range");
        const int n = block_sizes_[block];
        if (row < 0 || col < 0 || row >= n || col >= n) throw ParameterError("entry", "position outside block");
    }
    static Entry ordered(int block, int row, int col, double value) {
        return row <= col ? Entry{block, row, col, value} : Entry{block, col, row, value};
    }

    std::vector<int> block_sizes_;
    std::vector<std::vector<Entry>> coefficients_;
    std::vector<Entry> constant_;
    std::vector<Equality> equalities_;
    Eigen::VectorXd objective_;
};

enum class Status { optimal, near_optimal, infeasible, numerical_failure };

inline const char *to_string(Status s) {
    switch (s) {
        case Status::optimal:
            return "optimal";
        case Status::near_optimal:
            return "near_optimal";
        case Status::infeasible:
            return "infeasible";
        case Status::numerical_failure:
            return "numerical_failure";
    }
    return "unknown";
}

struct Options {
    /// Target for relative gap and relative primal/dual infeasibility.
    double tolerance = 1e-8;
    /// Best iterate accepted as near-optimal when stalled below this.
    double near_optimal_tolerance = 1e-5;
    int max_iterations = 120;
    double step_fraction = 0.95;
    int refinement_passes = 1;
    bool verbose = false;
};

struct Result {
    Status status = Status::numerical_failure;
    double objective = std::numeric_limits<double>::quiet_NaN();  // c'y
    double primal_objective = std::numeric_limits<double>::quiet_NaN();  // <C,X> + d'lambda
    double gap = std::numeric_limits<double>::infinity();
    double primal_infeasibility = std::numeric_limits<double>::infinity();
    double dual_infeasibility = std::numeric_limits<double>::infinity();
    int iterations = 0;
    Eigen::VectorXd y;
    std::string message;

    bool usable() const { return status == Status::optimal || status == Status::near_optimal; }
};

namespace detail {

using Blocks = std::vector<Eigen::MatrixXd>;

inline double inner(const Blocks &a, const Blocks &b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
    return s;
}

inline double frobenius(const Blocks &a) { return std::sqrt(inner(a, a)); }

inline void symmetrize(Blocks &a) {
    for (auto &m : a) m = 0.5 * (m + m.transpose()).eval();
}

// Sum of entries of sparse symmetric A against dense M: <A, M>.
inline double apply(const std::vector<Entry> &a, const Blocks &m) {
    double s = 0;
    for (const auto &e : a) {
        const auto &mb = m[e.block];
        s += e.row == e.col ? e.value * mb(e.row, e.row) : e.value * (mb(e.row, e.col) + mb(e.col, e.row));
    }
    return s;
}

inline void scatter(const std::vector<Entry> &a, double scale, Blocks &out) {
    for (const auto &e : a) {
        out[e.block](e.row, e.col) += scale * e.value;
        if (e.row != e.col) out[e.block](e.col, e.row) += scale * e.value;
    }
}

// Largest alpha with x + alpha*dx PSD (infinity if unbounded), blockwise.
inline double max_step(const Blocks &x, const Blocks &dx, bool &ok) {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x.size(); ++k) {
        Eigen::LLT<Eigen::MatrixXd> llt(x[k]);
        if (llt.info() != Eigen::Success) {
            ok = false;
            return 0.0;
        }
        Eigen::MatrixXd s = llt.matrixL().solve(dx[k]);
        s = llt.matrixL().solve(s.transpose()).transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
    }
    return alpha;
}

}  // namespace detail

/// Solves the problem; never throws on numerical trouble, the status says
/// what happened.
inline Result solve(const Problem &prob, const Options &opt = {}) {
    using detail::Blocks;
    const int m = prob.num_vars();
    const int neq = prob.num_equalities();
    const auto &sizes = prob.block_sizes();
    const int nblocks = static_cast<int>(sizes.size());
    int ntotal = 0;
    for (int s : sizes) ntotal += s;

    // A_i = -F_i, C = F0.
    std::vector<std::vector<Entry>> a(m);
    for (int i = 0; i < m; ++i) {
        a[i] = prob.coefficients(i);
        for (auto &e : a[i]) e.value = -e.value;
    }
    auto zero_blocks = [&] {
        Blocks out(nblocks);
        for (int k = 0; k < nblocks; ++k) out[k] = Eigen::MatrixXd::Zero(sizes[k], sizes[k]);
        return out;
    };
    Blocks c = zero_blocks();
    detail::scatter(prob.constant(), 1.0, c);
    const Eigen::VectorXd &b = prob.objective();

    Eigen::MatrixXd e_mat = Eigen::MatrixXd::Zero(neq, m);
    Eigen::VectorXd d(neq);
    for (int r = 0; r < neq; ++r) {
        for (auto [var, coef] : prob.equalities()[r].terms) e_mat(r, var) += coef;
        d[r] = prob.equalities()[r].rhs;
    }

    auto a_of = [&](const Blocks &x) {
        Eigen::VectorXd v(m);
        for (int i = 0; i < m; ++i) v[i] = detail::apply(a[i], x);
        return v;
    };
    auto a_adj = [&](const Eigen::VectorXd &y) {
        Blocks out = zero_blocks();
        for (int i = 0; i < m; ++i)
            if (y[i] != 0.0) detail::scatter(a[i], y[i], out);
        return out;
    };

    // Variables touching each block, and groups of variables coupled through
    // a shared block (the Schur complement is block diagonal over groups).
    std::vector<std::vector<int>> vars_in_block(nblocks);
    for (int i = 0; i < m; ++i) {
        std::vector<bool> seen(nblocks, false);
        for (const auto &e : a[i])
            if (!seen[e.block]) {
                seen[e.block] = true;
                vars_in_block[e.block].push_back(i);
            }
    }
    std::vector<std::vector<int>> groups;
    {
        std::vector<int> parent(nblocks);
        for (int k = 0; k < nblocks; ++k) parent[k] = k;
        auto find = [&](int k) {
            while (parent[k] != k) k = parent[k] = parent[parent[k]];
            return k;
        };
        for (int i = 0; i < m; ++i)
            for (const auto &e : a[i]) parent[find(e.block)] = find(a[i].front().block);
        std::vector<int> group_of_root(nblocks, -1);
        std::vector<int> unused;
        for (int i = 0; i < m; ++i) {
            if (a[i].empty()) {
                unused.push_back(i);
                continue;
            }
            const int root = find(a[i].front().block);
            if (group_of_root[root] < 0) {
                group_of_root[root] = static_cast<int>(groups.size());
                groups.emplace_back();
            }
            groups[group_of_root[root]].push_back(i);
        }
        if (!unused.empty()) groups.push_back(unused);
    }

    // Homogeneous self-dual embedding: iterates (X, lambda, y, Z, tau, kappa);
    // the solution estimate is everything divided by tau.
    Blocks x = zero_blocks(), z = zero_blocks();
    for (int k = 0; k < nblocks; ++k) {
        x[k].setIdentity();
        z[k].setIdentity();
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(neq);
    double tau = 1.0, kappa = 1.0;

    const double norm_b = b.norm();
    const double norm_cd = detail::frobenius(c) + d.norm();

    Result best, best_dual;
    double best_merit = std::numeric_limits<double>::infinity();
    double best_dual_merit = std::numeric_limits<double>::infinity();
    int diverging = 0;
    double last_pinf = std::numeric_limits<double>::infinity();
    std::string stop_reason;

    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        const Eigen::VectorXd ax = a_of(x);
        const Eigen::VectorXd r1 = b * tau - ax - e_mat.transpose() * lambda;
        Blocks r2 = zero_blocks();
        {
            const Blocks aty = a_adj(y);
            for (int k = 0; k < nblocks; ++k) r2[k] = c[k] * tau - aty[k] - z[k];
        }
        const Eigen::VectorXd r3 = d * tau - e_mat * y;
        const double cx = detail::inner(c, x) + d.dot(lambda);
        const double by = b.dot(y);
        const double r4 = cx - by + kappa;

        // Convergence measures of the de-homogenized point.
        const double pobj = cx / tau;
        const double dobj = by / tau;
        const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        const double pinf = r1.norm() / tau / (1.0 + norm_b);
        const double dinf = (detail::frobenius(r2) + r3.norm()) / tau / (1.0 + norm_cd);
        if (opt.verbose)
            std::fprintf(stderr, "it %3d pobj %+.10e dobj %+.10e gap %.2e pinf %.2e dinf %.2e tau %.2e kappa %.2e\n", iter,
                         pobj, dobj, gap, pinf, dinf, tau, kappa);

        auto snapshot = [&] {
            Result r;
            r.objective = dobj;
            r.primal_objective = pobj;
            r.gap = gap;
            r.primal_infeasibility = pinf;
            r.dual_infeasibility = dinf;
            r.iterations = iter;
            r.y = y / tau;
            return r;
        };
        const double merit = std::max({gap, pinf, dinf});
        if (merit < best_merit) {
            best_merit = merit;
            best = snapshot();
        }
        // Without a strictly feasible moment matrix the primal iterates
        // diverge while the moment side still converges.
        const double dual_merit = std::max(gap, dinf);
        if (dual_merit < best_dual_merit) {
            best_dual_merit = dual_merit;
            best_dual = snapshot();
        }
        if (gap <= opt.tolerance && pinf <= opt.tolerance && dinf <= opt.tolerance) {
            best.status = Status::optimal;
            return best;
        }
        diverging = pinf > last_pinf ? diverging + 1 : 0;
        last_pinf = pinf;
        if (best_dual_merit <= opt.tolerance && diverging >= 5) {
            stop_reason = "primal iterates diverge";
            break;
        }

        // A primal ray (A(X) + E'lambda ~ 0 with negative cost) certifies that
        // the moment problem has no feasible point.
        if (-cx > 0 && tau < 1e-3 * kappa) {
            const double ray = (ax + e_mat.transpose() * lambda).norm() / (-cx);
            if (ray < 1e-7) {
                best.status = Status::infeasible;
                best.iterations = iter;
                best.message = "feasible set of the moment problem is empty";
                return best;
            }
        }
        if (by > 0 && tau < 1e-3 * kappa) {
            Blocks ray_d = a_adj(y);
            for (int k = 0; k < nblocks; ++k) ray_d[k] += z[k];
            if ((detail::frobenius(ray_d) + (e_mat * y).norm()) / by < 1e-7) {
                best.status = Status::numerical_failure;
                best.iterations = iter;
                best.message = "moment problem is unbounded";
                return best;
            }
        }
        if (iter == opt.max_iterations) {
            stop_reason = "iteration limit reached";
            break;
        }

        // NT scaling: W = G G' with G' Z G = G^{-1} X G^{-T} = diag(v).
        Blocks g(nblocks), ginv(nblocks), w(nblocks);
        std::vector<Eigen::VectorXd> v(nblocks);
        bool ok = true;
        for (int k = 0; k < nblocks && ok; ++k) {
            // L' Z L = Q diag(lam) Q' with X = L L'; then G = L Q lam^{-1/4}.
            Eigen::LLT<Eigen::MatrixXd> lx(x[k]);
            if (lx.info() != Eigen::Success) {
                ok = false;
                break;
            }
            const Eigen::MatrixXd lxm = lx.matrixL();
            const Eigen::MatrixXd lzl = lxm.transpose() * z[k] * lxm;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (lzl + lzl.transpose()));
            if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0) {
                ok = false;
                break;
            }
            v[k] = es.eigenvalues().cwiseSqrt();
            const Eigen::VectorXd quarter = v[k].cwiseSqrt();
            g[k] = lxm * es.eigenvectors() * quarter.cwiseInverse().asDiagonal();
            const Eigen::MatrixXd lxinv =
                lxm.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(sizes[k], sizes[k]));
            ginv[k] = quarter.asDiagonal() * es.eigenvectors().transpose() * lxinv;
            w[k] = g[k] * g[k].transpose();
        }
        if (!ok) {
            stop_reason = "lost positive definiteness of an iterate";
            break;
        }

        // Schur complement M_ij = Tr(A_i W A_j W).
        Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < nblocks; ++k) {
            const int n = sizes[k];
            Eigen::MatrixXd wj(n, n);
            for (int j : vars_in_block[k]) {
                wj.setZero();
                for (const auto &e : a[j]) {
                    if (e.block != k) continue;
                    wj.noalias() += e.value * w[k].col(e.row) * w[k].row(e.col);
                    if (e.row != e.col) wj.noalias() += e.value * w[k].col(e.col) * w[k].row(e.row);
                }
                for (int i : vars_in_block[k]) {
                    double s = 0;
                    for (const auto &e : a[i]) {
                        if (e.block != k) continue;
                        s += e.row == e.col ? e.value * wj(e.row, e.row) : e.value * (wj(e.row, e.col) + wj(e.col, e.row));
                    }
                    schur(i, j) += s;
                }
            }
        }
        schur = 0.5 * (schur + schur.transpose()).eval();

        // [M E'; E 0] via per-group factorizations of M and the small
        // equality Schur complement, followed by iterative refinement.
        std::vector<Eigen::LDLT<Eigen::MatrixXd>> group_ldlt(groups.size());
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto &idx = groups[gi];
            Eigen::MatrixXd mg(idx.size(), idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (std::size_t q = 0; q < idx.size(); ++q) mg(r, q) = schur(idx[r], idx[q]);
            group_ldlt[gi].compute(mg);
        }
        auto m_solve = [&](const Eigen::MatrixXd &rhs) {
            Eigen::MatrixXd out(m, rhs.cols());
            for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                const auto &idx = groups[gi];
                Eigen::MatrixXd sub(idx.size(), rhs.cols());
                for (std::size_t r = 0; r < idx.size(); ++r) sub.row(r) = rhs.row(idx[r]);
                sub = group_ldlt[gi].solve(sub);
                for (std::size_t r = 0; r < idx.size(); ++r) out.row(idx[r]) = sub.row(r);
            }
            return out;
        };
        Eigen::MatrixXd minv_et;
        Eigen::LDLT<Eigen::MatrixXd> eq_ldlt;
        if (neq > 0) {
            minv_et = m_solve(e_mat.transpose());
            eq_ldlt.compute(e_mat * minv_et);
        }
        auto kkt_once = [&](const Eigen::VectorXd &f1, const Eigen::VectorXd &f2, Eigen::VectorXd &dy, Eigen::VectorXd &dl) {
            const Eigen::VectorXd minv_f1 = m_solve(f1);
            if (neq > 0) {
                dl = eq_ldlt.solve(e_mat * minv_f1 - f2);
                dy = minv_f1 - minv_et * dl;
            } else {
                dl = Eigen::VectorXd::Zero(0);
                dy = minv_f1;
            }
        };
        auto kkt_solve = [&](const Eigen::VectorXd &f1, const Eigen::VectorXd &f2, Eigen::VectorXd &dy, Eigen::VectorXd &dl) {
            kkt_once(f1, f2, dy, dl);
            for (int pass = 0; pass < opt.refinement_passes; ++pass) {
                Eigen::VectorXd res1 = f1 - schur * dy;
                Eigen::VectorXd res2 = f2;
                if (neq > 0) {
                    res1 -= e_mat.transpose() * dl;
                    res2 -= e_mat * dy;
                }
                Eigen::VectorXd cy, cl;
                kkt_once(res1, res2, cy, cl);
                dy += cy;
                dl += cl;
            }
        };

        // Solution for a unit tau step, shared by predictor and corrector.
        Blocks wcw(nblocks);
        for (int k = 0; k < nblocks; ++k) wcw[k] = w[k] * c[k] * w[k];
        const Eigen::VectorXd a_wcw = a_of(wcw);
        const double c_wcw = detail::inner(c, wcw);
        Eigen::VectorXd u2y, u2l;
        kkt_solve(a_wcw + b, d, u2y, u2l);

        struct Direction {
            Blocks dx, dz;
            Eigen::VectorXd dy, dl;
            double dtau = 0, dkappa = 0;
        };
        const double mu = (detail::inner(x, z) + tau * kappa) / (ntotal + 1);

        auto direction = [&](double sigma, const Direction *pred) {
            const double keep = 1.0 - sigma;
            // Complementarity residual in the scaled space, optionally with
            // the Mehrotra second-order term.
            Blocks kmat(nblocks);
            for (int k = 0; k < nblocks; ++k) {
                const int n = sizes[k];
                Eigen::MatrixXd rc = Eigen::MatrixXd::Zero(n, n);
                rc.diagonal() = Eigen::VectorXd::Constant(n, sigma * mu) - v[k].cwiseAbs2();
                if (pred) {
                    const Eigen::MatrixXd dxs = ginv[k] * pred->dx[k] * ginv[k].transpose();
                    const Eigen::MatrixXd dzs = g[k].transpose() * pred->dz[k] * g[k];
                    const Eigen::MatrixXd prod = dxs * dzs;
                    rc -= 0.5 * (prod + prod.transpose());
                }
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) rc(i, j) /= 0.5 * (v[k][i] + v[k][j]);
                kmat[k] = g[k] * rc * g[k].transpose() - keep * (w[k] * r2[k] * w[k]);
            }
            double tk_target = sigma * mu - tau * kappa;
            if (pred) tk_target -= pred->dtau * pred->dkappa;

            Direction dir;
            Eigen::VectorXd u1y, u1l;
            kkt_solve(keep * r1 - a_of(kmat), keep * r3, u1y, u1l);

            const double c0 = detail::inner(c, kmat);
            const Eigen::VectorXd bc = b - a_wcw;
            const double rhs4 = keep * r4 + c0 + tk_target / tau;
            const double denom = bc.dot(u2y) - d.dot(u2l) + c_wcw + kappa / tau;
            dir.dtau = (rhs4 - bc.dot(u1y) + d.dot(u1l)) / denom;
            dir.dkappa = (tk_target - kappa * dir.dtau) / tau;
            dir.dy = u1y + dir.dtau * u2y;
            dir.dl = u1l + dir.dtau * u2l;

            const Blocks aty = a_adj(dir.dy);
            dir.dz.resize(nblocks);
            dir.dx.resize(nblocks);
            for (int k = 0; k < nblocks; ++k) {
                dir.dz[k] = keep * r2[k] - aty[k] + dir.dtau * c[k];
                dir.dx[k] = kmat[k] + w[k] * aty[k] * w[k] - dir.dtau * wcw[k];
            }
            detail::symmetrize(dir.dx);
            return dir;
        };

        auto step_to_boundary = [&](const Direction &dir, bool &fine) {
            double alpha = std::min(detail::max_step(x, dir.dx, fine), detail::max_step(z, dir.dz, fine));
            if (dir.dtau < 0) alpha = std::min(alpha, -tau / dir.dtau);
            if (dir.dkappa < 0) alpha = std::min(alpha, -kappa / dir.dkappa);
            return alpha;
        };

        bool step_ok = true;
        const Direction pred = direction(0.0, nullptr);
        const double alpha_aff = std::min(1.0, step_to_boundary(pred, step_ok));
        if (!step_ok) {
            stop_reason = "lost positive definiteness of an iterate";
            break;
        }
        double comp_aff = (tau + alpha_aff * pred.dtau) * (kappa + alpha_aff * pred.dkappa);
        for (int k = 0; k < nblocks; ++k)
            comp_aff += (x[k] + alpha_aff * pred.dx[k]).cwiseProduct(z[k] + alpha_aff * pred.dz[k]).sum();
        const double sigma = std::clamp(std::pow(std::max(comp_aff, 0.0) / ((ntotal + 1) * mu), 3.0), 0.0, 1.0);

        const Direction corr = direction(sigma, &pred);
        const double alpha = std::min(1.0, opt.step_fraction * step_to_boundary(corr, step_ok));
        if (!step_ok) {
            stop_reason = "lost positive definiteness of an iterate";
            break;
        }
        if (alpha < 1e-10) {
            stop_reason = "step length collapsed";
            break;
        }
        for (int k = 0; k < nblocks; ++k) {
            x[k] += alpha * corr.dx[k];
            z[k] += alpha * corr.dz[k];
        }
        detail::symmetrize(x);
        detail::symmetrize(z);
        lambda += alpha * corr.dl;
        y += alpha * corr.dy;
        tau += alpha * corr.dtau;
        kappa += alpha * corr.dkappa;
        if (!y.allFinite() || !std::isfinite(tau)) {
            stop_reason = "non-finite iterate";
            break;
        }
    }

    if (best_merit > opt.tolerance && best_dual_merit <= opt.near_optimal_tolerance) {
        best_dual.status = Status::near_optimal;
        char merit[32];
        std::snprintf(merit, sizeof merit, "%.1e", best_dual_merit);
        best_dual.message = stop_reason + "; moment side converged to " + merit;
        return best_dual;
    }
    best.message = stop_reason;
    best.status = best_merit <= opt.near_optimal_tolerance ? Status::near_optimal : Status::numerical_failure;
    return best;
}

}  // namespace diqkd::sdp
