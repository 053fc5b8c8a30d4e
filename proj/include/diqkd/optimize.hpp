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

// Parameter search: a bounded simplex over the state angle, the five
// measurement angles and log10 p, restarted from seeded quasi-random points,
// plus threshold bisection and efficiency curves built on top of it.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_qrng.h>
#include <gsl/gsl_vector.h>

#include "diqkd/entropy.hpp"
#include "diqkd/errors.hpp"

namespace diqkd {

enum Coordinate : int { kTheta = 0, kAlice0, kAlice1, kBob0, kBob1, kBob2, kLogP, kCoordinates };

using Point = std::array<double, kCoordinates>;

/// Default lower bound of log10 p. Near the threshold efficiency the optimal
/// retain probability falls below 1e-5.
inline constexpr double kLog10PMin = -8.0;

struct SearchSpace {
    Point lower{0.0, -std::numbers::pi, -std::numbers::pi, -std::numbers::pi, -std::numbers::pi, -std::numbers::pi, kLog10PMin};
    Point upper{std::numbers::pi / 2, std::numbers::pi, std::numbers::pi, std::numbers::pi, std::numbers::pi, std::numbers::pi, 0.0};
    /// Inactive coordinates keep the value of the starting point.
    std::array<bool, kCoordinates> active{true, true, true, true, true, true, true};

    /// No post-selection (p = 1) and, unless `free_theta`, a maximally
    /// entangled state.
    static SearchSpace baseline(bool free_theta = false) {
        SearchSpace s;
        s.active[kLogP] = false;
        s.active[kTheta] = free_theta;
        return s;
    }

    int dimension() const { return static_cast<int>(std::count(active.begin(), active.end(), true)); }

    /// Angles spanning a full period wrap around; everything else is clamped.
    Point clip(Point x) const {
        constexpr double period = 2 * std::numbers::pi;
        for (int i = 0; i < kCoordinates; ++i) {
            const bool angle = i >= kAlice0 && i <= kBob2;
            if (angle && upper[i] - lower[i] >= period - 1e-12 && std::isfinite(x[i]))
                x[i] = lower[i] + std::fmod(std::fmod(x[i] - lower[i], period) + period, period);
            x[i] = std::clamp(x[i], lower[i], upper[i]);
        }
        return x;
    }

    bool contains(const Point &x) const {
        for (int i = 0; i < kCoordinates; ++i)
            if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
        return true;
    }
};

inline void validate(const SearchSpace &space) {
    for (int i = 0; i < kCoordinates; ++i)
        detail::require(std::isfinite(space.lower[i]) && std::isfinite(space.upper[i]) && space.lower[i] <= space.upper[i],
                        "search_space", "bounds must be finite and ordered");
    detail::require(space.upper[kLogP] <= 0.0, "search_space", "log10 p must not exceed 0");
}

inline Point encode(const ProtocolParams &pp) {
    return {pp.state.theta, pp.angles.alice[0], pp.angles.alice[1], pp.angles.bob[0],
            pp.angles.bob[1],  pp.angles.bob[2],   std::log10(std::max(pp.p, 1e-300))};
}

inline ProtocolParams decode(const Point &x, const StateParams &base, const DetectorParams &det) {
    ProtocolParams pp;
    pp.state = base;
    pp.state.theta = x[kTheta];
    pp.angles.alice = {x[kAlice0], x[kAlice1]};
    pp.angles.bob = {x[kBob0], x[kBob1], x[kBob2]};
    pp.p = std::pow(10.0, x[kLogP]);
    pp.detector = det;
    return pp;
}

struct OptimizationBudget {
    int max_evaluations = 2000;
    int restarts = 8;
    /// Polishing stops once a round improves the rate by less than this.
    double tolerance = 1e-7;
    std::uint64_t seed = 1;
    /// Worker threads for restarts; 0 means the hardware concurrency.
    int parallelism = 0;
};

inline void validate(const OptimizationBudget &b) {
    detail::require(b.max_evaluations > 0, "budget", "evaluation budget must be positive");
    detail::require(b.restarts > 0, "restarts", "restart count must be positive");
    detail::require(b.tolerance > 0, "tolerance", "tolerance must be positive");
    detail::require(b.parallelism >= 0, "parallel", "parallelism must be non-negative");
}

struct SearchOptions {
    /// Rate options of the reported optimum.
    RateOptions rate{};
    /// Relaxation used inside the search.
    npa::RelaxationLevel search_level{2, false};
    /// Optimize the CHSH baseline instead of the post-selection protocol.
    bool baseline = false;
};

struct ProgressEvent {
    enum class Kind { point_started, restart_finished, best_so_far, point_finished };
    Kind kind = Kind::point_started;
    double eta = 0;
    int restart = -1;
    int evaluations = 0;
    double best_rate = kNoKey;
};

using ProgressSink = std::function<void(const ProgressEvent &)>;

struct OptimizeResult {
    RatePoint best;
    Point coordinates{};
    int evaluations = 0;
};

namespace detail {

inline int worker_count(int requested, int jobs) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(n, 1, std::max(jobs, 1));
}

/// Runs fn(0..jobs-1) on a bounded pool. Results must be written by index.
inline void parallel_for(int jobs, int workers, const std::function<void(int)> &fn) {
    if (workers <= 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < jobs; i = next++) fn(i);
        });
}

// Scrambled Halton points in [0,1)^dim: the plain sequence with a seeded
// Cranley-Patterson shift.
inline std::vector<std::vector<double>> halton_points(int count, int dim, std::uint64_t seed) {
    std::vector<std::vector<double>> out(count, std::vector<double>(dim));
    if (dim == 0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> shift(dim);
    for (double &s : shift) s = unit(rng);
    gsl_qrng *q = gsl_qrng_alloc(gsl_qrng_halton, dim);
    for (int i = 0; i < count; ++i) {
        gsl_qrng_get(q, out[i].data());
        for (int k = 0; k < dim; ++k) out[i][k] = std::fmod(out[i][k] + shift[k], 1.0);
    }
    gsl_qrng_free(q);
    return out;
}

inline constexpr double kFailedMerit = -1e3;
// Initial simplex edge, as a fraction of each range, around a warm start.
inline constexpr double kWarmScale = 0.01;

// One candidate evaluation turned into a scalar to maximize. Positive rates
// compare as themselves. Without key the rate flattens towards 0 as p -> 0,
// so those points are ranked by (H_min - H_EC) / (H_min + H_EC) in (-1, 0]
// instead. Points with no min-entropy at all rank below -1, ordered by their
// CHSH value so the search still has a slope there.
inline double merit(const RatePoint &rp, bool baseline) {
    auto chsh = [&] { return chsh_value(binary_behavior(rp.params.state, rp.params.angles, rp.params.detector)); };
    if (baseline && rp.status == "nokey") return -200.0 + (chsh() - 2.0);
    if (!rp.rate) return kFailedMerit;
    if (*rp.rate > 0) return *rp.rate;
    if (rp.h_min > 0) return (rp.h_min - rp.h_ec) / (rp.h_min + rp.h_ec);
    return -2.0 + (chsh() - 2.0) / 10.0;
}

struct Candidate {
    double merit = -std::numeric_limits<double>::infinity();
    Point x{};
    RatePoint point;
};

// Evaluation context of one simplex run. Evaluations past the allotment are
// refused so the budget is a hard cap.
struct SimplexRun {
    const SearchSpace *space;
    const StateParams *state;
    const DetectorParams *det;
    const SearchOptions *opt;
    Point base{};
    std::vector<int> dims;
    int allotment = 0;
    int used = 0;
    Candidate best;

    Point expand(const gsl_vector *v) const {
        Point x = base;
        for (std::size_t k = 0; k < dims.size(); ++k) x[dims[k]] = gsl_vector_get(v, k);
        return space->clip(x);
    }

    double evaluate(const Point &x) {
        ++used;
        const ProtocolParams pp = decode(x, *state, *det);
        RatePoint rp;
        if (opt->baseline) {
            rp = baseline_point(pp);
        } else {
            RateOptions ro = opt->rate;
            ro.level = opt->search_level;
            rp = key_rate(pp, ro);
        }
        const double m = merit(rp, opt->baseline);
        if (m > best.merit) best = {m, x, std::move(rp)};
        return m;
    }

    static double objective(const gsl_vector *v, void *ctx) {
        auto *run = static_cast<SimplexRun *>(ctx);
        if (run->used >= run->allotment) return 1e6;
        return -run->evaluate(run->expand(v));
    }
};

// Simplex search from `start` with initial steps `scale` times each range.
inline void simplex(SimplexRun &run, const Point &start, double scale) {
    run.base = run.space->clip(start);
    const int n = static_cast<int>(run.dims.size());
    if (n == 0 || run.allotment <= 0) {
        if (run.allotment > 0) run.evaluate(run.base);
        return;
    }
    gsl_vector *x0 = gsl_vector_alloc(n), *step = gsl_vector_alloc(n);
    for (int k = 0; k < n; ++k) {
        const int d = run.dims[k];
        gsl_vector_set(x0, k, run.base[d]);
        gsl_vector_set(step, k, scale * (run.space->upper[d] - run.space->lower[d]));
    }
    gsl_multimin_function fn{&SimplexRun::objective, static_cast<std::size_t>(n), &run};
    gsl_multimin_fminimizer *s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x0, step);
    while (run.used < run.allotment) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-6) == GSL_SUCCESS) break;
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x0);
}

}  // namespace detail

/// Best configuration at fixed detector and visibility.
inline OptimizeResult optimize_point(const DetectorParams &det, const StateParams &state, const SearchSpace &space,
                                     const OptimizationBudget &budget, const SearchOptions &opt = {},
                                     const std::optional<Point> &warm_start = std::nullopt,
                                     const ProgressSink &progress = {}) {
    validate(det);
    validate(state);
    validate(space);
    validate(budget);
    gsl_set_error_handler_off();

    std::vector<int> dims;
    for (int i = 0; i < kCoordinates; ++i)
        if (space.active[i]) dims.push_back(i);

    // Inactive coordinates come from the warm start, else from the defaults
    // (maximal entanglement, p = 1, zero angles).
    Point fixed = warm_start ? space.clip(*warm_start) : space.clip(Point{std::numbers::pi / 4, 0, 0, 0, 0, 0, 0});

    std::mutex progress_mutex;
    auto emit = [&](ProgressEvent ev) {
        if (!progress) return;
        ev.eta = det.eta;
        const std::lock_guard<std::mutex> lock(progress_mutex);
        progress(ev);
    };
    emit({ProgressEvent::Kind::point_started});

    // Phase one: independent restarts sharing half of the budget. Restarts are
    // dropped when a simplex would get fewer than 10 (n + 1) evaluations.
    const int min_run = 10 * (static_cast<int>(dims.size()) + 1);
    const int restarts = std::clamp(budget.max_evaluations / (2 * min_run), 1, budget.restarts);
    const int per_restart = std::max(1, budget.max_evaluations / (2 * restarts));
    const auto unit = detail::halton_points(restarts, static_cast<int>(dims.size()), budget.seed);
    std::vector<detail::SimplexRun> runs(restarts);
    detail::parallel_for(restarts, detail::worker_count(budget.parallelism, restarts), [&](int r) {
        auto &run = runs[r];
        run = {&space, &state, &det, &opt};
        run.dims = dims;
        run.allotment = std::min(per_restart, budget.max_evaluations - r * per_restart);
        Point start = fixed;
        double scale = 0.1;
        if (r == 0 && warm_start) {
            scale = detail::kWarmScale;
        } else {
            for (std::size_t k = 0; k < dims.size(); ++k) {
                const int d = dims[k];
                start[d] = space.lower[d] + unit[r][k] * (space.upper[d] - space.lower[d]);
            }
        }
        detail::simplex(run, start, scale);
        emit({ProgressEvent::Kind::restart_finished, 0, r, run.used, run.best.merit});
    });

    // Merge by index so the outcome does not depend on thread timing.
    detail::Candidate best;
    int used = 0;
    for (auto &run : runs) {
        used += run.used;
        if (run.best.merit > best.merit) best = run.best;
    }
    emit({ProgressEvent::Kind::best_so_far, 0, -1, used, best.merit});

    // Phase two: the rest of the budget re-simplexes around the incumbent
    // with shrinking steps.
    double scale = detail::kWarmScale;
    while (used < budget.max_evaluations && best.point.rate) {
        detail::SimplexRun run{&space, &state, &det, &opt};
        run.dims = dims;
        run.allotment = budget.max_evaluations - used;
        run.best = best;
        detail::simplex(run, best.x, scale);
        used += run.used;
        const double gain = run.best.merit - best.merit;
        best = run.best;
        emit({ProgressEvent::Kind::best_so_far, 0, -1, used, best.merit});
        if (gain < budget.tolerance) {
            if (scale < detail::kWarmScale / 10) break;
            scale /= 4;
        }
    }

    if (!best.point.rate) {
        std::string why = "no restart produced a usable solve";
        for (const auto &run : runs)
            if (!run.best.point.warnings.empty()) {
                why += ": " + run.best.point.warnings.back();
                break;
            }
        throw SolverFailure(why);
    }

    OptimizeResult result{best.point, best.x, used};
    if (!opt.baseline && !(opt.rate.level == opt.search_level)) result.best = key_rate(result.best.params, opt.rate);
    emit({ProgressEvent::Kind::point_finished, 0, -1, used, result.best.rate.value_or(kNoKey)});
    return result;
}

struct ThresholdProbe {
    double eta = 0;
    OptimizeResult result;
};

struct ThresholdResult {
    /// Midpoint of the final bracket; empty when the rate does not change
    /// sign over the range.
    std::optional<double> threshold;
    double lower = 0;
    double upper = 0;
    std::vector<ThresholdProbe> probes;
};

struct ScanOptions {
    double eta_min = 0.66;
    double eta_max = 0.75;
    double bracket = 0.002;
    /// Step of the descending sweep that brackets the threshold.
    double step = 0.01;
};

inline void validate(const ScanOptions &so) {
    detail::require(detail::in_closed(so.eta_min, 0.0, 1.0) && detail::in_closed(so.eta_max, 0.0, 1.0) &&
                        so.eta_min < so.eta_max,
                    "eta_range", "need 0 <= eta_min < eta_max <= 1");
    detail::require(so.bracket > 0, "bracket", "bracket must be positive");
    detail::require(so.step > 0, "step", "sweep step must be positive");
}

/// Smallest efficiency with a positive optimized rate. A sweep down from
/// eta_max in steps of max(step, bracket) finds the first probe without key,
/// then bisection shrinks that step to the bracket.
inline ThresholdResult threshold_scan(const DetectorParams &det, const StateParams &state, const SearchSpace &space,
                                      const OptimizationBudget &budget, const ScanOptions &scan,
                                      const SearchOptions &opt = {}, const std::optional<Point> &warm_start = std::nullopt,
                                      const ProgressSink &progress = {}) {
    validate(scan);
    ThresholdResult out;
    out.lower = scan.eta_min;
    out.upper = scan.eta_max;
    auto probe = [&](double eta, const std::optional<Point> &warm) {
        DetectorParams d = det;
        d.eta = eta;
        out.probes.push_back({eta, optimize_point(d, state, space, budget, opt, warm, progress)});
        return out.probes.back();
    };
    const ThresholdProbe top = probe(scan.eta_max, warm_start);
    if (!top.result.best.has_key()) return out;

    // Warm starts extrapolate linearly from the two lowest probes with key.
    double hi = scan.eta_max, lo = scan.eta_min;
    Point anchor = top.result.coordinates;
    std::optional<std::pair<double, Point>> previous;
    auto predict = [&](double eta) {
        if (!previous) return anchor;
        const double t = (eta - hi) / (hi - previous->first);
        Point x;
        for (int i = 0; i < kCoordinates; ++i) x[i] = anchor[i] + t * (anchor[i] - previous->second[i]);
        return space.clip(x);
    };
    auto accept = [&](double eta, const Point &x) {
        previous.emplace(hi, anchor);
        hi = eta;
        anchor = x;
    };
    const double step = std::max(scan.step, scan.bracket);
    const double slack = 1e-9 * scan.bracket;
    bool crossed = false;
    for (int k = 1; !crossed; ++k) {
        const double eta = std::max(scan.eta_max - k * step, scan.eta_min);
        const ThresholdProbe pr = probe(eta, predict(eta));
        if (pr.result.best.has_key()) {
            if (eta <= scan.eta_min) return out;
            accept(eta, pr.result.coordinates);
        } else {
            lo = eta;
            crossed = true;
        }
    }
    while (hi - lo > scan.bracket + slack) {
        const double mid = 0.5 * (lo + hi);
        const ThresholdProbe pr = probe(mid, predict(mid));
        if (pr.result.best.has_key())
            accept(mid, pr.result.coordinates);
        else
            lo = mid;
    }
    out.lower = lo;
    out.upper = hi;
    out.threshold = 0.5 * (lo + hi);
    return out;
}

struct CurveResult {
    std::vector<RatePoint> points;
    std::vector<std::string> warnings;
};

/// Optimized rate at each grid efficiency, chained from the highest eta down
/// and reported in grid order. Failed points carry their status and no rate.
inline CurveResult curve(const std::vector<double> &grid, const DetectorParams &det, const StateParams &state,
                         const SearchSpace &space, const OptimizationBudget &budget, const SearchOptions &opt = {},
                         const std::optional<Point> &warm_start = std::nullopt, const ProgressSink &progress = {}) {
    detail::require(!grid.empty(), "grid", "efficiency grid must not be empty");
    for (double eta : grid) detail::require(detail::in_closed(eta, 0.0, 1.0), "grid", "efficiencies must lie in [0, 1]");
    std::vector<int> order(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return grid[a] > grid[b]; });

    CurveResult out;
    out.points.resize(grid.size());
    std::optional<Point> warm = warm_start;
    for (int i : order) {
        DetectorParams d = det;
        d.eta = grid[i];
        try {
            const OptimizeResult r = optimize_point(d, state, space, budget, opt, warm, progress);
            out.points[i] = r.best;
            warm = r.coordinates;
        } catch (const SolverFailure &e) {
            RatePoint rp;
            rp.params = decode(warm.value_or(Point{std::numbers::pi / 4, 0, 0, 0, 0, 0, 0}), state, d);
            rp.status = "numerical_failure";
            rp.warnings.push_back(e.what());
            out.points[i] = rp;
        }
    }
    // Losses can only lower the optimum; a rise means an under-converged search.
    for (std::size_t a = 0; a < order.size(); ++a)
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const RatePoint &high = out.points[order[a]], &low = out.points[order[b]];
            if (high.rate && low.rate && grid[order[a]] > grid[order[b]] && *high.rate < *low.rate - 2e-6)
                out.warnings.push_back("rate at eta=" + std::to_string(grid[order[b]]) + " exceeds rate at eta=" +
                                       std::to_string(grid[order[a]]) + "; search may be under-converged");
        }
    return out;
}

}  // namespace diqkd
