#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

namespace detail {

inline double wrap_unit(double d) { return d - std::round(d); }

inline double torus_distance(Vec2 a, Vec2 b) {
    return std::hypot(wrap_unit(a.x - b.x), wrap_unit(a.y - b.y));
}

}  // namespace detail

// Quotient Euclidean distance of the base points plus the angle between the
// velocity directions.
inline double phase_distance(const MetricSpec&, const PhasePoint& v, const PhasePoint& w) {
    return detail::torus_distance(v.position(), w.position()) + angle_between(v.velocity(), w.velocity());
}

// Max of phase_distance over t = 0, dt, 2 dt, ..., T along both orbits.
inline double dynamical_distance(const MetricSpec& m, const PhasePoint& v, const PhasePoint& w, double T, double dt,
                                 const IntegratorOptions& opts = {}) {
    if (!(dt > 0.0 && dt <= 0.1)) throw UsageError("dynamical distance needs 0 < dt <= 0.1");
    double d = phase_distance(m, v, w);
    if (T <= 0.0) return d;
    IntegratorOptions o = opts;
    o.sample_step = dt;
    Trajectory a = integrate(m, v, T, o), b = integrate(m, w, T, o);
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) d = std::max(d, phase_distance(m, a.samples[i].p, b.samples[i].p));
    return d;
}

struct CandidateGrid {
    int nx = 10;
    int ny = 10;
    int n_angles = 16;
};

// Base lattice times angle lattice, in x-major then y then angle order.
inline std::vector<PhasePoint> candidate_grid(const MetricSpec& m, const CandidateGrid& g = {}) {
    if (g.nx < 1 || g.ny < 1 || g.n_angles < 1) throw UsageError("candidate grid sizes must be positive");
    std::vector<PhasePoint> out;
    out.reserve(std::size_t(g.nx) * g.ny * g.n_angles);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.n_angles; ++k)
                out.push_back(unit_phase_point(m, {double(i) / g.nx, double(j) / g.ny}, kTwoPi * k / g.n_angles));
    return out;
}

// Orbits of all candidates sampled every dt up to the largest horizon,
// reduced to the quotient: wrapped position and unit direction.
class OrbitTable {
public:
    OrbitTable(const MetricSpec& m, const std::vector<PhasePoint>& cands, double T_max, double dt,
               const IntegratorOptions& opts = {})
        : dt_(dt), n_(cands.size()) {
        if (!(dt > 0.0 && dt <= 0.1)) throw UsageError("orbit sampling needs 0 < dt <= 0.1");
        steps_ = std::size_t(std::llround(T_max / dt)) + 1;
        data_.resize(n_ * steps_);
        IntegratorOptions o = opts;
        o.sample_step = dt;
        parallel_for(n_, [&](std::size_t c) {
            auto store = [&](std::size_t s, const PhasePoint& p) {
                Vec2 u = normalized(p.velocity());
                data_[c * steps_ + s] = {p.x - std::floor(p.x), p.y - std::floor(p.y), u.x, u.y};
            };
            store(0, cands[c]);
            if (steps_ == 1) return;
            Trajectory tr = integrate(m, cands[c], T_max, o);
            for (std::size_t s = 1; s < steps_; ++s) store(s, tr.samples[std::min(s, tr.size() - 1)].p);
        });
    }

    std::size_t size() const { return n_; }
    std::size_t steps_for(double T) const {
        return std::min(steps_, std::size_t(std::llround(T / dt_)) + 1);
    }

    // True iff the two orbits are more than eps apart at some sample up to
    // the given step count.
    bool separated(std::size_t a, std::size_t b, double eps, std::size_t steps) const {
        const Rec* pa = &data_[a * steps_];
        const Rec* pb = &data_[b * steps_];
        for (std::size_t s = 0; s < steps; ++s) {
            double d = std::hypot(detail::wrap_unit(pa[s].x - pb[s].x), detail::wrap_unit(pa[s].y - pb[s].y)) +
                       angle_between({pa[s].ux, pa[s].uy}, {pb[s].ux, pb[s].uy});
            if (d > eps) return true;
        }
        return false;
    }

private:
    struct Rec {
        double x, y, ux, uy;
    };
    double dt_;
    std::size_t n_;
    std::size_t steps_ = 1;
    std::vector<Rec> data_;
};

// Greedy maximal (eps, d_T)-separated subset of the candidates, scanned in
// order. Indices in `seed` are kept first; they must already be separated.
inline std::vector<std::size_t> greedy_separated(const OrbitTable& orbits, double eps, double T,
                                                 const std::vector<std::size_t>& seed = {}) {
    std::size_t steps = orbits.steps_for(T);
    std::vector<std::size_t> kept = seed;
    std::vector<char> in(orbits.size(), 0);
    for (auto i : seed) in[i] = 1;
    for (std::size_t c = 0; c < orbits.size(); ++c) {
        if (in[c]) continue;
        bool ok = true;
        for (auto k : kept)
            if (!orbits.separated(c, k, eps, steps)) {
                ok = false;
                break;
            }
        if (ok) {
            kept.push_back(c);
            in[c] = 1;
        }
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

inline std::size_t separated_count(const MetricSpec& m, double eps, double T, const std::vector<PhasePoint>& candidates,
                                   double dt = 0.05, const IntegratorOptions& opts = {}) {
    if (!(eps > 0.0)) throw UsageError("eps must be positive");
    OrbitTable orbits(m, candidates, std::max(T, 0.0), dt, opts);
    return greedy_separated(orbits, eps, T).size();
}

struct EntropyOptions {
    CandidateGrid grid;
    double dt = 0.05;
    // Cap on candidates * T_max / dt.
    double budget = 5e7;
    IntegratorOptions integrator;
};

struct EntropyCell {
    double eps;
    double T;
    std::size_t count;
};

struct EntropyEstimate {
    std::vector<EntropyCell> table;
    std::vector<double> eps;
    std::vector<double> slopes;
    double estimate = 0.0;
    std::size_t candidates = 0;
    CandidateGrid grid;
    double dt = 0.0;
};

namespace detail {

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace detail

// Counts r_T(eps) on one candidate pool. Each cell starts from the larger of
// the sets found at the previous horizon and at the next larger eps, so
// counts are monotone in both arguments.
inline EntropyEstimate entropy_estimate(const MetricSpec& m, std::vector<double> eps_list, std::vector<double> T_list,
                                        const EntropyOptions& opts = {}) {
    if (eps_list.size() < 3) throw UsageError("entropy estimate needs at least 3 eps values");
    if (T_list.size() < 4) throw UsageError("entropy estimate needs at least 4 horizons");
    for (double e : eps_list)
        if (!(e > 0.0)) throw UsageError("eps values must be positive");
    for (double t : T_list)
        if (!(t > 0.0)) throw UsageError("horizons must be positive");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
    std::sort(T_list.begin(), T_list.end());

    auto cands = candidate_grid(m, opts.grid);
    double T_max = T_list.back();
    double work = double(cands.size()) * T_max / opts.dt;
    if (work > opts.budget)
        throw BudgetExceeded("candidate-time product " + std::to_string(work) + " exceeds budget " +
                             std::to_string(opts.budget));
    OrbitTable orbits(m, cands, T_max, opts.dt, opts.integrator);

    EntropyEstimate est;
    est.eps = eps_list;
    est.candidates = cands.size();
    est.grid = opts.grid;
    est.dt = opts.dt;
    const std::size_t ne = eps_list.size(), nt = T_list.size();
    std::vector<std::vector<std::size_t>> prev_eps_row(nt);
    for (std::size_t ie = 0; ie < ne; ++ie) {
        std::vector<std::vector<std::size_t>> row(nt);
        for (std::size_t it = 0; it < nt; ++it) {
            const std::vector<std::size_t>* seed = nullptr;
            if (it > 0) seed = &row[it - 1];
            if (ie > 0 && (!seed || prev_eps_row[it].size() > seed->size())) seed = &prev_eps_row[it];
            row[it] = greedy_separated(orbits, eps_list[ie], T_list[it], seed ? *seed : std::vector<std::size_t>{});
            est.table.push_back({eps_list[ie], T_list[it], row[it].size()});
        }
        std::vector<double> xs, ys;
        for (std::size_t it = nt / 2; it < nt; ++it) {
            xs.push_back(T_list[it]);
            ys.push_back(std::log(double(row[it].size())));
        }
        double s = detail::ls_slope(xs, ys);
        est.slopes.push_back(s);
        prev_eps_row = std::move(row);
    }
    est.estimate = *std::max_element(est.slopes.begin(), est.slopes.end());
    return est;
}

inline void write_entropy_csv(std::ostream& os, const EntropyEstimate& e) {
    os << "eps,T,count\n" << std::setprecision(17);
    for (const auto& c : e.table) os << c.eps << ',' << c.T << ',' << c.count << '\n';
}

}  // namespace toruslab
