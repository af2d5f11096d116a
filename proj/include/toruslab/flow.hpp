#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/metric.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

// A point of the unit tangent bundle of the lifted torus: lifted position
// plus velocity with lambda * |v|^2 = 1.
struct PhasePoint {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;

    Vec2 position() const { return {x, y}; }
    Vec2 velocity() const { return {vx, vy}; }
    // Euclidean angle of the velocity; equals the fiber angle in the
    // orthonormal frame e_i / sqrt(lambda) since the metric is conformal.
    double fiber_angle() const { return std::atan2(vy, vx); }
    PhasePoint reversed() const { return {x, y, -vx, -vy}; }
    PhasePoint translated(Vec2 d) const { return {x + d.x, y + d.y, vx, vy}; }
};

// Unit-speed phase point at `pos` pointing along Euclidean angle `angle`.
inline PhasePoint unit_phase_point(const MetricSpec& m, Vec2 pos, double angle) {
    double s = 1.0 / std::sqrt(m.lambda(pos));
    CosSin cs = cos_sin_turns(angle / kTwoPi);
    return {pos.x, pos.y, s * cs.c, s * cs.s};
}

inline double speed_defect(const MetricSpec& m, const PhasePoint& p) {
    return m.lambda(p.x, p.y) * (p.vx * p.vx + p.vy * p.vy) - 1.0;
}

struct PhaseVelocity {
    double dx;
    double dy;
    double dvx;
    double dvy;
};

// Geodesic equation x'' + G(x', x') = 0 for lambda (dx^2 + dy^2).
inline PhaseVelocity geodesic_rhs(const MetricSpec& m, const PhasePoint& p) {
    ConformalFactor c = m.conformal_factor(p.x, p.y);
    double ax = c.dx / (2.0 * c.lambda);
    double ay = c.dy / (2.0 * c.lambda);
    double diff = p.vx * p.vx - p.vy * p.vy;
    double mixed = 2.0 * p.vx * p.vy;
    return {p.vx, p.vy, -ax * diff - ay * mixed, ay * diff - ax * mixed};
}

// Liouville first integral F = lambda (g(y) vx^2 - f(x) vy^2).
inline double first_integral(const MetricSpec& m, const PhasePoint& p) {
    const auto* l = m.as_liouville();
    if (!l) throw NotLiouville("first integral requires a Liouville metric");
    double f = l->f(p.x);
    double g = l->g(p.y);
    return (f + g) * (g * p.vx * p.vx - f * p.vy * p.vy);
}

struct IntegratorOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double sample_step = 0.05;
    double initial_step = 0.01;
    double min_step = 1e-12;
    // Trajectories whose per-step renormalisation exceeds this are degraded.
    double energy_tol = 1e-7;
    long max_steps = 200'000'000;
};

struct IntegratorStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

struct TrajectorySample {
    double t;
    PhasePoint p;
};

struct Trajectory {
    std::string metric_id;
    std::vector<TrajectorySample> samples;
    double energy_drift = 0.0;
    std::optional<double> first_integral_drift;
    IntegratorStats stats;
    bool degraded = false;

    std::size_t size() const { return samples.size(); }
    double t_begin() const { return samples.front().t; }
    double t_end() const { return samples.back().t; }
    Vec2 position(std::size_t i) const { return samples[i].p.position(); }
    const PhasePoint& front() const { return samples.front().p; }
    const PhasePoint& back() const { return samples.back().p; }

    // Index of the sample with largest time <= t (clamped).
    std::size_t index_at_or_before(double t) const {
        auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const TrajectorySample& s) { return v < s.t; });
        if (it == samples.begin()) return 0;
        return static_cast<std::size_t>(it - samples.begin()) - 1;
    }
    // Index of the sample nearest to time t.
    std::size_t index_near(double t) const {
        std::size_t i = index_at_or_before(t);
        if (i + 1 < samples.size() && std::abs(samples[i + 1].t - t) < std::abs(samples[i].t - t)) ++i;
        return i;
    }
    // Sample index of t = 0 (the initial condition).
    std::size_t origin_index() const { return index_near(0.0); }

    Trajectory translated(Vec2 d) const {
        Trajectory out = *this;
        for (auto& s : out.samples) s.p = s.p.translated(d);
        return out;
    }
};

namespace detail {

using State = std::array<double, 4>;

inline State to_state(const PhasePoint& p) { return {p.x, p.y, p.vx, p.vy}; }
inline PhasePoint to_point(const State& s) { return {s[0], s[1], s[2], s[3]}; }

inline State rhs(const MetricSpec& m, const State& s) {
    PhaseVelocity v = geodesic_rhs(m, to_point(s));
    return {v.dx, v.dy, v.dvx, v.dvy};
}

inline void renormalize(const MetricSpec& m, State& s, double* defect = nullptr) {
    double q = m.lambda(s[0], s[1]) * (s[2] * s[2] + s[3] * s[3]);
    if (defect) *defect = q - 1.0;
    double f = 1.0 / std::sqrt(q);
    s[2] *= f;
    s[3] *= f;
}

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    // Continuous extension of order 4.
    static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                            d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                            d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

}  // namespace detail

// Integrates the geodesic flow forward over [0, T] with adaptive DOPRI5,
// renormalising the velocity onto the unit bundle after every accepted step.
// Samples are taken every opts.sample_step (by dense output) and at T.
inline Trajectory integrate(const MetricSpec& m, const PhasePoint& p0, double T, const IntegratorOptions& opts = {}) {
    using namespace detail;
    using D = Dopri5;
    if (!(T > 0.0)) throw UsageError("integration horizon must be positive");
    if (!(opts.sample_step > 0.0) || !(opts.abs_tol > 0.0) || !(opts.rel_tol > 0.0))
        throw UsageError("integrator tolerances and sample step must be positive");

    Trajectory tr;
    tr.metric_id = m.id();
    const bool liouville = m.is_liouville();

    State y = to_state(p0);
    double defect0 = 0.0;
    renormalize(m, y, &defect0);
    tr.energy_drift = std::abs(defect0);
    const double F0 = liouville ? first_integral(m, to_point(y)) : 0.0;
    double fdrift = 0.0;

    tr.samples.reserve(static_cast<std::size_t>(T / opts.sample_step) + 2);
    tr.samples.push_back({0.0, to_point(y)});
    long next_sample = 1;

    State k1 = rhs(m, y), k2, k3, k4, k5, k6, k7, tmp;
    tr.stats.rhs_evals = 1;
    double t = 0.0;
    double h = std::min(opts.initial_step, T);

    auto stage = [&](const State& base, std::initializer_list<std::pair<double, const State*>> terms) {
        State out = base;
        for (const auto& [c, k] : terms)
            for (int i = 0; i < 4; ++i) out[i] += h * c * (*k)[i];
        return out;
    };

    while (t < T) {
        if (tr.stats.accepted + tr.stats.rejected > opts.max_steps)
            throw ToleranceFailure("step budget exhausted");
        bool last = false;
        if (t + h >= T || T - (t + h) < 1e-12 * std::max(1.0, T)) {
            h = T - t;
            last = true;
        }
        tmp = stage(y, {{D::a21, &k1}});
        k2 = rhs(m, tmp);
        tmp = stage(y, {{D::a31, &k1}, {D::a32, &k2}});
        k3 = rhs(m, tmp);
        tmp = stage(y, {{D::a41, &k1}, {D::a42, &k2}, {D::a43, &k3}});
        k4 = rhs(m, tmp);
        tmp = stage(y, {{D::a51, &k1}, {D::a52, &k2}, {D::a53, &k3}, {D::a54, &k4}});
        k5 = rhs(m, tmp);
        tmp = stage(y, {{D::a61, &k1}, {D::a62, &k2}, {D::a63, &k3}, {D::a64, &k4}, {D::a65, &k5}});
        k6 = rhs(m, tmp);
        State y1 = stage(y, {{D::a71, &k1}, {D::a73, &k3}, {D::a74, &k4}, {D::a75, &k5}, {D::a76, &k6}});
        k7 = rhs(m, y1);
        tr.stats.rhs_evals += 6;

        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            double e = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] + D::e6 * k6[i] +
                            D::e7 * k7[i]);
            // Positions live on the lift, so they get absolute control only.
            double sc = i < 2 ? opts.abs_tol
                              : opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
            err = std::max(err, std::abs(e) / sc);
        }

        if (!(err <= 1.0)) {
            ++tr.stats.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (!std::isfinite(err)) h *= 0.1;
            if (h < opts.min_step) throw ToleranceFailure("step size underflow");
            continue;
        }
        ++tr.stats.accepted;
        const double t1 = last ? T : t + h;

        // Dense output for samples in (t, t1).
        while (true) {
            double ts = next_sample * opts.sample_step;
            if (ts >= T - 1e-12 * std::max(1.0, T) || ts > t1) break;
            double th = (ts - t) / h;
            double th1 = 1.0 - th;
            State s;
            for (int i = 0; i < 4; ++i) {
                double r2 = y1[i] - y[i];
                double r3 = h * k1[i] - r2;
                double r4 = r2 - h * k7[i] - r3;
                double r5 = h * (D::d1 * k1[i] + D::d3 * k3[i] + D::d4 * k4[i] + D::d5 * k5[i] + D::d6 * k6[i] +
                                 D::d7 * k7[i]);
                s[i] = y[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
            }
            renormalize(m, s);
            tr.samples.push_back({ts, to_point(s)});
            ++next_sample;
        }

        double defect = 0.0;
        renormalize(m, y1, &defect);
        tr.energy_drift = std::max(tr.energy_drift, std::abs(defect));
        // The acceleration is quadratic and the position rate linear in v, so
        // the FSAL stage rescales exactly.
        double f = 1.0 / std::sqrt(1.0 + defect);
        k7[0] *= f;
        k7[1] *= f;
        k7[2] *= f * f;
        k7[3] *= f * f;
        if (liouville) fdrift = std::max(fdrift, std::abs(first_integral(m, to_point(y1)) - F0));

        y = y1;
        k1 = k7;
        t = t1;
        double fac = err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2))) : 5.0;
        if (!last) h *= fac;
        if (h < opts.min_step && t < T) throw ToleranceFailure("step size underflow");
    }
    tr.samples.push_back({T, to_point(y)});
    if (liouville) tr.first_integral_drift = fdrift;
    tr.degraded = tr.energy_drift > opts.energy_tol;
    return tr;
}

// Integrates over [-T, T]; the backward half is the forward flow of the
// reversed vector, traversed backwards.
inline Trajectory integrate_two_sided(const MetricSpec& m, const PhasePoint& p0, double T,
                                      const IntegratorOptions& opts = {}) {
    Trajectory fwd = integrate(m, p0, T, opts);
    Trajectory bwd = integrate(m, p0.reversed(), T, opts);
    Trajectory out;
    out.metric_id = fwd.metric_id;
    out.samples.reserve(fwd.samples.size() + bwd.samples.size());
    for (auto it = bwd.samples.rbegin(); it != bwd.samples.rend(); ++it) {
        if (it->t == 0.0) continue;
        out.samples.push_back({-it->t, it->p.reversed()});
    }
    out.samples.insert(out.samples.end(), fwd.samples.begin(), fwd.samples.end());
    out.energy_drift = std::max(fwd.energy_drift, bwd.energy_drift);
    if (fwd.first_integral_drift && bwd.first_integral_drift) {
        // F is even in v, so both halves measure drift from the same F(0).
        out.first_integral_drift = std::max(*fwd.first_integral_drift, *bwd.first_integral_drift);
    }
    out.stats.accepted = fwd.stats.accepted + bwd.stats.accepted;
    out.stats.rejected = fwd.stats.rejected + bwd.stats.rejected;
    out.stats.rhs_evals = fwd.stats.rhs_evals + bwd.stats.rhs_evals;
    out.degraded = fwd.degraded || bwd.degraded;
    return out;
}

// CSV with columns t,x,y,vx,vy and 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t,x,y,vx,vy\n";
    os << std::setprecision(17);
    for (const auto& s : tr.samples)
        os << s.t << ',' << s.p.x << ',' << s.p.y << ',' << s.p.vx << ',' << s.p.vy << '\n';
}

}  // namespace toruslab
