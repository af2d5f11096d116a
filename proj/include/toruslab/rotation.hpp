#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

// A point of the projective line, stored as theta in [0, pi). The slope
// rho = tan(theta) with theta = pi/2 standing for infinity.
class ProjectiveDirection {
public:
    ProjectiveDirection() = default;

    static ProjectiveDirection from_theta(double theta) {
        double t = std::fmod(theta, kPi);
        if (t < 0.0) t += kPi;
        if (t >= kPi) t = 0.0;
        return ProjectiveDirection(t);
    }
    static ProjectiveDirection from_rho(double rho) {
        if (std::isinf(rho)) return infinity();
        return from_theta(std::atan(rho));
    }
    static ProjectiveDirection infinity() { return ProjectiveDirection(kPi / 2); }
    static ProjectiveDirection from_vector(Vec2 v) {
        if (v.x == 0.0) return infinity();
        return from_theta(std::atan2(v.y, v.x));
    }

    double theta() const { return theta_; }
    bool is_infinite() const { return theta_ == kPi / 2; }
    double rho() const {
        return is_infinite() ? std::numeric_limits<double>::infinity() : std::tan(theta_);
    }
    Vec2 unit() const { return {std::cos(theta_), std::sin(theta_)}; }

    // Angular distance on the projective line, in [0, pi/2].
    double distance(const ProjectiveDirection& o) const {
        double d = std::abs(theta_ - o.theta_);
        return std::min(d, kPi - d);
    }
    // Same, against an oriented direction vector.
    double distance(Vec2 v) const { return distance(from_vector(v)); }

private:
    explicit ProjectiveDirection(double t) : theta_(t) {}
    double theta_ = 0.0;
};

struct DirectionEstimate {
    Vec2 direction;
    ProjectiveDirection projective;
    double cauchy_error = 0.0;
    double strip_half_width = 0.0;
    double displacement = 0.0;
};

namespace detail {

// Displacement used by the estimator at sample i: c(t) - c(-t) on two-sided
// trajectories, c(t) - c(0) otherwise.
struct Displacements {
    const Trajectory& tr;
    std::size_t origin;
    bool two_sided;

    explicit Displacements(const Trajectory& t)
        : tr(t), origin(t.origin_index()), two_sided(t.t_begin() < 0.0) {}

    double horizon() const { return two_sided ? std::min(tr.t_end(), -tr.t_begin()) : tr.t_end(); }

    Vec2 at(double t) const {
        std::size_t i = tr.index_near(t);
        if (!two_sided) return tr.position(i) - tr.position(origin);
        return tr.position(i) - tr.position(tr.index_near(-t));
    }

    // Mean normalised displacement over sample times in [a, b].
    Vec2 mean_direction(double a, double b) const {
        Vec2 acc;
        std::size_t lo = tr.index_at_or_before(a);
        if (tr.samples[lo].t < a) ++lo;
        for (std::size_t i = lo; i < tr.size() && tr.samples[i].t <= b; ++i) {
            Vec2 d = at(tr.samples[i].t);
            double n = norm(d);
            if (n > 0.0) acc += d / n;
        }
        double n = norm(acc);
        if (n == 0.0) return at(b);
        return acc / n;
    }
};

}  // namespace detail

// Direction of c(t)/|c(t)| averaged over the final tail fraction of the
// horizon. Two-sided trajectories use the symmetric chord c(t) - c(-t).
inline DirectionEstimate asymptotic_direction(const Trajectory& tr, double tail_fraction = 0.25,
                                              double escape_radius = 10.0) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw UsageError("tail fraction must lie in (0, 1]");
    if (tr.size() < 4) throw UsageError("trajectory too short for a direction estimate");
    detail::Displacements disp(tr);
    double T = disp.horizon();
    Vec2 end = disp.at(T);
    double reach = norm(end);
    if (!(reach > escape_radius))
        throw NotEscaping("trajectory stays within radius " + std::to_string(escape_radius), tr.front().fiber_angle());

    DirectionEstimate est;
    est.displacement = reach;
    est.direction = disp.mean_direction((1.0 - tail_fraction) * T, T);
    est.projective = ProjectiveDirection::from_vector(est.direction);
    for (double hi = T; hi > T / 8 * 1.5; hi /= 2) {
        Vec2 w = disp.mean_direction(hi / 2, hi);
        est.cauchy_error = std::max(est.cauchy_error, angle_between(w, est.direction));
    }
    Vec2 c0 = tr.position(disp.origin);
    for (const auto& s : tr.samples)
        est.strip_half_width = std::max(est.strip_half_width, std::abs(cross(est.direction, s.p.position() - c0)));
    return est;
}

inline ProjectiveDirection rotation_number(const DirectionEstimate& d) { return d.projective; }

struct FiberMapSample {
    Vec2 base;
    std::vector<double> fiber_angles;
    std::vector<double> lifted_directions;
    double monotonicity_defect = 0.0;
    double degree_defect = 0.0;
};

// Forward asymptotic direction angle of the geodesic through x at fiber angle a.
inline double forward_direction_angle(const MetricSpec& m, Vec2 x, double a, double T,
                                      const IntegratorOptions& opts = {}, double tail_fraction = 0.25) {
    Trajectory tr = integrate(m, unit_phase_point(m, x, a), T, opts);
    try {
        return angle_of(asymptotic_direction(tr, tail_fraction).direction);
    } catch (const NotEscaping& e) {
        throw NotEscaping(e.what(), a);
    }
}

// Samples the fiber direction map at n equally spaced angles and unwraps it
// into a continuous lift.
inline FiberMapSample sample_fiber_map(const MetricSpec& m, Vec2 x, int n, double T,
                                       const IntegratorOptions& opts = {}) {
    if (n < 16) throw UsageError("fiber map needs at least 16 angles");
    FiberMapSample s;
    s.base = x;
    s.fiber_angles.resize(n);
    std::vector<double> raw(n);
    for (int i = 0; i < n; ++i) s.fiber_angles[i] = kTwoPi * i / n;
    parallel_for(static_cast<std::size_t>(n),
                 [&](std::size_t i) { raw[i] = forward_direction_angle(m, x, s.fiber_angles[i], T, opts); });
    s.lifted_directions.resize(n);
    s.lifted_directions[0] = raw[0];
    double min_inc = std::numeric_limits<double>::infinity();
    for (int i = 1; i < n; ++i) {
        double inc = wrap_angle(raw[i] - raw[i - 1]);
        s.lifted_directions[i] = s.lifted_directions[i - 1] + inc;
        min_inc = std::min(min_inc, inc);
    }
    double closing = wrap_angle(raw[0] - raw[n - 1]);
    min_inc = std::min(min_inc, closing);
    double full_turn = s.lifted_directions[n - 1] + closing - s.lifted_directions[0];
    s.monotonicity_defect = std::min(0.0, min_inc);
    s.degree_defect = std::abs(full_turn - kTwoPi);
    return s;
}

inline void write_fiber_map_csv(std::ostream& os, const FiberMapSample& s) {
    os << "fiber_angle,lifted_direction\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.fiber_angles.size(); ++i)
        os << s.fiber_angles[i] << ',' << s.lifted_directions[i] << '\n';
}

}  // namespace toruslab
