#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/minimize.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/rotation.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

// Exact rotation number as declared by the caller: a rational slope q/p
// carried as its primitive direction vector (p, q), the symbol infinity, or
// an irrational real.
class RotationTag {
public:
    enum class Kind { Rational, Infinity, Irrational };

    static RotationTag rational(long num, long den) {
        if (den == 0) {
            if (num == 0) throw UsageError("rational tag 0/0");
            return infinity();
        }
        long g = std::gcd(std::abs(num), std::abs(den));
        if (den < 0) {
            num = -num;
            den = -den;
        }
        RotationTag t;
        t.kind_ = Kind::Rational;
        t.p_ = den / g;
        t.q_ = num / g;
        t.value_ = double(num) / double(den);
        return t;
    }
    static RotationTag infinity() {
        RotationTag t;
        t.kind_ = Kind::Infinity;
        t.p_ = 0;
        t.q_ = 1;
        t.value_ = std::numeric_limits<double>::infinity();
        return t;
    }
    static RotationTag irrational(double rho) {
        if (!std::isfinite(rho)) throw UsageError("irrational tag must be finite");
        RotationTag t;
        t.kind_ = Kind::Irrational;
        t.value_ = rho;
        return t;
    }
    // Accepts "irrational:x", "rational:num/den" and "inf".
    static RotationTag parse(const std::string& s) {
        auto fail = [&] { return UsageError("bad rotation tag '" + s + "'"); };
        if (s == "inf" || s == "infinity") return infinity();
        auto colon = s.find(':');
        if (colon == std::string::npos) throw fail();
        std::string kind = s.substr(0, colon), body = s.substr(colon + 1);
        try {
            std::size_t used = 0;
            if (kind == "irrational") {
                double v = std::stod(body, &used);
                if (used != body.size()) throw fail();
                return irrational(v);
            }
            if (kind == "rational") {
                auto slash = body.find('/');
                std::string a = body.substr(0, slash), b = slash == std::string::npos ? "1" : body.substr(slash + 1);
                long num = std::stol(a, &used);
                if (used != a.size()) throw fail();
                long den = std::stol(b, &used);
                if (used != b.size()) throw fail();
                return rational(num, den);
            }
        } catch (const std::logic_error&) {
            throw fail();
        }
        throw fail();
    }

    Kind kind() const { return kind_; }
    bool is_rational() const { return kind_ != Kind::Irrational; }
    double value() const { return value_; }
    // Oriented unit direction; rational tags point along (p, q).
    Vec2 direction() const {
        if (kind_ == Kind::Irrational) return normalized(Vec2{1.0, value_});
        return normalized(Vec2{double(p_), double(q_)});
    }
    ProjectiveDirection projective() const {
        if (kind_ == Kind::Infinity) return ProjectiveDirection::infinity();
        return ProjectiveDirection::from_vector(direction());
    }
    // Primitive class of the axes with this rotation number.
    HomotopyClass axis_class() const {
        if (!is_rational()) throw UsageError("irrational tag has no axis class");
        return {int(p_), int(q_)};
    }
    std::string to_string() const {
        if (kind_ == Kind::Infinity) return "inf";
        if (kind_ == Kind::Rational) return "rational:" + std::to_string(q_) + "/" + std::to_string(p_);
        char buf[64];
        std::snprintf(buf, sizeof buf, "irrational:%.17g", value_);
        return buf;
    }

private:
    Kind kind_ = Kind::Irrational;
    long p_ = 1, q_ = 0;
    double value_ = 0.0;
};

struct FanOptions {
    double T = 400.0;
    int coarse = 16;
    double bisect_tol = 1e-12;
    double angle_tol = 1e-3;
    // Horizon tolerance tau = tau_scale / T for "direction equals target".
    double tau_scale = 10.0;
    double tail_fraction = 0.25;
    IntegratorOptions integrator = [] {
        IntegratorOptions o;
        o.sample_step = 0.25;
        return o;
    }();

    double tau() const { return tau_scale / T; }
};

struct BoundaryFan {
    Vec2 base;
    RotationTag target = RotationTag::infinity();
    double lower = 0.0;
    double upper = 0.0;
    // upper - lower.
    double width = 0.0;
    // Plateau width with the horizon band removed.
    double corrected_width = 0.0;
    bool degenerate = false;
    bool indeterminate = false;
    double tau = 0.0;
    int evaluations = 0;
};

namespace detail {

// Lifted angle difference between the finite-horizon direction of the
// geodesic at fiber angle a and the oriented target.
class FanProbe {
public:
    FanProbe(const MetricSpec& m, Vec2 x, double psi, const FanOptions& o) : m_(m), x_(x), psi_(psi), o_(o) {}

    double direction(double a) {
        ++evals;
        Trajectory tr = integrate_two_sided(m_, unit_phase_point(m_, x_, a), o_.T, o_.integrator);
        try {
            return angle_of(asymptotic_direction(tr, o_.tail_fraction).direction);
        } catch (const NotEscaping& e) {
            throw NotEscaping(e.what(), a);
        }
    }
    double psi() const { return psi_; }
    int evals = 0;

private:
    const MetricSpec& m_;
    Vec2 x_;
    double psi_;
    const FanOptions& o_;
};

struct Bracket {
    double a0, a1;   // fiber angles
    double d0, d1;   // lifted differences
    double raw0;     // raw direction at a0
};

// Shrinks [a0, a1] to width tol keeping pred(d0) true and pred(d1) false.
template <class Pred>
Bracket bisect(FanProbe& probe, Bracket b, double tol, Pred pred) {
    while (b.a1 - b.a0 > tol) {
        double am = 0.5 * (b.a0 + b.a1);
        if (am <= b.a0 || am >= b.a1) break;
        double raw = probe.direction(am);
        double dm = b.d0 + wrap_angle(raw - b.raw0);
        if (pred(dm)) {
            b.a0 = am;
            b.d0 = dm;
            b.raw0 = raw;
        } else {
            b.a1 = am;
            b.d1 = dm;
        }
    }
    return b;
}

}  // namespace detail

// Brackets the component of S_x^r mapping to the oriented target direction
// by bisection on the monotone lift of the fiber direction map.
inline BoundaryFan boundary_directions(const MetricSpec& m, Vec2 x, const RotationTag& target,
                                       const FanOptions& opts = {}) {
    if (opts.coarse < 4) throw UsageError("fan search needs at least 4 coarse angles");
    const double psi = angle_of(target.direction());
    const double tau = opts.tau();
    detail::FanProbe probe(m, x, psi, opts);
    const int n = opts.coarse;

    // Coarse pass, then restart the scan at the sample furthest from psi.
    std::vector<double> raw(n);
    for (int i = 0; i < n; ++i) raw[i] = probe.direction(kTwoPi * i / n);
    int start = 0;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
        double d = std::abs(wrap_angle(raw[i] - psi));
        if (d > far) {
            far = d;
            start = i;
        }
    }
    std::vector<double> a(n + 1), r(n + 1), d(n + 1);
    for (int k = 0; k <= n; ++k) {
        int i = (start + k) % n;
        a[k] = kTwoPi * (start + k) / n;
        r[k] = raw[i];
    }
    d[0] = wrap_angle(r[0] - psi);
    if (d[0] > 0.0) d[0] -= kTwoPi;
    for (int k = 1; k <= n; ++k) {
        double inc = wrap_angle(r[k] - r[k - 1]);
        if (inc < -tau) throw MonotonicityViolation("fiber direction map decreases by " + std::to_string(-inc));
        d[k] = d[k - 1] + inc;
    }
    if (std::abs(d[n] - d[0] - kTwoPi) > 1.0) throw BracketFailure("fiber direction map does not have degree one");

    auto find_bracket = [&](auto pred) -> detail::Bracket {
        for (int k = 1; k <= n; ++k)
            if (pred(d[k - 1]) && !pred(d[k])) return {a[k - 1], a[k], d[k - 1], d[k], r[k - 1]};
        throw BracketFailure("target direction not attained between sampled angles");
    };

    BoundaryFan fan;
    fan.base = x;
    fan.target = target;
    fan.tau = tau;
    auto below = [](double v) { return v < 0.0; };
    if (!target.is_rational()) {
        auto b = detail::bisect(probe, find_bracket(below), opts.bisect_tol, below);
        double shift = kTwoPi * std::floor(b.a0 / kTwoPi);
        fan.lower = b.a0 - shift;
        fan.upper = b.a1 - shift;
        fan.width = fan.upper - fan.lower;
        fan.corrected_width = 0.0;
        fan.degenerate = true;
        fan.evaluations = probe.evals;
        return fan;
    }

    auto below_band = [tau](double v) { return v < -tau; };
    auto not_above_band = [tau](double v) { return v <= tau; };
    auto lo = detail::bisect(probe, find_bracket(below_band), opts.bisect_tol, below_band);
    auto hi = detail::bisect(probe, find_bracket(not_above_band), opts.bisect_tol, not_above_band);
    double lower = lo.a1, upper = hi.a0;
    double raw_width = std::max(0.0, upper - lower);

    // Slopes just outside the band estimate how much of the raw width is
    // the band itself.
    double eta = std::clamp(raw_width, 10.0 * opts.angle_tol, 0.1);
    double r_lo = probe.direction(lower - eta);
    double d_lo_out = lo.d1 + wrap_angle(r_lo - (lo.raw0 + (lo.d1 - lo.d0)));
    double r_hi = probe.direction(upper + eta);
    double d_hi_out = hi.d0 + wrap_angle(r_hi - hi.raw0);
    double s_lo = (-tau - d_lo_out) / eta;
    double s_hi = (d_hi_out - tau) / eta;
    double correction = (s_lo > 0 ? tau / s_lo : 0.0) + (s_hi > 0 ? tau / s_hi : 0.0);
    fan.corrected_width = std::max(0.0, raw_width - correction);

    if (fan.corrected_width <= opts.angle_tol) {
        detail::Bracket b{lo.a0, hi.a1, lo.d0, hi.d1, lo.raw0};
        b = detail::bisect(probe, b, opts.bisect_tol, below);
        fan.lower = b.a0;
        fan.upper = b.a1;
        fan.degenerate = true;
    } else {
        fan.lower = lower;
        fan.upper = upper;
        fan.indeterminate = fan.corrected_width <= 10.0 * opts.angle_tol;
    }
    double shift = kTwoPi * std::floor(fan.lower / kTwoPi);
    fan.lower -= shift;
    fan.upper -= shift;
    fan.width = fan.upper - fan.lower;
    fan.evaluations = probe.evals;
    return fan;
}

// ---- intersections -----------------------------------------------------------

struct IntersectionOptions {
    double snap = 1e-7;
};

namespace detail {

struct Seg {
    Vec2 a, b;
    double lo, hi;
    std::size_t index;
};

inline std::vector<Seg> segments_of(const Trajectory& tr, Vec2 axis) {
    std::vector<Seg> out;
    if (tr.size() < 2) return out;
    out.reserve(tr.size() - 1);
    for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
        Vec2 a = tr.position(i), b = tr.position(i + 1);
        double pa = dot(a, axis), pb = dot(b, axis);
        out.push_back({a, b, std::min(pa, pb), std::max(pa, pb), i});
    }
    return out;
}

// Intersection of closed segments; returns the parameter along s and the point.
inline std::optional<std::pair<double, Vec2>> intersect(const Seg& s, const Seg& t) {
    Vec2 r = s.b - s.a, q = t.b - t.a, w = t.a - s.a;
    double den = cross(r, q);
    if (den == 0.0) {
        // Collinear overlap is reported at its first point.
        if (cross(w, r) != 0.0) return std::nullopt;
        double rr = dot(r, r);
        if (rr == 0.0) return std::nullopt;
        double t0 = dot(w, r) / rr, t1 = dot(t.b - s.a, r) / rr;
        double lo = std::max(0.0, std::min(t0, t1)), hi = std::min(1.0, std::max(t0, t1));
        if (lo > hi) return std::nullopt;
        return std::make_pair(lo, s.a + lo * r);
    }
    double u = cross(w, q) / den, v = cross(w, r) / den;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return std::nullopt;
    return std::make_pair(u, s.a + u * r);
}

inline Vec2 sweep_axis(const Trajectory& tr) {
    Vec2 d = tr.samples.back().p.position() - tr.samples.front().p.position();
    if (norm(d) < 1e-9) return {1.0, 0.0};
    return normalized(d);
}

}  // namespace detail

// Transversal crossings between two sampled geodesics, found by a sweep
// along their overall direction. Hits within the snap distance of each other
// count once. Passing the same trajectory twice counts self-crossings,
// ignoring adjacent segments.
inline int count_intersections(const Trajectory& t1, const Trajectory& t2, const IntersectionOptions& opts = {}) {
    const bool self = &t1 == &t2;
    Vec2 axis = detail::sweep_axis(t1);
    auto sa = detail::segments_of(t1, axis);
    auto sb = self ? std::vector<detail::Seg>{} : detail::segments_of(t2, axis);
    struct Item {
        double lo;
        int side;
        std::size_t k;
    };
    std::vector<Item> items;
    for (std::size_t k = 0; k < sa.size(); ++k) items.push_back({sa[k].lo, 0, k});
    for (std::size_t k = 0; k < sb.size(); ++k) items.push_back({sb[k].lo, 1, k});
    std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
        return x.lo != y.lo ? x.lo < y.lo : (x.side != y.side ? x.side < y.side : x.k < y.k);
    });

    // Hit positions keyed by the parameter along t1.
    std::vector<std::pair<double, Vec2>> hits;
    std::vector<std::size_t> active_a, active_b;
    auto prune = [](std::vector<std::size_t>& act, const std::vector<detail::Seg>& segs, double lo) {
        act.erase(std::remove_if(act.begin(), act.end(), [&](std::size_t k) { return segs[k].hi < lo; }), act.end());
    };
    for (const auto& it : items) {
        prune(active_a, sa, it.lo);
        prune(active_b, sb, it.lo);
        if (it.side == 0) {
            const auto& s = sa[it.k];
            if (self) {
                for (auto k : active_a) {
                    if (k + 1 == it.k || it.k + 1 == k) continue;
                    const auto& o = sa[k];
                    std::size_t first = std::min(k, it.k);
                    const auto& sf = sa[first];
                    const auto& sl = first == k ? s : o;
                    if (auto h = detail::intersect(sf, sl)) hits.push_back({double(first) + h->first, h->second});
                }
            } else {
                for (auto k : active_b)
                    if (auto h = detail::intersect(s, sb[k])) hits.push_back({double(it.k) + h->first, h->second});
            }
            active_a.push_back(it.k);
        } else {
            const auto& s = sb[it.k];
            for (auto k : active_a)
                if (auto h = detail::intersect(sa[k], s)) hits.push_back({double(k) + h->first, h->second});
            active_b.push_back(it.k);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    int count = 0;
    std::optional<Vec2> last;
    for (const auto& h : hits) {
        if (last && norm(h.second - *last) <= opts.snap) continue;
        ++count;
        last = h.second;
    }
    return count;
}

// Nonzero integer translates with |(m, n)| <= radius.
inline std::vector<std::pair<int, int>> lattice_translates(double radius) {
    std::vector<std::pair<int, int>> out;
    int r = int(std::floor(radius));
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            if ((i != 0 || j != 0) && std::hypot(double(i), double(j)) <= radius + 1e-12) out.push_back({i, j});
    return out;
}

struct TranslateCount {
    int m;
    int n;
    int crossings;
};

struct TranslateReport {
    std::vector<TranslateCount> counts;
    bool pass = true;
};

inline TranslateReport check_translate_disjoint(const MetricSpec&, const Trajectory& tr, const RotationTag& tag,
                                                const std::vector<std::pair<int, int>>& translates,
                                                const IntersectionOptions& opts = {}) {
    if (tag.is_rational()) throw RationalTag("translate disjointness applies to irrational rotation numbers only");
    TranslateReport rep;
    rep.counts.resize(translates.size());
    parallel_for(translates.size(), [&](std::size_t i) {
        auto [a, b] = translates[i];
        Trajectory moved = tr.translated({double(a), double(b)});
        rep.counts[i] = {a, b, count_intersections(tr, moved, opts)};
    });
    for (const auto& c : rep.counts)
        if (c.crossings != 0) rep.pass = false;
    return rep;
}

// ---- charts ------------------------------------------------------------------

enum class ChartSide { None, Right, Left };

inline std::string side_name(ChartSide s) {
    switch (s) {
        case ChartSide::Right: return "right";
        case ChartSide::Left: return "left";
        default: return "none";
    }
}

inline ChartSide parse_side(const std::string& s) {
    if (s == "right") return ChartSide::Right;
    if (s == "left") return ChartSide::Left;
    if (s == "none") return ChartSide::None;
    throw UsageError("side must be 'right' or 'left'");
}

struct ChartOptions {
    int n_leaves = 8;
    ChartSide side = ChartSide::Right;
    // Transversal; defaults to one fundamental strip across the direction.
    std::optional<Vec2> transversal_a, transversal_b;
    bool include_endpoints = true;
    // Half windows of the two-sided leaves.
    double rational_window = 8.0;
    double irrational_window = 1000.0;
    int axis_starts = 8;
    FanOptions fan;
    IntegratorOptions leaf_integrator;
};

struct Leaf {
    double u = 0.0;
    Vec2 base;
    double angle = 0.0;
    std::optional<BoundaryFan> fan;
    Trajectory trajectory;
    bool ok = false;
    std::string error;
};

struct FoliationChart {
    RotationTag target = RotationTag::infinity();
    ChartSide side = ChartSide::None;
    Vec2 transversal_a, transversal_b;
    std::vector<Leaf> leaves;
    std::vector<AxisRecord> axes;
    double window = 0.0;
    double tau = 0.0;
    ChartOptions options;

    int holes() const {
        int h = 0;
        for (const auto& l : leaves) h += l.ok ? 0 : 1;
        return h;
    }
};

inline std::pair<Vec2, Vec2> default_transversal(const RotationTag& tag) {
    Vec2 d = tag.direction();
    Vec2 right = -perp(d);
    double span = 1.0;
    if (tag.is_rational()) span = 1.0 / tag.axis_class().euclidean_length();
    return {-(0.5 * span) * right, (0.5 * span) * right};
}

// Restricts a trajectory to sample times in [t0, t1].
inline Trajectory time_window(const Trajectory& tr, double t0, double t1) {
    Trajectory out = tr;
    out.samples.clear();
    for (const auto& s : tr.samples)
        if (s.t >= t0 && s.t <= t1) out.samples.push_back(s);
    return out;
}

// Ends each side of a leaf where its gap to the nearest axis lift is
// smallest over the outer half of the window. Separatrices leave their axis
// once rounding in the initial angle has grown to the size of the gap.
inline Trajectory trim_to_asymptote(const Trajectory& tr, const std::vector<AxisRecord>& axes) {
    if (axes.empty()) return tr;
    std::vector<detail::CurveGraph> graphs;
    for (const auto& a : axes) graphs.emplace_back(a.curve);
    auto best_time = [&](double sign, double T) {
        double best = std::numeric_limits<double>::infinity(), at = sign * T;
        for (const auto& s : tr.samples) {
            double u = sign * s.t;
            if (u < 0.5 * T || u > T) continue;
            double g = detail::nearest_axis_lift(axes, graphs, s.p.position()).first;
            if (g < best) {
                best = g;
                at = s.t;
            }
        }
        return at;
    };
    double t1 = tr.t_end() > 0.0 ? best_time(1.0, tr.t_end()) : tr.t_end();
    double t0 = tr.t_begin() < 0.0 ? best_time(-1.0, -tr.t_begin()) : tr.t_begin();
    return time_window(tr, t0, t1);
}

inline Leaf make_leaf(const MetricSpec& m, Vec2 base, double angle, double window, const IntegratorOptions& opts) {
    Leaf l;
    l.base = base;
    l.angle = angle;
    l.trajectory = integrate_two_sided(m, unit_phase_point(m, base, angle), window, opts);
    l.ok = true;
    return l;
}

// Leaves through equally spaced points of a transversal. Irrational targets
// use the bisected direction; rational targets use the plateau boundary on
// the chosen side (lower for right, upper for left), or the single direction
// when the fan is degenerate, in which case the leaf is an axis.
inline FoliationChart build_foliation(const MetricSpec& m, const RotationTag& target, const ChartOptions& opts = {}) {
    if (opts.n_leaves < 8) throw UsageError("a chart needs at least 8 leaves");
    FoliationChart chart;
    chart.target = target;
    chart.options = opts;
    chart.side = target.is_rational() ? opts.side : ChartSide::None;
    if (target.is_rational() && chart.side == ChartSide::None) throw UsageError("rational charts need a side");
    auto def = default_transversal(target);
    chart.transversal_a = opts.transversal_a.value_or(def.first);
    chart.transversal_b = opts.transversal_b.value_or(def.second);
    chart.window = target.is_rational() ? opts.rational_window : opts.irrational_window;
    chart.tau = opts.fan.tau();
    if (target.is_rational()) {
        auto axes = minimal_axis(m, target.axis_class(), opts.axis_starts);
        for (auto& a : axes)
            if (a.minimal) chart.axes.push_back(std::move(a));
    }

    const int n = opts.n_leaves;
    chart.leaves.resize(n);
    parallel_for(std::size_t(n), [&](std::size_t i) {
        double u = opts.include_endpoints ? double(i) / (n - 1) : (i + 0.5) / n;
        Vec2 base = chart.transversal_a + u * (chart.transversal_b - chart.transversal_a);
        Leaf& leaf = chart.leaves[i];
        leaf.u = u;
        leaf.base = base;
        try {
            BoundaryFan fan = boundary_directions(m, base, target, opts.fan);
            double angle;
            if (fan.degenerate) angle = 0.5 * (fan.lower + fan.upper);
            else angle = chart.side == ChartSide::Right ? fan.lower : fan.upper;
            leaf = make_leaf(m, base, angle, chart.window, opts.leaf_integrator);
            leaf.u = u;
            leaf.fan = fan;
            if (!fan.degenerate && target.is_rational())
                leaf.trajectory = trim_to_asymptote(leaf.trajectory, chart.axes);
        } catch (const Error& e) {
            leaf.ok = false;
            leaf.error = e.what();
        }
    });
    return chart;
}

// Replaces leaf i by the geodesic at its angle plus delta.
inline void perturb_leaf(const MetricSpec& m, FoliationChart& chart, std::size_t i, double delta) {
    Leaf& l = chart.leaves.at(i);
    Leaf moved = make_leaf(m, l.base, l.angle + delta, chart.window, chart.options.leaf_integrator);
    moved.u = l.u;
    moved.fan = l.fan;
    l = std::move(moved);
}

struct VerifyOptions {
    // Minimality gap allowance per unit window length.
    double minimality_tol = 1e-4;
    double translate_radius = 3.0;
    double strip_bound = 2.0;
    double closure_tol = 1e-6;
    int ordering_samples = 200;
    AsymptoticOptions asymptotic;
    IntersectionOptions intersections;
    DistanceOptions distance;
};

struct CheckResult {
    std::string id;
    std::string name;
    bool applicable = true;
    bool pass = true;
    double value = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
    const CheckResult& get(const std::string& id) const {
        for (const auto& c : checks)
            if (c.id == id) return c;
        throw UsageError("no check '" + id + "'");
    }
};

namespace detail {

// Cubic Hermite position on a unit-speed trajectory at time t.
inline Vec2 hermite_position(const Trajectory& tr, double t) {
    std::size_t i = std::min(tr.index_at_or_before(t), tr.size() - 2);
    const auto& s0 = tr.samples[i];
    const auto& s1 = tr.samples[i + 1];
    double h = s1.t - s0.t;
    double x = (t - s0.t) / h;
    double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
    double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
    return h00 * s0.p.position() + (h10 * h) * s0.p.velocity() + h01 * s1.p.position() +
           (h11 * h) * s1.p.velocity();
}

// Deviation from closing up by the class translation after one period.
inline std::optional<double> closure_defect(const Trajectory& tr, HomotopyClass cls) {
    Vec2 tau = cls.translation();
    Vec2 d = cls.direction();
    double target = cls.euclidean_length();
    std::size_t o = tr.origin_index();
    Vec2 c0 = tr.position(o);
    double t0 = tr.samples[o].t;
    for (std::size_t i = o; i + 1 < tr.size(); ++i) {
        double a = dot(tr.position(i) - c0, d), b = dot(tr.position(i + 1) - c0, d);
        if (a <= target && b >= target) {
            double lo = tr.samples[i].t, hi = tr.samples[i + 1].t;
            for (int k = 0; k < 60; ++k) {
                double mid = 0.5 * (lo + hi);
                if (dot(hermite_position(tr, mid) - c0, d) < target) lo = mid;
                else hi = mid;
            }
            (void)t0;
            Vec2 p = hermite_position(tr, 0.5 * (lo + hi));
            return norm(p - c0 - tau);
        }
    }
    return std::nullopt;
}

// Normal coordinate of a leaf as a function of its coordinate along d.
struct LeafGraph {
    std::vector<double> s, w;
    bool monotone = true;

    LeafGraph(const Trajectory& tr, Vec2 d) {
        Vec2 n = perp(d);
        for (const auto& smp : tr.samples) {
            s.push_back(dot(smp.p.position(), d));
            w.push_back(dot(smp.p.position(), n));
        }
        for (std::size_t i = 1; i < s.size(); ++i)
            if (!(s[i] > s[i - 1])) monotone = false;
    }
    double at(double x) const {
        auto it = std::upper_bound(s.begin(), s.end(), x);
        if (it == s.begin()) return w.front();
        if (it == s.end()) return w.back();
        std::size_t i = std::size_t(it - s.begin());
        double t = (x - s[i - 1]) / (s[i] - s[i - 1]);
        return w[i - 1] + t * (w[i] - w[i - 1]);
    }
};

}  // namespace detail

// Runs the chart checks:
//   a  no crossings between leaves and no self-crossings
//   b  every leaf is minimal over its window
//   c  the transversal order of leaves is kept along the direction
//   d  rational: forward/backward asymptotic axes match the side, or
//      degenerate leaves close up as axes
//   e  irrational: leaves miss their nonzero translates
//   f  strip width about the target direction is bounded
inline VerifyReport verify_chart(const MetricSpec& m, const FoliationChart& chart, const VerifyOptions& opts = {}) {
    VerifyReport rep;
    std::vector<const Leaf*> leaves;
    for (const auto& l : chart.leaves)
        if (l.ok) leaves.push_back(&l);
    const Vec2 d = chart.target.direction();
    const Vec2 n = perp(d);

    CheckResult holes{"holes", "all leaves constructed", true, true, 0.0, ""};
    holes.value = chart.holes();
    holes.pass = chart.holes() == 0 && !leaves.empty();
    for (const auto& l : chart.leaves)
        if (!l.ok) holes.detail += "leaf u=" + std::to_string(l.u) + ": " + l.error + "; ";
    rep.checks.push_back(holes);

    // (a)
    {
        CheckResult c{"a", "leaves pairwise disjoint", true, true, 0.0, ""};
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < leaves.size(); ++i)
            for (std::size_t j = i; j < leaves.size(); ++j) pairs.push_back({i, j});
        std::vector<int> counts(pairs.size());
        parallel_for(pairs.size(), [&](std::size_t k) {
            auto [i, j] = pairs[k];
            counts[k] = i == j ? count_intersections(leaves[i]->trajectory, leaves[i]->trajectory, opts.intersections)
                               : count_intersections(leaves[i]->trajectory, leaves[j]->trajectory, opts.intersections);
        });
        int total = std::accumulate(counts.begin(), counts.end(), 0);
        c.value = total;
        c.pass = total == 0;
        for (std::size_t k = 0; k < pairs.size(); ++k)
            if (counts[k])
                c.detail += "leaves " + std::to_string(pairs[k].first) + "," + std::to_string(pairs[k].second) + ": " +
                            std::to_string(counts[k]) + "; ";
        rep.checks.push_back(c);
    }
    // (b)
    {
        CheckResult c{"b", "leaves minimal over their windows", true, true, 0.0, ""};
        std::vector<MinimalityResult> res(leaves.size());
        parallel_for(leaves.size(), [&](std::size_t i) {
            const auto& tr = leaves[i]->trajectory;
            res[i] = is_minimal_segment(m, tr, tr.t_begin(), tr.t_end(), opts.minimality_tol, opts.distance);
        });
        double worst = 0.0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            worst = std::max(worst, res[i].gap / res[i].arclength);
            if (!res[i].minimal) {
                c.pass = false;
                c.detail += "leaf " + std::to_string(i) + " gap " + std::to_string(res[i].gap) + "; ";
            }
        }
        c.value = worst;
        rep.checks.push_back(c);
    }
    // (c)
    {
        CheckResult c{"c", "transversal order preserved", true, true, 0.0, ""};
        std::vector<detail::LeafGraph> graphs;
        for (auto* l : leaves) graphs.emplace_back(l->trajectory, d);
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        for (const auto& g : graphs) {
            if (!g.monotone) {
                c.pass = false;
                c.detail = "a leaf is not a graph over the direction";
            }
            lo = std::max(lo, g.s.front());
            hi = std::min(hi, g.s.back());
        }
        if (c.pass && leaves.size() >= 2 && lo < hi) {
            // Order of the leaves along the normal at the base points.
            std::vector<double> base_w;
            for (auto* l : leaves) base_w.push_back(dot(l->base, n));
            double sign = base_w.back() >= base_w.front() ? 1.0 : -1.0;
            double worst = 0.0;
            for (int k = 0; k <= opts.ordering_samples; ++k) {
                double s = lo + (hi - lo) * k / opts.ordering_samples;
                for (std::size_t i = 0; i + 1 < graphs.size(); ++i) {
                    double step = sign * (graphs[i + 1].at(s) - graphs[i].at(s));
                    worst = std::min(worst, step);
                }
            }
            c.value = worst;
            c.pass = worst >= -1e-9;
            if (!c.pass) c.detail = "leaves swap order";
        }
        rep.checks.push_back(c);
    }
    // (d)
    {
        CheckResult c{"d", "asymptotic side matches", true, true, 0.0, ""};
        if (!chart.target.is_rational()) {
            c.applicable = false;
            c.detail = "irrational target";
        } else {
            HomotopyClass cls = chart.target.axis_class();
            int bad = 0;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                const Leaf& l = *leaves[i];
                std::string why;
                if (l.fan && l.fan->degenerate) {
                    auto def = detail::closure_defect(l.trajectory, cls);
                    if (!def || *def > opts.closure_tol)
                        why = def ? "axis closure defect " + std::to_string(*def) : "window shorter than one period";
                } else if (chart.axes.empty()) {
                    why = "no minimal axes";
                } else {
                    AsymptoticType at = asymptotic_type(m, l.trajectory, chart.axes, opts.asymptotic);
                    double w0 = dot(l.base, n);
                    if (!at.classified()) {
                        why = "unclassified";
                    } else {
                        // Right: forward axis on the right (smaller normal coordinate).
                        double wf = at.forward.axis->offset, wb = at.backward.axis->offset;
                        bool right = wf < w0 && wb > w0;
                        bool left = wf > w0 && wb < w0;
                        bool okside = chart.side == ChartSide::Right ? right : left;
                        if (!okside) why = "asymptotic to the " + std::string(right ? "right" : left ? "left" : "same") +
                                           " side";
                    }
                }
                if (!why.empty()) {
                    ++bad;
                    c.detail += "leaf " + std::to_string(i) + ": " + why + "; ";
                }
            }
            c.value = bad;
            c.pass = bad == 0;
        }
        rep.checks.push_back(c);
    }
    // (e)
    {
        CheckResult c{"e", "leaves miss their translates", true, true, 0.0, ""};
        if (chart.target.is_rational()) {
            c.applicable = false;
            c.detail = "rational target";
        } else {
            auto translates = lattice_translates(opts.translate_radius);
            int total = 0;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                auto r = check_translate_disjoint(m, leaves[i]->trajectory, chart.target, translates,
                                                  opts.intersections);
                for (const auto& t : r.counts) {
                    total += t.crossings;
                    if (t.crossings)
                        c.detail += "leaf " + std::to_string(i) + " vs (" + std::to_string(t.m) + "," +
                                    std::to_string(t.n) + "); ";
                }
            }
            c.value = total;
            c.pass = total == 0;
        }
        rep.checks.push_back(c);
    }
    // (f)
    {
        CheckResult c{"f", "strip width bounded", true, true, 0.0, ""};
        double worst = 0.0;
        for (auto* l : leaves) {
            Vec2 c0 = l->trajectory.position(l->trajectory.origin_index());
            for (const auto& s : l->trajectory.samples)
                worst = std::max(worst, std::abs(cross(d, s.p.position() - c0)));
        }
        c.value = worst;
        c.pass = worst <= opts.strip_bound;
        rep.checks.push_back(c);
    }
    return rep;
}

}  // namespace toruslab
