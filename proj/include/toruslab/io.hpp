#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toruslab/entropy.hpp"
#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/foliation.hpp"
#include "toruslab/metric.hpp"
#include "toruslab/minimize.hpp"
#include "toruslab/rotation.hpp"

namespace toruslab {

using nlohmann::json;

inline json to_json(Vec2 v) { return json::array({v.x, v.y}); }

inline json to_json(const IntegratorOptions& o) {
    return {{"abs_tol", o.abs_tol},         {"rel_tol", o.rel_tol},   {"sample_step", o.sample_step},
            {"initial_step", o.initial_step}, {"min_step", o.min_step}, {"energy_tol", o.energy_tol},
            {"max_steps", o.max_steps}};
}

inline json trajectory_summary(const Trajectory& tr) {
    json j{{"metric", tr.metric_id},
           {"t_begin", tr.t_begin()},
           {"t_end", tr.t_end()},
           {"samples", tr.size()},
           {"start", to_json(tr.samples[tr.origin_index()].p.position())},
           {"end", to_json(tr.back().position())},
           {"energy_drift", tr.energy_drift},
           {"degraded", tr.degraded},
           {"steps", {{"accepted", tr.stats.accepted}, {"rejected", tr.stats.rejected},
                      {"rhs_evals", tr.stats.rhs_evals}}}};
    j["first_integral_drift"] = tr.first_integral_drift ? json(*tr.first_integral_drift) : json(nullptr);
    return j;
}

inline json to_json(const DirectionEstimate& d) {
    json rho = d.projective.is_infinite() ? json("inf") : json(d.projective.rho());
    return {{"direction", to_json(d.direction)}, {"theta", d.projective.theta()},
            {"rho", rho},                         {"cauchy_error", d.cauchy_error},
            {"strip_half_width", d.strip_half_width}, {"displacement", d.displacement}};
}

inline json to_json(const AxisRecord& a) {
    return {{"class", {a.curve.cls.p, a.curve.cls.q}},
            {"length", a.length},
            {"offset", a.offset},
            {"minimal", a.minimal},
            {"gradient_norm", a.gradient_norm},
            {"vertices", a.curve.vertices.size()}};
}

inline json to_json(const EntropyEstimate& e) {
    json cells = json::array();
    for (const auto& c : e.table) cells.push_back({{"eps", c.eps}, {"T", c.T}, {"count", c.count}});
    return {{"estimate", e.estimate},
            {"eps", e.eps},
            {"slopes", e.slopes},
            {"table", cells},
            {"candidates", e.candidates},
            {"grid", {{"nx", e.grid.nx}, {"ny", e.grid.ny}, {"angles", e.grid.n_angles}}},
            {"dt", e.dt}};
}

inline json to_json(const BoundaryFan& f) {
    return {{"base", to_json(f.base)},
            {"target", f.target.to_string()},
            {"lower", f.lower},
            {"upper", f.upper},
            {"width", f.width},
            {"corrected_width", f.corrected_width},
            {"degenerate", f.degenerate},
            {"indeterminate", f.indeterminate},
            {"tau", f.tau},
            {"evaluations", f.evaluations}};
}

inline json to_json(const FanOptions& o) {
    return {{"T", o.T},
            {"coarse", o.coarse},
            {"bisect_tol", o.bisect_tol},
            {"angle_tol", o.angle_tol},
            {"tau", o.tau()},
            {"tau_scale", o.tau_scale},
            {"tail_fraction", o.tail_fraction},
            {"integrator", to_json(o.integrator)}};
}

inline json to_json(const VerifyReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"id", c.id},
                          {"name", c.name},
                          {"applicable", c.applicable},
                          {"pass", c.pass},
                          {"value", c.value},
                          {"detail", c.detail}});
    return {{"pass", r.all_pass()}, {"checks", checks}};
}

inline json to_json(const VerifyOptions& o) {
    return {{"minimality_tol", o.minimality_tol},
            {"translate_radius", o.translate_radius},
            {"strip_bound", o.strip_bound},
            {"closure_tol", o.closure_tol},
            {"asymptote_tol", o.asymptotic.asymptote_tol},
            {"snap", o.intersections.snap}};
}

inline json to_json(const FoliationChart& c) {
    json leaves = json::array();
    for (std::size_t i = 0; i < c.leaves.size(); ++i) {
        const Leaf& l = c.leaves[i];
        json jl{{"index", i}, {"u", l.u}, {"base", to_json(l.base)}, {"ok", l.ok}};
        if (l.ok) {
            jl["angle"] = l.angle;
            jl["t_begin"] = l.trajectory.t_begin();
            jl["t_end"] = l.trajectory.t_end();
        } else {
            jl["error"] = l.error;
        }
        if (l.fan) jl["fan"] = to_json(*l.fan);
        leaves.push_back(jl);
    }
    json axes = json::array();
    for (const auto& a : c.axes) axes.push_back(to_json(a));
    return {{"target", c.target.to_string()},
            {"side", side_name(c.side)},
            {"transversal", {to_json(c.transversal_a), to_json(c.transversal_b)}},
            {"window", c.window},
            {"tau", c.tau},
            {"holes", c.holes()},
            {"fan", to_json(c.options.fan)},
            {"leaves", leaves},
            {"axes", axes}};
}

// Minimal SVG canvas in plane coordinates, y pointing up.
class Svg {
public:
    void polyline(const std::vector<Vec2>& pts, const std::string& color, double width = 1.0) {
        if (pts.empty()) return;
        paths_.push_back({pts, color, width});
        for (auto p : pts) {
            lo_.x = std::min(lo_.x, p.x);
            lo_.y = std::min(lo_.y, p.y);
            hi_.x = std::max(hi_.x, p.x);
            hi_.y = std::max(hi_.y, p.y);
        }
    }
    void trajectory(const Trajectory& tr, const std::string& color, double width = 1.0) {
        std::vector<Vec2> pts;
        pts.reserve(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) pts.push_back(tr.position(i));
        polyline(pts, color, width);
    }

    std::string str(double size = 600.0) const {
        Vec2 lo = lo_, hi = hi_;
        if (paths_.empty()) lo = hi = Vec2{};
        double span = std::max({hi.x - lo.x, hi.y - lo.y, 1e-9});
        double pad = 0.05 * span;
        double scale = size / (span + 2 * pad);
        double w = (hi.x - lo.x + 2 * pad) * scale, h = (hi.y - lo.y + 2 * pad) * scale;
        std::ostringstream os;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.3f", w);
        std::string ws = buf;
        std::snprintf(buf, sizeof buf, "%.3f", h);
        std::string hs = buf;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << ws << "\" height=\"" << hs
           << "\" viewBox=\"0 0 " << ws << ' ' << hs << "\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        for (const auto& p : paths_) {
            os << "<polyline fill=\"none\" stroke=\"" << p.color << "\" stroke-width=\"" << p.width
               << "\" points=\"";
            // Thin long paths to at most 4000 points.
            std::size_t stride = std::max<std::size_t>(1, p.pts.size() / 4000);
            for (std::size_t i = 0; i < p.pts.size(); i += stride) {
                double X = (p.pts[i].x - lo.x + pad) * scale, Y = (hi.y - p.pts[i].y + pad) * scale;
                std::snprintf(buf, sizeof buf, "%.3f,%.3f ", X, Y);
                os << buf;
            }
            os << "\"/>\n";
        }
        os << "</svg>\n";
        return os.str();
    }

private:
    struct Path {
        std::vector<Vec2> pts;
        std::string color;
        double width;
    };
    std::vector<Path> paths_;
    Vec2 lo_{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi_{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
};

// Leaves in black, failed leaves skipped, axis lifts across the window in red.
inline std::string chart_svg(const FoliationChart& c) {
    Svg svg;
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi = -lo;
    for (const auto& l : c.leaves) {
        if (!l.ok) continue;
        svg.trajectory(l.trajectory, "black", 1.0);
        for (const auto& s : l.trajectory.samples) {
            lo.x = std::min(lo.x, s.p.x);
            lo.y = std::min(lo.y, s.p.y);
            hi.x = std::max(hi.x, s.p.x);
            hi.y = std::max(hi.y, s.p.y);
        }
    }
    if (!c.axes.empty() && lo.x <= hi.x) {
        const auto& cls = c.axes.front().curve.cls;
        Vec2 d = cls.direction(), n = cls.normal();
        double spacing = double(cls.gcd()) / cls.euclidean_length();
        double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
        double smin = wmin, smax = -wmin;
        for (Vec2 corner : {lo, hi, Vec2{lo.x, hi.y}, Vec2{hi.x, lo.y}}) {
            wmin = std::min(wmin, dot(corner, n));
            wmax = std::max(wmax, dot(corner, n));
            smin = std::min(smin, dot(corner, d));
            smax = std::max(smax, dot(corner, d));
        }
        Vec2 tau = cls.translation();
        for (const auto& a : c.axes) {
            for (long j = long(std::floor((wmin - a.offset) / spacing)); j <= long(std::ceil((wmax - a.offset) / spacing));
                 ++j) {
                // Shift by a lattice vector moving the offset by j spacings.
                auto [bx, by] = detail::bezout_shift(cls.p, cls.q);
                Vec2 shift{double(bx * j), double(by * j)};
                std::vector<Vec2> pts;
                double base_s = dot(a.curve.vertices.front() + shift, d);
                long k0 = long(std::floor((smin - base_s) / norm(tau))) - 1;
                long k1 = long(std::ceil((smax - base_s) / norm(tau))) + 1;
                for (long k = k0; k <= k1; ++k)
                    for (std::size_t v = 0; v + 1 < a.curve.vertices.size(); ++v)
                        pts.push_back(a.curve.vertices[v] + shift + double(k) * tau);
                svg.polyline(pts, "red", 1.5);
            }
        }
    }
    return svg.str();
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

inline void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    ensure_dir(dir);
    std::filesystem::path p = std::filesystem::path(dir) / name;
    std::ofstream out(p);
    if (!out) throw UsageError("cannot write '" + p.string() + "'");
    out << content;
}

inline void write_json(const std::string& dir, const std::string& name, const json& j) {
    write_file(dir, name, j.dump(2) + "\n");
}

}  // namespace toruslab
