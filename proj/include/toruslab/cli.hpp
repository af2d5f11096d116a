#pragma once

#include <cstdint>
#include <random>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toruslab/entropy.hpp"
#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/foliation.hpp"
#include "toruslab/io.hpp"
#include "toruslab/metric.hpp"
#include "toruslab/minimize.hpp"
#include "toruslab/rotation.hpp"

namespace toruslab::cli {

enum Exit : int { kOk = 0, kUsage = 1, kNumerical = 2 };

// Uniform doubles in [0, 1) from a fixed 64-bit engine; identical on every
// platform for a given seed.
class SeededUniform {
public:
    explicit SeededUniform(std::uint64_t seed) : gen_(seed) {}
    double operator()() { return double(gen_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

struct RunConfig {
    std::string command;
    std::string metric_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;

    // integrate / rotation
    double x = 0.0, y = 0.0, angle = 0.0;
    double T = -1.0;
    bool two_sided = false;
    IntegratorOptions integrator;
    int fiber = 0;
    int fiber_samples = 0;

    // axes
    std::vector<int> cls{0, 1};
    int starts = 8;

    // entropy
    std::string schedule = "default";
    std::vector<double> eps;
    std::vector<double> horizons;
    std::vector<int> grid{10, 10, 16};
    double dt = 0.05;

    // foliate / verify
    std::string rho;
    int leaves = 8;
    std::string side = "right";
    double window = -1.0;
    FanOptions fan;
    VerifyOptions verify;
    std::string perturb;

    json to_json(const MetricSpec& m) const {
        json j{{"command", command}, {"metric_path", metric_path}, {"metric", toruslab::to_json(m)},
               {"out", out_dir},     {"seed", seed}};
        if (command == "integrate" || command == "rotation") {
            j["x"] = x;
            j["y"] = y;
            j["angle"] = angle;
            j["T"] = T;
            j["two_sided"] = two_sided;
            j["integrator"] = toruslab::to_json(integrator);
            if (command == "rotation") {
                j["fiber"] = fiber;
                j["fiber_samples"] = fiber_samples;
            }
        } else if (command == "axes") {
            j["class"] = cls;
            j["starts"] = starts;
        } else if (command == "entropy") {
            j["schedule"] = schedule;
            j["eps"] = eps;
            j["T"] = horizons;
            j["grid"] = grid;
            j["dt"] = dt;
            j["integrator"] = toruslab::to_json(integrator);
        } else {
            j["rho"] = rho;
            j["leaves"] = leaves;
            j["side"] = side;
            j["window"] = window;
            j["fan"] = toruslab::to_json(fan);
            j["leaf_integrator"] = toruslab::to_json(integrator);
            if (command == "verify") {
                j["verify"] = toruslab::to_json(verify);
                j["perturb"] = perturb;
            }
        }
        return j;
    }
};

inline std::string csv(const Trajectory& tr) {
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    return os.str();
}

inline void check_positive(double v, const char* name) {
    if (!(v > 0.0)) throw UsageError(std::string(name) + " must be positive");
}

inline void validate(const RunConfig& c) {
    check_positive(c.integrator.abs_tol, "--abs-tol");
    check_positive(c.integrator.rel_tol, "--rel-tol");
    check_positive(c.integrator.sample_step, "--sample-step");
    check_positive(c.dt, "--dt");
    check_positive(c.fan.T, "--fan-T");
    check_positive(c.fan.bisect_tol, "--bisect-tol");
    check_positive(c.fan.angle_tol, "--angle-tol");
    check_positive(c.verify.minimality_tol, "--minimality-tol");
}

inline int cmd_integrate(const RunConfig& c, std::ostream& log) {
    MetricSpec m = load_metric(c.metric_path);
    double T = c.T > 0 ? c.T : 100.0;
    PhasePoint p0 = unit_phase_point(m, {c.x, c.y}, c.angle);
    Trajectory tr = c.two_sided ? integrate_two_sided(m, p0, T, c.integrator) : integrate(m, p0, T, c.integrator);
    RunConfig resolved = c;
    resolved.T = T;
    write_file(c.out_dir, "trajectory.csv", csv(tr));
    Svg svg;
    svg.trajectory(tr, "black");
    write_file(c.out_dir, "trajectory.svg", svg.str());
    json report{{"config", resolved.to_json(m)}, {"trajectory", trajectory_summary(tr)}};
    write_json(c.out_dir, "integrate.json", report);
    log << "integrated to t=" << tr.t_end() << ", end (" << tr.back().x << ", " << tr.back().y
        << "), energy drift " << tr.energy_drift << (tr.degraded ? " [degraded]" : "") << '\n';
    return tr.degraded ? kNumerical : kOk;
}

inline int cmd_rotation(const RunConfig& c, std::ostream& log) {
    MetricSpec m = load_metric(c.metric_path);
    RunConfig resolved = c;
    resolved.T = c.T > 0 ? c.T : 1000.0;
    PhasePoint p0 = unit_phase_point(m, {c.x, c.y}, c.angle);
    Trajectory tr = c.two_sided ? integrate_two_sided(m, p0, resolved.T, c.integrator)
                                : integrate(m, p0, resolved.T, c.integrator);
    DirectionEstimate d = asymptotic_direction(tr);
    json report{{"config", resolved.to_json(m)}, {"estimate", to_json(d)}, {"trajectory", trajectory_summary(tr)}};
    log << "rotation number " << (d.projective.is_infinite() ? std::string("inf") : std::to_string(d.projective.rho()))
        << ", cauchy error " << d.cauchy_error << '\n';

    // Fiber maps at the given point or at seeded random base points.
    std::vector<Vec2> bases;
    if (c.fiber > 0) {
        if (c.fiber_samples > 0) {
            SeededUniform u(c.seed);
            for (int i = 0; i < c.fiber_samples; ++i) bases.push_back({u(), u()});
        } else {
            bases.push_back({c.x, c.y});
        }
    }
    json maps = json::array();
    for (std::size_t i = 0; i < bases.size(); ++i) {
        FiberMapSample s = sample_fiber_map(m, bases[i], c.fiber, resolved.T, c.integrator);
        std::ostringstream os;
        write_fiber_map_csv(os, s);
        write_file(c.out_dir, "fiber_map_" + std::to_string(i) + ".csv", os.str());
        maps.push_back({{"base", to_json(s.base)},
                        {"monotonicity_defect", s.monotonicity_defect},
                        {"degree_defect", s.degree_defect}});
        log << "fiber map at (" << s.base.x << ", " << s.base.y << "): monotonicity defect "
            << s.monotonicity_defect << ", degree defect " << s.degree_defect << '\n';
    }
    if (!maps.empty()) report["fiber_maps"] = maps;
    write_json(c.out_dir, "rotation.json", report);
    return kOk;
}

inline int cmd_axes(const RunConfig& c, std::ostream& log) {
    MetricSpec m = load_metric(c.metric_path);
    if (c.cls.size() != 2) throw UsageError("--class takes two integers");
    HomotopyClass cls(c.cls[0], c.cls[1]);
    auto axes = minimal_axis(m, cls, c.starts);
    json list = json::array();
    for (std::size_t i = 0; i < axes.size(); ++i) {
        list.push_back(to_json(axes[i]));
        std::ostringstream os;
        write_axis_csv(os, axes[i]);
        write_file(c.out_dir, "axis_" + std::to_string(i) + ".csv", os.str());
        log << "axis offset " << axes[i].offset << " length " << axes[i].length
            << (axes[i].minimal ? " minimal" : " not minimal") << '\n';
    }
    write_json(c.out_dir, "axes.json", {{"config", c.to_json(m)}, {"axes", list}});
    return axes.empty() ? kNumerical : kOk;
}

inline int cmd_entropy(const RunConfig& c, std::ostream& log) {
    MetricSpec m = load_metric(c.metric_path);
    RunConfig resolved = c;
    if (c.schedule == "default") {
        if (resolved.eps.empty()) resolved.eps = {0.2, 0.1, 0.05};
        if (resolved.horizons.empty()) resolved.horizons = {5, 10, 20, 40};
    } else if (c.schedule != "custom") {
        throw UsageError("--schedule must be 'default' or 'custom'");
    }
    if (c.grid.size() != 3) throw UsageError("--grid takes three integers");
    EntropyOptions o;
    o.grid = {c.grid[0], c.grid[1], c.grid[2]};
    o.dt = c.dt;
    o.integrator = c.integrator;
    EntropyEstimate e = entropy_estimate(m, resolved.eps, resolved.horizons, o);
    std::ostringstream os;
    write_entropy_csv(os, e);
    write_file(c.out_dir, "entropy.csv", os.str());
    write_json(c.out_dir, "entropy.json", {{"config", resolved.to_json(m)}, {"entropy", to_json(e)}});
    log << "entropy estimate " << e.estimate << " from " << e.candidates << " candidates\n";
    return kOk;
}

inline ChartOptions chart_options(const RunConfig& c, const RotationTag& tag) {
    ChartOptions o;
    o.n_leaves = c.leaves;
    o.side = tag.is_rational() ? parse_side(c.side) : ChartSide::None;
    o.fan = c.fan;
    o.leaf_integrator = c.integrator;
    if (c.window > 0) {
        o.rational_window = c.window;
        o.irrational_window = c.window;
    }
    return o;
}

inline void write_chart(const RunConfig& c, const FoliationChart& chart) {
    for (std::size_t i = 0; i < chart.leaves.size(); ++i)
        if (chart.leaves[i].ok) write_file(c.out_dir, "leaf_" + std::to_string(i) + ".csv", csv(chart.leaves[i].trajectory));
    write_file(c.out_dir, "chart.svg", chart_svg(chart));
}

inline int cmd_foliate(const RunConfig& c, std::ostream& log) {
    MetricSpec m = load_metric(c.metric_path);
    RotationTag tag = RotationTag::parse(c.rho);
    FoliationChart chart = build_foliation(m, tag, chart_options(c, tag));
    write_chart(c, chart);
    write_json(c.out_dir, "chart.json", {{"config", c.to_json(m)}, {"chart", to_json(chart)}});
    log << "built " << chart.leaves.size() << " leaves for " << tag.to_string() << ", holes " << chart.holes() << '\n';
    return chart.holes() ? kNumerical : kOk;
}

inline int cmd_verify(const RunConfig& c, std::ostream& log) {
    MetricSpec m = load_metric(c.metric_path);
    RotationTag tag = RotationTag::parse(c.rho);
    FoliationChart chart = build_foliation(m, tag, chart_options(c, tag));
    if (!c.perturb.empty()) {
        auto colon = c.perturb.find(':');
        if (colon == std::string::npos) throw UsageError("--perturb takes LEAF:ANGLE");
        std::size_t idx;
        double delta;
        try {
            idx = std::stoul(c.perturb.substr(0, colon));
            delta = std::stod(c.perturb.substr(colon + 1));
        } catch (const std::logic_error&) {
            throw UsageError("--perturb takes LEAF:ANGLE");
        }
        if (idx >= chart.leaves.size()) throw UsageError("--perturb leaf index out of range");
        perturb_leaf(m, chart, idx, delta);
    }
    VerifyReport rep = verify_chart(m, chart, c.verify);
    write_chart(c, chart);
    write_json(c.out_dir, "verify.json",
               {{"config", c.to_json(m)}, {"chart", to_json(chart)}, {"report", to_json(rep)}});
    for (const auto& ch : rep.checks)
        log << "(" << ch.id << ") " << ch.name << ": " << (!ch.applicable ? "n/a" : ch.pass ? "pass" : "FAIL")
            << (ch.detail.empty() ? "" : "  " + ch.detail) << '\n';
    return rep.all_pass() ? kOk : kNumerical;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"toruslab: geodesic flows on Riemannian 2-tori"};
    app.require_subcommand(1);
    RunConfig c;

    auto common = [&](CLI::App* s) {
        s->add_option("--metric", c.metric_path, "metric JSON file")->required();
        s->add_option("--out", c.out_dir, "output directory");
        s->add_option("--seed", c.seed, "seed for base-point sampling");
        s->add_option("--abs-tol", c.integrator.abs_tol, "integrator absolute tolerance");
        s->add_option("--rel-tol", c.integrator.rel_tol, "integrator relative tolerance");
        s->add_option("--sample-step", c.integrator.sample_step, "trajectory sample spacing");
    };
    auto start_point = [&](CLI::App* s) {
        s->add_option("--x", c.x, "base point x");
        s->add_option("--y", c.y, "base point y");
        s->add_option("--angle", c.angle, "fiber angle in radians");
        s->add_option("--T", c.T, "horizon");
        s->add_flag("--two-sided", c.two_sided, "integrate over [-T, T]");
    };
    auto chart = [&](CLI::App* s) {
        s->add_option("--rho", c.rho, "rotation tag: irrational:x, rational:num/den or inf")->required();
        s->add_option("--leaves", c.leaves, "number of leaves");
        s->add_option("--side", c.side, "right or left (rational tags)");
        s->add_option("--window", c.window, "half window of each leaf");
        s->add_option("--fan-T", c.fan.T, "horizon of the fan search");
        s->add_option("--bisect-tol", c.fan.bisect_tol, "fan bisection tolerance");
        s->add_option("--angle-tol", c.fan.angle_tol, "degenerate fan width");
    };

    auto* integ = app.add_subcommand("integrate", "integrate one geodesic");
    common(integ);
    start_point(integ);
    auto* rot = app.add_subcommand("rotation", "estimate a rotation number and fiber maps");
    common(rot);
    start_point(rot);
    rot->add_option("--fiber", c.fiber, "fiber map angle count (0 to skip)");
    rot->add_option("--fiber-samples", c.fiber_samples, "random base points for fiber maps");
    auto* axes = app.add_subcommand("axes", "find minimal axes of a homotopy class");
    common(axes);
    axes->add_option("--class", c.cls, "homotopy class p q")->expected(2);
    axes->add_option("--starts", c.starts, "number of seeds");
    auto* ent = app.add_subcommand("entropy", "estimate topological entropy");
    common(ent);
    ent->add_option("--schedule", c.schedule, "default or custom");
    ent->add_option("--eps", c.eps, "eps values")->delimiter(',');
    ent->add_option("--horizons", c.horizons, "horizons T")->delimiter(',');
    ent->add_option("--grid", c.grid, "nx ny angles")->expected(3);
    ent->add_option("--dt", c.dt, "orbit sampling step");
    auto* fol = app.add_subcommand("foliate", "build a minimal-geodesic chart");
    common(fol);
    chart(fol);
    auto* ver = app.add_subcommand("verify", "build and verify a chart");
    common(ver);
    chart(ver);
    ver->add_option("--minimality-tol", c.verify.minimality_tol, "gap allowance per unit window");
    ver->add_option("--perturb", c.perturb, "LEAF:ANGLE perturbation before verifying");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    for (auto* s : app.get_subcommands()) c.command = s->get_name();
    try {
        validate(c);
        if (c.command == "integrate") return cmd_integrate(c, out);
        if (c.command == "rotation") return cmd_rotation(c, out);
        if (c.command == "axes") return cmd_axes(c, out);
        if (c.command == "entropy") return cmd_entropy(c, out);
        if (c.command == "foliate") return cmd_foliate(c, out);
        return cmd_verify(c, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
}

}  // namespace toruslab::cli
