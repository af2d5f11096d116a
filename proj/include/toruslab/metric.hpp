#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>

#include "json.hpp"
#include "toruslab/errors.hpp"
#include "toruslab/trig_poly.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

struct FlatMetric {};

// (f(x) + g(y)) (dx^2 + dy^2)
struct LiouvilleMetric {
    TrigPoly f;
    TrigPoly g;
};

// exp(2 u(x, y)) (dx^2 + dy^2)
struct ConformalMetric {
    TrigPoly2D u;
};

struct ConformalFactor {
    double lambda;
    double dx;
    double dy;
};

// The four independent Christoffel symbols of a conformal metric. For
// lambda (dx^2 + dy^2) the others are G1_22 = -G1_11 and G2_22 = G1_12.
struct Christoffel {
    double g1_11;
    double g1_12;
    double g2_11;
    double g2_12;

    double g1_22() const { return -g1_11; }
    double g2_22() const { return g1_12; }
};

// A certified conformal metric lambda(x, y) (dx^2 + dy^2) on R^2 / Z^2.
// Immutable after construction; evaluation is pure.
class MetricSpec {
public:
    using Variant = std::variant<FlatMetric, LiouvilleMetric, ConformalMetric>;

    static MetricSpec flat(std::string id = "flat") { return MetricSpec(FlatMetric{}, std::move(id)); }
    static MetricSpec liouville(TrigPoly f, TrigPoly g, std::string id = "liouville") {
        return MetricSpec(LiouvilleMetric{std::move(f), std::move(g)}, std::move(id));
    }
    static MetricSpec conformal(TrigPoly2D u, std::string id = "conformal") {
        return MetricSpec(ConformalMetric{std::move(u)}, std::move(id));
    }

    const std::string& id() const { return id_; }
    const Variant& variant() const { return variant_; }
    bool is_flat() const { return std::holds_alternative<FlatMetric>(variant_); }
    bool is_liouville() const { return std::holds_alternative<LiouvilleMetric>(variant_); }
    const LiouvilleMetric* as_liouville() const { return std::get_if<LiouvilleMetric>(&variant_); }
    std::string variant_name() const {
        return std::visit([](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FlatMetric>) return "flat";
            else if constexpr (std::is_same_v<T, LiouvilleMetric>) return "liouville";
            else return "conformal";
        }, variant_);
    }

    // Certified bounds: lambda_lower() <= lambda(x, y) <= lambda_upper().
    double lambda_lower() const { return lower_; }
    double lambda_upper() const { return upper_; }

    // lambda with gradient and Hessian.
    Jet2 jet(double x, double y) const {
        return std::visit([&](const auto& v) -> Jet2 {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FlatMetric>) {
                return Jet2{1.0, 0, 0, 0, 0, 0};
            } else if constexpr (std::is_same_v<T, LiouvilleMetric>) {
                Jet1 f = v.f.jet(x);
                Jet1 g = v.g.jet(y);
                return Jet2{f.value + g.value, f.d1, g.d1, f.d2, 0.0, g.d2};
            } else {
                Jet2 u = v.u.jet(x, y);
                double l = std::exp(2.0 * u.value);
                return Jet2{l,
                            2.0 * u.dx * l,
                            2.0 * u.dy * l,
                            (4.0 * u.dx * u.dx + 2.0 * u.dxx) * l,
                            (4.0 * u.dx * u.dy + 2.0 * u.dxy) * l,
                            (4.0 * u.dy * u.dy + 2.0 * u.dyy) * l};
            }
        }, variant_);
    }

    ConformalFactor conformal_factor(double x, double y) const {
        if (const auto* l = std::get_if<LiouvilleMetric>(&variant_)) {
            Jet1 f = l->f.jet(x);
            Jet1 g = l->g.jet(y);
            return {f.value + g.value, f.d1, g.d1};
        }
        Jet2 j = jet(x, y);
        return {j.value, j.dx, j.dy};
    }

    double lambda(double x, double y) const { return conformal_factor(x, y).lambda; }
    double lambda(Vec2 p) const { return lambda(p.x, p.y); }

    Christoffel christoffel(double x, double y) const {
        ConformalFactor c = conformal_factor(x, y);
        double ax = c.dx / (2.0 * c.lambda);
        double ay = c.dy / (2.0 * c.lambda);
        return {ax, ay, -ay, ax};
    }

    // Smallest lambda over an n x n grid of the fundamental domain.
    double sampled_min_lambda(int n = 64) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m = std::min(m, lambda(double(i) / n, double(j) / n));
        return m;
    }

private:
    MetricSpec(Variant v, std::string id) : variant_(std::move(v)), id_(std::move(id)) { certify(); }

    void certify() {
        std::visit([&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FlatMetric>) {
                lower_ = upper_ = 1.0;
            } else if constexpr (std::is_same_v<T, LiouvilleMetric>) {
                double fl = v.f.lower_bound();
                double gl = v.g.lower_bound();
                if (!(fl > 0.0) || !(gl > 0.0)) {
                    std::ostringstream os;
                    os << "positivity certificate failed: f bound " << fl << ", g bound " << gl;
                    double worst = sampled_min_lambda_unchecked(v);
                    os << ", worst sampled lambda " << worst;
                    throw PositivityViolation(os.str(), worst);
                }
                lower_ = fl + gl;
                upper_ = v.f.upper_bound() + v.g.upper_bound();
            } else {
                double a = v.u.amplitude_sum();
                lower_ = std::exp(2.0 * (v.u.mean() - a));
                upper_ = std::exp(2.0 * (v.u.mean() + a));
                if (!(lower_ > 0.0) || !std::isfinite(upper_))
                    throw PositivityViolation("conformal factor under/overflows", lower_);
            }
        }, variant_);
    }

    static double sampled_min_lambda_unchecked(const LiouvilleMetric& l, int n = 64) {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m = std::min(m, l.f(double(i) / n) + l.g(double(j) / n));
        return m;
    }

    Variant variant_;
    std::string id_;
    double lower_ = 1.0;
    double upper_ = 1.0;
};

// ---- JSON metric files -----------------------------------------------------
//
//   {"variant": "flat"}
//   {"variant": "liouville",
//    "f": {"mean": 1.0, "harmonics": [{"k": 1, "cos": 0.3, "sin": 0.0}]},
//    "g": {"mean": 1.0}}
//   {"variant": "conformal",
//    "u": {"mean": 0.0, "terms": [{"k": 1, "l": 2, "cos": 0.05, "sin": 0.0}]}}
//
// An optional "name" string becomes the metric id.

namespace detail {

inline double number_field(const nlohmann::json& j, const char* key, double fallback, bool required) {
    if (!j.contains(key)) {
        if (required) throw MalformedSpec(std::string("missing field '") + key + "'");
        return fallback;
    }
    if (!j.at(key).is_number()) throw MalformedSpec(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

inline int int_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw MalformedSpec(std::string("field '") + key + "' must be an integer");
    return j.at(key).get<int>();
}

inline TrigPoly parse_trig_poly(const nlohmann::json& j) {
    if (!j.is_object()) throw MalformedSpec("trig polynomial must be an object");
    double mean = number_field(j, "mean", 0.0, true);
    std::vector<Harmonic> hs;
    if (j.contains("harmonics")) {
        if (!j.at("harmonics").is_array()) throw MalformedSpec("'harmonics' must be an array");
        for (const auto& h : j.at("harmonics"))
            hs.push_back({int_field(h, "k"), number_field(h, "cos", 0.0, false), number_field(h, "sin", 0.0, false)});
    }
    return TrigPoly(mean, std::move(hs));
}

inline TrigPoly2D parse_trig_poly_2d(const nlohmann::json& j) {
    if (!j.is_object()) throw MalformedSpec("2D trig polynomial must be an object");
    double mean = number_field(j, "mean", 0.0, false);
    std::vector<Harmonic2D> ts;
    if (j.contains("terms")) {
        if (!j.at("terms").is_array()) throw MalformedSpec("'terms' must be an array");
        for (const auto& t : j.at("terms"))
            ts.push_back({int_field(t, "k"), int_field(t, "l"), number_field(t, "cos", 0.0, false),
                          number_field(t, "sin", 0.0, false)});
    }
    return TrigPoly2D(mean, std::move(ts));
}

inline nlohmann::json trig_poly_json(const TrigPoly& p) {
    nlohmann::json hs = nlohmann::json::array();
    for (const auto& h : p.harmonics()) hs.push_back({{"k", h.k}, {"cos", h.cos_coeff}, {"sin", h.sin_coeff}});
    return {{"mean", p.mean()}, {"harmonics", hs}};
}

}  // namespace detail

inline MetricSpec build_metric(const nlohmann::json& raw) {
    if (!raw.is_object()) throw MalformedSpec("metric file must be a JSON object");
    if (!raw.contains("variant") || !raw.at("variant").is_string())
        throw MalformedSpec("metric file needs a string 'variant'");
    std::string variant = raw.at("variant").get<std::string>();
    std::string name = raw.value("name", variant);
    if (variant == "flat") return MetricSpec::flat(name);
    if (variant == "liouville") {
        if (!raw.contains("f") || !raw.contains("g")) throw MalformedSpec("liouville metric needs 'f' and 'g'");
        return MetricSpec::liouville(detail::parse_trig_poly(raw.at("f")), detail::parse_trig_poly(raw.at("g")), name);
    }
    if (variant == "conformal") {
        if (!raw.contains("u")) throw MalformedSpec("conformal metric needs 'u'");
        return MetricSpec::conformal(detail::parse_trig_poly_2d(raw.at("u")), name);
    }
    throw MalformedSpec("unknown metric variant '" + variant + "'");
}

inline MetricSpec load_metric(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open metric file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedSpec(std::string("metric file is not valid JSON: ") + e.what());
    }
    return build_metric(j);
}

inline nlohmann::json to_json(const MetricSpec& m) {
    nlohmann::json j{{"variant", m.variant_name()}, {"name", m.id()}};
    if (const auto* l = m.as_liouville()) {
        j["f"] = detail::trig_poly_json(l->f);
        j["g"] = detail::trig_poly_json(l->g);
    } else if (const auto* c = std::get_if<ConformalMetric>(&m.variant())) {
        nlohmann::json ts = nlohmann::json::array();
        for (const auto& t : c->u.terms())
            ts.push_back({{"k", t.k}, {"l", t.l}, {"cos", t.cos_coeff}, {"sin", t.sin_coeff}});
        j["u"] = {{"mean", c->u.mean()}, {"terms", ts}};
    }
    j["lambda_lower_bound"] = m.lambda_lower();
    j["lambda_upper_bound"] = m.lambda_upper();
    return j;
}

}  // namespace toruslab
