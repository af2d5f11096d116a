#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/metric.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

// Deck translation class (p, q) of a closed curve. Not reduced by gcd.
struct HomotopyClass {
    int p = 1;
    int q = 0;

    HomotopyClass() = default;
    HomotopyClass(int p_, int q_) : p(p_), q(q_) {
        if (p == 0 && q == 0) throw UsageError("homotopy class must be nonzero");
    }
    Vec2 translation() const { return {double(p), double(q)}; }
    int gcd() const { return std::gcd(std::abs(p), std::abs(q)); }
    bool primitive() const { return gcd() == 1; }
    double euclidean_length() const { return std::hypot(double(p), double(q)); }
    // Unit normal (-q, p) / |(p, q)| used for transversal offsets.
    Vec2 normal() const { return perp(translation()) / euclidean_length(); }
    Vec2 direction() const { return translation() / euclidean_length(); }
};

enum class CurveKind { Closed, Open };

// Polyline on the plane. A closed curve satisfies
// vertices.back() == vertices.front() + (p, q) exactly.
struct PolyCurve {
    CurveKind kind = CurveKind::Open;
    HomotopyClass cls;
    std::vector<Vec2> vertices;

    static PolyCurve closed_line(Vec2 start, HomotopyClass c, int segments) {
        PolyCurve pc;
        pc.kind = CurveKind::Closed;
        pc.cls = c;
        Vec2 t = c.translation();
        for (int j = 0; j < segments; ++j) pc.vertices.push_back(start + (double(j) / segments) * t);
        pc.vertices.push_back(start + t);
        pc.validate();
        return pc;
    }
    static PolyCurve open_line(Vec2 a, Vec2 b, int segments) {
        PolyCurve pc;
        for (int j = 0; j <= segments; ++j) pc.vertices.push_back(a + (double(j) / segments) * (b - a));
        pc.vertices.back() = b;
        pc.validate();
        return pc;
    }

    std::size_t segments() const { return vertices.size() - 1; }
    Vec2 front() const { return vertices.front(); }
    Vec2 back() const { return vertices.back(); }

    void validate() const {
        if (vertices.size() < 8) throw UsageError("polyline needs at least 8 vertices");
        if (kind == CurveKind::Closed && !(vertices.back() == vertices.front() + cls.translation()))
            throw UsageError("closed polyline does not close up by its class");
    }

    // Inserts the midpoint of every chord.
    PolyCurve refined() const {
        PolyCurve out;
        out.kind = kind;
        out.cls = cls;
        out.vertices.reserve(2 * vertices.size());
        for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
            out.vertices.push_back(vertices[i]);
            out.vertices.push_back(0.5 * (vertices[i] + vertices[i + 1]));
        }
        out.vertices.push_back(vertices.back());
        if (kind == CurveKind::Closed) out.vertices.back() = out.vertices.front() + cls.translation();
        return out;
    }

    PolyCurve translated(Vec2 d) const {
        PolyCurve out = *this;
        for (auto& v : out.vertices) v += d;
        if (kind == CurveKind::Closed) out.vertices.back() = out.vertices.front() + cls.translation();
        return out;
    }
};

namespace detail {

// Chord term l(p, q) = sqrt(lambda((p + q) / 2)) |q - p| with its gradient
// and Hessian blocks.
struct ChordJet {
    double value;
    Vec2 grad_p, grad_q;
    // Row-major 2x2 blocks.
    double hpp[4], hqq[4], hpq[4];
};

inline double chord_length(const MetricSpec& m, Vec2 a, Vec2 b) {
    Vec2 mid = 0.5 * (a + b);
    return std::sqrt(m.lambda(mid)) * norm(b - a);
}

inline ChordJet chord_jet(const MetricSpec& m, Vec2 a, Vec2 b) {
    Vec2 mid = 0.5 * (a + b);
    Jet2 j = m.jet(mid.x, mid.y);
    double s = std::sqrt(j.value);
    double w = s;
    Vec2 gw{j.dx / (2 * s), j.dy / (2 * s)};
    double l32 = 4.0 * j.value * s;
    double hw[4] = {j.dxx / (2 * s) - j.dx * j.dx / l32, j.dxy / (2 * s) - j.dx * j.dy / l32,
                    j.dxy / (2 * s) - j.dx * j.dy / l32, j.dyy / (2 * s) - j.dy * j.dy / l32};
    Vec2 e = b - a;
    double r = norm(e);
    Vec2 u = e / r;
    ChordJet c;
    c.value = w * r;
    c.grad_p = 0.5 * r * gw - w * u;
    c.grad_q = 0.5 * r * gw + w * u;
    double g[2] = {gw.x, gw.y};
    double ue[2] = {u.x, u.y};
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) {
            double curv = 0.25 * r * hw[2 * i + k];
            double sym = 0.5 * (g[i] * ue[k] + ue[i] * g[k]);
            double skew = 0.5 * (g[i] * ue[k] - ue[i] * g[k]);
            double proj = (w / r) * ((i == k ? 1.0 : 0.0) - ue[i] * ue[k]);
            c.hpp[2 * i + k] = curv - sym + proj;
            c.hqq[2 * i + k] = curv + sym + proj;
            c.hpq[2 * i + k] = curv + skew - proj;
        }
    return c;
}

inline double quad(const double* h, Vec2 a, Vec2 b) {
    return a.x * (h[0] * b.x + h[1] * b.y) + a.y * (h[2] * b.x + h[3] * b.y);
}

// Solves A x = b for symmetric A with diagonal d, superdiagonal e
// (A[i][i+1]) and optional corner c = A[0][n-1]. Cholesky factor has a
// bidiagonal part plus a dense last row. Returns false if A is not
// positive definite.
inline bool solve_cyclic_spd(const std::vector<double>& d, const std::vector<double>& e, double c,
                             const std::vector<double>& b, std::vector<double>& x) {
    const std::size_t n = d.size();
    if (n == 1) {
        if (!(d[0] > 0.0)) return false;
        x = {b[0] / d[0]};
        return true;
    }
    std::vector<double> diag(n), sub(n, 0.0), last(n, 0.0);
    // A[n-1][i] for i < n-1.
    auto a_last = [&](std::size_t i) {
        double v = 0.0;
        if (i == 0) v += c;
        if (i == n - 2) v += e[n - 2];
        return v;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double v = d[i] - (i > 0 ? sub[i - 1] * sub[i - 1] : 0.0);
        if (!(v > 0.0)) return false;
        diag[i] = std::sqrt(v);
        last[i] = (a_last(i) - (i > 0 ? last[i - 1] * sub[i - 1] : 0.0)) / diag[i];
        if (i + 2 < n) sub[i] = e[i] / diag[i];
    }
    double v = d[n - 1];
    for (std::size_t i = 0; i + 1 < n; ++i) v -= last[i] * last[i];
    if (!(v > 0.0)) return false;
    diag[n - 1] = std::sqrt(v);

    std::vector<double> y(n);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        y[i] = (b[i] - (i > 0 ? sub[i - 1] * y[i - 1] : 0.0)) / diag[i];
        acc += last[i] * y[i];
    }
    y[n - 1] = (b[n - 1] - acc) / diag[n - 1];
    x.assign(n, 0.0);
    x[n - 1] = y[n - 1] / diag[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
        double r = y[k] - last[k] * x[n - 1];
        if (k + 2 < n) r -= sub[k] * x[k + 1];
        x[k] = r / diag[k];
    }
    return true;
}

}  // namespace detail

// Metric length by the chord midpoint rule.
inline double length(const MetricSpec& m, const PolyCurve& c) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i)
        s += detail::chord_length(m, c.vertices[i], c.vertices[i + 1]);
    return s;
}

struct ShortenOptions {
    int max_iters = 2000;
    // Stop once a sweep gains less than tol * length and the normal
    // gradient is below grad_tol.
    double tol = 1e-11;
    double grad_tol = 1e-6;
    // Vertex moves are capped at step_fraction of the adjacent chord length.
    double step_fraction = 0.25;
    bool newton = true;
    // Throw NoConvergence instead of returning an unconverged curve.
    bool strict = true;
    int max_stalled = 25;
};

struct ShortenResult {
    PolyCurve curve;
    double length = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Relative length change indistinguishable from rounding.
inline constexpr double kRoundoff = 1e-14;

// Free vertices of a polyline, each moving along its own normal.
class Shortener {
public:
    Shortener(const MetricSpec& m, PolyCurve c) : m_(m), c_(std::move(c)) {
        closed_ = c_.kind == CurveKind::Closed;
        tau_ = closed_ ? c_.cls.translation() : Vec2{};
        nv_ = closed_ ? c_.vertices.size() - 1 : c_.vertices.size() - 2;
        if (!closed_) chord_normal_ = perp(normalized(c_.vertices.back() - c_.vertices.front()));
    }

    PolyCurve& curve() { return c_; }
    std::size_t vars() const { return nv_; }

    // Point index of variable k.
    std::size_t point(std::size_t k) const { return closed_ ? k : k + 1; }
    Vec2 prev_of(std::size_t k) const {
        std::size_t j = point(k);
        if (closed_ && j == 0) return c_.vertices[c_.vertices.size() - 2] - tau_;
        return c_.vertices[j - 1];
    }
    Vec2 next_of(std::size_t k) const { return c_.vertices[point(k) + 1]; }
    Vec2 at(std::size_t k) const { return c_.vertices[point(k)]; }
    void set(std::size_t k, Vec2 p) {
        c_.vertices[point(k)] = p;
        if (closed_ && k == 0) c_.vertices.back() = p + tau_;
    }

    // Open curves stay graphs over their chord; closed curves move along
    // local normals.
    Vec2 normal(std::size_t k) const {
        if (!closed_) return chord_normal_;
        return perp(normalized(next_of(k) - prev_of(k)));
    }

    double local_length(std::size_t k, Vec2 p) const {
        return chord_length(m_, prev_of(k), p) + chord_length(m_, p, next_of(k));
    }
    double cap(std::size_t k, double frac) const {
        return frac * std::min(norm(at(k) - prev_of(k)), norm(next_of(k) - at(k)));
    }

    // One Gauss-Seidel pass of per-vertex Newton moves, even then odd.
    void sweep(double frac) {
        for (std::size_t parity = 0; parity < 2; ++parity)
            for (std::size_t k = parity; k < nv_; k += 2) {
                Vec2 n = normal(k);
                Vec2 p = at(k);
                ChordJet a = chord_jet(m_, prev_of(k), p);
                ChordJet b = chord_jet(m_, p, next_of(k));
                double g = dot(n, a.grad_q + b.grad_p);
                double h = quad(a.hqq, n, n) + quad(b.hpp, n, n);
                double lim = cap(k, frac);
                double s = h > 0.0 ? -g / h : (g > 0 ? -lim : lim);
                if (g == 0.0) continue;
                s = std::clamp(s, -lim, lim);
                double before = a.value + b.value;
                for (int bt = 0; bt < 30; ++bt, s *= 0.5) {
                    Vec2 q = p + s * n;
                    if (local_length(k, q) < before) {
                        set(k, q);
                        break;
                    }
                }
            }
    }

    // Gradient along the frozen normals.
    std::vector<double> gradient(const std::vector<Vec2>& normals) const {
        std::vector<double> g(nv_);
        for (std::size_t k = 0; k < nv_; ++k) {
            ChordJet a = chord_jet(m_, prev_of(k), at(k));
            ChordJet b = chord_jet(m_, at(k), next_of(k));
            g[k] = dot(normals[k], a.grad_q + b.grad_p);
        }
        return g;
    }

    double max_gradient() const {
        std::vector<Vec2> ns(nv_);
        for (std::size_t k = 0; k < nv_; ++k) ns[k] = normal(k);
        double mx = 0.0;
        for (double g : gradient(ns)) mx = std::max(mx, std::abs(g));
        return mx;
    }

    // Damped Newton step on all normal offsets at once.
    void newton_step(double frac) {
        const std::size_t n = nv_;
        if (n < 3) return;
        std::vector<Vec2> ns(n);
        for (std::size_t k = 0; k < n; ++k) ns[k] = normal(k);
        std::vector<double> g(n, 0.0), d(n, 0.0), e(n > 1 ? n - 1 : 0, 0.0);
        double corner = 0.0;
        // Chords touching at least one free vertex.
        const std::size_t nchords = c_.vertices.size() - 1;
        for (std::size_t j = 0; j < nchords; ++j) {
            ChordJet cj = chord_jet(m_, c_.vertices[j], c_.vertices[j + 1]);
            // Variables at chord start and end.
            std::optional<std::size_t> va, vb;
            if (closed_) {
                va = j;
                vb = (j + 1) % n;
            } else {
                if (j >= 1) va = j - 1;
                if (j + 1 <= n) vb = j;
            }
            if (va) {
                g[*va] += dot(ns[*va], cj.grad_p);
                d[*va] += quad(cj.hpp, ns[*va], ns[*va]);
            }
            if (vb) {
                g[*vb] += dot(ns[*vb], cj.grad_q);
                d[*vb] += quad(cj.hqq, ns[*vb], ns[*vb]);
            }
            if (va && vb) {
                double off = quad(cj.hpq, ns[*va], ns[*vb]);
                if (closed_ && j == nchords - 1) corner += off;
                else e[*va] += off;
            }
        }
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax == 0.0) return;

        std::vector<double> rhs(n), x;
        for (std::size_t k = 0; k < n; ++k) rhs[k] = -g[k];
        double dmax = 0.0;
        for (double v : d) dmax = std::max(dmax, std::abs(v));
        double mu = 0.0;
        bool ok = false;
        for (int tries = 0; tries < 60 && !ok; ++tries) {
            std::vector<double> dd = d;
            for (auto& v : dd) v += mu;
            ok = solve_cyclic_spd(dd, e, corner, rhs, x);
            if (!ok) mu = mu == 0.0 ? 1e-8 * std::max(dmax, 1e-300) : 4.0 * mu;
        }
        if (!ok) return;

        double scale = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            double lim = cap(k, frac) * widen_;
            if (std::abs(x[k]) * scale > lim) scale = lim / std::abs(x[k]);
        }
        double slope = 0.0;
        for (std::size_t k = 0; k < n; ++k) slope += g[k] * x[k];
        if (!(slope < 0.0)) return;

        std::vector<Vec2> base(n);
        for (std::size_t k = 0; k < n; ++k) base[k] = at(k);
        double L0 = length(m_, c_);
        double alpha = scale;
        for (int bt = 0; bt < 40; ++bt, alpha *= 0.5) {
            for (std::size_t k = 0; k < n; ++k) set(k, base[k] + (alpha * x[k]) * ns[k]);
            double L1 = length(m_, c_);
            if (L1 <= L0 + 1e-4 * alpha * slope) {
                // Capped full steps widen the cap; backtracked ones narrow it.
                if (bt == 0 && scale < 1.0) widen_ = std::min(2.0 * widen_, kMaxWiden);
                else if (bt > 0) widen_ = std::max(0.5 * widen_, 1.0);
                return;
            }
            // Below length resolution, accept steps that reduce the gradient.
            if (std::abs(L1 - L0) <= kRoundoff * L0) {
                double g1 = 0.0;
                for (double v : gradient(ns)) g1 = std::max(g1, std::abs(v));
                if (g1 < gmax) return;
            }
        }
        for (std::size_t k = 0; k < n; ++k) set(k, base[k]);
    }

private:
    static constexpr double kMaxWiden = 16.0;
    const MetricSpec& m_;
    PolyCurve c_;
    double widen_ = 1.0;
    Vec2 chord_normal_;
    bool closed_ = false;
    Vec2 tau_;
    std::size_t nv_ = 0;
};

}  // namespace detail

// Birkhoff shortening: alternating per-vertex geodesic replacement, each
// sweep followed by a damped Newton step on the same normal offsets.
// Length never increases. Endpoints of open curves and the closing
// translation of closed curves are preserved.
inline ShortenResult birkhoff_shorten(const MetricSpec& m, const PolyCurve& c, const ShortenOptions& opts = {}) {
    c.validate();
    detail::Shortener s(m, c);
    ShortenResult res;
    double L = length(m, s.curve());
    int stalled = 0;
    for (int it = 1; it <= opts.max_iters; ++it) {
        s.sweep(opts.step_fraction);
        if (opts.newton) s.newton_step(opts.step_fraction);
        double L1 = length(m, s.curve());
        if (L1 > L * (1 + 2 * detail::kRoundoff)) throw ToleranceFailure("shortening increased length");
        double gain = L - L1;
        L = std::min(L, L1);
        res.iterations = it;
        if (gain <= opts.tol * L) {
            res.gradient_norm = s.max_gradient();
            res.converged = res.gradient_norm <= opts.grad_tol;
            if (res.converged) break;
            // Flat directions can stall single iterations; give up only on a run of them.
            stalled = gain <= 0.0 ? stalled + 1 : 0;
            if (stalled >= opts.max_stalled) break;
        } else {
            stalled = 0;
        }
    }
    res.curve = s.curve();
    res.length = length(m, res.curve);
    if (!res.converged) res.gradient_norm = s.max_gradient();
    if (!res.converged && opts.strict)
        throw NoConvergence("shortening did not converge (gradient " + std::to_string(res.gradient_norm) + ")");
    return res;
}

struct AxisOptions {
    double h_max = 0.05;
    double dedup_tol = 1e-4;
    double minimal_rel_tol = 1e-6;
    ShortenOptions shorten;
};

struct AxisRecord {
    PolyCurve curve;
    double length = 0.0;
    double offset = 0.0;
    bool minimal = false;
    double gradient_norm = 0.0;
};

namespace detail {

// Integer (a, b) with -q a + p b = gcd(p, q).
inline std::pair<long, long> bezout_shift(int p, int q) {
    // Extended Euclid on (p, -q): find b, a with p b + (-q) a = g.
    long old_r = p, r = -q, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        long k = old_r / r;
        long tmp = old_r - k * r; old_r = r; r = tmp;
        tmp = old_s - k * s; old_s = s; s = tmp;
        tmp = old_t - k * t; old_t = t; t = tmp;
    }
    if (old_r < 0) {
        old_s = -old_s;
        old_t = -old_t;
    }
    // p * old_s + (-q) * old_t = |g|
    return {old_t, old_s};
}

inline double transversal_offset(const PolyCurve& c) {
    Vec2 n = c.cls.normal();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) s += dot(c.vertices[i], n);
    return s / double(c.vertices.size() - 1);
}

// Graph of a closed curve over the direction coordinate u: sorted (u, w).
struct CurveGraph {
    std::vector<double> u, w;
    double period;

    explicit CurveGraph(const PolyCurve& c) {
        Vec2 d = c.cls.direction(), n = c.cls.normal();
        period = c.cls.euclidean_length();
        for (const auto& v : c.vertices) {
            u.push_back(dot(v, d));
            w.push_back(dot(v, n));
        }
    }
    // Normal coordinate at u, extended periodically.
    double at(double x) const {
        double u0 = u.front();
        double r = x - u0;
        double k = std::floor(r / period);
        double y = x - k * period;
        auto it = std::upper_bound(u.begin(), u.end(), y);
        if (it == u.begin()) return w.front();
        if (it == u.end()) return w.back();
        std::size_t i = static_cast<std::size_t>(it - u.begin());
        double t = (y - u[i - 1]) / (u[i] - u[i - 1]);
        return w[i - 1] + t * (w[i] - w[i - 1]);
    }
};

// Hausdorff distance (in the normal coordinate) between two closed curves
// of one class, modulo deck translations.
inline double axis_distance_mod_deck(const PolyCurve& a, const PolyCurve& b) {
    CurveGraph ga(a), gb(b);
    int g = a.cls.gcd();
    double spacing = double(g) / a.cls.euclidean_length();
    double ushift = a.cls.euclidean_length() / g;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < g; ++k)
        for (int j = -1; j <= 1; ++j) {
            double dmax = 0.0;
            for (std::size_t i = 0; i < ga.u.size(); ++i)
                dmax = std::max(dmax, std::abs(ga.w[i] - gb.at(ga.u[i] - k * ushift) - j * spacing));
            for (std::size_t i = 0; i < gb.u.size(); ++i)
                dmax = std::max(dmax, std::abs(gb.w[i] + j * spacing - ga.at(gb.u[i] + k * ushift)));
            best = std::min(best, dmax);
        }
    return best;
}

}  // namespace detail

// Shortens n straight seeds at equally spaced transversal offsets within one
// fundamental strip, removes duplicates modulo deck translations, and flags
// the records within the length tolerance of the shortest as minimal.
inline std::vector<AxisRecord> minimal_axis(const MetricSpec& m, HomotopyClass cls, int n_starts,
                                            const AxisOptions& opts = {}) {
    if (n_starts < 4) throw UsageError("minimal_axis needs at least 4 seeds");
    const double len = cls.euclidean_length();
    const int g = cls.gcd();
    const double spacing = double(g) / len;
    const Vec2 n = cls.normal();
    const int segments = std::max(8, int(std::ceil(len / opts.h_max)));
    auto [ba, bb] = detail::bezout_shift(cls.p, cls.q);
    const Vec2 lattice_step{double(ba), double(bb)};

    std::vector<AxisRecord> raw(n_starts);
    parallel_for(static_cast<std::size_t>(n_starts), [&](std::size_t k) {
        Vec2 start = (double(k) / n_starts * spacing) * n;
        ShortenResult r = birkhoff_shorten(m, PolyCurve::closed_line(start, cls, segments), opts.shorten);
        AxisRecord rec;
        double off = detail::transversal_offset(r.curve);
        double shift = std::floor(off / spacing);
        rec.curve = r.curve.translated(-shift * lattice_step);
        rec.offset = detail::transversal_offset(rec.curve);
        rec.length = r.length;
        rec.gradient_norm = r.gradient_norm;
        raw[k] = std::move(rec);
    });

    std::vector<AxisRecord> out;
    for (auto& r : raw) {
        bool dup = false;
        for (const auto& o : out)
            if (detail::axis_distance_mod_deck(r.curve, o.curve) < opts.dedup_tol) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(std::move(r));
    }
    if (out.empty()) throw NoConvergence("no axis found");
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& r : out) shortest = std::min(shortest, r.length);
    for (auto& r : out) r.minimal = r.length <= shortest * (1.0 + opts.minimal_rel_tol);
    std::sort(out.begin(), out.end(), [](const AxisRecord& a, const AxisRecord& b) { return a.offset < b.offset; });
    return out;
}

inline void write_axis_csv(std::ostream& os, const AxisRecord& a) {
    os << "# class " << a.curve.cls.p << ' ' << a.curve.cls.q << std::setprecision(17) << ", length " << a.length
       << ", offset " << a.offset << ", minimal " << (a.minimal ? "true" : "false") << '\n';
    os << "x,y\n";
    for (const auto& v : a.curve.vertices) os << v.x << ',' << v.y << '\n';
}

struct DistanceOptions {
    double h_max = 0.05;
    // Bow amplitudes for the corridor seeds, used when |a - b| > 1 and
    // clamped to a quarter of the chord.
    std::vector<double> bows{-1.0, -0.5, 0.5, 1.0};
    // Iterations a corridor seed gets to undercut the best length before it
    // is dropped.
    int bow_probe_iters = 60;
    // Relative margin a corridor seed must undercut the best length by.
    double bow_margin = 1e-9;
    bool richardson = true;
    ShortenOptions shorten;
};

struct DistanceResult {
    double distance = 0.0;
    PolyCurve curve;
};

namespace detail {

inline PolyCurve bowed_segment(Vec2 a, Vec2 b, double amp, double h_max) {
    Vec2 n = perp(normalized(b - a));
    double approx = norm(b - a) + 2.0 * std::abs(amp);
    int segs = std::max(8, int(std::ceil(approx / h_max)));
    PolyCurve c = PolyCurve::open_line(a, b, segs);
    for (int j = 1; j < segs; ++j) c.vertices[j] += (amp * std::sin(kPi * j / segs)) * n;
    return c;
}

}  // namespace detail

// Riemannian distance between two points of the plane: the shortest of the
// shortened chord and bowed corridor seeds, Richardson extrapolated in the
// vertex spacing.
inline DistanceResult distance_detailed(const MetricSpec& m, Vec2 a, Vec2 b, const DistanceOptions& opts = {}) {
    if (a == b) throw UsageError("distance endpoints coincide");
    std::vector<double> amps{0.0};
    if (norm(b - a) > 1.0) amps.insert(amps.end(), opts.bows.begin(), opts.bows.end());
    ShortenResult best = birkhoff_shorten(m, detail::bowed_segment(a, b, 0.0, opts.h_max), opts.shorten);
    ShortenOptions probe = opts.shorten;
    probe.strict = false;
    probe.max_iters = opts.bow_probe_iters;
    ShortenOptions loose = opts.shorten;
    loose.strict = false;
    double max_amp = 0.25 * norm(b - a);
    for (std::size_t i = 1; i < amps.size(); ++i) {
        double amp = std::clamp(amps[i], -max_amp, max_amp);
        ShortenResult r = birkhoff_shorten(m, detail::bowed_segment(a, b, amp, opts.h_max), probe);
        if (!(r.length < best.length * (1.0 - opts.bow_margin))) continue;
        if (!r.converged) r = birkhoff_shorten(m, r.curve, loose);
        if (r.converged && r.length < best.length) best = std::move(r);
    }
    DistanceResult out;
    if (!opts.richardson) {
        out.distance = best.length;
        out.curve = std::move(best.curve);
        return out;
    }
    ShortenResult fine = birkhoff_shorten(m, best.curve.refined(), opts.shorten);
    out.distance = (4.0 * fine.length - best.length) / 3.0;
    out.curve = std::move(fine.curve);
    return out;
}

inline double distance(const MetricSpec& m, Vec2 a, Vec2 b, const DistanceOptions& opts = {}) {
    return distance_detailed(m, a, b, opts).distance;
}

struct MinimalityResult {
    bool minimal = false;
    double gap = 0.0;
    double arclength = 0.0;
    double distance = 0.0;
};

// Compares the arclength of tr over [t0, t1] against the distance of its
// endpoints. Passes iff gap <= tol * (t1 - t0).
inline MinimalityResult is_minimal_segment(const MetricSpec& m, const Trajectory& tr, double t0, double t1,
                                           double tol, const DistanceOptions& opts = {}) {
    if (!(t0 < t1)) throw UsageError("minimality window must satisfy t0 < t1");
    std::size_t i0 = tr.index_near(t0), i1 = tr.index_near(t1);
    MinimalityResult r;
    r.arclength = tr.samples[i1].t - tr.samples[i0].t;
    r.distance = distance(m, tr.position(i0), tr.position(i1), opts);
    r.gap = r.arclength - r.distance;
    r.minimal = r.gap <= tol * r.arclength;
    return r;
}

// Lift of an axis: axis index plus its transversal offset on the plane.
struct AxisLift {
    std::size_t axis = 0;
    double offset = 0.0;
};

struct AsymptoticSide {
    std::optional<AxisLift> axis;
    std::vector<double> gaps;  // at |t| = T, T/2, T/4, T/8
    double final_gap = 0.0;
};

struct AsymptoticType {
    AsymptoticSide forward;
    AsymptoticSide backward;
    bool classified() const { return forward.axis.has_value() && backward.axis.has_value(); }
};

struct AsymptoticOptions {
    double asymptote_tol = 1e-3;
    int dyadic_levels = 4;
    double slack = 1e-9;
};

namespace detail {

// Nearest lift of any axis to point x: returns (gap, lift).
inline std::pair<double, AxisLift> nearest_axis_lift(const std::vector<AxisRecord>& axes,
                                                     const std::vector<CurveGraph>& graphs, Vec2 x) {
    double best = std::numeric_limits<double>::infinity();
    AxisLift lift;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto& cls = axes[a].curve.cls;
        double spacing = double(cls.gcd()) / cls.euclidean_length();
        double u = dot(x, cls.direction()), w = dot(x, cls.normal());
        double wa = graphs[a].at(u);
        double j = std::round((w - wa) / spacing);
        double gap = std::abs(w - wa - j * spacing);
        if (gap < best) {
            best = gap;
            lift = {a, axes[a].offset + j * spacing};
        }
    }
    return {best, lift};
}

}  // namespace detail

// Forward and backward asymptotic axes of a trajectory: the gap to the axis
// lift nearest at the horizon, sampled at dyadic times, must shrink and end
// below the asymptote tolerance. Sides that fail stay unclassified.
inline AsymptoticType asymptotic_type(const MetricSpec&, const Trajectory& tr, const std::vector<AxisRecord>& axes,
                                      const AsymptoticOptions& opts = {}) {
    if (axes.empty()) throw UsageError("asymptotic_type needs at least one axis");
    std::vector<detail::CurveGraph> graphs;
    for (const auto& a : axes) graphs.emplace_back(a.curve);
    AsymptoticType out;
    auto classify = [&](double sign, double T, AsymptoticSide& side) {
        if (!(T > 0.0)) return;
        auto [end_gap, lift] = detail::nearest_axis_lift(axes, graphs, tr.position(tr.index_near(sign * T)));
        (void)end_gap;
        const auto& cls = axes[lift.axis].curve.cls;
        bool decreasing = true;
        double prev = -1.0;
        for (int k = opts.dyadic_levels - 1; k >= 0; --k) {
            Vec2 x = tr.position(tr.index_near(sign * T / std::ldexp(1.0, k)));
            double u = dot(x, cls.direction()), w = dot(x, cls.normal());
            double wa = graphs[lift.axis].at(u) + (lift.offset - axes[lift.axis].offset);
            double gap = std::abs(w - wa);
            side.gaps.insert(side.gaps.begin(), gap);
            if (prev >= 0.0 && gap > prev + opts.slack) decreasing = false;
            prev = gap;
        }
        side.final_gap = side.gaps.front();
        if (decreasing && side.final_gap < opts.asymptote_tol) side.axis = lift;
    };
    classify(1.0, tr.t_end(), out.forward);
    classify(-1.0, -tr.t_begin(), out.backward);
    return out;
}

}  // namespace toruslab
