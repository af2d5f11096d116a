#pragma once

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/vec2.hpp"

namespace toruslab {

struct CosSin {
    double c;
    double s;
};

// cos and sin of 2*pi*turns. The argument is reduced to one turn first and
// the quarter-turn points are returned exactly, so that symmetry lines of a
// trigonometric polynomial (x = 0, 1/2, ...) stay exact invariant sets of the
// discretised geodesic flow.
inline CosSin cos_sin_turns(double turns) {
    double r = turns - std::floor(turns);
    if (r == 0.0) return {1.0, 0.0};
    if (r == 0.25) return {0.0, 1.0};
    if (r == 0.5) return {-1.0, 0.0};
    if (r == 0.75) return {0.0, -1.0};
    double a = kTwoPi * r;
    return {std::cos(a), std::sin(a)};
}

struct Harmonic {
    int k = 1;
    double cos_coeff = 0.0;
    double sin_coeff = 0.0;
};

// Value and first two derivatives of a 1-periodic function.
struct Jet1 {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// p(s) = mean + sum_k (a_k cos 2 pi k s + b_k sin 2 pi k s)
class TrigPoly {
public:
    TrigPoly() = default;
    explicit TrigPoly(double mean, std::vector<Harmonic> harmonics = {})
        : mean_(mean), harmonics_(std::move(harmonics)) {
        std::set<int> seen;
        for (const auto& h : harmonics_) {
            if (h.k < 1) throw MalformedSpec("harmonic frequency must be >= 1");
            if (!seen.insert(h.k).second) throw MalformedSpec("duplicate harmonic frequency");
            if (!std::isfinite(h.cos_coeff) || !std::isfinite(h.sin_coeff))
                throw MalformedSpec("non-finite harmonic coefficient");
        }
        if (!std::isfinite(mean_)) throw MalformedSpec("non-finite mean");
    }

    double mean() const { return mean_; }
    const std::vector<Harmonic>& harmonics() const { return harmonics_; }
    bool is_constant() const { return harmonics_.empty(); }

    double amplitude_sum() const {
        double s = 0.0;
        for (const auto& h : harmonics_) s += std::hypot(h.cos_coeff, h.sin_coeff);
        return s;
    }
    // Sufficient lower bound on the minimum of p.
    double lower_bound() const { return mean_ - amplitude_sum(); }
    double upper_bound() const { return mean_ + amplitude_sum(); }

    Jet1 jet(double s) const {
        Jet1 j{mean_, 0.0, 0.0};
        for (const auto& h : harmonics_) {
            auto cs = cos_sin_turns(h.k * s);
            double w = kTwoPi * h.k;
            j.value += h.cos_coeff * cs.c + h.sin_coeff * cs.s;
            j.d1 += w * (h.sin_coeff * cs.c - h.cos_coeff * cs.s);
            j.d2 -= w * w * (h.cos_coeff * cs.c + h.sin_coeff * cs.s);
        }
        return j;
    }

    double operator()(double s) const { return jet(s).value; }

private:
    double mean_ = 0.0;
    std::vector<Harmonic> harmonics_;
};

struct Harmonic2D {
    int k = 0;
    int l = 0;
    double cos_coeff = 0.0;
    double sin_coeff = 0.0;
};

// Value, gradient and Hessian of a function on the plane.
struct Jet2 {
    double value = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    double dxx = 0.0;
    double dxy = 0.0;
    double dyy = 0.0;
};

// u(x, y) = mean + sum (a cos 2 pi (kx + ly) + b sin 2 pi (kx + ly)) over a
// finite set of nonzero frequency pairs. A pair and its negative are rejected
// together since they span the same real basis functions.
class TrigPoly2D {
public:
    TrigPoly2D() = default;
    explicit TrigPoly2D(double mean, std::vector<Harmonic2D> terms = {})
        : mean_(mean), terms_(std::move(terms)) {
        std::set<std::pair<int, int>> seen;
        for (const auto& t : terms_) {
            if (t.k == 0 && t.l == 0) throw MalformedSpec("frequency pair (0,0) belongs in mean");
            if (seen.count({-t.k, -t.l}) || !seen.insert({t.k, t.l}).second)
                throw MalformedSpec("duplicate frequency pair");
            if (!std::isfinite(t.cos_coeff) || !std::isfinite(t.sin_coeff))
                throw MalformedSpec("non-finite coefficient");
        }
        if (!std::isfinite(mean_)) throw MalformedSpec("non-finite mean");
    }

    double mean() const { return mean_; }
    const std::vector<Harmonic2D>& terms() const { return terms_; }

    double amplitude_sum() const {
        double s = 0.0;
        for (const auto& t : terms_) s += std::hypot(t.cos_coeff, t.sin_coeff);
        return s;
    }

    Jet2 jet(double x, double y) const {
        Jet2 j;
        j.value = mean_;
        for (const auto& t : terms_) {
            auto cs = cos_sin_turns(t.k * x + t.l * y);
            double wx = kTwoPi * t.k;
            double wy = kTwoPi * t.l;
            double even = t.cos_coeff * cs.c + t.sin_coeff * cs.s;
            double odd = t.sin_coeff * cs.c - t.cos_coeff * cs.s;
            j.value += even;
            j.dx += wx * odd;
            j.dy += wy * odd;
            j.dxx -= wx * wx * even;
            j.dxy -= wx * wy * even;
            j.dyy -= wy * wy * even;
        }
        return j;
    }

    double operator()(double x, double y) const { return jet(x, y).value; }

private:
    double mean_ = 0.0;
    std::vector<Harmonic2D> terms_;
};

}  // namespace toruslab
