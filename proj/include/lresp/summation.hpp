#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "lresp/interval.hpp"

namespace lresp {

struct CumSum {
    std::vector<double> sums;
    double err = 0.0;  // bounds |sums[k] - exact prefix k| for every k
};

// Upward-rounded sum of |x_i|.
inline double abs_sum_up(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s = rnd::add_up(s, std::fabs(x));
    return s;
}

// Compensated (Neumaier) running sums with an a posteriori error bound.
// Each branch of the update recovers the rounding error e_k of s + x exactly
// (fast two-sum with the larger operand first), so the only inexact steps
// are the accumulation of c (error <= u|c_k| each) and the final s + c,
// whose residual is recovered exactly by two-sum.
inline CumSum kahan_cumsum(const std::vector<double>& xs) {
    CumSum out;
    const std::size_t n = xs.size();
    out.sums.resize(n);
    double s = 0.0, c = 0.0;
    double c_abs = 0.0, r_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = xs[i];
        double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
        c_abs = rnd::add_up(c_abs, std::fabs(c));
        double o = s + c;
        double bb = o - s;
        double r = (s - (o - bb)) + (c - bb);
        r_max = std::max(r_max, std::fabs(r));
        out.sums[i] = o;
    }
    if (n == 0) return out;
    double acc = rnd::mul_up(c_abs, rnd::add_up(kUnitRoundoff, 4.0 * kUnitRoundoff * kUnitRoundoff));
    out.err = rnd::add_up(r_max, acc);
    return out;
}

// Vectors within a uniform componentwise radius of mid.
struct ErrorVector {
    std::vector<double> mid;
    double rad = 0.0;

    ErrorVector() = default;
    ErrorVector(std::vector<double> m, double r) : mid(std::move(m)), rad(r) {}
    std::size_t size() const { return mid.size(); }
};

enum class Norm { sup, l1 };

inline double vec_norm_bound(const ErrorVector& v, Norm norm) {
    if (norm == Norm::sup) {
        double m = 0.0;
        for (double x : v.mid) m = std::max(m, std::fabs(x));
        return rnd::add_up(m, v.rad);
    }
    double s = abs_sum_up(v.mid);
    return rnd::add_up(s, rnd::mul_up(static_cast<double>(v.size()), v.rad));
}

}  // namespace lresp
