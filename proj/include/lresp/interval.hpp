#pragma once

// Closed intervals with outward rounding.
//
// Directed rounding is obtained from error-free transformations under the
// default round-to-nearest mode: the exact residual of every add/mul/div is
// recovered (TwoSum, fma) and its sign decides whether the nearest result
// must be stepped one ulp outward. Nothing here touches the FP environment,
// so worker threads need no setup.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <ostream>

#include "lresp/errors.hpp"

namespace lresp {

inline constexpr double kUnitRoundoff = 0x1p-53;

namespace rnd {

inline double next_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
inline double next_down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

// Below this magnitude fma residuals may be inexact, so results are widened
// unconditionally.
inline constexpr double kTiny = 0x1p-968;

inline double add_up(double a, double b) {
    double s = a + b;
    if (!std::isfinite(s)) return s;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return err > 0 ? next_up(s) : s;
}

inline double add_down(double a, double b) {
    double s = a + b;
    if (!std::isfinite(s)) return s;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return err < 0 ? next_down(s) : s;
}

inline double sub_up(double a, double b) { return add_up(a, -b); }
inline double sub_down(double a, double b) { return add_down(a, -b); }

inline double mul_up(double a, double b) {
    double p = a * b;
    if (!std::isfinite(p)) return p;
    if (std::fabs(p) < kTiny) return (a == 0 || b == 0) ? 0.0 : next_up(p + DBL_TRUE_MIN);
    double e = std::fma(a, b, -p);
    return e > 0 ? next_up(p) : p;
}

inline double mul_down(double a, double b) {
    double p = a * b;
    if (!std::isfinite(p)) return p;
    if (std::fabs(p) < kTiny) return (a == 0 || b == 0) ? 0.0 : next_down(p - DBL_TRUE_MIN);
    double e = std::fma(a, b, -p);
    return e < 0 ? next_down(p) : p;
}

inline double div_up(double a, double b) {
    double q = a / b;
    if (!std::isfinite(q)) return q;
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return a == 0 ? 0.0 : next_up(q + DBL_TRUE_MIN);
    double r = std::fma(-q, b, a);  // a - q*b, exact
    if (r == 0) return q;
    return ((r > 0) == (b > 0)) ? next_up(q) : q;
}

inline double div_down(double a, double b) {
    double q = a / b;
    if (!std::isfinite(q)) return q;
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return a == 0 ? 0.0 : next_down(q - DBL_TRUE_MIN);
    double r = std::fma(-q, b, a);
    if (r == 0) return q;
    return ((r > 0) == (b > 0)) ? q : next_down(q);
}

inline double sqrt_up(double a) {
    double s = std::sqrt(a);
    double r = std::fma(-s, s, a);
    return r > 0 ? next_up(s) : s;
}

// n*u/(1-n*u), rounded up: the classical bound for n accumulated roundings.
inline double gamma(double n) {
    double nu = mul_up(n, kUnitRoundoff);
    return div_up(nu, sub_down(1.0, nu));
}

}  // namespace rnd

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double x) : lo(x), hi(x) {}  // NOLINT: implicit point promotion
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(l <= h)) throw DomainError("interval with lo > hi");
    }

    static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }
    static Interval entire() { return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()}; }

    double mid() const { return lo == hi ? lo : lo + 0.5 * (hi - lo); }
    double width() const { return rnd::sub_up(hi, lo); }
    double rad() const {
        double m = mid();
        return std::max(rnd::sub_up(hi, m), rnd::sub_up(m, lo));
    }
    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
    double mig() const {
        if (lo <= 0 && hi >= 0) return 0.0;
        return std::min(std::fabs(lo), std::fabs(hi));
    }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool contains_zero() const { return lo <= 0 && 0 <= hi; }
    bool is_point() const { return lo == hi; }

    Interval& operator+=(const Interval& o);
    Interval& operator-=(const Interval& o);
    Interval& operator*=(const Interval& o);
    Interval& operator/=(const Interval& o);
};

inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator+(const Interval& a, const Interval& b) {
    return {rnd::add_down(a.lo, b.lo), rnd::add_up(a.hi, b.hi)};
}

inline Interval operator-(const Interval& a, const Interval& b) {
    return {rnd::sub_down(a.lo, b.hi), rnd::sub_up(a.hi, b.lo)};
}

inline Interval operator*(const Interval& a, const Interval& b) {
    if (a.lo >= 0 && b.lo >= 0) return {rnd::mul_down(a.lo, b.lo), rnd::mul_up(a.hi, b.hi)};
    double lo = std::min({rnd::mul_down(a.lo, b.lo), rnd::mul_down(a.lo, b.hi), rnd::mul_down(a.hi, b.lo),
                          rnd::mul_down(a.hi, b.hi)});
    double hi = std::max({rnd::mul_up(a.lo, b.lo), rnd::mul_up(a.lo, b.hi), rnd::mul_up(a.hi, b.lo),
                          rnd::mul_up(a.hi, b.hi)});
    return {lo, hi};
}

inline Interval operator/(const Interval& a, const Interval& b) {
    if (b.contains_zero()) throw DomainError("division by an interval containing zero");
    double lo = std::min({rnd::div_down(a.lo, b.lo), rnd::div_down(a.lo, b.hi), rnd::div_down(a.hi, b.lo),
                          rnd::div_down(a.hi, b.hi)});
    double hi = std::max({rnd::div_up(a.lo, b.lo), rnd::div_up(a.lo, b.hi), rnd::div_up(a.hi, b.lo),
                          rnd::div_up(a.hi, b.hi)});
    return {lo, hi};
}

inline Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
inline Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
inline Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }
inline Interval& Interval::operator/=(const Interval& o) { return *this = *this / o; }

inline bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }

inline std::ostream& operator<<(std::ostream& os, const Interval& a) { return os << '[' << a.lo << ", " << a.hi << ']'; }

inline Interval abs(const Interval& a) {
    if (a.lo >= 0) return a;
    if (a.hi <= 0) return -a;
    return {0.0, std::max(-a.lo, a.hi)};
}

inline Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

inline Interval intersect(const Interval& a, const Interval& b) {
    double l = std::max(a.lo, b.lo), h = std::min(a.hi, b.hi);
    if (l > h) throw DomainError("empty intersection");
    return {l, h};
}

inline Interval sqr(const Interval& a) {
    double lo = a.mig(), hi = a.mag();
    return {rnd::mul_down(lo, lo), rnd::mul_up(hi, hi)};
}

// pi = [M_PI, next_up(M_PI)]: M_PI rounds the true value down.
inline Interval pi_interval() { return {3.141592653589793, rnd::next_up(3.141592653589793)}; }

namespace detail {

inline double widen_up(double x, int ulps) {
    for (int i = 0; i < ulps; ++i) x = rnd::next_up(x);
    return x;
}
inline double widen_down(double x, int ulps) {
    for (int i = 0; i < ulps; ++i) x = rnd::next_down(x);
    return x;
}

// Whether [lo, hi] might contain a point c*pi + 2*k*pi for an integer k.
// Conservative: may answer true spuriously, never false spuriously.
inline bool may_contain_phase(double lo, double hi, double c) {
    Interval two_pi = Interval(2.0) * pi_interval();
    double tlo = rnd::sub_down((Interval(lo) / two_pi).lo, 0.5 * c);
    double thi = rnd::sub_up((Interval(hi) / two_pi).hi, 0.5 * c);
    return std::ceil(tlo) <= std::floor(thi);
}

// Endpoint values from libm are trusted to within 1 ulp and widened by 2.
template <class F>
inline Interval periodic_range(const Interval& a, F f, double max_phase, double min_phase) {
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi - a.lo >= 6.28) return {-1.0, 1.0};
    double f1 = f(a.lo), f2 = f(a.hi);
    double lo = std::max(-1.0, widen_down(std::min(f1, f2), 2));
    double hi = std::min(1.0, widen_up(std::max(f1, f2), 2));
    if (may_contain_phase(a.lo, a.hi, max_phase)) hi = 1.0;
    if (may_contain_phase(a.lo, a.hi, min_phase)) lo = -1.0;
    return {lo, hi};
}

inline Interval point_pow(double x, int n) {
    Interval r(1.0);
    Interval b(x);
    for (int i = 0; i < n; ++i) r = r * b;
    return r;
}

}  // namespace detail

inline Interval sin(const Interval& a) {
    if (a.is_point() && a.lo == 0.0) return Interval(0.0);
    return detail::periodic_range(a, [](double x) { return std::sin(x); }, 0.5, -0.5);
}

inline Interval cos(const Interval& a) {
    if (a.is_point() && a.lo == 0.0) return Interval(1.0);
    return detail::periodic_range(a, [](double x) { return std::cos(x); }, 0.0, 1.0);
}

inline Interval exp(const Interval& a) {
    if (a.is_point() && a.lo == 0.0) return Interval(1.0);
    double lo = std::max(0.0, detail::widen_down(std::exp(a.lo), 2));
    double hi = detail::widen_up(std::exp(a.hi), 2);
    return {lo, hi};
}

inline Interval pow_int(const Interval& a, int n) {
    if (n < 0) return Interval(1.0) / pow_int(a, -n);
    if (n == 0) return Interval(1.0);
    if (n % 2 == 0) {
        double lo = a.mig(), hi = a.mag();
        return {detail::point_pow(lo, n).lo, detail::point_pow(hi, n).hi};
    }
    return {detail::point_pow(a.lo, n).lo, detail::point_pow(a.hi, n).hi};
}

// Upper bound on |x| for every x in the interval.
inline double mag(const Interval& a) { return a.mag(); }

}  // namespace lresp
