#pragma once

// Cubic-bump partition of unity on the uniform grid a_i = i/m, the
// mass-preserving projection onto span{phi_i} + R kappa, and the primitive
// scheme that integrates a nodal derivative.

#include <algorithm>
#include <cmath>
#include <vector>

#include "lresp/errors.hpp"
#include "lresp/interval.hpp"
#include "lresp/summation.hpp"

namespace lresp {

namespace bump {

// phi(t) = 1 - t^2 (3 - 2|t|) on [-1,1], zero outside.
inline double phi(double t) {
    double a = std::fabs(t);
    return a >= 1.0 ? 0.0 : 1.0 - t * t * (3.0 - 2.0 * a);
}

inline Interval phi_point(const Interval& t) {
    Interval a = abs(t);
    return Interval(1.0) - sqr(t) * (Interval(3.0) - Interval(2.0) * a);
}

inline Interval dphi_point(const Interval& t) {
    Interval a = abs(t);
    return Interval(6.0) * t * (a - Interval(1.0));
}

// Range of phi (order 0) or phi' (order 1) over an interval of t. Uses the
// monotonicity of phi on [-1,0] and [0,1] and the extrema of phi' at +-1/2.
inline Interval phi_range(const Interval& t, int order) {
    Interval out;
    bool have = false;
    auto add = [&](const Interval& r) {
        out = have ? hull(out, r) : r;
        have = true;
    };
    if (t.lo < -1.0 || t.hi > 1.0) add(Interval(0.0));
    double pieces[2][2] = {{-1.0, 0.0}, {0.0, 1.0}};
    for (auto& pc : pieces) {
        double l = std::max(t.lo, pc[0]), h = std::min(t.hi, pc[1]);
        if (l > h) continue;
        if (order == 0) {
            add(hull(phi_point(Interval(l)), phi_point(Interval(h))));
        } else {
            Interval r = hull(dphi_point(Interval(l)), dphi_point(Interval(h)));
            double ext = pc[0] < 0 ? -0.5 : 0.5;
            if (l <= ext && ext <= h) r = hull(r, dphi_point(Interval(ext)));
            add(r);
        }
    }
    return out;
}

// Primitives of phi and 1 - phi on [0,1]: p(t) = t - t^3 + t^4/2,
// q(t) = t^3 - t^4/2; both increasing with p(1) = q(1) = 1/2.
inline double p(double t) { return t * (1.0 + t * t * (-1.0 + 0.5 * t)); }
inline double q(double t) { return t * t * t * (1.0 - 0.5 * t); }
inline Interval p_point(const Interval& t) {
    return t * (Interval(1.0) + sqr(t) * (Interval(-1.0) + Interval(0.5) * t));
}
inline Interval q_point(const Interval& t) { return pow_int(t, 3) * (Interval(1.0) - Interval(0.5) * t); }

}  // namespace bump

struct PartitionScheme {
    int m = 0;

    explicit PartitionScheme(int m_) : m(m_) {
        if (m < 3) throw DomainError("partition needs m >= 3");
    }

    Interval eta() const { return Interval(1.0) / Interval(static_cast<double>(m)); }
    double eta_mid() const { return 1.0 / m; }
    Interval node(int i) const { return Interval(static_cast<double>(i)) / Interval(static_cast<double>(m)); }
    double node_mid(int i) const { return i == m ? 1.0 : static_cast<double>(i) / m; }

    // w_i = integral of phi_i: eta inside, eta/2 at the two ends.
    Interval weight(int i) const { return (i == 0 || i == m) ? eta() * Interval(0.5) : eta(); }

    // I_i = int_0^1 int_0^x phi_i.
    Interval primitive_weight(int i) const {
        Interval e = eta();
        if (i == 0) return e * Interval(0.5) - Interval(3.0) * sqr(e) / Interval(20.0);
        if (i == m) return Interval(3.0) * sqr(e) / Interval(20.0);
        return e * (Interval(1.0) - node(i));
    }

    // Sum of |w_i - w_mid_i|: w_i are doubles exactly when m is a power of two.
    std::vector<double> weights_mid() const {
        std::vector<double> w(m + 1);
        for (int i = 0; i <= m; ++i) w[i] = weight(i).mid();
        return w;
    }

    // Cells [a_k, a_{k+1}] that can meet X, as [kmin, kmax].
    std::pair<int, int> cells(const Interval& X) const {
        double lo = std::floor(rnd::mul_down(std::max(X.lo, 0.0), m));
        double hi = std::floor(rnd::mul_up(std::min(X.hi, 1.0), m));
        int kl = std::clamp(static_cast<int>(lo), 0, m - 1);
        int kh = std::clamp(static_cast<int>(hi), 0, m - 1);
        return {kl, kh};
    }

    // Local coordinate t = m x - k restricted to [0,1] on cell k, or false
    // when X misses the cell.
    bool local(const Interval& X, int k, Interval& t) const {
        Interval s = X * Interval(static_cast<double>(m)) - Interval(static_cast<double>(k));
        double l = std::max(s.lo, 0.0), h = std::min(s.hi, 1.0);
        if (l > h) return false;
        t = Interval(l, h);
        return true;
    }
};

inline Interval clip_unit(const Interval& X) {
    return {std::clamp(X.lo, 0.0, 1.0), std::clamp(X.hi, 0.0, 1.0)};
}

// phi_i(x) = phi(m x - i) on [0,1].
inline Interval bump_eval(const PartitionScheme& s, int i, const Interval& x, int order) {
    Interval X = clip_unit(x);
    Interval t = X * Interval(static_cast<double>(s.m)) - Interval(static_cast<double>(i));
    Interval r = bump::phi_range(t, order);
    return order == 0 ? r : r * Interval(static_cast<double>(s.m));
}

// kappa = 2 sum_j phi(2 m x - (2j+1)): on [2j, 2j+2] in s = 2 m x it is
// 2 phi(s - (2j+1)).
inline Interval kappa_eval(const PartitionScheme& sc, const Interval& x, int order) {
    Interval X = clip_unit(x);
    const double m2 = 2.0 * sc.m;
    Interval s = X * Interval(m2);
    int jl = static_cast<int>(std::floor(s.lo / 2.0));
    int jh = static_cast<int>(std::floor(s.hi / 2.0));
    jl = std::clamp(jl, 0, sc.m - 1);
    jh = std::clamp(jh, 0, sc.m - 1);
    double scale = order == 0 ? 2.0 : 2.0 * m2;
    if (jh - jl > 2) return order == 0 ? Interval(0.0, 2.0) : Interval(-1.5 * scale, 1.5 * scale);
    Interval out;
    bool have = false;
    for (int j = jl; j <= jh; ++j) {
        Interval t = s - Interval(2.0 * j + 1.0);
        double l = std::max(t.lo, -1.0), h = std::min(t.hi, 1.0);
        if (l > h) continue;
        Interval r = bump::phi_range(Interval(l, h), order) * Interval(scale);
        out = have ? hull(out, r) : r;
        have = true;
    }
    return have ? out : Interval(0.0);
}

// g = sum v_i phi_i + c kappa. rad bounds the error of every coefficient
// (v_i and c), so the function error is at most 3 rad and the derivative
// error at most 9 m rad.
struct NodalFunction {
    std::vector<double> v;
    double c = 0.0;
    double rad = 0.0;

    int m() const { return static_cast<int>(v.size()) - 1; }
};

struct C1Primitive;

struct NormBounds {
    double sup = 0.0;
    double c1 = 0.0;  // sup + sup of the derivative
    double d1 = 0.0;  // sup of the derivative
};

inline Interval eval_nodal(const NodalFunction& g, const Interval& x, int order) {
    PartitionScheme sc(g.m());
    Interval X = clip_unit(x);
    auto [kl, kh] = sc.cells(X);
    Interval out;
    bool have = false;
    const double m = sc.m;
    for (int k = kl; k <= kh; ++k) {
        Interval t;
        if (!sc.local(X, k, t)) continue;
        Interval r;
        if (order == 0) {
            // v_k phi(t) + v_{k+1} (1 - phi(t)) = v_{k+1} + (v_k - v_{k+1}) phi(t)
            Interval ph = bump::phi_range(t, 0);
            r = Interval(g.v[k + 1]) + (Interval(g.v[k]) - Interval(g.v[k + 1])) * ph;
        } else {
            Interval dph = bump::phi_range(t, 1) * Interval(m);
            r = (Interval(g.v[k]) - Interval(g.v[k + 1])) * dph;
        }
        if (g.c != 0.0) {
            double pl = std::max(X.lo, sc.node(k).lo), ph = std::min(X.hi, sc.node(k + 1).hi);
            Interval piece = pl <= ph ? Interval(pl, ph) : X;
            r += Interval(g.c) * kappa_eval(sc, piece, order);
        }
        out = have ? hull(out, r) : r;
        have = true;
    }
    double e = order == 0 ? rnd::mul_up(3.0, g.rad) : rnd::mul_up(9.0 * m, g.rad);
    if (e > 0) out = out + Interval(-e, e);
    return out;
}

inline Interval integral(const NodalFunction& g) {
    PartitionScheme sc(g.m());
    Interval s(0.0);
    for (int i = 0; i <= sc.m; ++i) s += Interval(g.v[i]) * sc.weight(i);
    s += Interval(g.c);
    // coefficient errors: sum w_i + 1 = 2
    double e = rnd::mul_up(2.0, g.rad);
    return s + Interval(-e, e);
}

inline NormBounds norm_bounds(const NodalFunction& g) {
    const int m = g.m();
    double sup = 0.0, der = 0.0;
    for (int k = 0; k < m; ++k) {
        sup = std::max(sup, std::max(std::fabs(g.v[k]), std::fabs(g.v[k + 1])));
        der = std::max(der, std::fabs(rnd::sub_up(std::max(g.v[k], g.v[k + 1]), std::min(g.v[k], g.v[k + 1]))));
    }
    double ac = std::fabs(g.c);
    sup = rnd::add_up(rnd::add_up(sup, rnd::mul_up(2.0, ac)), rnd::mul_up(3.0, g.rad));
    der = rnd::mul_up(der, 1.5 * m);
    der = rnd::add_up(der, rnd::mul_up(ac, 6.0 * m));
    der = rnd::add_up(der, rnd::mul_up(g.rad, 9.0 * m));
    return {sup, rnd::add_up(sup, der), der};
}

// Pi_eta f = sum f(a_i) phi_i + (int f - sum f(a_i) w_i) kappa, from node
// value enclosures and an integral enclosure.
inline NodalFunction project_c0_values(const PartitionScheme& sc, const std::vector<Interval>& fa, const Interval& mass) {
    NodalFunction g;
    g.v.resize(sc.m + 1);
    double rad = 0.0;
    Interval s(0.0);
    for (int i = 0; i <= sc.m; ++i) {
        g.v[i] = fa[i].mid();
        rad = std::max(rad, fa[i].rad());
        s += Interval(g.v[i]) * sc.weight(i);
    }
    // the v rounding is absorbed into rad; the mass correction uses the
    // rounded v so c is consistent with them up to its own enclosure
    Interval c = mass - s;
    g.c = c.mid();
    double crad = rnd::add_up(c.rad(), rnd::mul_up(rad, 1.0));
    g.rad = std::max(rad, crad);
    return g;
}

template <class F>
NodalFunction project_c0(const PartitionScheme& sc, F&& f, const Interval& mass) {
    std::vector<Interval> fa(sc.m + 1);
    for (int i = 0; i <= sc.m; ++i) fa[i] = f(sc.node(i));
    return project_c0_values(sc, fa, mass);
}

// f(x) = c0 + int_0^x sum d_i phi_i. Node values H_k are accumulated with
// compensated summation; H_err bounds their deviation from exact. rad bounds
// the error of every coefficient (c0 and d_i).
struct C1Primitive {
    double c0 = 0.0;
    std::vector<double> d;
    double rad = 0.0;
    std::vector<double> H;
    double H_err = 0.0;

    C1Primitive() = default;
    C1Primitive(double c0_, std::vector<double> d_, double rad_) : c0(c0_), d(std::move(d_)), rad(rad_) { rebuild(); }

    int m() const { return static_cast<int>(d.size()) - 1; }

    void rebuild() {
        const int m = this->m();
        const double eta = 1.0 / m;
        std::vector<double> xs(m + 1);
        xs[0] = c0;
        for (int k = 1; k <= m; ++k) xs[k] = 0.5 * eta * (d[k - 1] + d[k]);
        CumSum cs = kahan_cumsum(xs);
        H = std::move(cs.sums);
        // term roundings (sum, and eta when m is not a power of two)
        double terms = 0.0;
        for (int k = 1; k <= m; ++k) terms = rnd::add_up(terms, std::fabs(xs[k]));
        H_err = rnd::add_up(cs.err, rnd::mul_up(terms, 3.0 * kUnitRoundoff));
    }

    NodalFunction derivative() const { return {d, 0.0, rad}; }
};

inline Interval eval_nodal(const C1Primitive& f, const Interval& x, int order) {
    const int m = f.m();
    PartitionScheme sc(m);
    Interval X = clip_unit(x);
    auto [kl, kh] = sc.cells(X);
    Interval out;
    bool have = false;
    const Interval eta = sc.eta();
    for (int k = kl; k <= kh; ++k) {
        Interval t;
        if (!sc.local(X, k, t)) continue;
        Interval r;
        if (order == 0) {
            Interval Hk = Interval(f.H[k]) + Interval(-f.H_err, f.H_err);
            Interval pr = hull(bump::p_point(Interval(t.lo)), bump::p_point(Interval(t.hi)));
            Interval qr = hull(bump::q_point(Interval(t.lo)), bump::q_point(Interval(t.hi)));
            r = Hk + eta * (Interval(f.d[k]) * pr + Interval(f.d[k + 1]) * qr);
        } else if (order == 1) {
            Interval ph = bump::phi_range(t, 0);
            r = Interval(f.d[k + 1]) + (Interval(f.d[k]) - Interval(f.d[k + 1])) * ph;
        } else {
            Interval dph = bump::phi_range(t, 1);
            r = Interval(static_cast<double>(m)) * (Interval(f.d[k]) - Interval(f.d[k + 1])) * dph;
        }
        out = have ? hull(out, r) : r;
        have = true;
    }
    double e = order == 0 ? rnd::mul_up(2.0, f.rad) : order == 1 ? f.rad : rnd::mul_up(3.0 * m, f.rad);
    if (e > 0) out = out + Interval(-e, e);
    return out;
}

inline Interval integral(const C1Primitive& f) {
    PartitionScheme sc(f.m());
    Interval s(f.c0);
    for (int i = 0; i <= sc.m; ++i) s += Interval(f.d[i]) * sc.primitive_weight(i);
    double e = rnd::mul_up(1.5, f.rad);  // |dc0| + sum I_i |dd_i| <= rad (1 + 1/2)
    return s + Interval(-e, e);
}

struct C1NormBounds {
    double sup = 0.0;
    double sup_d1 = 0.0;
    double sup_d2 = 0.0;
    double c1() const { return rnd::add_up(sup, sup_d1); }
};

inline C1NormBounds norm_bounds_c1(const C1Primitive& f) {
    const int m = f.m();
    const double eta = 1.0 / m;
    double sup = 0.0, d1 = 0.0, dd = 0.0;
    for (int k = 0; k < m; ++k) {
        double a = std::fabs(f.d[k]), b = std::fabs(f.d[k + 1]);
        double s = std::max(std::fabs(f.H[k]), std::fabs(f.H[k + 1]));
        if ((f.d[k] < 0) != (f.d[k + 1] < 0)) s = rnd::add_up(s, rnd::mul_up(rnd::mul_up(eta, 1.0 + kUnitRoundoff), std::max(a, b)));
        sup = std::max(sup, s);
        d1 = std::max(d1, std::max(a, b));
        dd = std::max(dd, rnd::sub_up(std::max(f.d[k], f.d[k + 1]), std::min(f.d[k], f.d[k + 1])));
    }
    C1NormBounds nb;
    nb.sup = rnd::add_up(rnd::add_up(sup, f.H_err), rnd::mul_up(2.0, f.rad));
    nb.sup_d1 = rnd::add_up(d1, f.rad);
    nb.sup_d2 = rnd::mul_up(rnd::add_up(dd, rnd::mul_up(2.0, f.rad)), 1.5 * m);
    return nb;
}

inline NormBounds norm_bounds(const C1Primitive& f) {
    C1NormBounds nb = norm_bounds_c1(f);
    return {nb.sup, nb.c1(), nb.sup_d1};
}

// Pi~ f: d_i = f'(a_i), c0 = int f - sum d_i I_i.
inline C1Primitive project_c1_values(const PartitionScheme& sc, const std::vector<Interval>& dfa, const Interval& mass) {
    std::vector<double> d(sc.m + 1);
    double rad = 0.0;
    Interval s(0.0);
    for (int i = 0; i <= sc.m; ++i) {
        d[i] = dfa[i].mid();
        rad = std::max(rad, dfa[i].rad());
        s += Interval(d[i]) * sc.primitive_weight(i);
    }
    Interval c0 = mass - s;
    rad = std::max(rad, rnd::add_up(c0.rad(), rnd::mul_up(0.5, rad)));
    return C1Primitive(c0.mid(), std::move(d), rad);
}

template <class DF>
C1Primitive project_c1(const PartitionScheme& sc, DF&& fprime, const Interval& mass) {
    std::vector<Interval> dfa(sc.m + 1);
    for (int i = 0; i <= sc.m; ++i) dfa[i] = fprime(sc.node(i));
    return project_c1_values(sc, dfa, mass);
}

// Coefficients with a uniform error radius.
struct BasisCoefficients {
    std::vector<double> coef;
    double rad = 0.0;
};

// The compactly supported basis f_i = a_i e_i - b_i e_{i+1} with
// a_0 = a_m = 1, a_i = 1/2 otherwise, b_i = 1/2 for i <= m-2, b_{m-1} = 1,
// b_m = 0, where e_i are the primitives of phi_i (shifted to vanish at 0).
// to_B maps f-coefficients to e-coefficients; to_Bprime inverts it with
// compensated running sums.
inline BasisCoefficients basis_to_B(const BasisCoefficients& beta) {
    const int m = static_cast<int>(beta.coef.size()) - 1;
    if (m < 3) throw DomainError("basis change needs m >= 3");
    auto a = [m](int i) { return (i == 0 || i == m) ? 1.0 : 0.5; };
    auto b = [m](int i) { return i <= m - 2 ? 0.5 : (i == m - 1 ? 1.0 : 0.0); };
    BasisCoefficients out;
    out.coef.resize(m + 1);
    double err = 0.0;
    for (int i = 0; i <= m; ++i) {
        double x = a(i) * beta.coef[i];
        double y = i > 0 ? b(i - 1) * beta.coef[i - 1] : 0.0;
        out.coef[i] = x - y;
        err = std::max(err, rnd::mul_up(kUnitRoundoff, std::fabs(x) + std::fabs(y)));
    }
    // coefficient radius: |a_i| + |b_{i-1}| <= 2
    out.rad = rnd::add_up(rnd::mul_up(2.0, beta.rad), err);
    return out;
}

inline BasisCoefficients basis_to_Bprime(const BasisCoefficients& d) {
    const int m = static_cast<int>(d.coef.size()) - 1;
    if (m < 3) throw DomainError("basis change needs m >= 3");
    std::vector<double> xs(m + 1);
    xs[0] = d.coef[0];
    for (int i = 1; i < m; ++i) xs[i] = 2.0 * d.coef[i];
    xs[m] = d.coef[m];
    CumSum cs = kahan_cumsum(xs);
    BasisCoefficients out;
    out.coef = std::move(cs.sums);
    // an input perturbation of size r moves each prefix by at most 2 m r
    out.rad = rnd::add_up(cs.err, rnd::mul_up(2.0 * m, d.rad));
    return out;
}

}  // namespace lresp
