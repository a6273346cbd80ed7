#pragma once

// Linear response h^ = (Id - L)^{-1} L^h as the truncated sum
// sum_{i < l} L_delta^i f_eta with a certified sup-norm budget
//   tail      || sum_{i >= l} L^i L^h ||
//   distance  || sum_{i < l} (L^i - L_delta^i) f_eta ||
//   source    || sum_{i < l} L^i (f_eta - L^h) ||
// plus the rounding of the computed chain.
//
// L_delta is the midpoint matrix of the nodal scheme acting on the full
// coordinates (v, c). Its distance to L on the nodal space W only involves
// the projection error of L g (Pi is the identity on W) and the entry radii.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lresp/certificates.hpp"
#include "lresp/ddouble.hpp"
#include "lresp/density.hpp"
#include "lresp/expr.hpp"
#include "lresp/map_model.hpp"
#include "lresp/operator.hpp"
#include "lresp/partition.hpp"

namespace lresp {

struct PerturbationSpec {
    enum class Kind { stochastic, deterministic };
    Kind kind = Kind::stochastic;
    // stochastic: the response scales linearly in gamma; with no kernel given
    // gamma stays a symbolic factor and every number is reported per unit gamma
    double gamma = 1.0;
    bool gamma_symbolic = true;
    std::string kernel;
    // deterministic: direction S of T_eps = T_0 + eps S + o(eps)
    Expr S, S1, S2;
    std::string S_source;

    static PerturbationSpec stochastic(double gamma, bool symbolic, std::string kernel = "") {
        PerturbationSpec p;
        p.kind = Kind::stochastic;
        p.gamma = gamma;
        p.gamma_symbolic = symbolic;
        p.kernel = std::move(kernel);
        return p;
    }
    static PerturbationSpec deterministic(const Expr& S, std::string source) {
        PerturbationSpec p;
        p.kind = Kind::deterministic;
        p.S = S;
        p.S1 = S.diff(Var::x);
        p.S2 = p.S1.diff(Var::x);
        p.S_source = std::move(source);
        return p;
    }
};

// First absolute moment of a named kernel on [-1/2, 1/2].
inline double kernel_gamma(const std::string& name) {
    if (name == "uniform") return 0.25;               // j = 1
    if (name == "triangle") return 1.0 / 6.0;         // j = 2 (1 - 2|x|)
    throw DomainError("unknown kernel: " + name);
}

struct LhatResult {
    NodalFunction f_eta;
    double approx_err = 0.0;  // >= ||f_eta - L^h||_inf
    double G1 = 0.0;          // >= ||L^h||_C1
    double G0 = 0.0;          // >= ||L^h||_inf
};

// Stochastic perturbation: L^h = gamma h'. f_eta = gamma (h_eta' - (w.d) kappa)
// has zero average; the correction costs 2 |w.d|.
inline LhatResult lhat_stochastic(const DensityResult& dens, const PerturbationSpec& pert, const LYConstants& ly) {
    const C1Primitive& h = dens.h;
    const int m = h.m();
    PartitionScheme sc(m);
    const Interval g(pert.gamma);
    LhatResult r;
    r.f_eta.v.resize(m + 1);
    Interval wd(0.0);
    double vrad = 0.0;
    for (int i = 0; i <= m; ++i) {
        Interval vi = g * Interval(h.d[i]);
        r.f_eta.v[i] = vi.mid();
        vrad = std::max(vrad, vi.rad());
        wd += Interval(h.d[i]) * sc.weight(i);
    }
    Interval c = -(g * wd);
    r.f_eta.c = c.mid();
    r.f_eta.rad = std::max(vrad, c.rad());
    C1NormBounds nb = norm_bounds_c1(h);
    const Interval err(dens.err_c1);
    r.approx_err = (g * (err + Interval(2.0) * Interval(wd.mag())) + Interval(3.0) * Interval(r.f_eta.rad)).hi;
    // ||h||_C2 <= D_iter ||h||_C1 and ||h||_C1 <= min(C_iter M, ||h_eta||_C1 + err)
    double hc1 = std::min((Interval(ly.C_iter) * Interval(ly.M)).hi, (Interval(nb.c1()) + err).hi);
    r.G1 = (g * Interval(ly.D_iter) * Interval(hc1)).hi;
    r.G0 = (g * (Interval(nb.sup_d1) + err)).hi;
    return r;
}

// First-order jets (value, derivative) with interval entries.
struct Jet1 {
    Interval v, d;
};
inline Jet1 operator+(const Jet1& a, const Jet1& b) { return {a.v + b.v, a.d + b.d}; }
inline Jet1 operator-(const Jet1& a, const Jet1& b) { return {a.v - b.v, a.d - b.d}; }
inline Jet1 operator-(const Jet1& a) { return {-a.v, -a.d}; }
inline Jet1 operator*(const Jet1& a, const Jet1& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Jet1 operator/(const Jet1& a, const Jet1& b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / sqr(b.v)}; }

// The unperturbed density and its first two derivatives over an interval.
struct DensityModel {
    std::function<Interval(const Interval&, int)> eval;
    double err_c1 = 0.0;  // >= ||h - model||_C1
    double c2 = 0.0;      // >= ||h''||_inf (used when err_c1 > 0)
    std::string source;

    static DensityModel constant_one() {
        DensityModel d;
        d.eval = [](const Interval&, int order) { return Interval(order == 0 ? 1.0 : 0.0); };
        d.source = "exact constant";
        return d;
    }
    static DensityModel from(const DensityResult& dens, const LYConstants& ly) {
        DensityModel d;
        const C1Primitive* h = &dens.h;
        d.eval = [h](const Interval& x, int order) { return eval_nodal(*h, x, order); };
        d.err_c1 = dens.err_c1;
        d.c2 = (Interval(ly.D_iter) * Interval(ly.C_iter) * Interval(ly.M)).hi;
        d.source = "computed";
        return d;
    }
};

namespace resp_detail {

// (L^h, (L^h)') at x from the preimages Y of x, with
// L^h = L g, g = -h S'/T' - h' S/T' + h S T''/T'^2, (Lg)' = sum (g/T')'/T'.
// widen: enlarge h, h' by err and replace h'' by [-c2, c2] hull.
inline Jet1 lhat_jet(const MapModel& map, const PerturbationSpec& p, const DensityModel& h, const std::vector<Interval>& ys,
                     bool widen) {
    Jet1 out{Interval(0.0), Interval(0.0)};
    for (const Interval& Y : ys) {
        Interval t1 = map.T1(Y), t2 = map.T2(Y), t3 = map.T3(Y);
        Interval s0 = p.S.eval(Y), s1 = p.S1.eval(Y), s2 = p.S2.eval(Y);
        Interval h0 = h.eval(Y, 0), h1 = h.eval(Y, 1), h2 = h.eval(Y, 2);
        if (widen && h.err_c1 > 0) {
            Interval e(-h.err_c1, h.err_c1);
            h0 += e;
            h1 += e;
            h2 = hull(h2, Interval(-h.c2, h.c2));
        }
        Jet1 T1{t1, t2}, T2{t2, t3}, S{s0, s1}, S1{s1, s2}, H{h0, h1}, H1{h1, h2};
        Jet1 g = -(H * S1 / T1) - H1 * S / T1 + H * S * T2 / (T1 * T1);
        Jet1 u = g / T1;
        out.v += u.v;
        out.d += u.d / t1;
    }
    return out;
}

}  // namespace resp_detail

struct LhatSweep {
    double sup = 0.0;       // >= sup |L^h|
    double sup_d = 0.0;     // >= sup |(L^h)'|
};

inline LhatSweep lhat_sweep(const MapModel& map, const PerturbationSpec& p, const DensityModel& h, int cells, bool widen) {
    std::vector<double> a(cells), b(cells);
    parallel_chunks(static_cast<std::size_t>(cells), 256, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t c = lo; c < hi; ++c) {
            Interval X = clip_unit(Interval(static_cast<double>(c), static_cast<double>(c + 1)) /
                                   Interval(static_cast<double>(cells)));
            Jet1 j = resp_detail::lhat_jet(map, p, h, preimages(map, X), widen);
            a[c] = j.v.mag();
            b[c] = j.d.mag();
        }
    });
    LhatSweep s;
    for (int c = 0; c < cells; ++c) {
        s.sup = std::max(s.sup, a[c]);
        s.sup_d = std::max(s.sup_d, b[c]);
    }
    return s;
}

// sup of M (|S'/T'| + |S T''/T'^2| + |S/T'|): ||L^ f||_inf <= that * ||f||_C1.
inline double lhat_operator_norm(const MapModel& map, const PerturbationSpec& p, const LYConstants& ly, int cells) {
    double mx = 0.0;
    for (int c = 0; c < cells; ++c) {
        Interval Y = clip_unit(Interval(static_cast<double>(c), static_cast<double>(c + 1)) / Interval(static_cast<double>(cells)));
        Interval t1 = map.T1(Y), t2 = map.T2(Y);
        Interval s0 = p.S.eval(Y), s1 = p.S1.eval(Y);
        Interval v = abs(s1 / t1) + abs(s0 * t2 / sqr(t1)) + abs(s0 / t1);
        mx = std::max(mx, v.hi);
    }
    return (Interval(ly.M) * Interval(mx)).hi;
}

// Deterministic perturbation: f_eta = Pi_eta L^h_model with node values by
// transfer at the nodes; ||f_eta - L^h|| <= 3 eta sup|(L^h_model)'| + 3 rad
// + ||L^(h - h_model)||.
inline LhatResult lhat_deterministic(const MapModel& map, const PerturbationSpec& p, const DensityModel& h,
                                     const LYConstants& ly, const PartitionScheme& sc, int sweep_cells = 0) {
    if (p.kind != PerturbationSpec::Kind::deterministic) throw DomainError("deterministic perturbation expected");
    const int m = sc.m;
    NodePreimages pre = node_preimages(map, m);
    std::vector<Interval> fa(m + 1);
    parallel_chunks(static_cast<std::size_t>(m + 1), 512, [&](std::size_t lo, std::size_t hi) {
        std::vector<Interval> ys(pre.d);
        for (std::size_t i = lo; i < hi; ++i) {
            for (int k = 0; k < pre.d; ++k) ys[k] = pre.at(static_cast<int>(i), k);
            fa[i] = resp_detail::lhat_jet(map, p, h, ys, false).v;
        }
    });
    LhatResult r;
    r.f_eta = project_c0_values(sc, fa, Interval(0.0));
    const int cells = sweep_cells > 0 ? sweep_cells : m;
    LhatSweep model = lhat_sweep(map, p, h, cells, false);
    Interval err = Interval(3.0) * sc.eta() * Interval(model.sup_d) + Interval(3.0) * Interval(r.f_eta.rad);
    if (h.err_c1 > 0) {
        err += Interval(lhat_operator_norm(map, p, ly, cells)) * Interval(h.err_c1);
        LhatSweep wide = lhat_sweep(map, p, h, cells, true);
        r.G0 = wide.sup;
        r.G1 = (Interval(wide.sup) + Interval(wide.sup_d)).hi;
    } else {
        r.G0 = model.sup;
        r.G1 = (Interval(model.sup) + Interval(model.sup_d)).hi;
    }
    r.approx_err = err.hi;
    return r;
}

// ---------------------------------------------------------------------------
// The chain x_{k+1} = L_delta x_k in double-double on (v, c).

struct ChainStep {
    double sup = 0.0;    // >= ||L_delta^k f_eta||_inf (function)
    double deriv = 0.0;  // >= ||(L_delta^k f_eta)'||_inf
    double coef = 0.0;   // >= max(|v|, |c|)
    double err = 0.0;    // >= coefficient error of the computed x_k
};

struct ChainResult {
    std::vector<ChainStep> steps;  // k = 0..len-1
    std::vector<double> sum_err;   // coefficient error of sum_{k<l} x_k, l = 1..len (index l-1)
    NodalFunction sum;             // sum over all steps run
};

namespace resp_detail {

struct ChainConstants {
    double alpha = 0.0;   // sup-norm bound of |L_delta| on (v, c)
    double nu = 0.0;      // weighted column norm of |L_delta|, weights (w, 1)
    double gdd_row = 0.0; // DD relative constant for one row
    double gdd_mass = 0.0;
};

inline ChainConstants chain_constants(const DiscretizedOperator& op) {
    const int m = op.m;
    ChainConstants k;
    double krow_abs = 0.0;
    for (double v : op.krow_mid) krow_abs = rnd::add_up(krow_abs, std::fabs(v));
    k.alpha = std::max(op.alpha(), krow_abs);
    std::vector<double> col(m + 2, 0.0);
    int maxn = 0;
    for (int i = 0; i <= m; ++i) {
        maxn = std::max<int>(maxn, static_cast<int>(op.ptr[i + 1] - op.ptr[i]) + 1);
        for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p)
            col[op.col[p]] = rnd::add_up(col[op.col[p]], rnd::mul_up(op.w[i], std::fabs(op.mid[p])));
        col[m + 1] = rnd::add_up(col[m + 1], rnd::mul_up(op.w[i], std::fabs(op.kcol_mid[i])));
    }
    double nu = 0.0;
    for (int j = 0; j <= m + 1; ++j) {
        double cj = rnd::add_up(col[j], std::fabs(op.krow_mid[j]));
        double wj = j <= m ? op.w[j] : 1.0;
        nu = std::max(nu, rnd::div_up(cj, rnd::next_down(wj)));
    }
    k.nu = nu;
    const double u2 = kUnitRoundoff * kUnitRoundoff;
    k.gdd_row = rnd::mul_up(4.0 * (maxn + 1), u2);
    k.gdd_mass = rnd::mul_up(4.0 * (m + 3), u2);
    return k;
}

inline void dd_step(const DiscretizedOperator& op, const std::vector<DD>& x, std::vector<DD>& y) {
    const int m = op.m;
    y.assign(m + 2, DD());
    parallel_chunks(static_cast<std::size_t>(m + 1), 4096, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            DD s;
            for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p) s += x[op.col[p]] * op.mid[p];
            s += x[m + 1] * op.kcol_mid[i];
            y[i] = s;
        }
    });
    DD c;
    for (int j = 0; j <= m + 1; ++j) c += x[j] * op.krow_mid[j];
    y[m + 1] = c;
}

inline double dd_sup(const std::vector<DD>& x, int upto) {
    double mx = 0.0;
    for (int i = 0; i < upto; ++i) mx = std::max(mx, std::fabs(x[i].hi) + std::fabs(x[i].lo));
    return rnd::mul_up(mx, 1.0 + 2 * kUnitRoundoff);
}

inline double dd_l1w(const std::vector<DD>& x, const std::vector<double>& w) {
    const int m = static_cast<int>(w.size()) - 1;
    double s = 0.0;
    for (int i = 0; i <= m; ++i) s = rnd::add_up(s, rnd::mul_up(w[i], std::fabs(x[i].hi) + std::fabs(x[i].lo)));
    s = rnd::add_up(s, std::fabs(x[m + 1].hi) + std::fabs(x[m + 1].lo));
    return rnd::mul_up(s, 1.0 + 2 * kUnitRoundoff);
}

// Rounded copy of a DD vector as a NodalFunction with coefficient radius rad.
inline NodalFunction to_nodal(const std::vector<DD>& x, double rad) {
    const int m = static_cast<int>(x.size()) - 2;
    NodalFunction g;
    g.v.resize(m + 1);
    double r = 0.0;
    for (int i = 0; i <= m; ++i) {
        g.v[i] = x[i].hi + x[i].lo;
        r = std::max(r, std::fabs((x[i].hi - g.v[i]) + x[i].lo));
    }
    g.c = x[m + 1].hi + x[m + 1].lo;
    r = std::max(r, std::fabs((x[m + 1].hi - g.c) + x[m + 1].lo));
    g.rad = rnd::add_up(rad, rnd::mul_up(r, 1.0 + 4 * kUnitRoundoff));
    return g;
}

}  // namespace resp_detail

// Runs len steps from the midpoint coefficients of f_eta and accumulates the
// sum. The radius of f_eta is part of the caller's source error.
inline ChainResult run_chain(const DiscretizedOperator& op, const NodalFunction& f_eta, int len) {
    if (op.kind != SchemeKind::c0) throw DomainError("response chain needs the nodal scheme");
    const int m = op.m;
    if (f_eta.m() != m) throw DomainError("f_eta lives on a different partition");
    const auto K = resp_detail::chain_constants(op);
    const double two_m = 2.0 * m;
    ChainResult res;
    std::vector<DD> x(m + 2), y, S(m + 2);
    for (int i = 0; i <= m; ++i) x[i] = DD(f_eta.v[i]);
    x[m + 1] = DD(f_eta.c);
    double e_inf = 0.0, e_l1 = 0.0;
    double acc_err = 0.0, err_sum = 0.0;
    const double u2 = kUnitRoundoff * kUnitRoundoff;
    for (int k = 0; k < len; ++k) {
        ChainStep st;
        st.err = std::min(e_inf, rnd::mul_up(two_m, e_l1));
        NodalFunction g = resp_detail::to_nodal(x, st.err);
        NormBounds nb = norm_bounds(g);
        st.sup = nb.sup;
        st.deriv = nb.d1;
        st.coef = rnd::add_up(resp_detail::dd_sup(x, m + 2), st.err);
        res.steps.push_back(st);
        // sum
        for (int i = 0; i <= m + 1; ++i) S[i] += x[i];
        acc_err = rnd::add_up(acc_err, rnd::mul_up(3.0 * u2 * (1 + 1e-10), resp_detail::dd_sup(S, m + 2)));
        err_sum = rnd::add_up(err_sum, st.err);
        res.sum_err.push_back(rnd::add_up(err_sum, acc_err));
        if (k + 1 == len) break;
        // step
        const double xs = resp_detail::dd_sup(x, m + 2), xl = resp_detail::dd_l1w(x, op.w);
        resp_detail::dd_step(op, x, y);
        x.swap(y);
        const double gdd = std::max(K.gdd_row, K.gdd_mass);
        double loc_inf = rnd::mul_up(gdd, rnd::mul_up(K.alpha, xs));
        double loc_l1 = rnd::mul_up(gdd, rnd::mul_up(K.nu, xl));
        e_inf = rnd::add_up(rnd::mul_up(K.alpha, e_inf), loc_inf);
        e_l1 = rnd::add_up(rnd::mul_up(K.nu, e_l1), loc_l1);
    }
    res.sum = resp_detail::to_nodal(S, res.sum_err.back());
    return res;
}

struct ResponseCertificate {
    NodalFunction h_appr;
    double summand1 = 0.0;  // tail
    double summand2 = 0.0;  // distance of the powers
    double summand3 = 0.0;  // source approximation
    double chain = 0.0;     // rounding of the computed sum (function level)
    double total = 0.0;
    int l_star = 0;
    int m = 0;
    double gamma = 1.0;
    bool gamma_symbolic = false;
    std::vector<ChainStep> steps;
    double G1 = 0.0, G0 = 0.0, approx_err = 0.0;
};

struct BudgetTerms {
    double s1, s2, s3, chain, total;
};

inline BudgetTerms budget_at(const EquilibriumCertificate& eq, const DiscretizedOperator& op, const LYConstants& ly,
                             const LhatResult& lh, const ChainResult& ch, int l) {
    using cert_detail::I;
    const Interval Kd = I(3.0) * PartitionScheme(op.m).eta();
    double krow_rad = 0.0;
    for (double r : op.krow_rad) krow_rad = rnd::add_up(krow_rad, r);
    const Interval eps = I(op.row_rad_max()) + I(2.0) * I(krow_rad);
    Interval s2(0.0);
    for (int i = 0; i + 2 <= l; ++i) {
        const ChainStep& st = ch.steps[i];
        Interval Di = Kd * (I(ly.lambda) * I(ly.M) * I(st.deriv) + I(ly.B) * I(ly.M) * I(st.sup)) + eps * I(st.coef);
        s2 += I(static_cast<double>(l - 1 - i)) * Di;
    }
    BudgetTerms b;
    b.s1 = tail_value(eq, lh.G1, lh.G0, l);
    b.s2 = (I(ly.M) * s2).hi;
    b.s3 = (I(ly.M) * I(static_cast<double>(l)) * I(lh.approx_err)).hi;
    b.chain = (I(3.0) * I(ch.sum_err[l - 1])).hi;
    b.total = (I(b.s1) + I(b.s2) + I(b.s3) + I(b.chain)).hi;
    return b;
}

struct ResponseOptions {
    int l_max = 4000;
    int l_star = 0;  // 0: minimize the budget
};

// Chooses l* minimizing the budget, then forms the certified sum.
inline ResponseCertificate error_budget(const EquilibriumCertificate& eq, const DiscretizedOperator& op,
                                        const LYConstants& ly, const LhatResult& lh, const ResponseOptions& opt = {}) {
    int L = opt.l_star;
    if (L <= 0) {
        // run far enough that the tail is negligible next to the linear terms
        L = 1;
        while (L < opt.l_max) {
            double t = tail_value(eq, lh.G1, lh.G0, L);
            double lin = (Interval(ly.M) * Interval(static_cast<double>(L)) * Interval(lh.approx_err)).hi;
            if (t <= 1e-3 * std::max(lin, 1e-12)) break;
            L += std::max(1, eq.n1 / 2);
        }
        L = std::min(L + eq.n1, opt.l_max);
    }
    ChainResult ch = run_chain(op, lh.f_eta, L);
    int best = L;
    BudgetTerms bt = budget_at(eq, op, ly, lh, ch, L);
    if (opt.l_star <= 0) {
        for (int l = 1; l <= L; ++l) {
            BudgetTerms b = budget_at(eq, op, ly, lh, ch, l);
            if (b.total < bt.total) {
                bt = b;
                best = l;
            }
        }
    }
    ChainResult fin = best == L ? std::move(ch) : run_chain(op, lh.f_eta, best);
    ResponseCertificate rc;
    rc.h_appr = fin.sum;
    rc.summand1 = bt.s1;
    rc.summand2 = bt.s2;
    rc.summand3 = bt.s3;
    rc.chain = bt.chain;
    rc.total = bt.total;
    rc.l_star = best;
    rc.m = op.m;
    rc.steps = fin.steps;
    rc.G1 = lh.G1;
    rc.G0 = lh.G0;
    rc.approx_err = lh.approx_err;
    return rc;
}

}  // namespace lresp
