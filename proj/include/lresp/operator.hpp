#pragma once

// Sparse certified representations of Pi L Pi (nodal scheme) and of the
// primitive scheme Pi~ L Pi~.
//
// Nodal scheme: rows/columns 0..m are the node functions phi_i, index m+1 is
// kappa. Entries are enclosures A_ij = sum_y phi_j(y)/T'(y) over the
// preimages y of a_i; the kappa row follows from mass preservation.
//
// Primitive scheme: a function is stored as (d, c0) with d_i = f'(a_i); row i
// gives (Lf)'(a_i) as a linear form in d and in the node values H_k of f,
// which are recomputed from (d, c0) by compensated running sums. The new
// constant is fixed by mass preservation.
//
// The operator that the certificates speak about on zero-average functions
// is the midpoint matrix itself (see DiscretizedOperator::eps_fun).

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lresp/ddouble.hpp"
#include "lresp/errors.hpp"
#include "lresp/interval.hpp"
#include "lresp/map_model.hpp"
#include "lresp/parallel.hpp"
#include "lresp/partition.hpp"
#include "lresp/summation.hpp"

namespace lresp {

enum class SchemeKind { c0, c1 };

inline const char* kind_name(SchemeKind k) { return k == SchemeKind::c0 ? "c0" : "c1"; }

struct DiscretizedOperator {
    int m = 0;
    SchemeKind kind = SchemeKind::c0;
    std::uint64_t map_hash = 0;

    // CSR over rows 0..m. Nodal scheme: columns 0..m. Primitive scheme:
    // columns 0..m multiply d, columns m+1..2m+1 multiply H.
    std::vector<std::int64_t> ptr;
    std::vector<int> col;
    std::vector<double> mid;
    std::vector<double> rad;

    // nodal scheme only: the kappa column (rows 0..m) and the kappa row
    // (columns 0..m+1)
    std::vector<double> kcol_mid, kcol_rad;
    std::vector<double> krow_mid, krow_rad;

    // per-row sums over the sparse block (and kappa column for the nodal
    // scheme): |mid| and rad. For the primitive scheme the split into d and
    // H columns is kept.
    std::vector<double> abs_row, rad_row;
    std::vector<double> abs_row_H, rad_row_H;

    double entry_rad = 0.0;
    std::vector<double> w;  // nodal: w_i = int phi_i; primitive: I_i

    int rows() const { return m + 1; }
    std::size_t nnz() const { return mid.size(); }
    double row_rad_max() const {
        double r = 0.0;
        for (double x : rad_row) r = std::max(r, x);
        return r;
    }

    // Node-value perturbation of the midpoint operator relative to the
    // enclosed one, on zero-average nodal functions with node values bounded
    // by 1 (kept with a factor 2 of slack). As a C0 operator bound on all of
    // C0 (extension through g -> Pi g - (int g) 1, of norm <= 6) the
    // function-level distance is 3 * 6 * row_rad.
    double eps_node() const { return rnd::mul_up(2.0, row_rad_max()); }
    double eps_fun() const { return rnd::mul_up(18.0, row_rad_max()); }

    // Largest row sum of |A| over the node columns and the kappa column.
    double alpha() const {
        double a = 0.0;
        for (int i = 0; i <= m; ++i) a = std::max(a, abs_row[i]);
        return a;
    }
};

namespace detail {

struct Entry {
    int col;
    Interval val;
};

inline void add_entry(std::vector<Entry>& row, int c, const Interval& v) {
    for (auto& e : row) {
        if (e.col == c) {
            e.val += v;
            return;
        }
    }
    row.push_back({c, v});
}

inline bool is_zero(const Interval& v) { return v.lo == 0.0 && v.hi == 0.0; }

inline void finish_rows(DiscretizedOperator& op, std::vector<std::vector<Entry>>& rows) {
    const int m = op.m;
    op.ptr.assign(m + 2, 0);
    for (int i = 0; i <= m; ++i) {
        auto& r = rows[i];
        r.erase(std::remove_if(r.begin(), r.end(), [](const Entry& e) { return is_zero(e.val); }), r.end());
        std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
        op.ptr[i + 1] = op.ptr[i] + static_cast<std::int64_t>(r.size());
    }
    op.col.resize(op.ptr[m + 1]);
    op.mid.resize(op.ptr[m + 1]);
    op.rad.resize(op.ptr[m + 1]);
    op.abs_row.assign(m + 1, 0.0);
    op.rad_row.assign(m + 1, 0.0);
    op.abs_row_H.assign(m + 1, 0.0);
    op.rad_row_H.assign(m + 1, 0.0);
    parallel_chunks(static_cast<std::size_t>(m + 1), 4096, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            std::int64_t p = op.ptr[i];
            for (const auto& en : rows[i]) {
                op.col[p] = en.col;
                op.mid[p] = en.val.mid();
                op.rad[p] = en.val.rad();
                bool H = op.kind == SchemeKind::c1 && en.col > m;
                double& a = H ? op.abs_row_H[i] : op.abs_row[i];
                double& rr = H ? op.rad_row_H[i] : op.rad_row[i];
                a = rnd::add_up(a, std::fabs(op.mid[p]));
                rr = rnd::add_up(rr, op.rad[p]);
                ++p;
            }
        }
    });
    double er = 0.0;
    for (double r : op.rad) er = std::max(er, r);
    op.entry_rad = er;
}

}  // namespace detail

inline DiscretizedOperator assemble_c0(const MapModel& map, const PartitionScheme& sc, const NodePreimages& pre) {
    const int m = sc.m;
    const int d = map.degree();
    DiscretizedOperator op;
    op.m = m;
    op.kind = SchemeKind::c0;
    op.map_hash = map.hash();
    std::vector<std::vector<detail::Entry>> rows(m + 1);
    std::vector<Interval> kcol(m + 1);
    parallel_chunks(static_cast<std::size_t>(m + 1), 512, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            auto& row = rows[i];
            Interval kc(0.0);
            for (int k = 0; k < d; ++k) {
                const Interval& Y = pre.at(static_cast<int>(i), k);
                Interval inv = Interval(1.0) / map.T1(Y);
                Interval s = Y * Interval(static_cast<double>(m));
                int jl = std::max(0, static_cast<int>(std::ceil(s.lo)) - 1);
                int jh = std::min(m, static_cast<int>(std::floor(s.hi)) + 1);
                for (int j = jl; j <= jh; ++j) {
                    Interval ph = bump::phi_range(s - Interval(static_cast<double>(j)), 0);
                    if (detail::is_zero(ph)) continue;
                    detail::add_entry(row, j, ph * inv);
                }
                Interval kv = kappa_eval(sc, Y, 0);
                if (!detail::is_zero(kv)) kc += kv * inv;
            }
            kcol[i] = kc;
        }
    });
    detail::finish_rows(op, rows);
    op.kcol_mid.resize(m + 1);
    op.kcol_rad.resize(m + 1);
    for (int i = 0; i <= m; ++i) {
        op.kcol_mid[i] = kcol[i].mid();
        op.kcol_rad[i] = kcol[i].rad();
        op.abs_row[i] = rnd::add_up(op.abs_row[i], std::fabs(op.kcol_mid[i]));
        op.rad_row[i] = rnd::add_up(op.rad_row[i], op.kcol_rad[i]);
        op.entry_rad = std::max(op.entry_rad, op.kcol_rad[i]);
    }
    // kappa row: c(L phi_j) = w_j - sum_i A_ij w_i, c(L kappa) = 1 - sum_i A_i,kappa w_i
    std::vector<Interval> acc(m + 2, Interval(0.0));
    for (int i = 0; i <= m; ++i) {
        Interval wi = sc.weight(i);
        for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p)
            acc[op.col[p]] += Interval(op.mid[p] - op.rad[p], op.mid[p] + op.rad[p]) * wi;
        acc[m + 1] += Interval(rnd::sub_down(op.kcol_mid[i], op.kcol_rad[i]), rnd::add_up(op.kcol_mid[i], op.kcol_rad[i])) * wi;
    }
    op.krow_mid.resize(m + 2);
    op.krow_rad.resize(m + 2);
    for (int j = 0; j <= m + 1; ++j) {
        Interval c = (j <= m ? sc.weight(j) : Interval(1.0)) - acc[j];
        op.krow_mid[j] = c.mid();
        op.krow_rad[j] = c.rad();
        op.entry_rad = std::max(op.entry_rad, op.krow_rad[j]);
    }
    op.w = sc.weights_mid();
    return op;
}

inline DiscretizedOperator assemble_c1(const MapModel& map, const PartitionScheme& sc, const NodePreimages& pre) {
    const int m = sc.m;
    const int d = map.degree();
    const Interval eta = sc.eta();
    const Interval half(0.5);
    DiscretizedOperator op;
    op.m = m;
    op.kind = SchemeKind::c1;
    op.map_hash = map.hash();
    std::vector<std::vector<detail::Entry>> rows(m + 1);
    parallel_chunks(static_cast<std::size_t>(m + 1), 512, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            auto& row = rows[i];
            for (int k = 0; k < d; ++k) {
                const Interval& Y = pre.at(static_cast<int>(i), k);
                Interval t1 = map.T1(Y);
                Interval t2 = map.T2(Y);
                Interval a = Interval(1.0) / sqr(t1);
                Interval bb = t2 / pow_int(t1, 3);
                Interval s = Y * Interval(static_cast<double>(m));
                int kl = std::clamp(static_cast<int>(std::floor(s.lo)), 0, m - 1);
                int kh = std::clamp(static_cast<int>(std::floor(s.hi)), 0, m - 1);
                if (kh - kl > 1) throw NoConvergence("preimage enclosure spans more than two cells");
                auto local_t = [&](int cell) {
                    Interval t = s - Interval(static_cast<double>(cell));
                    return Interval(std::clamp(t.lo, 0.0, 1.0), std::clamp(t.hi, 0.0, 1.0));
                };
                if (kl == kh) {
                    Interval t = local_t(kl);
                    Interval ph = bump::phi_range(t, 0);
                    Interval p = hull(bump::p_point(Interval(t.lo)), bump::p_point(Interval(t.hi)));
                    Interval q = hull(bump::q_point(Interval(t.lo)), bump::q_point(Interval(t.hi)));
                    detail::add_entry(row, kl, ph * a - eta * p * bb);
                    detail::add_entry(row, kl + 1, (Interval(1.0) - ph) * a - eta * q * bb);
                    detail::add_entry(row, m + 1 + kl, -bb);
                } else {
                    // y straddles the node a_kh: express both cells through H_kh
                    const int kn = kh;
                    Interval tl = local_t(kn - 1), tr = local_t(kn);
                    Interval phl = bump::phi_range(tl, 0), phr = bump::phi_range(tr, 0);
                    Interval pl = hull(bump::p_point(Interval(tl.lo)), bump::p_point(Interval(tl.hi))) - half;
                    Interval ql = hull(bump::q_point(Interval(tl.lo)), bump::q_point(Interval(tl.hi))) - half;
                    Interval pr = hull(bump::p_point(Interval(tr.lo)), bump::p_point(Interval(tr.hi)));
                    Interval qr = hull(bump::q_point(Interval(tr.lo)), bump::q_point(Interval(tr.hi)));
                    Interval c_prev_l = phl * a - eta * pl * bb;
                    Interval c_mid_l = (Interval(1.0) - phl) * a - eta * ql * bb;
                    Interval c_mid_r = phr * a - eta * pr * bb;
                    Interval c_next_r = (Interval(1.0) - phr) * a - eta * qr * bb;
                    detail::add_entry(row, kn - 1, hull(c_prev_l, Interval(0.0)));
                    detail::add_entry(row, kn, hull(c_mid_l, c_mid_r));
                    detail::add_entry(row, kn + 1, hull(c_next_r, Interval(0.0)));
                    detail::add_entry(row, m + 1 + kn, -bb);
                }
            }
        }
    });
    detail::finish_rows(op, rows);
    op.w.resize(m + 1);
    for (int i = 0; i <= m; ++i) op.w[i] = sc.primitive_weight(i).mid();
    return op;
}

inline DiscretizedOperator assemble(const MapModel& map, const PartitionScheme& sc, SchemeKind kind) {
    NodePreimages pre = node_preimages(map, sc.m);
    return kind == SchemeKind::c0 ? assemble_c0(map, sc, pre) : assemble_c1(map, sc, pre);
}

// ---------------------------------------------------------------------------
// Rigorous products on the full coefficient space.

// Nodal scheme: g = (v_0..v_m, c). Primitive scheme: g = (d_0..d_m, c0).
inline ErrorVector matvec(const DiscretizedOperator& op, const ErrorVector& g) {
    const int m = op.m;
    if (static_cast<int>(g.size()) != m + 2) throw DomainError("matvec dimension mismatch");
    ErrorVector out;
    out.mid.assign(m + 2, 0.0);
    double xmax = 0.0;
    for (double x : g.mid) xmax = std::max(xmax, std::fabs(x));
    const double xin = rnd::add_up(xmax, g.rad);
    if (op.kind == SchemeKind::c0) {
        double rad = 0.0;
        for (int i = 0; i <= m; ++i) {
            double s = 0.0, sabs = 0.0;
            int n = 1;
            for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p, ++n) {
                double t = op.mid[p] * g.mid[op.col[p]];
                s += t;
                sabs += std::fabs(t);
            }
            double t = op.kcol_mid[i] * g.mid[m + 1];
            s += t;
            sabs += std::fabs(t);
            out.mid[i] = s;
            double r = rnd::mul_up(rnd::gamma(n + 1), rnd::mul_up(sabs, 1.0 + 4 * kUnitRoundoff));
            r = rnd::add_up(r, rnd::mul_up(op.rad_row[i], xin));
            r = rnd::add_up(r, rnd::mul_up(rnd::add_up(op.abs_row[i], op.rad_row[i]), g.rad));
            rad = std::max(rad, r);
        }
        double s = 0.0, sabs = 0.0, kabs = 0.0, krad = 0.0;
        for (int j = 0; j <= m + 1; ++j) {
            double t = op.krow_mid[j] * g.mid[j];
            s += t;
            sabs += std::fabs(t);
            kabs = rnd::add_up(kabs, std::fabs(op.krow_mid[j]));
            krad = rnd::add_up(krad, op.krow_rad[j]);
        }
        out.mid[m + 1] = s;
        double r = rnd::mul_up(rnd::gamma(m + 3), rnd::mul_up(sabs, 1.0 + 4 * kUnitRoundoff));
        r = rnd::add_up(r, rnd::mul_up(krad, xin));
        r = rnd::add_up(r, rnd::mul_up(rnd::add_up(kabs, krad), g.rad));
        out.rad = std::max(rad, r);
        return out;
    }
    // primitive scheme
    std::vector<double> d(g.mid.begin(), g.mid.begin() + m + 1);
    C1Primitive f(g.mid[m + 1], d, 0.0);
    // input radius r moves H_k by at most r (c0) + k eta r (d) <= 2 r
    const double Hrad = rnd::add_up(f.H_err, rnd::mul_up(2.0, g.rad));
    double Hmax = 0.0;
    for (double h : f.H) Hmax = std::max(Hmax, std::fabs(h));
    const double Hin = rnd::add_up(Hmax, Hrad);
    double rad = 0.0;
    for (int i = 0; i <= m; ++i) {
        double s = 0.0, sabs = 0.0;
        int n = 0;
        for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p, ++n) {
            int c = op.col[p];
            double x = c <= m ? d[c] : f.H[c - m - 1];
            double t = op.mid[p] * x;
            s += t;
            sabs += std::fabs(t);
        }
        out.mid[i] = s;
        double r = rnd::mul_up(rnd::gamma(n + 1), rnd::mul_up(sabs, 1.0 + 4 * kUnitRoundoff));
        r = rnd::add_up(r, rnd::mul_up(op.rad_row[i], xin));
        r = rnd::add_up(r, rnd::mul_up(op.rad_row_H[i], Hin));
        r = rnd::add_up(r, rnd::mul_up(rnd::add_up(op.abs_row[i], op.rad_row[i]), g.rad));
        r = rnd::add_up(r, rnd::mul_up(rnd::add_up(op.abs_row_H[i], op.rad_row_H[i]), Hrad));
        rad = std::max(rad, r);
    }
    // c0' = c0 + sum d_i I_i - sum d'_i I_i
    PartitionScheme sc(m);
    Interval c0 = Interval(g.mid[m + 1]);
    for (int i = 0; i <= m; ++i) c0 += (Interval(d[i]) - Interval(out.mid[i])) * sc.primitive_weight(i);
    out.mid[m + 1] = c0.mid();
    // sum I_i = 1/2
    double crad = rnd::add_up(c0.rad(), rnd::add_up(rnd::mul_up(1.5, g.rad), rnd::mul_up(0.5, rad)));
    out.rad = std::max(rad, crad);
    return out;
}

// ---------------------------------------------------------------------------
// Zero-average chains of the nodal scheme in reduced coordinates: v holds the
// node values, the kappa coefficient is -w.v. One step is
// v -> A v - a (w.v) with the midpoint entries.

inline double dot_w(const std::vector<double>& w, const double* v) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * v[j];
    return s;
}

inline void reduced_step(const DiscretizedOperator& op, const std::vector<double>& x, std::vector<double>& y) {
    const int m = op.m;
    const double c = -dot_w(op.w, x.data());
    y.resize(m + 1);
    for (int i = 0; i <= m; ++i) {
        double s = 0.0;
        for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p) s += op.mid[p] * x[op.col[p]];
        y[i] = s + op.kcol_mid[i] * c;
    }
}

// Per-step rounding constant of reduced_step: |fl(step x) - step x|_inf <=
// beta * |x|_inf.
inline double reduced_beta(const DiscretizedOperator& op) {
    const int m = op.m;
    double gdot = rnd::add_up(rnd::gamma(m + 1), 2.0 * kUnitRoundoff);
    double beta = 0.0;
    for (int i = 0; i <= m; ++i) {
        int n = static_cast<int>(op.ptr[i + 1] - op.ptr[i]) + 1;
        double ak = std::fabs(op.kcol_mid[i]);
        double b = rnd::mul_up(rnd::gamma(n + 1), rnd::add_up(op.abs_row[i], rnd::mul_up(ak, 2.0)));
        b = rnd::add_up(b, rnd::mul_up(ak, gdot));
        beta = std::max(beta, b);
    }
    return beta;
}

// Upper bounds on ||L_delta^k restricted to zero-average functions||_C0 for
// k = 0..n, where L_delta is the midpoint operator.
//
// The columns e_j of the reduced coordinates are pushed through n floating
// steps. With S_k the computed max row sum of |U^k|, Sc_k the sum over j of
// |w.U^k e_j|, U_k the largest computed entry and beta the per-step rounding
// constant, the floating errors obey E_k <= sum_l T_{k-l} beta U_{l-1} and
// ||U^k||_inf <= T_k = S_k + (m+1) E_k. The output function has sup at most
// max|u| + 2|w.u|, and an input g with |g| <= 1 has reduced coordinates
// g(a_i) of modulus <= 1.
struct PowerProfile {
    std::vector<double> C;   // C[0] = 1
    std::vector<double> S, Sc, Umax, T, E;
    double beta = 0.0;
};

inline PowerProfile power_profile(const DiscretizedOperator& op, int n) {
    if (op.kind != SchemeKind::c0) throw DomainError("power profile needs the nodal scheme");
    if (n < 1) throw DomainError("power profile needs n >= 1");
    const int m = op.m;
    const int N = m + 1;
    const std::size_t block = 32;
    const std::size_t nchunks = (static_cast<std::size_t>(N) + block - 1) / block;
    // per chunk: row-abs sums per step, |w.u| sums per step, max entries per step
    std::vector<std::vector<double>> rowabs(nchunks);
    std::vector<std::vector<double>> scs(nchunks), ums(nchunks);
    parallel_chunks(static_cast<std::size_t>(N), block, [&](std::size_t b, std::size_t e) {
        const std::size_t ci = b / block;
        const std::size_t J = e - b;
        std::vector<double> X(static_cast<std::size_t>(N) * J, 0.0), Y(X.size());
        for (std::size_t t = 0; t < J; ++t) X[(b + t) * J + t] = 1.0;
        auto& ra = rowabs[ci];
        ra.assign(static_cast<std::size_t>(N) * n, 0.0);
        scs[ci].assign(n, 0.0);
        ums[ci].assign(n, 0.0);
        std::vector<double> dot(J);
        for (int k = 0; k < n; ++k) {
            std::fill(dot.begin(), dot.end(), 0.0);
            for (int j = 0; j < N; ++j) {
                const double wj = op.w[j];
                const double* xr = &X[static_cast<std::size_t>(j) * J];
                for (std::size_t t = 0; t < J; ++t) dot[t] += wj * xr[t];
            }
            for (int i = 0; i < N; ++i) {
                double* yr = &Y[static_cast<std::size_t>(i) * J];
                std::fill(yr, yr + J, 0.0);
                for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p) {
                    const double a = op.mid[p];
                    const double* xr = &X[static_cast<std::size_t>(op.col[p]) * J];
                    for (std::size_t t = 0; t < J; ++t) yr[t] += a * xr[t];
                }
                const double ak = op.kcol_mid[i];
                double racc = 0.0, um = ums[ci][k];
                for (std::size_t t = 0; t < J; ++t) {
                    yr[t] += ak * (-dot[t]);
                    racc += std::fabs(yr[t]);
                    um = std::max(um, std::fabs(yr[t]));
                }
                ra[static_cast<std::size_t>(k) * N + i] = racc;
                ums[ci][k] = um;
            }
            std::swap(X, Y);
            // |w.u_k| with the same dot routine the next step would use
            double sc = 0.0;
            std::fill(dot.begin(), dot.end(), 0.0);
            for (int j = 0; j < N; ++j) {
                const double wj = op.w[j];
                const double* xr = &X[static_cast<std::size_t>(j) * J];
                for (std::size_t t = 0; t < J; ++t) dot[t] += wj * xr[t];
            }
            for (std::size_t t = 0; t < J; ++t) sc += std::fabs(dot[t]);
            scs[ci][k] = sc;
        }
    });
    // merge in chunk order; sums of nonnegative terms are inflated by
    // gamma(count) to absorb their rounding
    PowerProfile pr;
    pr.beta = reduced_beta(op);
    const double infl_row = rnd::add_up(1.0, rnd::gamma(static_cast<double>(N) + nchunks + 2));
    pr.S.assign(n + 1, 0.0);
    pr.Sc.assign(n + 1, 0.0);
    pr.Umax.assign(n + 1, 0.0);
    pr.S[0] = 1.0;
    pr.Umax[0] = 1.0;
    pr.Sc[0] = 0.0;
    for (int k = 0; k < n; ++k) {
        double smax = 0.0;
        for (int i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < nchunks; ++c) s += rowabs[c][static_cast<std::size_t>(k) * N + i];
            smax = std::max(smax, s);
        }
        double sc = 0.0, um = 0.0;
        for (std::size_t c = 0; c < nchunks; ++c) {
            sc += scs[c][k];
            um = std::max(um, ums[c][k]);
        }
        pr.S[k + 1] = rnd::mul_up(smax, infl_row);
        pr.Sc[k + 1] = rnd::mul_up(sc, infl_row);
        pr.Umax[k + 1] = um;
    }
    pr.T.assign(n + 1, 0.0);
    pr.E.assign(n + 1, 0.0);
    pr.C.assign(n + 1, 0.0);
    pr.T[0] = 1.0;
    pr.C[0] = 1.0;
    const double Nd = static_cast<double>(N);
    const double gdot = rnd::add_up(rnd::gamma(Nd), 2.0 * kUnitRoundoff);
    for (int k = 1; k <= n; ++k) {
        double e = 0.0;
        for (int l = 1; l <= k; ++l) e = rnd::add_up(e, rnd::mul_up(pr.T[k - l], rnd::mul_up(pr.beta, pr.Umax[l - 1])));
        pr.E[k] = e;
        pr.T[k] = rnd::add_up(pr.S[k], rnd::mul_up(Nd, e));
        double cerr = rnd::mul_up(Nd, rnd::add_up(e, rnd::mul_up(gdot, pr.Umax[k])));
        double kap = rnd::mul_up(2.0, rnd::add_up(pr.Sc[k], cerr));
        pr.C[k] = rnd::add_up(pr.T[k], kap);
    }
    return pr;
}

inline double norm_V_power(const DiscretizedOperator& op, int n) { return power_profile(op, n).C[n]; }

// ---------------------------------------------------------------------------
// Export / import as "row, col, mid, rad" triplets. Values are printed as
// hexadecimal floats so that import is bit-exact.

inline void export_operator(const DiscretizedOperator& op, std::ostream& os) {
    char buf[128];
    os << "# m = " << op.m << "\n# kind = " << kind_name(op.kind) << "\n";
    std::snprintf(buf, sizeof buf, "# map_hash = %016" PRIx64 "\n", op.map_hash);
    os << buf << "row,col,mid,rad\n";
    auto line = [&](int r, int c, double mid, double rad) {
        std::snprintf(buf, sizeof buf, "%d,%d,%a,%a\n", r, c, mid, rad);
        os << buf;
    };
    for (int i = 0; i <= op.m; ++i)
        for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p) line(i, op.col[p], op.mid[p], op.rad[p]);
    if (op.kind == SchemeKind::c0) {
        for (int i = 0; i <= op.m; ++i) line(i, op.m + 1, op.kcol_mid[i], op.kcol_rad[i]);
        for (int j = 0; j <= op.m + 1; ++j) line(op.m + 1, j, op.krow_mid[j], op.krow_rad[j]);
    }
}

inline DiscretizedOperator import_operator(std::istream& is) {
    DiscretizedOperator op;
    std::string line;
    std::vector<std::vector<detail::Entry>> rows;
    struct Raw {
        int r, c;
        double mid, rad;
    };
    std::vector<Raw> raws;
    bool have_m = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string key, eq, val;
            std::istringstream ss(line.substr(1));
            ss >> key >> eq >> val;
            if (key == "m") {
                op.m = std::stoi(val);
                have_m = true;
            } else if (key == "kind") {
                op.kind = val == "c1" ? SchemeKind::c1 : SchemeKind::c0;
            } else if (key == "map_hash") {
                op.map_hash = std::stoull(val, nullptr, 16);
            }
            continue;
        }
        if (line.rfind("row", 0) == 0) continue;
        Raw r{};
        char a[64], b[64];
        if (std::sscanf(line.c_str(), "%d,%d,%63[^,],%63s", &r.r, &r.c, a, b) != 4) throw ParseError("bad triplet", 0, 0);
        r.mid = std::strtod(a, nullptr);
        r.rad = std::strtod(b, nullptr);
        raws.push_back(r);
    }
    if (!have_m) throw ParseError("missing m header", 0, 0);
    const int m = op.m;
    op.kcol_mid.assign(m + 1, 0.0);
    op.kcol_rad.assign(m + 1, 0.0);
    op.krow_mid.assign(m + 2, 0.0);
    op.krow_rad.assign(m + 2, 0.0);
    std::vector<std::vector<Raw>> byrow(m + 1);
    for (const auto& r : raws) {
        if (op.kind == SchemeKind::c0 && r.r == m + 1) {
            op.krow_mid[r.c] = r.mid;
            op.krow_rad[r.c] = r.rad;
        } else if (op.kind == SchemeKind::c0 && r.c == m + 1) {
            op.kcol_mid[r.r] = r.mid;
            op.kcol_rad[r.r] = r.rad;
        } else {
            byrow.at(r.r).push_back(r);
        }
    }
    op.ptr.assign(m + 2, 0);
    for (int i = 0; i <= m; ++i) op.ptr[i + 1] = op.ptr[i] + static_cast<std::int64_t>(byrow[i].size());
    op.abs_row.assign(m + 1, 0.0);
    op.rad_row.assign(m + 1, 0.0);
    op.abs_row_H.assign(m + 1, 0.0);
    op.rad_row_H.assign(m + 1, 0.0);
    for (int i = 0; i <= m; ++i) {
        for (const auto& r : byrow[i]) {
            op.col.push_back(r.c);
            op.mid.push_back(r.mid);
            op.rad.push_back(r.rad);
            bool H = op.kind == SchemeKind::c1 && r.c > m;
            double& a = H ? op.abs_row_H[i] : op.abs_row[i];
            double& rr = H ? op.rad_row_H[i] : op.rad_row[i];
            a = rnd::add_up(a, std::fabs(r.mid));
            rr = rnd::add_up(rr, r.rad);
            op.entry_rad = std::max(op.entry_rad, r.rad);
        }
        if (op.kind == SchemeKind::c0) {
            op.abs_row[i] = rnd::add_up(op.abs_row[i], std::fabs(op.kcol_mid[i]));
            op.rad_row[i] = rnd::add_up(op.rad_row[i], op.kcol_rad[i]);
        }
    }
    for (double r : op.kcol_rad) op.entry_rad = std::max(op.entry_rad, r);
    for (double r : op.krow_rad) op.entry_rad = std::max(op.entry_rad, r);
    if (op.kind == SchemeKind::c1) {
        op.kcol_mid.clear();
        op.kcol_rad.clear();
        op.krow_mid.clear();
        op.krow_rad.clear();
    }
    PartitionScheme sc(m);
    if (op.kind == SchemeKind::c0) {
        op.w = sc.weights_mid();
    } else {
        op.w.resize(m + 1);
        for (int i = 0; i <= m; ++i) op.w[i] = sc.primitive_weight(i).mid();
    }
    return op;
}

}  // namespace lresp
