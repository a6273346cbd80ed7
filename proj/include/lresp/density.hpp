#pragma once

// Invariant density in the primitive scheme with a certified C1 error.
//
// h_eta is iterated in floating point from the uniform density. With the
// residual r = Pi~ L h_eta - h_eta enclosed by a rigorous product and
// delta = int h_eta - 1,
//   h_eta - h = u + delta h,  u = -(Id - L)^{-1} (L h_eta - h_eta) on V,
//   ||L h_eta - h_eta||_C1 <= ||r||_C1 + 3 eta sup |(L h_eta)''|,
//   ||h||_C1 <= C_iter M,
// and (Id - L)^{-1} is bounded on V by the resolvent of the equilibrium
// certificate.

#include <cmath>
#include <vector>

#include "lresp/certificates.hpp"
#include "lresp/errors.hpp"
#include "lresp/map_model.hpp"
#include "lresp/operator.hpp"
#include "lresp/partition.hpp"

namespace lresp {

struct DensityResult {
    C1Primitive h;
    double err_c1 = 0.0;
    double residual_c1 = 0.0;
    double second_derivative = 0.0;  // >= sup |(L h_eta)''|
    double mass_defect = 0.0;        // >= |int h_eta - 1|
    double resolvent = 0.0;
    int iterations = 0;
};

// sup over [0,1] of |(L f)''|, from
// (Lf)'' = sum_y f''/T'^3 - 3 f' T''/T'^4 - f T'''/T'^4 + 3 f T''^2/T'^5.
inline double transfer_second_derivative_sup(const MapModel& map, const C1Primitive& f, int cells) {
    std::vector<double> part(static_cast<std::size_t>(cells), 0.0);
    parallel_chunks(static_cast<std::size_t>(cells), 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            Interval X = Interval(static_cast<double>(c), static_cast<double>(c + 1)) / Interval(static_cast<double>(cells));
            X = clip_unit(X);
            Interval s(0.0);
            for (const Interval& Y : preimages(map, X)) {
                Interval t1 = map.T1(Y), t2 = map.T2(Y), t3 = map.T3(Y);
                Interval f0 = eval_nodal(f, Y, 0), f1 = eval_nodal(f, Y, 1), f2 = eval_nodal(f, Y, 2);
                Interval t1_3 = pow_int(t1, 3), t1_4 = t1_3 * t1;
                s += f2 / t1_3 - Interval(3.0) * f1 * t2 / t1_4 - f0 * t3 / t1_4 +
                     Interval(3.0) * f0 * sqr(t2) / (t1_4 * t1);
            }
            part[c] = s.mag();
        }
    });
    double mx = 0.0;
    for (double v : part) mx = std::max(mx, v);
    return mx;
}

struct DensityOptions {
    int max_iter = 500;
    int sup_cells = 0;  // 0: one cell per partition cell
};

inline DensityResult fixed_density(const DiscretizedOperator& op, const MapModel& map, const EquilibriumCertificate& eq,
                                   const DensityOptions& opt = {}) {
    if (op.kind != SchemeKind::c1) throw DomainError("fixed_density needs the primitive scheme");
    if (!(eq.rho < 1.0)) throw ContractionNotCertified("no certified contraction on zero-average functions");
    const int m = op.m;
    DensityResult res;
    std::vector<double> x(m + 2, 0.0);
    x[m + 1] = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        ErrorVector y = matvec(op, ErrorVector(x, 0.0));
        double diff = 0.0;
        for (int i = 0; i <= m + 1; ++i) diff = std::max(diff, std::fabs(y.mid[i] - x[i]));
        x = std::move(y.mid);
        res.iterations = it + 1;
        if (diff == 0.0) break;
        if (diff >= prev) {
            if (++stall >= 3) break;
        } else {
            stall = 0;
        }
        prev = std::min(prev, diff);
    }
    res.h = C1Primitive(x[m + 1], std::vector<double>(x.begin(), x.begin() + m + 1), 0.0);

    // residual of the enclosed operator
    ErrorVector y = matvec(op, ErrorVector(x, 0.0));
    double dd = 0.0;
    for (int i = 0; i <= m; ++i) dd = std::max(dd, (Interval(y.mid[i]) - Interval(x[i])).mag());
    dd = rnd::add_up(dd, y.rad);
    double dc = rnd::add_up((Interval(y.mid[m + 1]) - Interval(x[m + 1])).mag(), y.rad);
    res.residual_c1 = rnd::add_up(dc, rnd::mul_up(2.0, dd));

    const int cells = opt.sup_cells > 0 ? opt.sup_cells : m;
    res.second_derivative = transfer_second_derivative_sup(map, res.h, cells);
    res.mass_defect = (integral(res.h) - Interval(1.0)).mag();
    res.resolvent = resolvent_bound(eq);

    const Interval proj = Interval(3.0) * PartitionScheme(m).eta() * Interval(res.second_derivative);
    const Interval r = Interval(res.residual_c1) + proj;
    const Interval hnorm = Interval(eq.ly.C_iter) * Interval(eq.ly.M);
    res.err_c1 = (Interval(res.resolvent) * r + Interval(res.mass_defect) * hnorm).hi;
    return res;
}

}  // namespace lresp
