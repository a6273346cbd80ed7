#pragma once

// Analytic constants: Lasota-Yorke coefficients, discretized LY pairs,
// approximation distances and the two-norm convergence-to-equilibrium
// certificate. Every returned double is an upper bound computed with
// outward rounding (via Interval and taking .hi).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lresp/errors.hpp"
#include "lresp/interval.hpp"
#include "lresp/map_model.hpp"
#include "lresp/operator.hpp"
#include "lresp/partition.hpp"

namespace lresp {

namespace cert_detail {
inline double up(const Interval& x) { return x.hi; }
inline Interval I(double x) { return Interval(x); }
}  // namespace cert_detail

// ||L^n f||_inf <= M ||f||_inf
// ||(L^n f)'|| <= M lambda^n ||f'|| + Bd ||f||_inf          (Bd = BM/(1-lambda))
// ||L^n f||_C1 <= M lambda^n ||f||_C1 + C_iter ||f||_inf
// ||L^n f||_C2 <= M lambda^{2n} ||f||_C2 + D_iter ||f||_C1
// C and D are the one-step coefficients of the C1 and C2 inequalities.
struct LYConstants {
    double lambda = 1.0;
    double B = 0.0;
    double T3 = 0.0;
    double M = 1.0;
    double C = 0.0;
    double D = 0.0;
    double Z = 0.0;
    double Bd = 0.0;
    double C_iter = 0.0;
    double D_iter = 0.0;
};

inline LYConstants ly_constants(const DerivativeBounds& db) {
    using cert_detail::I;
    using cert_detail::up;
    if (!(db.lambda < 1.0)) throw NotExpanding("lambda >= 1");
    LYConstants ly;
    ly.lambda = db.lambda;
    ly.B = db.B;
    ly.T3 = db.T3;
    const Interval l = I(db.lambda), B = I(db.B), one = I(1.0);
    const Interval M = one + B / (one - l);
    ly.M = up(M);
    const Interval Mi = I(ly.M);
    ly.C = up(l * B + (one - l) * Mi);
    ly.D = up(l * Mi + I(ly.C) + I(3.0) * I(std::max(1.0, up(sqr(B)))) * Mi + Mi * I(db.T3));
    ly.Z = distortion_Z(db);
    const Interval Bd = B * Mi / (one - l);
    ly.Bd = up(Bd);
    ly.C_iter = up(I(ly.Bd) + Mi);
    const Interval b1 = one - l;
    Interval t1 = I(3.0) * l * B * Mi / b1;
    Interval t2 = I(3.0) * Mi * sqr(B / b1) + Mi * I(ly.Z);
    ly.D_iter = up(I(std::max(up(t1), up(t2))) + Mi * l + I(ly.C_iter));
    return ly;
}

// Uniform LY pair for the discretized operators, using the k-th iterate.
struct DiscreteLY {
    int k = 0;
    double lambda_eta = 0.0;
    double C_eta = 0.0;
    double mu_eta = 0.0;
    double D_eta = 0.0;
    bool usable = false;
};

inline DiscreteLY discrete_ly(const LYConstants& ly, const PartitionScheme& sc, int k) {
    using cert_detail::I;
    using cert_detail::up;
    if (k < 1) throw DomainError("discrete_ly needs k >= 1");
    const Interval eta = sc.eta();
    const Interval mm = I(static_cast<double>(sc.m));
    const Interval l = I(ly.lambda), B = I(ly.B), M = I(ly.M), Z = I(ly.Z), one = I(1.0);
    const Interval lk = pow_int(l, k), l2k = pow_int(l, 2 * k);
    const Interval BM1 = B * M / (one - l);
    const Interval quad = I(3.0) * sqr(B) * M + M * Z;
    DiscreteLY r;
    r.k = k;
    Interval lam = (I(4.5) + I(2.0) / mm) * I(4.5) * M * lk + I(10.0) * M / mm;
    r.lambda_eta = up(lam);
    r.C_eta = up((I(5.5) + I(2.0) / mm) * I(5.0) * BM1 + I(5.0) * M - lam);
    Interval mu = I(9.0) * l2k * M / I(4.0) +
                  (BM1 + M + lk * B + I(1.5) * l2k * M + I(2.5) * quad * eta) * eta;
    r.mu_eta = up(mu);
    Interval a = BM1 + I(1.5) * quad + M + lk * B + quad * eta;
    Interval b = lk * (I(2.0) * M + I(4.5) * B * M + B) + M * (I(3.0) * sqr(B) + Z + one + B / (one - l)) +
                 eta * (I(3.0) * lk * B * M + quad);
    r.D_eta = up(I(std::max(up(a), up(b))) - mu);
    r.usable = r.lambda_eta < 1.0 && r.mu_eta < 1.0;
    return r;
}

// Bound ||(L - L_delta) f||_inf <= strong ||f||_C1 + weak ||f||_inf.
struct DistancePair {
    double strong = 0.0;
    double weak = 0.0;
    std::string method;
};

// Projection constants: ||Pi g - g|| <= K delta ||g'||, ||Pi|| <= P.
struct ApproxBound {
    double K = 3.0;
    double P = 5.0;
    double A = 1.0;        // M
    double lambda1 = 0.5;  // lambda
    double Bly = 0.0;      // C_iter
    double Bd = 0.0;       // derivative-only coefficient BM/(1-lambda)
    double B = 0.0;        // one-step sup |T''/T'^2|
    double M = 1.0;
    double delta = 0.0;
    double eps_node = 0.0;
    double eps_fun = 0.0;
    std::vector<double> per_power;  // C_0 = 1, C_1, ...
};

inline ApproxBound approx_bound(const LYConstants& ly, const DiscretizedOperator& op, const std::vector<double>& per_power) {
    ApproxBound ab;
    ab.A = ly.M;
    ab.lambda1 = ly.lambda;
    ab.Bly = ly.C_iter;
    ab.Bd = ly.Bd;
    ab.B = ly.B;
    ab.M = ly.M;
    ab.delta = PartitionScheme(op.m).eta().hi;
    ab.eps_node = op.eps_node();
    ab.eps_fun = op.eps_fun();
    ab.per_power = per_power;
    return ab;
}

// One-step distance on C1: K delta (lambda M + P M) ||f||_C1 + (K delta C_iter + eps) ||f||_inf.
inline DistancePair operator_distance(const LYConstants& ly, const PartitionScheme& sc, double eps_fun = 0.0) {
    using cert_detail::I;
    using cert_detail::up;
    const Interval Kd = I(3.0) * sc.eta();
    DistancePair d;
    d.strong = up(Kd * (I(ly.lambda) * I(ly.M) + I(5.0) * I(ly.M)));
    d.weak = up(Kd * I(ly.C_iter) + I(eps_fun));
    d.method = "single step";
    return d;
}

// Candidate bounds on ||(L^n - L_delta^n) f||_inf for zero-average f. All are
// valid; callers pick by the quantity they need.
//
// node: L^n - L_delta^n = sum_k L_delta^{n-k} (L - L_delta) L^{k-1}; for
// k < n only node values of (L - L_delta) g matter and those equal
// L(g - Pi g)(a_i) up to the midpoint perturbation, so P does not enter.
// telescoping: the same sum with the full C1 -> C0 distance in every term.
// coarse: one uniform bound M_delta >= C_j on all powers.
inline std::vector<DistancePair> power_distance_candidates(const ApproxBound& ab, int n) {
    using cert_detail::I;
    using cert_detail::up;
    if (n < 1) throw DomainError("power_distance needs n >= 1");
    std::vector<DistancePair> out;
    const Interval Kd = I(ab.K) * I(ab.delta), M = I(ab.M), l = I(ab.lambda1), P = I(ab.P);
    const Interval last = Kd * (l * M + P * M);
    const bool have = static_cast<int>(ab.per_power.size()) >= n;
    auto Ck = [&](int j) { return I(ab.per_power[j]); };
    if (have) {
        // node form
        Interval s(0.0), w(0.0);
        for (int k = 1; k <= n; ++k) {
            Interval Ak = k == 1 ? I(1.0) : M * pow_int(l, k - 1);
            Interval Bk = k == 1 ? I(0.0) : I(ab.Bd);
            Interval Wk = k == 1 ? I(1.0) : M;
            if (k < n) {
                s += Ck(n - k) * M * Kd * Ak;
                w += Ck(n - k) * (M * Kd * Bk + I(ab.eps_node) * Wk);
            } else {
                // (L g)' also carries B M ||g||, and ||g|| <= W_n ||f||
                s += last * Ak;
                w += last * Bk + (Kd * I(ab.B) * M + I(3.0) * I(ab.eps_node)) * Wk;
            }
        }
        out.push_back({up(s), up(w), "node"});
        // telescoping with the full distance
        Interval s2(0.0), w2(0.0);
        const Interval Al = I(ab.A) * l;
        for (int k = 1; k <= n; ++k) {
            s2 += I(ab.A) * pow_int(l, k - 1) * Ck(n - k) * (Al + P * M);
            w2 += Ck(n - k) * ((Al + P * M + M) * I(ab.Bly) * Kd + I(ab.eps_fun) * M);
        }
        out.push_back({up(Kd * s2), up(w2), "telescoping"});
    }
    // coarse
    double Md = 1.0;
    for (int j = 0; j < std::min<int>(n, static_cast<int>(ab.per_power.size())); ++j) Md = std::max(Md, ab.per_power[j]);
    if (!have) Md = std::max(Md, ab.M);
    const Interval Al = I(ab.A) * l;
    const Interval nn = I(static_cast<double>(n));
    Interval s3 = Kd * I(Md) * (Al + P * M) * I(ab.A) / (I(1.0) - l);
    Interval w3 = Kd * I(Md) * nn * I(ab.Bly) * (Al + P * M + M) + nn * I(Md) * I(ab.eps_fun) * M;
    out.push_back({up(s3), up(w3), "coarse"});
    return out;
}

inline DistancePair power_distance(const ApproxBound& ab, int n) {
    auto c = power_distance_candidates(ab, n);
    return *std::min_element(c.begin(), c.end(), [](const DistancePair& a, const DistancePair& b) {
        return a.strong + a.weak < b.strong + b.weak;
    });
}

// ---------------------------------------------------------------------------
// Convergence to equilibrium. With x_k = (||L^{k n1} f||_C1, ||L^{k n1} f||_inf)
// for zero-average f, x_{k+1} <= mat x_k componentwise.

using Mat2 = std::array<std::array<double, 2>, 2>;

struct EquilibriumCertificate {
    int n1 = 0;
    int m_eq = 0;
    double lambda2 = 0.0;
    Mat2 mat{};
    double rho = 1.0;
    double a = 0.5, b = 0.5;  // (a,b) mat <= rho (a,b)
    double x = 1.0, y = 1.0;  // mat (x,y)^T <= rho (x,y)^T
    double C1 = 0.0;          // ||L^{k n1} f||_inf <= C1 rho^k ||f||_C1
    double C1_strong = 0.0;   // ||L^{k n1} f||_C1 <= C1_strong rho^k ||f||_C1
    std::string method;
    LYConstants ly;
    std::vector<double> per_power;
};

struct Rho {
    double rho;
    double a, b, x, y;
};

// Certified rho >= spectral radius of a nonnegative 2x2 matrix together with
// positive left and right vectors satisfying the eigen-inequalities, checked
// in interval arithmetic.
inline Rho certify_rho(const Mat2& A) {
    using cert_detail::I;
    for (double v : {A[0][0], A[0][1], A[1][0], A[1][1]})
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("matrix must be nonnegative and finite");
    const double tr = A[0][0] + A[1][1];
    const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    const double rho0 = 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4 * det)));
    double infl = 1e-9;
    for (int attempt = 0; attempt < 60; ++attempt, infl *= 4) {
        double rho = rho0 * (1 + infl) + 1e-300;
        if (rho == 0.0) rho = std::numeric_limits<double>::min();
        // (rho I - A)^{-1} is entrywise positive; rows/columns sums give
        // strictly positive sub-eigenvectors
        const double p = rho - A[0][0], q = rho - A[1][1];
        const double dt = p * q - A[0][1] * A[1][0];
        if (!(dt > 0) || !(p > 0) || !(q > 0)) continue;
        double a = (q + A[1][0]) / dt, b = (p + A[0][1]) / dt;  // (1,1)(rho-A)^{-1}
        double x = (q + A[0][1]) / dt, y = (p + A[1][0]) / dt;  // (rho-A)^{-1}(1,1)^T
        double sl = a + b, sr = std::max(x, y);
        a /= sl;
        b /= sl;
        x /= sr;
        y /= sr;
        if (!(a > 0 && b > 0 && x > 0 && y > 0)) continue;
        const Interval R = I(rho);
        bool ok = (I(a) * I(A[0][0]) + I(b) * I(A[1][0])).hi <= (R * I(a)).lo &&
                  (I(a) * I(A[0][1]) + I(b) * I(A[1][1])).hi <= (R * I(b)).lo &&
                  (I(A[0][0]) * I(x) + I(A[0][1]) * I(y)).hi <= (R * I(x)).lo &&
                  (I(A[1][0]) * I(x) + I(A[1][1]) * I(y)).hi <= (R * I(y)).lo;
        if (ok) return {rho, a, b, x, y};
    }
    throw NoContraction("could not certify an eigen-inequality");
}

// Componentwise bound (s, w) with x_k <= (s, w) rho^k given x_0 <= (s0, w0);
// minimum of the left-vector and right-vector estimates.
struct BlockBound {
    double s = 0.0, w = 0.0;
};

inline BlockBound block_bound(const EquilibriumCertificate& c, double s0, double w0) {
    using cert_detail::I;
    const Interval nrm = I(c.a) * I(s0) + I(c.b) * I(w0);
    double ls = (nrm / I(c.a)).hi, lw = (nrm / I(c.b)).hi;
    double t = std::max((I(s0) / I(c.x)).hi, (I(w0) / I(c.y)).hi);
    double rs = (I(t) * I(c.x)).hi, rw = (I(t) * I(c.y)).hi;
    // k = 0 holds trivially with (s0, w0)
    return {std::max(std::min(ls, rs), s0), std::max(std::min(lw, rw), w0)};
}

inline bool eigen_inequality_holds(const EquilibriumCertificate& c) {
    using cert_detail::I;
    const Interval R = I(c.rho);
    return (I(c.a) * I(c.mat[0][0]) + I(c.b) * I(c.mat[1][0])).hi <= (R * I(c.a)).lo &&
           (I(c.a) * I(c.mat[0][1]) + I(c.b) * I(c.mat[1][1])).hi <= (R * I(c.b)).lo;
}

inline EquilibriumCertificate certificate_for(const LYConstants& ly, const ApproxBound& ab, int n, int m_eq) {
    using cert_detail::I;
    EquilibriumCertificate best;
    best.rho = std::numeric_limits<double>::infinity();
    const double lam2 = ab.per_power.at(n);
    for (const auto& d : power_distance_candidates(ab, n)) {
        Mat2 A{};
        A[0][0] = (I(ly.M) * pow_int(I(ly.lambda), n)).hi;
        A[0][1] = ly.C_iter;
        A[1][0] = d.strong;
        A[1][1] = (I(d.weak) + I(lam2)).hi;
        Rho r;
        try {
            r = certify_rho(A);
        } catch (const NoContraction&) {
            continue;
        }
        if (r.rho < best.rho) {
            best.n1 = n;
            best.m_eq = m_eq;
            best.lambda2 = lam2;
            best.mat = A;
            best.rho = r.rho;
            best.a = r.a;
            best.b = r.b;
            best.x = r.x;
            best.y = r.y;
            best.method = d.method;
        }
    }
    best.ly = ly;
    best.per_power = ab.per_power;
    if (std::isfinite(best.rho)) {
        BlockBound bb = block_bound(best, 1.0, 1.0);
        best.C1 = bb.w;
        best.C1_strong = bb.s;
    }
    return best;
}

struct EquilibriumOptions {
    int n1_cap = 24;
    double lambda2_target = 1e-3;
};

// Searches n by doubling the profile length until some n has C_n below the
// target, then keeps the candidate with the best per-step rate rho^{1/n}.
inline EquilibriumCertificate equilibrium(const DiscretizedOperator& op, const LYConstants& ly,
                                          const EquilibriumOptions& opt = {}) {
    if (op.kind != SchemeKind::c0) throw DomainError("equilibrium needs the nodal scheme");
    int N = std::min(8, opt.n1_cap);
    while (true) {
        PowerProfile pr = power_profile(op, N);
        ApproxBound ab = approx_bound(ly, op, pr.C);
        EquilibriumCertificate best;
        best.rho = std::numeric_limits<double>::infinity();
        double best_rate = std::numeric_limits<double>::infinity();
        for (int n = 1; n <= N; ++n) {
            if (!(pr.C[n] <= opt.lambda2_target)) continue;
            EquilibriumCertificate c = certificate_for(ly, ab, n, op.m);
            if (!(c.rho < 1.0)) continue;
            double rate = std::pow(c.rho, 1.0 / n);
            if (rate < best_rate) {
                best_rate = rate;
                best = c;
            }
        }
        if (std::isfinite(best_rate)) return best;
        if (N >= opt.n1_cap) break;
        N = std::min(2 * N, opt.n1_cap);
    }
    throw NoContraction("no n <= " + std::to_string(opt.n1_cap) + " with a certified contraction");
}

// Starting pair (||L^r g||_C1, ||L^r g||_inf) for 0 <= r < n1 given
// ||g||_C1 <= G1, ||g||_inf <= G0.
inline std::pair<double, double> start_pair(const LYConstants& ly, int r, double G1, double G0) {
    using cert_detail::I;
    if (r == 0) return {G1, G0};
    double s = (I(ly.M) * pow_int(I(ly.lambda), r) * I(G1) + I(ly.C_iter) * I(G0)).hi;
    double w = (I(ly.M) * I(G0)).hi;
    return {s, w};
}

// Bound on ||sum_{i >= l} L^i g||_inf for zero-average g.
inline double tail_value(const EquilibriumCertificate& c, double G1, double G0, int l) {
    using cert_detail::I;
    const int n1 = c.n1;
    const Interval rho = I(c.rho), geo = I(1.0) / (I(1.0) - rho);
    double c0 = block_bound(c, G1, G0).w;
    Interval total(0.0);
    for (int r = 0; r < n1; ++r) {
        auto [s, w] = start_pair(c.ly, r, G1, G0);
        double cr = std::min(block_bound(c, s, w).w, (I(c.ly.M) * I(c0)).hi);
        int kmin = std::max(0, (l - r + n1 - 1) / n1);
        if (l - r <= 0) kmin = 0;
        total += I(cr) * pow_int(rho, kmin) * geo;
    }
    return total.hi;
}

struct TailResult {
    int l_star = 0;
    double value = 0.0;
};

// Smallest multiple of n1 whose tail is at most tau (l* = n1 when tau is infinite).
inline TailResult tail_length(const EquilibriumCertificate& c, double G1, double G0, double tau, int max_blocks = 10000) {
    for (int k = 1; k <= max_blocks; ++k) {
        int l = k * c.n1;
        double v = tail_value(c, G1, G0, l);
        if (v <= tau || std::isinf(tau)) return {l, v};
    }
    throw NoContraction("tail does not reach tau");
}

inline TailResult tail_length(const EquilibriumCertificate& c, double lhat_c1_bound, double tau) {
    return tail_length(c, lhat_c1_bound, lhat_c1_bound, tau);
}

// Bound on sum_{i >= 0} ||L^i g||_C1 for zero-average g with ||g||_C1 <= 1.
inline double resolvent_bound(const EquilibriumCertificate& c) {
    using cert_detail::I;
    const Interval rho = I(c.rho), q = rho / (I(1.0) - rho);
    Interval total(0.0);
    for (int r = 0; r < c.n1; ++r) {
        auto [s, w] = start_pair(c.ly, r, 1.0, 1.0);
        total += I(s) + I(block_bound(c, s, w).s) * q;
    }
    return total.hi;
}

}  // namespace lresp
