#pragma once

// Full-branch, orientation-preserving circle maps given by one expression
// T(x) on [0,1], lifted so that branch k maps [c_k, c_{k+1}] onto [k, k+1].

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lresp/errors.hpp"
#include "lresp/expr.hpp"
#include "lresp/interval.hpp"
#include "lresp/parallel.hpp"

namespace lresp {

struct BranchSpec {
    Interval domain;  // [c_k, c_{k+1}]
    int image_offset = 0;  // k: the branch covers [k, k+1] before reduction mod 1
};

class MapModel {
public:
    // Branch endpoints 0 = c_0 < ... < c_d = 1, with T(c_k) = k required.
    MapModel(Expr T, std::vector<double> endpoints, std::string source = "")
        : T_(std::move(T)), source_(std::move(source)) {
        if (T_.depends_on(Var::eps)) throw DomainError("map expression must not depend on eps");
        T1_ = T_.diff(Var::x);
        T2_ = T1_.diff(Var::x);
        T3_ = T2_.diff(Var::x);
        if (endpoints.size() < 3) throw DomainError("at least two branches are required");
        if (endpoints.front() != 0.0 || endpoints.back() != 1.0) throw DomainError("branch endpoints must start at 0 and end at 1");
        for (std::size_t k = 0; k + 1 < endpoints.size(); ++k) {
            if (!(endpoints[k] < endpoints[k + 1])) throw DomainError("branch endpoints must increase");
            branches_.push_back({Interval(endpoints[k], endpoints[k + 1]), static_cast<int>(k)});
        }
        for (std::size_t k = 0; k < endpoints.size(); ++k) {
            if (!T_.eval(Interval(endpoints[k])).contains(static_cast<double>(k)))
                throw DomainError("T(c_" + std::to_string(k) + ") does not enclose " + std::to_string(k) +
                                  "; branches must be full and T(0) = 0");
        }
    }

    // d equal branches with endpoints k/d.
    static MapModel uniform(Expr T, int d, std::string source = "") {
        if (d < 2) throw DomainError("degree must be at least 2");
        std::vector<double> e(d + 1);
        for (int k = 0; k <= d; ++k) e[k] = static_cast<double>(k) / d;
        e[d] = 1.0;
        return MapModel(std::move(T), std::move(e), std::move(source));
    }

    int degree() const { return static_cast<int>(branches_.size()); }
    const std::vector<BranchSpec>& branches() const { return branches_; }
    const std::string& source() const { return source_; }

    Interval T(const Interval& x) const { return T_.eval(x); }
    Interval T1(const Interval& x) const { return T1_.eval(x); }
    Interval T2(const Interval& x) const { return T2_.eval(x); }
    Interval T3(const Interval& x) const { return T3_.eval(x); }
    double T_double(double x) const { return T_.eval_double(x); }
    double T1_double(double x) const { return T1_.eval_double(x); }

    // FNV-1a over the source text and branch endpoints.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](const void* p, std::size_t n) {
            auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ULL;
            }
        };
        mix(source_.data(), source_.size());
        for (const auto& br : branches_) {
            mix(&br.domain.lo, sizeof(double));
            mix(&br.domain.hi, sizeof(double));
        }
        return h;
    }

private:
    Expr T_, T1_, T2_, T3_;
    std::vector<BranchSpec> branches_;
    std::string source_;
};

struct DerivativeBounds {
    double lambda = 1.0;  // >= 1/inf T'
    double B = 0.0;       // >= sup |T''/T'^2|
    double T3 = 0.0;      // >= sup |T'''/T'^3|
};

inline DerivativeBounds certify_expanding(const MapModel& map, int depth) {
    DerivativeBounds db;
    double min_t1 = std::numeric_limits<double>::infinity();
    const long cells = 1L << depth;
    for (const auto& br : map.branches()) {
        Interval w = (Interval(br.domain.hi) - Interval(br.domain.lo)) / Interval(static_cast<double>(cells));
        for (long c = 0; c < cells; ++c) {
            double lo = c == 0 ? br.domain.lo : (Interval(br.domain.lo) + w * Interval(static_cast<double>(c))).lo;
            double hi = c == cells - 1 ? br.domain.hi
                                       : (Interval(br.domain.lo) + w * Interval(static_cast<double>(c + 1))).hi;
            Interval X(std::min(lo, hi), std::max(lo, hi));
            Interval t1 = map.T1(X);
            if (!(t1.lo > 1.0))
                throw NotExpanding("T' enclosure " + std::to_string(t1.lo) + " <= 1 near x = " + std::to_string(X.mid()));
            min_t1 = std::min(min_t1, t1.lo);
            Interval t2 = map.T2(X);
            Interval t3 = map.T3(X);
            db.B = std::max(db.B, (t2 / sqr(t1)).mag());
            db.T3 = std::max(db.T3, (t3 / pow_int(t1, 3)).mag());
        }
    }
    db.lambda = rnd::div_up(1.0, min_t1);
    return db;
}

namespace detail {

// Verified root of T(x) = target in a box around the floating Newton
// iterate, clipped to the branch domain.
inline Interval branch_root(const MapModel& map, const BranchSpec& br, double y, double tol) {
    const double target = br.image_offset + y;
    const double c0 = br.domain.lo, c1 = br.domain.hi;
    double x = std::clamp(c0 + y * (c1 - c0), c0, c1);
    double step = 0.0;
    for (int it = 0; it < 60; ++it) {
        double fx = map.T_double(x) - target;
        double d1 = map.T1_double(x);
        step = fx / d1;
        double nx = std::clamp(x - step, c0, c1);
        if (nx == x) break;
        x = nx;
        if (std::fabs(step) <= 1e-17 * std::max(1.0, std::fabs(x)) && it > 2) break;
    }
    const Interval Y(target);
    double r = std::max({std::fabs(step) * 4.0, 8.0 * std::fabs(rnd::next_up(x) - x), 1e-300});
    for (int attempt = 0; attempt < 8; ++attempt, r *= 16.0) {
        Interval X(x - r, x + r);
        X = Interval(rnd::next_down(X.lo), rnd::next_up(X.hi));
        Interval d = map.T1(X);
        if (!(d.lo > 0)) continue;
        Interval N = Interval(x) - (map.T(Interval(x)) - Y) / d;
        if (!(X.lo < N.lo && N.hi < X.hi)) continue;
        for (int k = 0; k < 3; ++k) {
            double xm = N.mid();
            Interval N2 = Interval(xm) - (map.T(Interval(xm)) - Y) / map.T1(N);
            if (N2.lo > N.hi || N2.hi < N.lo) break;
            N = Interval(std::max(N.lo, N2.lo), std::min(N.hi, N2.hi));
        }
        Interval R(std::max(N.lo, c0), std::min(N.hi, c1));
        if (R.width() > tol) throw NoConvergence("preimage enclosure wider than tolerance");
        return R;
    }
    throw NoConvergence("interval Newton failed to contract near x = " + std::to_string(x));
}

}  // namespace detail

// One enclosure per branch. For wide y the enclosure is the hull of the
// endpoint preimages, which is exact because every branch is increasing.
inline std::vector<Interval> preimages(const MapModel& map, const Interval& y, double tol = 1e-10) {
    if (y.lo < 0.0 || y.hi > 1.0) throw DomainError("preimage target outside [0,1]");
    std::vector<Interval> out;
    out.reserve(map.degree());
    for (const auto& br : map.branches()) {
        Interval a = detail::branch_root(map, br, y.lo, tol);
        if (y.is_point()) {
            out.push_back(a);
        } else {
            Interval b = detail::branch_root(map, br, y.hi, tol);
            out.push_back(Interval(a.lo, b.hi));
        }
    }
    return out;
}

// Lf(x) = sum over preimages of f(y)/T'(y); f maps an Interval to an Interval.
template <class F>
Interval transfer_eval(const MapModel& map, F&& f, const Interval& x, double tol = 1e-10) {
    Interval s(0.0);
    for (const Interval& y : preimages(map, x, tol)) s += f(y) / map.T1(y);
    return s;
}

// Preimage enclosures of all nodes i/m, stored as ys[i*d + k].
struct NodePreimages {
    int m = 0;
    int d = 0;
    std::vector<Interval> ys;
    const Interval& at(int i, int k) const { return ys[static_cast<std::size_t>(i) * d + k]; }
};

inline NodePreimages node_preimages(const MapModel& map, int m) {
    NodePreimages np;
    np.m = m;
    np.d = map.degree();
    np.ys.resize(static_cast<std::size_t>(m + 1) * np.d);
    parallel_chunks(static_cast<std::size_t>(m + 1), 1024, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double y = i == static_cast<std::size_t>(m) ? 1.0 : static_cast<double>(i) / m;
            auto pre = preimages(map, Interval(y), 1e-9);
            for (int k = 0; k < np.d; ++k) np.ys[i * np.d + k] = pre[k];
        }
    });
    return np;
}

struct Distortion {
    double Bk = 0.0;
    double Zk = 0.0;
};

// Z = (T3 + 3 lambda B^2/(1-lambda)) / (1 - lambda^2).
inline double distortion_Z(const DerivativeBounds& db) {
    Interval l(db.lambda);
    Interval one(1.0);
    Interval z = (Interval(db.T3) + Interval(3.0) * l * sqr(Interval(db.B)) / (one - l)) / (one - sqr(l));
    return z.hi;
}

// Bounds for the k-th iterate G_k: |G_k''/G_k'^2| <= (1 - lambda^{k+1})/(1 - lambda) B
// and |G_k'''/G_k'^3| <= Z.
inline Distortion iterate_distortion(const DerivativeBounds& db, int k) {
    if (k < 1) throw DomainError("iterate_distortion needs k >= 1");
    Interval l(db.lambda);
    Interval one(1.0);
    Interval bk = (one - pow_int(l, k + 1)) / (one - l) * Interval(db.B);
    return {std::max(0.0, bk.hi), distortion_Z(db)};
}

}  // namespace lresp
