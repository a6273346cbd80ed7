// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "lresp/config.hpp"
#include "lresp/pipeline.hpp"

using namespace lresp;

namespace {

const double kPi = 3.141592653589793;
const char* kEightBranch = "8*x + 0.0025*(sin(16*pi*x) + sin(32*pi*x)/4)";

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string num(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", x);
    return b;
}

MapModel doubling() { return MapModel::uniform(parse_expr("2*x"), 2, "2*x"); }
MapModel eight_branch() { return MapModel::uniform(parse_expr(kEightBranch), 8, kEightBranch); }

double phi_ref(double t) {
    if (t < -1 || t > 1) return 0;
    return t <= 0 ? 1 - 3 * t * t - 2 * t * t * t : 1 - 3 * t * t + 2 * t * t * t;
}

const char* kDoublingCfg = R"([map]
T = 2*x + (eps/16)*(cos(4*pi*x) + cos(8*pi*x)/4)
[perturbation]
density = exact_one
[run]
m = 65536
m_eq = 4096
tau = 0.05
samples = 10001
)";

std::string stochastic_cfg(int m) {
    return std::string("[map]\nT = ") + kEightBranch + "\n[perturbation]\nkind = stochastic\ngamma = symbolic\n[run]\nm = " +
           std::to_string(m) + "\nm_eq = 4096\ntau = 0.5\nsamples = 11\n";
}

void criterion1() {
    RunConfig cfg = parse_config(kDoublingCfg);
    PipelineResult a = run_pipeline(cfg);
    if (!a.response) {
        report(1, false, "pipeline error: " + a.error);
        return;
    }
    const ResponseCertificate& rc = *a.response;
    // exact response to S = (cos 4 pi x + cos 8 pi x / 4)/16; the unscaled
    // expression 3 pi sin 2 pi x + pi sin 4 pi x is the response to 16 S
    double err = 0, err16 = 0, err_unscaled = 0;
    for (int k = 0; k <= 10000; ++k) {
        double x = k / 10000.0;
        double v = eval_nodal(rc.h_appr, Interval(x), 0).mid();
        double lit = 3 * kPi * std::sin(2 * kPi * x) + kPi * std::sin(4 * kPi * x);
        err = std::max(err, std::fabs(v - lit / 16));
        err16 = std::max(err16, std::fabs(16 * v - lit));
        err_unscaled = std::max(err_unscaled, std::fabs(v - lit));
    }
    bool ok = std::isfinite(rc.total) && rc.total <= 0.05 && err <= rc.total && err <= 1e-3 && err16 <= 16 * rc.total;
    report(1, ok,
           "m=65536 l*=" + std::to_string(rc.l_star) + " total=" + num(rc.total) + " (s1=" + num(rc.summand1) +
               " s2=" + num(rc.summand2) + " s3=" + num(rc.summand3) + ") true error vs (3pi sin2pix+pi sin4pix)/16 = " +
               num(err) + "; 16*h_appr vs unscaled formula = " + num(err16) + " (unscaled vs h_appr directly: " +
               num(err_unscaled) + ")");
}

void criterion10() {
    RunConfig cfg = parse_config(kDoublingCfg);
    PipelineResult a = run_pipeline(cfg);
    PipelineResult b = run_pipeline(cfg);
    bool same = a.exit_code == 0 && a.certificate == b.certificate && a.response_csv == b.response_csv && a.audit == b.audit;
    report(10, same, same ? "certificate, CSV and audit bit-identical across two runs of criterion 1" : "runs differ");
}

void criterion2() {
    LYConstants ly = ly_constants(certify_expanding(doubling(), 12));
    bool ok = ly.lambda == 0.5 && ly.B == 0.0 && ly.M == 1.0 && ly.Z == 0.0;
    report(2, ok, "lambda=" + num(ly.lambda) + " B=" + num(ly.B) + " M=" + num(ly.M) + " Z=" + num(ly.Z));
}

void criterion3() {
    LYConstants ly = ly_constants(certify_expanding(eight_branch(), 12));
    // sampled true values: the certified bounds must dominate them
    double lam = 0, B = 0;
    for (int k = 0; k <= 200000; ++k) {
        double x = k / 200000.0;
        double t1 = 8 + 0.0025 * (16 * kPi * std::cos(16 * kPi * x) + 8 * kPi * std::cos(32 * kPi * x));
        double t2 = -0.0025 * (256 * kPi * kPi * std::sin(16 * kPi * x) + 256 * kPi * kPi * std::sin(32 * kPi * x));
        lam = std::max(lam, 1 / t1);
        B = std::max(B, std::fabs(t2) / (t1 * t1));
    }
    bool ok = ly.lambda <= 0.130 && ly.B <= 0.21 && ly.M <= 1.25 && ly.lambda >= lam && ly.B >= B &&
              ly.M >= 1 + B / (1 - lam);
    report(3, ok, "lambda=" + num(ly.lambda) + " B=" + num(ly.B) + " M=" + num(ly.M) + " (sampled lambda=" + num(lam) +
                      " B=" + num(B) + ")");
}

void criterion4() {
    MapModel map = doubling();
    LYConstants ly = ly_constants(certify_expanding(map, 12));
    EquilibriumCertificate eq = equilibrium(assemble(map, PartitionScheme(4096), SchemeKind::c0), ly);
    bool ineq = eigen_inequality_holds(eq);
    bool ok = eq.n1 <= 24 && eq.lambda2 < 1e-3 && eq.rho < 0.05 && ineq;
    report(4, ok, "n1=" + std::to_string(eq.n1) + " lambda2=" + num(eq.lambda2) + " rho=" + num(eq.rho) +
                      " eigen-inequality " + (ineq ? "verified" : "not verified"));
}

void criterion5() {
    const int m = 8;
    DiscretizedOperator op = assemble(doubling(), PartitionScheme(m), SchemeKind::c0);
    double worst = 0;
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            double direct = 0;
            for (int k = 0; k < 2; ++k) direct += phi_ref(m * ((static_cast<double>(i) / m + k) / 2) - j) / 2;
            double got = 0;
            for (std::int64_t p = op.ptr[i]; p < op.ptr[i + 1]; ++p)
                if (op.col[p] == j) got = op.mid[p];
            worst = std::max(worst, std::fabs(got - direct));
        }
    report(5, worst <= 1e-12 && worst <= std::max(op.entry_rad, 1e-12),
           "max |midpoint - direct| = " + num(worst) + ", entry_rad = " + num(op.entry_rad));
}

void criterion6() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    bool unity = true;
    for (int m : {8, 64, 1024}) {
        PartitionScheme sc(m);
        for (int n = 0; n < 1000; ++n) {
            Interval x(u(rng));
            auto [lo, hi] = sc.cells(x);
            Interval s(0.0), ds(0.0);
            for (int i = std::max(0, lo - 1); i <= std::min(m, hi + 1); ++i) {
                s += bump_eval(sc, i, x, 0);
                ds += bump_eval(sc, i, x, 1);
            }
            unity = unity && s.contains(1.0) && ds.contains(0.0);
        }
    }
    const int m = 64;
    PartitionScheme sc(m);
    bool zeros = true;
    for (int i = 0; i <= m; ++i) zeros = zeros && kappa_eval(sc, sc.node(i), 0).contains(0.0);
    // integral of kappa by 3-point Gauss on quarter cells (kappa is piecewise cubic there)
    const double gn[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)}, gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
    double integral = 0;
    const int pieces = 4 * m;
    for (int p = 0; p < pieces; ++p) {
        double c = (p + 0.5) / pieces, h = 1.0 / pieces;
        for (int k = 0; k < 3; ++k) integral += gw[k] * kappa_eval(sc, Interval(c + 0.5 * h * gn[k]), 0).mid() * 0.5 * h;
    }
    double sup = 0, dsup = 0;
    const int N = 1 << 16;
    for (int k = 0; k <= N; ++k) {
        Interval x(static_cast<double>(k) / N);
        sup = std::max(sup, kappa_eval(sc, x, 0).mag());
        dsup = std::max(dsup, kappa_eval(sc, x, 1).mag());
    }
    bool ok_int = std::fabs(integral - 1) < 1e-12, ok_sup = std::fabs(sup - 2) < 1e-9;
    bool ok_d = std::fabs(dsup - 3.0 * m) < 1e-6 * m;
    report(6, unity && zeros && ok_int && ok_sup && ok_d,
           std::string("unity ") + (unity ? "ok" : "violated") + ", kappa(a_i)=0 " + (zeros ? "ok" : "violated") +
               ", int kappa=" + num(integral) + ", sup kappa=" + num(sup) + ", sup |kappa'| = " + num(dsup) +
               " = " + num(dsup / m) + "m (stated 3m)");
}

void criterion7() {
    double ratio[3];
    bool bound = true;
    int idx = 0;
    for (int m : {256, 1024, 4096}) {
        PartitionScheme sc(m);
        NodalFunction g =
            project_c0(sc, [](const Interval& x) { return sin(Interval(2.0) * pi_interval() * x); }, Interval(0.0));
        double err = 0;
        for (int k = 0; k <= 20000; ++k) {
            double x = k / 20000.0;
            err = std::max(err, std::fabs(eval_nodal(g, Interval(x), 0).mid() - std::sin(2 * kPi * x)));
        }
        for (int k = 0; k <= 2000; ++k) {
            double x = 0.125 + k / 2000.0 / m;
            err = std::max(err, std::fabs(eval_nodal(g, Interval(x), 0).mid() - std::sin(2 * kPi * x)));
        }
        bound = bound && err <= 3 * 2 * kPi / m;
        ratio[idx++] = err * m;
    }
    bool stable = std::fabs(ratio[1] / ratio[0] - 1) < 0.05 && std::fabs(ratio[2] / ratio[1] - 1) < 0.05;
    report(7, bound && stable,
           "m*err = " + num(ratio[0]) + ", " + num(ratio[1]) + ", " + num(ratio[2]) + " (bound 3*2pi = " +
               num(6 * kPi) + ")");
}

void criterion8() {
    PipelineResult a = run_pipeline(parse_config(stochastic_cfg(65536)));
    PipelineResult b = run_pipeline(parse_config(stochastic_cfg(131072)));
    if (!a.response || !b.response) {
        report(8, false, "pipeline error: " + a.error + " " + b.error);
        return;
    }
    const ResponseCertificate& r = *a.response;
    bool pos = r.summand1 > 0 && r.summand2 > 0 && r.summand3 > 0 && std::isfinite(r.summand1) &&
               std::isfinite(r.summand2) && std::isfinite(r.summand3);
    bool ok = pos && r.total <= 0.5 && r.gamma_symbolic && b.response->total < r.total;
    report(8, ok,
           "m=65536 total=" + num(r.total) + "*gamma (s1=" + num(r.summand1) + " s2=" + num(r.summand2) +
               " s3=" + num(r.summand3) + " l*=" + std::to_string(r.l_star) + "); m=131072 total=" +
               num(b.response->total) + "*gamma");
}

void criterion9() {
    MapModel d = doubling();
    LYConstants lyd = ly_constants(certify_expanding(d, 12));
    EquilibriumCertificate eqd = equilibrium(assemble(d, PartitionScheme(4096), SchemeKind::c0), lyd);
    DensityResult hd = fixed_density(assemble(d, PartitionScheme(4096), SchemeKind::c1), d, eqd);
    double dev = 0;
    for (int k = 0; k <= 1000; ++k) dev = std::max(dev, std::fabs(eval_nodal(hd.h, Interval(k / 1000.0), 0).mid() - 1));

    MapModel s = eight_branch();
    LYConstants lys = ly_constants(certify_expanding(s, 12));
    EquilibriumCertificate eqs = equilibrium(assemble(s, PartitionScheme(4096), SchemeKind::c0), lys);
    double e[3];
    int idx = 0;
    for (int m : {1024, 4096, 16384}) e[idx++] = fixed_density(assemble(s, PartitionScheme(m), SchemeKind::c1), s, eqs).err_c1;
    bool ok = hd.err_c1 <= 1e-8 && dev <= 1e-12 && std::isfinite(e[0]) && e[1] < e[0] && e[2] < e[1];
    report(9, ok,
           "doubling err_c1=" + num(hd.err_c1) + " (max |h_eta - 1| = " + num(dev) + "); eight-branch err_c1 at m=1024,4096,16384: " +
               num(e[0]) + ", " + num(e[1]) + ", " + num(e[2]));
}

template <class F>
void guarded(int id, F f) {
    auto t0 = std::chrono::steady_clock::now();
    try {
        f();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "  [criterion %d took %.1f s]\n", id, s);
}

}  // namespace

int main() {
    guarded(1, criterion1);
    guarded(2, criterion2);
    guarded(3, criterion3);
    guarded(4, criterion4);
    guarded(5, criterion5);
    guarded(6, criterion6);
    guarded(7, criterion7);
    guarded(8, criterion8);
    guarded(9, criterion9);
    guarded(10, criterion10);
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
