#pragma once

// Batch pipeline: certify -> density -> response, and operator export.
//
// Artifacts in the output directory:
//   certificate.txt   "key = value" lines, numbers as %.17g
//   response.csv      "x,value" samples of the approximate response
//   density.csv       "x,value" samples of the computed density (when computed)
//   audit.log         "id, formula_ref, value, inputs" for every certificate number
//   operator.csv      export-operator only
// The audit log is written even when a stage fails.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lresp/certificates.hpp"
#include "lresp/config.hpp"
#include "lresp/density.hpp"
#include "lresp/map_model.hpp"
#include "lresp/operator.hpp"
#include "lresp/response.hpp"

namespace lresp {

enum class Stage { certify, density, response, export_operator };

inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Collects the certificate and its audit trail side by side, so every number
// in the certificate has a log line.
class AuditTrail {
public:
    using Inputs = std::vector<std::pair<std::string, double>>;

    void value(const std::string& id, const std::string& formula, double v, const Inputs& in = {}) {
        cert_ << id << " = " << fmt_num(v) << "\n";
        std::string f = formula;
        std::replace(f.begin(), f.end(), ',', ';');  // keep four fields per line
        log_ << id << ", " << f << ", " << fmt_num(v) << ", ";
        for (std::size_t i = 0; i < in.size(); ++i) log_ << (i ? " " : "") << in[i].first << "=" << fmt_num(in[i].second);
        log_ << "\n";
    }
    void info(const std::string& id, const std::string& text) { cert_ << id << " = " << text << "\n"; }
    void note(const std::string& text) { log_ << "# " << text << "\n"; }

    std::string certificate() const { return cert_.str(); }
    std::string log() const { return log_.str(); }

private:
    std::ostringstream cert_, log_;
};

struct PipelineResult {
    int exit_code = 0;
    std::string certificate;
    std::string audit;
    std::string response_csv;
    std::string density_csv;
    std::string operator_csv;
    std::string error;
    std::optional<ResponseCertificate> response;
};

inline std::string sample_csv(const std::function<double(double)>& f, int samples) {
    std::string out = "x,value\n";
    char buf[96];
    for (int j = 0; j < samples; ++j) {
        double x = static_cast<double>(j) / (samples - 1);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, f(x));
        out += buf;
    }
    return out;
}

namespace pipe_detail {

inline void record_ly(AuditTrail& a, const DerivativeBounds& db, const LYConstants& ly, int depth) {
    a.value("map.lambda", "sup 1/T' over refined cells", db.lambda, {{"depth", depth}});
    a.value("map.B", "sup |T''/T'^2| over refined cells", db.B, {{"depth", depth}});
    a.value("map.T3", "sup |T'''/T'^3| over refined cells", db.T3, {{"depth", depth}});
    AuditTrail::Inputs lb{{"lambda", ly.lambda}, {"B", ly.B}};
    a.value("ly.M", "1 + B/(1-lambda)", ly.M, lb);
    a.value("ly.C", "lambda B + (1-lambda) M", ly.C, {{"lambda", ly.lambda}, {"B", ly.B}, {"M", ly.M}});
    a.value("ly.Z", "distortion limit of the iterates", ly.Z, lb);
    a.value("ly.D", "lambda M + C + 3 max(1,B^2) M + M T3", ly.D,
            {{"lambda", ly.lambda}, {"B", ly.B}, {"M", ly.M}, {"C", ly.C}, {"T3", ly.T3}});
    a.value("ly.Bd", "B M/(1-lambda)", ly.Bd, {{"lambda", ly.lambda}, {"B", ly.B}, {"M", ly.M}});
    a.value("ly.C_iter", "Bd + M", ly.C_iter, {{"Bd", ly.Bd}, {"M", ly.M}});
    a.value("ly.D_iter", "max(3 lambda B M/(1-lambda), 3 M (B/(1-lambda))^2 + M Z) + M lambda + C_iter", ly.D_iter,
            {{"lambda", ly.lambda}, {"B", ly.B}, {"M", ly.M}, {"Z", ly.Z}, {"C_iter", ly.C_iter}});
}

inline void record_discrete_ly(AuditTrail& a, const LYConstants& ly, int m) {
    PartitionScheme sc(m);
    DiscreteLY best;
    for (int k = 1; k <= 60; ++k) {
        best = discrete_ly(ly, sc, k);
        if (best.usable) break;
    }
    AuditTrail::Inputs in{{"k", best.k}, {"m", m}, {"lambda", ly.lambda}, {"B", ly.B}, {"M", ly.M}, {"Z", ly.Z}};
    a.value("discrete_ly.k", "smallest k with lambda_eta < 1 and mu_eta < 1", best.k, {{"m", m}});
    a.value("discrete_ly.lambda_eta", "uniform C1 contraction of the k-th discrete iterate", best.lambda_eta, in);
    a.value("discrete_ly.C_eta", "uniform C1 sup coefficient of the k-th discrete iterate", best.C_eta, in);
    a.value("discrete_ly.mu_eta", "uniform C2 contraction of the k-th discrete iterate", best.mu_eta, in);
    a.value("discrete_ly.D_eta", "uniform C2 C1 coefficient of the k-th discrete iterate", best.D_eta, in);
}

inline void record_equilibrium(AuditTrail& a, const EquilibriumCertificate& eq) {
    a.value("equilibrium.m", "coarse partition size", eq.m_eq);
    a.value("equilibrium.n1", "power with the best certified rate rho^(1/n)", eq.n1, {{"m", eq.m_eq}});
    a.value("equilibrium.lambda2", "power profile bound C_n1 on zero-average nodal functions", eq.lambda2,
            {{"n1", eq.n1}, {"m", eq.m_eq}});
    a.info("equilibrium.method", eq.method);
    AuditTrail::Inputs pd{{"n1", eq.n1}, {"lambda2", eq.lambda2}, {"M", eq.ly.M}, {"lambda", eq.ly.lambda}};
    a.value("equilibrium.mat11", "M lambda^n1", eq.mat[0][0], pd);
    a.value("equilibrium.mat12", "C_iter", eq.mat[0][1], pd);
    a.value("equilibrium.mat21", "strong coefficient of the power distance (" + eq.method + ")", eq.mat[1][0], pd);
    a.value("equilibrium.mat22", "lambda2 + weak coefficient of the power distance", eq.mat[1][1], pd);
    AuditTrail::Inputs mt{{"a11", eq.mat[0][0]}, {"a12", eq.mat[0][1]}, {"a21", eq.mat[1][0]}, {"a22", eq.mat[1][1]}};
    a.value("equilibrium.rho", "inflated spectral radius verified by left and right eigen-inequalities", eq.rho, mt);
    a.value("equilibrium.a", "left vector (1,1)(rho I - A)^-1 normalized", eq.a, mt);
    a.value("equilibrium.b", "left vector (1,1)(rho I - A)^-1 normalized", eq.b, mt);
    a.value("equilibrium.x", "right vector (rho I - A)^-1 (1,1) normalized", eq.x, mt);
    a.value("equilibrium.y", "right vector (rho I - A)^-1 (1,1) normalized", eq.y, mt);
    a.value("equilibrium.C1", "sup-norm block constant from the eigen-inequalities", eq.C1,
            {{"rho", eq.rho}, {"a", eq.a}, {"b", eq.b}, {"x", eq.x}, {"y", eq.y}});
    a.value("equilibrium.C1_strong", "C1-norm block constant from the eigen-inequalities", eq.C1_strong,
            {{"rho", eq.rho}, {"a", eq.a}, {"b", eq.b}, {"x", eq.x}, {"y", eq.y}});
    a.value("equilibrium.resolvent", "sum over r < n1 of start pair plus block tail rho/(1-rho)", resolvent_bound(eq),
            {{"rho", eq.rho}, {"n1", eq.n1}, {"C1_strong", eq.C1_strong}});
}

inline void record_density(AuditTrail& a, const DensityResult& d, int m) {
    a.value("density.m", "fine partition size", m);
    a.value("density.iterations", "floating iterations until stall", d.iterations);
    a.value("density.residual_c1", "|dc0| + 2 max|dd| + enclosure radius", d.residual_c1, {{"m", m}});
    a.value("density.second_derivative", "sup |(L h_eta)''| over cells", d.second_derivative, {{"m", m}});
    a.value("density.mass_defect", "|int h_eta - 1|", d.mass_defect);
    a.value("density.err_c1", "R (residual + 3 eta sup|(L h)''|) + mass_defect C_iter M", d.err_c1,
            {{"R", d.resolvent}, {"residual", d.residual_c1}, {"second", d.second_derivative},
             {"mass_defect", d.mass_defect}});
}

}  // namespace pipe_detail

struct PipelineOptions {
    Stage stage = Stage::response;
    SchemeKind export_kind = SchemeKind::c0;
};

// Runs the requested stage. Exit code: 0 on success (for response: total <= tau),
// 1 when the response total exceeds tau, 2 on any error.
inline PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& opt = {}) {
    PipelineResult res;
    AuditTrail a;
    const RunSettings& rs = cfg.run;
    const bool stoch = cfg.pert.kind == PerturbationSpec::Kind::stochastic;
    const bool symbolic = stoch && cfg.pert.gamma_symbolic;
    try {
        MapModel map = cfg.map();
        a.info("map.T", cfg.map_text);
        a.value("map.branches", "number of full branches", map.degree());
        char hb[24];
        std::snprintf(hb, sizeof hb, "%016" PRIx64, map.hash());
        a.info("map.hash", hb);

        if (opt.stage == Stage::export_operator) {
            DiscretizedOperator op = assemble(map, PartitionScheme(rs.m), opt.export_kind);
            a.value("operator.m", "partition size", rs.m);
            a.info("operator.kind", kind_name(op.kind));
            a.value("operator.nnz", "stored entries", static_cast<double>(op.nnz()));
            a.value("operator.row_rad_max", "max over rows of the summed entry radii", op.row_rad_max());
            std::ostringstream os;
            export_operator(op, os);
            res.operator_csv = os.str();
            res.certificate = a.certificate();
            res.audit = a.log();
            return res;
        }

        DerivativeBounds db = certify_expanding(map, rs.depth);
        LYConstants ly = ly_constants(db);
        pipe_detail::record_ly(a, db, ly, rs.depth);
        pipe_detail::record_discrete_ly(a, ly, rs.m);

        const int m_eq = rs.equilibrium_m();
        DiscretizedOperator op_eq = assemble(map, PartitionScheme(m_eq), SchemeKind::c0);
        EquilibriumCertificate eq = equilibrium(op_eq, ly, {rs.n1_cap, rs.lambda2_target});
        pipe_detail::record_equilibrium(a, eq);
        if (opt.stage == Stage::certify) {
            res.certificate = a.certificate();
            res.audit = a.log();
            return res;
        }

        const bool need_density = opt.stage == Stage::density || stoch || !cfg.exact_density;
        std::optional<DensityResult> dens;
        if (need_density) {
            DiscretizedOperator op1 = assemble(map, PartitionScheme(rs.m), SchemeKind::c1);
            DensityOptions dopt;
            dopt.sup_cells = rs.density_cells;
            dens = fixed_density(op1, map, eq, dopt);
            pipe_detail::record_density(a, *dens, rs.m);
            const C1Primitive& h = dens->h;
            res.density_csv = sample_csv([&](double x) { return eval_nodal(h, Interval(x), 0).mid(); }, rs.samples);
        }
        if (opt.stage == Stage::density) {
            res.certificate = a.certificate();
            res.audit = a.log();
            return res;
        }

        PartitionScheme sc(rs.m);
        LhatResult lh;
        if (stoch) {
            lh = lhat_stochastic(*dens, cfg.pert, ly);
            a.info("perturbation.kind", "stochastic");
            if (symbolic) {
                a.info("perturbation.gamma", "symbolic");
                a.note("gamma is symbolic: response values below are per unit gamma");
            } else {
                a.value("perturbation.gamma", cfg.pert.kernel.empty() ? "given" : "first absolute moment of the " + cfg.pert.kernel + " kernel",
                        cfg.pert.gamma);
            }
        } else {
            DensityModel model = dens ? DensityModel::from(*dens, ly) : DensityModel::constant_one();
            a.info("perturbation.kind", "deterministic");
            a.info("perturbation.S", cfg.pert.S_source);
            a.info("perturbation.density", model.source);
            lh = lhat_deterministic(map, cfg.pert, model, ly, sc, rs.density_cells);
        }
        const std::string gsuf = symbolic ? " (times gamma)" : "";
        a.value("lhat.G1", "bound on ||L^h||_C1" + gsuf, lh.G1, {{"D_iter", ly.D_iter}, {"C_iter", ly.C_iter}, {"M", ly.M}});
        a.value("lhat.G0", "bound on ||L^h||_inf" + gsuf, lh.G0);
        a.value("lhat.approx_err", "bound on ||f_eta - L^h||_inf" + gsuf, lh.approx_err, {{"m", rs.m}});

        DiscretizedOperator op = assemble(map, sc, SchemeKind::c0);
        ResponseOptions ropt;
        ropt.l_star = rs.l_star;
        ResponseCertificate rc = error_budget(eq, op, ly, lh, ropt);
        rc.gamma = cfg.pert.gamma;
        rc.gamma_symbolic = symbolic;

        a.value("response.m", "fine partition size", rc.m);
        a.value("response.l_star", "number of summed powers, minimizing the total", rc.l_star, {{"n1", eq.n1}});
        a.value("response.summand1", "tail: sum over r of block bound rho^k/(1-rho)" + gsuf, rc.summand1,
                {{"rho", eq.rho}, {"n1", eq.n1}, {"G1", lh.G1}, {"G0", lh.G0}, {"l", rc.l_star}});
        a.value("response.summand2", "M sum_i (l-1-i) (3 eta (lambda M |x_i'| + B M |x_i|) + eps |x_i|)" + gsuf, rc.summand2,
                {{"M", ly.M}, {"lambda", ly.lambda}, {"B", ly.B}, {"eps", op.row_rad_max()}, {"l", rc.l_star}});
        a.value("response.summand3", "M l approx_err" + gsuf, rc.summand3,
                {{"M", ly.M}, {"l", rc.l_star}, {"approx_err", lh.approx_err}});
        a.value("response.chain", "3 x coefficient rounding of the summed chain" + gsuf, rc.chain);
        a.value("response.total", "summand1 + summand2 + summand3 + chain" + gsuf, rc.total,
                {{"s1", rc.summand1}, {"s2", rc.summand2}, {"s3", rc.summand3}, {"chain", rc.chain}});
        if (symbolic) a.info("response.total_symbolic", fmt_num(rc.total) + "*gamma");
        a.value("response.tau", "configured target", rs.tau);
        for (std::size_t k = 0; k < rc.steps.size(); ++k) {
            const ChainStep& st = rc.steps[k];
            const std::string p = "step." + std::to_string(k);
            a.value(p + ".sup", "sup of L_delta^k f_eta" + gsuf, st.sup);
            a.value(p + ".deriv", "sup of (L_delta^k f_eta)'" + gsuf, st.deriv);
            a.value(p + ".err", "coefficient rounding of x_k" + gsuf, st.err);
        }
        const NodalFunction& h = rc.h_appr;
        res.response_csv = sample_csv([&](double x) { return eval_nodal(h, Interval(x), 0).mid(); }, rs.samples);
        res.exit_code = rc.total <= rs.tau ? 0 : 1;
        if (res.exit_code) a.note("total exceeds tau");
        res.response = std::move(rc);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.error = e.what();
        a.note(std::string("error: ") + e.what());
    }
    res.certificate = a.certificate();
    res.audit = a.log();
    return res;
}

// Writes the non-empty artifacts of a run into dir.
inline void write_artifacts(const PipelineResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        if (text.empty()) return;
        std::ofstream f(dir / name, std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
    };
    put("certificate.txt", r.certificate);
    put("audit.log", r.audit);
    put("response.csv", r.response_csv);
    put("density.csv", r.density_csv);
    put("operator.csv", r.operator_csv);
}

}  // namespace lresp
