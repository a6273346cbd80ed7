#include "lresp/app.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lresp/config.hpp"
#include "lresp/parallel.hpp"
#include "lresp/pipeline.hpp"

namespace lresp {

namespace {

struct Flags {
    std::string config;
    std::string out = "lresp_out";
    int m = 0;
    double tau = 0.0;
    int samples = 0;
    int threads = 0;
    std::string kind = "c0";
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--m", f.m, "partition size (overrides [run] m)")->check(CLI::Range(3, 1 << 26));
    sub->add_option("--tau", f.tau, "target budget (overrides [run] tau)")->check(CLI::PositiveNumber);
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--samples", f.samples, "CSV sample count")->check(CLI::Range(2, 1 << 24));
    sub->add_option("--threads", f.threads, "worker threads (0: hardware)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Certified linear response of expanding circle maps"};
    app.require_subcommand(1);
    Flags f;
    CLI::App* certify = app.add_subcommand("certify", "Lasota-Yorke and equilibrium constants");
    CLI::App* density = app.add_subcommand("density", "invariant density with C1 error");
    CLI::App* response = app.add_subcommand("response", "linear response with the full error budget");
    CLI::App* exporter = app.add_subcommand("export-operator", "write the discretized operator");
    for (CLI::App* s : {certify, density, response, exporter}) add_common(s, f);
    exporter->add_option("--kind", f.kind, "c0 (nodal) or c1 (primitive)")->check(CLI::IsMember({"c0", "c1"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    PipelineOptions opt;
    if (*certify) opt.stage = Stage::certify;
    if (*density) opt.stage = Stage::density;
    if (*response) opt.stage = Stage::response;
    if (*exporter) {
        opt.stage = Stage::export_operator;
        opt.export_kind = f.kind == "c1" ? SchemeKind::c1 : SchemeKind::c0;
    }
    if (f.threads > 0) set_threads(f.threads);

    RunConfig cfg;
    try {
        std::ifstream in(f.config, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = parse_config(ss.str());
    } catch (const std::exception& e) {
        err << f.config << ": " << e.what() << "\n";
        return 2;
    }
    if (f.m > 0) cfg.run.m = f.m;
    if (f.tau > 0) cfg.run.tau = f.tau;
    if (f.samples > 0) cfg.run.samples = f.samples;

    PipelineResult r = run_pipeline(cfg, opt);
    try {
        write_artifacts(r, f.out);
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 2;
    }
    if (!r.error.empty()) err << "error: " << r.error << "\n";
    if (r.response) {
        out << "total = " << fmt_num(r.response->total) << (r.response->gamma_symbolic ? " * gamma" : "")
            << " (l* = " << r.response->l_star << ", tau = " << fmt_num(cfg.run.tau) << ")\n";
    }
    out << "artifacts in " << f.out << "\n";
    return r.exit_code;
}

}  // namespace lresp
