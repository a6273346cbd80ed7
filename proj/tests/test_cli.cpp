#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "lresp/app.hpp"
#include "lresp/config.hpp"
#include "lresp/pipeline.hpp"

using namespace lresp;
namespace fs = std::filesystem;

namespace {

const double kPi = 3.141592653589793;

const char* kDoublingCfg = R"(# doubling family
[map]
T = 2*x + (eps/16)*(cos(4*pi*x) + cos(8*pi*x)/4)

[perturbation]
density = exact_one

[run]
m = 2048
m_eq = 1024
tau = 0.5
samples = 101
)";

const char* kStochCfg = R"([map]
T = 8*x + 0.0025*(sin(16*pi*x) + sin(32*pi*x)/4)
[perturbation]
kind = stochastic
gamma = symbolic
[run]
m = 1024
m_eq = 1024
tau = 5
samples = 33
)";

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("lresp_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_cfg(const fs::path& dir, const std::string& text) {
    fs::path p = dir / "run.ini";
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
    args.insert(args.begin(), "lresp");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream o, e;
    int rc = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str();
    if (err) *err = e.str();
    return rc;
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find(" = ");
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

}  // namespace

TEST(ParseConfig, EpsFamilySplitsIntoMapAndDirection) {
    RunConfig cfg = parse_config(kDoublingCfg);
    EXPECT_EQ(cfg.branches, 2);
    EXPECT_EQ(cfg.pert.kind, PerturbationSpec::Kind::deterministic);
    EXPECT_TRUE(cfg.exact_density);
    for (double x : {0.0, 0.1, 0.37, 0.9}) {
        EXPECT_NEAR(cfg.T.eval_double(x), 2 * x, 1e-15);
        double s = (std::cos(4 * kPi * x) + std::cos(8 * kPi * x) / 4) / 16;
        EXPECT_NEAR(cfg.pert.S.eval_double(x), s, 1e-15);
    }
    EXPECT_EQ(cfg.run.m, 2048);
    EXPECT_EQ(cfg.run.equilibrium_m(), 1024);
}

TEST(ParseConfig, EightBranchMap) {
    RunConfig cfg = parse_config(kStochCfg);
    EXPECT_EQ(cfg.branches, 8);
    EXPECT_EQ(cfg.map().degree(), 8);
    EXPECT_TRUE(cfg.pert.gamma_symbolic);
}

TEST(ParseConfig, ExplicitEndpoints) {
    RunConfig cfg = parse_config("[map]\nT = 2*x\nendpoints = 0, 0.5, 1\n");
    EXPECT_EQ(cfg.branches, 2);
    EXPECT_EQ(cfg.map().branches()[1].domain.lo, 0.5);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\nbranches = 3\nendpoints = 0, 0.5, 1\n"), ParseError);
    // T(0.25) is not 1
    EXPECT_THROW(parse_config("[map]\nT = 2*x\nendpoints = 0, 0.25, 1\n"), ParseError);
}

TEST(ParseConfig, MalformedExpressionReportsPosition) {
    try {
        parse_config("[map]\nT = sin(\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2);
        EXPECT_GE(e.pos, 5);
    }
}

TEST(ParseConfig, StructuralErrors) {
    EXPECT_THROW(parse_config("T = 2*x\n"), ParseError);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\n[bogus]\n"), ParseError);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\nfoo = 1\n"), ParseError);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\nT = 3*x\n"), ParseError);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\n[run]\nm = abc\n"), ParseError);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\n[run]\ntau = -1\n"), ParseError);
    EXPECT_THROW(parse_config("[map]\nT = 2*x\n[perturbation]\nkernel = gauss\n"), ParseError);
    EXPECT_THROW(parse_config("[run]\nm = 8\n"), ParseError);
    try {
        parse_config("[map]\nT = 2*x\n[run]\nm = 12x\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 4);
        EXPECT_EQ(e.pos, 7);
    }
}

TEST(ParseConfig, RejectsNonExpandingMap) {
    EXPECT_THROW(parse_config("[map]\nT = 2*x + 0.2*sin(2*pi*x)\n"), NotExpanding);
    // T(0) must be 0
    EXPECT_THROW(parse_config("[map]\nT = 2*x + 0.1\nbranches = 2\n"), ParseError);
}

TEST(ParseConfig, KernelSetsNumericGamma) {
    RunConfig cfg = parse_config("[map]\nT = 2*x\n[perturbation]\nkernel = uniform\n");
    EXPECT_FALSE(cfg.pert.gamma_symbolic);
    EXPECT_EQ(cfg.pert.gamma, 0.25);
    RunConfig c2 = parse_config("[map]\nT = 2*x\n[perturbation]\ngamma = 0.125\n");
    EXPECT_EQ(c2.pert.gamma, 0.125);
}

TEST(Cli, ResponseWritesArtifactsAndMatchesExactFormula) {
    fs::path dir = temp_dir("resp");
    fs::path cfg = write_cfg(dir, kDoublingCfg);
    std::string out;
    ASSERT_EQ(cli({"response", "--config", cfg.string(), "--out", (dir / "o").string()}, &out), 0) << out;
    auto kv = parse_kv(slurp(dir / "o" / "certificate.txt"));
    double total = std::stod(kv.at("response.total"));
    EXPECT_LE(total, 0.5);
    std::istringstream csv(slurp(dir / "o" / "response.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "x,value");
    int rows = 0;
    double err = 0;
    while (std::getline(csv, line)) {
        double x = std::stod(line.substr(0, line.find(','))), v = std::stod(line.substr(line.find(',') + 1));
        err = std::max(err, std::fabs(v - (3 * kPi * std::sin(2 * kPi * x) + kPi * std::sin(4 * kPi * x)) / 16));
        ++rows;
    }
    EXPECT_EQ(rows, 101);
    EXPECT_LE(err, total);
}

TEST(Cli, TauTooSmallExitsOneButEmitsCertificate) {
    fs::path dir = temp_dir("tau");
    fs::path cfg = write_cfg(dir, kDoublingCfg);
    EXPECT_EQ(cli({"response", "--config", cfg.string(), "--tau", "1e-9", "--out", (dir / "o").string()}), 1);
    auto kv = parse_kv(slurp(dir / "o" / "certificate.txt"));
    EXPECT_TRUE(kv.count("response.total"));
    EXPECT_NE(slurp(dir / "o" / "audit.log").find("total exceeds tau"), std::string::npos);
}

TEST(Cli, AuditCoversEveryNumericCertificateEntry) {
    fs::path dir = temp_dir("audit");
    fs::path cfg = write_cfg(dir, kStochCfg);
    ASSERT_EQ(cli({"response", "--config", cfg.string(), "--out", (dir / "o").string()}), 0);
    auto kv = parse_kv(slurp(dir / "o" / "certificate.txt"));
    std::map<std::string, std::string> logged;
    std::istringstream log(slurp(dir / "o" / "audit.log"));
    std::string line;
    while (std::getline(log, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (int k = 0; k < 3; ++k) {
            auto c = line.find(", ", start);
            ASSERT_NE(c, std::string::npos) << line;
            f.push_back(line.substr(start, c - start));
            start = c + 2;
        }
        f.push_back(line.substr(start));
        logged[f[0]] = f[2];
    }
    int numeric = 0;
    for (const auto& [k, v] : kv) {
        char* end = nullptr;
        std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') continue;
        ++numeric;
        ASSERT_TRUE(logged.count(k)) << k;
        EXPECT_EQ(logged[k], v) << k;
    }
    EXPECT_GT(numeric, 40);
    // symbolic gamma is carried through
    EXPECT_EQ(kv.at("perturbation.gamma"), "symbolic");
    EXPECT_EQ(kv.at("response.total_symbolic"), kv.at("response.total") + "*gamma");
    EXPECT_TRUE(fs::exists(dir / "o" / "density.csv"));
}

TEST(Cli, RunsAreBitIdentical) {
    fs::path dir = temp_dir("det");
    fs::path cfg = write_cfg(dir, kStochCfg);
    ASSERT_EQ(cli({"response", "--config", cfg.string(), "--out", (dir / "a").string(), "--threads", "1"}), 0);
    ASSERT_EQ(cli({"response", "--config", cfg.string(), "--out", (dir / "b").string(), "--threads", "4"}), 0);
    for (const char* f : {"certificate.txt", "response.csv", "density.csv", "audit.log"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    set_threads(0);
}

TEST(Cli, UpstreamErrorGivesNonzeroExitAndPartialAudit) {
    fs::path dir = temp_dir("err");
    std::string text = std::string(kDoublingCfg) + "n1_cap = 1\nlambda2_target = 1e-12\n";
    fs::path cfg = write_cfg(dir, text);
    std::string err;
    EXPECT_EQ(cli({"certify", "--config", cfg.string(), "--out", (dir / "o").string()}, nullptr, &err), 2);
    std::string audit = slurp(dir / "o" / "audit.log");
    EXPECT_NE(audit.find("ly.M, "), std::string::npos);
    EXPECT_NE(audit.find("# error:"), std::string::npos);
    EXPECT_NE(err.find("error"), std::string::npos);
}

TEST(Cli, BadArgumentsAndBadConfig) {
    fs::path dir = temp_dir("args");
    EXPECT_NE(cli({}), 0);
    EXPECT_NE(cli({"response"}), 0);
    EXPECT_NE(cli({"response", "--config", (dir / "missing.ini").string()}), 0);
    fs::path bad = write_cfg(dir, "[map]\nT = sin(\n");
    std::string err;
    EXPECT_EQ(cli({"certify", "--config", bad.string(), "--out", (dir / "o").string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("line 2"), std::string::npos);
}

TEST(Cli, CertifyAndExportStages) {
    fs::path dir = temp_dir("stages");
    fs::path cfg = write_cfg(dir, kDoublingCfg);
    ASSERT_EQ(cli({"certify", "--config", cfg.string(), "--out", (dir / "c").string()}), 0);
    auto kv = parse_kv(slurp(dir / "c" / "certificate.txt"));
    EXPECT_EQ(kv.at("ly.M"), "1");
    EXPECT_LT(std::stod(kv.at("equilibrium.rho")), 0.05);
    EXPECT_FALSE(kv.count("response.total"));
    ASSERT_EQ(cli({"export-operator", "--config", cfg.string(), "--m", "16", "--out", (dir / "e").string()}), 0);
    std::istringstream op(slurp(dir / "e" / "operator.csv"));
    DiscretizedOperator imp = import_operator(op);
    EXPECT_EQ(imp.m, 16);
    ASSERT_EQ(cli({"export-operator", "--config", cfg.string(), "--m", "16", "--kind", "c1", "--out",
                   (dir / "e1").string()}),
              0);
    EXPECT_NE(slurp(dir / "e1" / "operator.csv").find("# kind = c1"), std::string::npos);
    ASSERT_EQ(cli({"density", "--config", cfg.string(), "--m", "256", "--out", (dir / "d").string()}), 0);
    auto dk = parse_kv(slurp(dir / "d" / "certificate.txt"));
    EXPECT_EQ(std::stod(dk.at("density.err_c1")), 0.0);
}
