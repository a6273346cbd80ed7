#pragma once

// Run configuration: sections of "key = value" lines.
//
//   [map]
//   T = 8*x + 0.0025*(sin(16*pi*x) + sin(32*pi*x)/4)
//   branches = 8                  # optional, default round(T(1) - T(0))
//   endpoints = 0, 0.5, 1         # optional, explicit branch domains
//
//   [perturbation]
//   kind = stochastic             # or deterministic
//   gamma = symbolic              # or a number; or kernel = uniform
//   S = ...                       # deterministic direction, or put eps in T
//   density = exact_one           # deterministic: exact_one or computed
//
//   [run]
//   m = 65536
//   m_eq = 4096  tau = 0.05  n1_cap = 24  lambda2_target = 1e-3
//   samples = 1000  depth = 12  l_star = 0
//
// '#' starts a comment. A map expression containing eps is read as a family
// T_eps: T = T_eps at eps = 0 and S = dT_eps/deps at eps = 0.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lresp/errors.hpp"
#include "lresp/expr.hpp"
#include "lresp/map_model.hpp"
#include "lresp/response.hpp"

namespace lresp {

struct RunSettings {
    int m = 4096;
    int m_eq = 0;  // 0: min(m, 4096)
    double tau = 0.05;
    int n1_cap = 24;
    double lambda2_target = 1e-3;
    int samples = 1000;
    int depth = 12;
    int l_star = 0;
    int density_cells = 0;

    int equilibrium_m() const { return m_eq > 0 ? m_eq : std::min(m, 4096); }
};

struct RunConfig {
    std::string map_text;
    Expr T;
    int branches = 0;
    std::vector<double> endpoints;  // empty: equal branches
    PerturbationSpec pert;
    bool exact_density = false;
    RunSettings run;

    MapModel map() const {
        if (!endpoints.empty()) return MapModel(T, endpoints, map_text);
        return MapModel::uniform(T, branches, map_text);
    }
};

namespace cfg_detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Value {
    std::string text;
    int line = 0;
    int col = 0;  // 0-based column of the first character of text
};

inline long parse_int(const Value& v) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v.text, &pos);
    } catch (const std::exception&) {
        throw ParseError("expected an integer, got '" + v.text + "'", v.line, v.col + 1);
    }
    if (pos != v.text.size()) throw ParseError("trailing characters in integer '" + v.text + "'", v.line, v.col + 1 + static_cast<int>(pos));
    return x;
}

inline double parse_real(const Value& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v.text, &pos);
    } catch (const std::exception&) {
        throw ParseError("expected a number, got '" + v.text + "'", v.line, v.col + 1);
    }
    if (pos != v.text.size()) throw ParseError("trailing characters in number '" + v.text + "'", v.line, v.col + 1 + static_cast<int>(pos));
    return x;
}

}  // namespace cfg_detail

// Parses and validates; the map is certified expanding on the way.
inline RunConfig parse_config(const std::string& text) {
    using cfg_detail::Value;
    std::map<std::string, std::map<std::string, Value>> sec;
    std::istringstream in(text);
    std::string line, current;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        auto hash = line.find('#');
        std::string body = hash == std::string::npos ? line : line.substr(0, hash);
        std::string t = cfg_detail::trim(body);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", ln, static_cast<int>(body.find('[')) + 1);
            current = cfg_detail::trim(t.substr(1, t.size() - 2));
            if (current != "map" && current != "perturbation" && current != "run")
                throw ParseError("unknown section [" + current + "]", ln, static_cast<int>(body.find('[')) + 1);
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", ln, static_cast<int>(body.find_first_not_of(" \t")) + 1);
        if (current.empty()) throw ParseError("key outside of any section", ln, 1);
        std::string key = cfg_detail::trim(body.substr(0, eq));
        std::string raw = body.substr(eq + 1);
        auto off = raw.find_first_not_of(" \t");
        Value v{cfg_detail::trim(raw), ln, static_cast<int>(eq + 1 + (off == std::string::npos ? 0 : off))};
        if (key.empty()) throw ParseError("empty key", ln, static_cast<int>(eq) + 1);
        if (sec[current].count(key)) throw ParseError("duplicate key '" + key + "'", ln, 1);
        sec[current][key] = v;
    }
    auto get = [&](const std::string& s, const std::string& k) -> const Value* {
        auto it = sec.find(s);
        if (it == sec.end()) return nullptr;
        auto jt = it->second.find(k);
        return jt == it->second.end() ? nullptr : &jt->second;
    };
    auto check_keys = [&](const std::string& s, std::initializer_list<const char*> allowed) {
        auto it = sec.find(s);
        if (it == sec.end()) return;
        for (const auto& [k, v] : it->second) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) throw ParseError("unknown key '" + k + "' in [" + s + "]", v.line, 1);
        }
    };
    check_keys("map", {"T", "branches", "endpoints"});
    check_keys("perturbation", {"kind", "gamma", "kernel", "S", "density"});
    check_keys("run", {"m", "m_eq", "tau", "n1_cap", "lambda2_target", "samples", "depth", "l_star", "density_cells"});

    RunConfig cfg;
    const Value* T = get("map", "T");
    if (!T) throw ParseError("missing [map] T", ln, 1);
    Expr family = parse_expr(T->text, T->line, T->col);
    cfg.map_text = T->text;
    cfg.T = family.subst_eps(0.0);
    std::optional<Expr> S_from_family;
    if (family.depends_on(Var::eps)) S_from_family = family.diff(Var::eps).subst_eps(0.0);

    if (const Value* b = get("map", "branches")) {
        cfg.branches = static_cast<int>(cfg_detail::parse_int(*b));
    } else {
        double span = cfg.T.eval_double(1.0) - cfg.T.eval_double(0.0);
        cfg.branches = static_cast<int>(std::lround(span));
    }

    if (const Value* e = get("map", "endpoints")) {
        std::size_t start = 0;
        while (start <= e->text.size()) {
            std::size_t comma = e->text.find(',', start);
            std::size_t stop = comma == std::string::npos ? e->text.size() : comma;
            std::string item = e->text.substr(start, stop - start);
            auto lead = item.find_first_not_of(" \t");
            Value iv{cfg_detail::trim(item), e->line, e->col + static_cast<int>(start + (lead == std::string::npos ? 0 : lead))};
            cfg.endpoints.push_back(cfg_detail::parse_real(iv));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (get("map", "branches") && static_cast<int>(cfg.endpoints.size()) != cfg.branches + 1)
            throw ParseError("endpoints and branches disagree", e->line, 1);
        cfg.branches = static_cast<int>(cfg.endpoints.size()) - 1;
    }

    // perturbation
    std::string kind = S_from_family ? "deterministic" : "stochastic";
    if (const Value* k = get("perturbation", "kind")) {
        kind = k->text;
        if (kind != "stochastic" && kind != "deterministic")
            throw ParseError("kind must be stochastic or deterministic", k->line, k->col + 1);
    }
    if (kind == "stochastic") {
        const Value* g = get("perturbation", "gamma");
        const Value* kern = get("perturbation", "kernel");
        if (g && kern) throw ParseError("give either gamma or kernel", kern->line, 1);
        if (kern) {
            try {
                cfg.pert = PerturbationSpec::stochastic(kernel_gamma(kern->text), false, kern->text);
            } catch (const DomainError& e) {
                throw ParseError(e.what(), kern->line, kern->col + 1);
            }
        } else if (!g || g->text == "symbolic") {
            cfg.pert = PerturbationSpec::stochastic(1.0, true);
        } else {
            double gv = cfg_detail::parse_real(*g);
            if (!(gv > 0)) throw ParseError("gamma must be positive", g->line, g->col + 1);
            cfg.pert = PerturbationSpec::stochastic(gv, false);
        }
    } else {
        const Value* S = get("perturbation", "S");
        if (S && S_from_family) throw ParseError("S given twice (eps in T and [perturbation] S)", S->line, 1);
        if (S) {
            Expr se = parse_expr(S->text, S->line, S->col);
            if (se.depends_on(Var::eps)) throw ParseError("S must not depend on eps", S->line, S->col + 1);
            cfg.pert = PerturbationSpec::deterministic(se, S->text);
        } else if (S_from_family) {
            cfg.pert = PerturbationSpec::deterministic(*S_from_family, "d/deps " + T->text);
        } else {
            throw ParseError("deterministic perturbation needs S or eps in T", ln, 1);
        }
        std::string dens = "exact_one";
        if (const Value* d = get("perturbation", "density")) {
            dens = d->text;
            if (dens != "exact_one" && dens != "computed")
                throw ParseError("density must be exact_one or computed", d->line, d->col + 1);
        }
        cfg.exact_density = dens == "exact_one";
    }

    auto set_int = [&](const char* k, int& dst, long lo) {
        if (const Value* v = get("run", k)) {
            long x = cfg_detail::parse_int(*v);
            if (x < lo) throw ParseError(std::string(k) + " must be at least " + std::to_string(lo), v->line, v->col + 1);
            dst = static_cast<int>(x);
        }
    };
    auto set_real = [&](const char* k, double& dst) {
        if (const Value* v = get("run", k)) {
            double x = cfg_detail::parse_real(*v);
            if (!(x > 0)) throw ParseError(std::string(k) + " must be positive", v->line, v->col + 1);
            dst = x;
        }
    };
    set_int("m", cfg.run.m, 3);
    set_int("m_eq", cfg.run.m_eq, 3);
    set_int("n1_cap", cfg.run.n1_cap, 1);
    set_int("samples", cfg.run.samples, 2);
    set_int("depth", cfg.run.depth, 1);
    set_int("l_star", cfg.run.l_star, 0);
    set_int("density_cells", cfg.run.density_cells, 0);
    set_real("tau", cfg.run.tau);
    set_real("lambda2_target", cfg.run.lambda2_target);

    // fails early on a bad branch structure or a non-expanding map
    MapModel map = [&] {
        try {
            return cfg.map();
        } catch (const DomainError& err) {
            throw ParseError(err.what(), T->line, T->col + 1);
        }
    }();
    certify_expanding(map, std::min(cfg.run.depth, 8));
    return cfg;
}

}  // namespace lresp
