#pragma once

// Small arithmetic-expression language in x and eps, with symbolic
// differentiation and interval evaluation.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?        exponent: integer constant
//   primary := number | 'x' | 'eps' | 'pi' | fn '(' expr ')' | '(' expr ')'
//   fn      := 'sin' | 'cos' | 'exp'

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <string>

#include "lresp/errors.hpp"
#include "lresp/interval.hpp"

namespace lresp {

enum class Var { x, eps };

class Expr {
public:
    enum class Op { constant, x, eps, add, sub, mul, div, neg, pow, sin, cos, exp };

    struct Node {
        Op op;
        Interval value;       // constant
        double dvalue = 0.0;  // constant, nearest double
        int n = 0;            // pow exponent
        std::shared_ptr<const Node> a, b;
    };

    Expr() : Expr(constant(0.0)) {}

    static Expr constant(Interval v, double nearest) {
        auto nd = std::make_shared<Node>();
        nd->op = Op::constant;
        nd->value = v;
        nd->dvalue = nearest;
        return Expr(nd);
    }
    static Expr constant(Interval v) { return constant(v, v.mid()); }
    static Expr x() { return leaf(Op::x); }
    static Expr eps() { return leaf(Op::eps); }
    static Expr pi() { return constant(pi_interval(), 3.141592653589793); }

    Op op() const { return node_->op; }
    bool is_constant() const { return node_->op == Op::constant; }
    bool is_exact(double v) const { return is_constant() && node_->value.is_point() && node_->value.lo == v; }
    const Interval& value() const { return node_->value; }

    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return folded(a.value() + b.value(), a.dval() + b.dval());
        if (a.is_exact(0)) return b;
        if (b.is_exact(0)) return a;
        return binary(Op::add, a, b);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return folded(a.value() - b.value(), a.dval() - b.dval());
        if (b.is_exact(0)) return a;
        if (a.is_exact(0)) return -b;
        return binary(Op::sub, a, b);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return folded(a.value() * b.value(), a.dval() * b.dval());
        if (a.is_exact(0) || b.is_exact(0)) return constant(0.0);
        if (a.is_exact(1)) return b;
        if (b.is_exact(1)) return a;
        return binary(Op::mul, a, b);
    }
    friend Expr operator/(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return folded(a.value() / b.value(), a.dval() / b.dval());
        if (a.is_exact(0)) return constant(0.0);
        if (b.is_exact(1)) return a;
        return binary(Op::div, a, b);
    }
    friend Expr operator-(const Expr& a) {
        if (a.is_constant()) return folded(-a.value(), -a.dval());
        if (a.op() == Op::neg) return Expr(a.node_->a);
        return unary(Op::neg, a);
    }
    static Expr pow(const Expr& a, int n) {
        if (n == 0) return constant(1.0);
        if (n == 1) return a;
        if (a.is_constant()) return folded(pow_int(a.value(), n), std::pow(a.dval(), n));
        auto nd = std::make_shared<Node>();
        nd->op = Op::pow;
        nd->n = n;
        nd->a = a.node_;
        return Expr(nd);
    }
    static Expr sin(const Expr& a) {
        if (a.is_constant()) return folded(lresp::sin(a.value()), std::sin(a.dval()));
        return unary(Op::sin, a);
    }
    static Expr cos(const Expr& a) {
        if (a.is_constant()) return folded(lresp::cos(a.value()), std::cos(a.dval()));
        return unary(Op::cos, a);
    }
    static Expr exp(const Expr& a) {
        if (a.is_constant()) return folded(lresp::exp(a.value()), std::exp(a.dval()));
        return unary(Op::exp, a);
    }

    Expr diff(Var v) const {
        const Node& nd = *node_;
        switch (nd.op) {
            case Op::constant: return constant(0.0);
            case Op::x: return constant(v == Var::x ? 1.0 : 0.0);
            case Op::eps: return constant(v == Var::eps ? 1.0 : 0.0);
            case Op::add: return A().diff(v) + B().diff(v);
            case Op::sub: return A().diff(v) - B().diff(v);
            case Op::mul: return A().diff(v) * B() + A() * B().diff(v);
            case Op::div: return A().diff(v) / B() - A() * B().diff(v) / pow(B(), 2);
            case Op::neg: return -A().diff(v);
            case Op::pow: return constant(static_cast<double>(nd.n)) * pow(A(), nd.n - 1) * A().diff(v);
            case Op::sin: return cos(A()) * A().diff(v);
            case Op::cos: return -(sin(A()) * A().diff(v));
            case Op::exp: return *this * A().diff(v);
        }
        return constant(0.0);
    }

    // Replace eps by a constant, re-simplifying on the way up.
    Expr subst_eps(double e) const {
        const Node& nd = *node_;
        switch (nd.op) {
            case Op::constant:
            case Op::x: return *this;
            case Op::eps: return constant(e);
            case Op::add: return A().subst_eps(e) + B().subst_eps(e);
            case Op::sub: return A().subst_eps(e) - B().subst_eps(e);
            case Op::mul: return A().subst_eps(e) * B().subst_eps(e);
            case Op::div: return A().subst_eps(e) / B().subst_eps(e);
            case Op::neg: return -A().subst_eps(e);
            case Op::pow: return pow(A().subst_eps(e), nd.n);
            case Op::sin: return sin(A().subst_eps(e));
            case Op::cos: return cos(A().subst_eps(e));
            case Op::exp: return exp(A().subst_eps(e));
        }
        return *this;
    }

    bool depends_on(Var v) const {
        const Node& nd = *node_;
        if (nd.op == Op::x) return v == Var::x;
        if (nd.op == Op::eps) return v == Var::eps;
        return (nd.a && Expr(nd.a).depends_on(v)) || (nd.b && Expr(nd.b).depends_on(v));
    }

    Interval eval(const Interval& x, const Interval& eps = Interval(0.0)) const { return eval_node(*node_, x, eps); }
    double eval_double(double x, double eps = 0.0) const { return evald_node(*node_, x, eps); }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    Expr A() const { return Expr(node_->a); }
    Expr B() const { return Expr(node_->b); }
    double dval() const { return node_->dvalue; }

    static Expr folded(Interval v, double nearest) {
        if (!v.contains(nearest)) nearest = v.mid();
        return constant(v, nearest);
    }
    static Expr leaf(Op op) {
        auto nd = std::make_shared<Node>();
        nd->op = op;
        return Expr(nd);
    }
    static Expr unary(Op op, const Expr& a) {
        auto nd = std::make_shared<Node>();
        nd->op = op;
        nd->a = a.node_;
        return Expr(nd);
    }
    static Expr binary(Op op, const Expr& a, const Expr& b) {
        auto nd = std::make_shared<Node>();
        nd->op = op;
        nd->a = a.node_;
        nd->b = b.node_;
        return Expr(nd);
    }

    static Interval eval_node(const Node& nd, const Interval& x, const Interval& e) {
        switch (nd.op) {
            case Op::constant: return nd.value;
            case Op::x: return x;
            case Op::eps: return e;
            case Op::add: return eval_node(*nd.a, x, e) + eval_node(*nd.b, x, e);
            case Op::sub: return eval_node(*nd.a, x, e) - eval_node(*nd.b, x, e);
            case Op::mul: return eval_node(*nd.a, x, e) * eval_node(*nd.b, x, e);
            case Op::div: return eval_node(*nd.a, x, e) / eval_node(*nd.b, x, e);
            case Op::neg: return -eval_node(*nd.a, x, e);
            case Op::pow: return pow_int(eval_node(*nd.a, x, e), nd.n);
            case Op::sin: return lresp::sin(eval_node(*nd.a, x, e));
            case Op::cos: return lresp::cos(eval_node(*nd.a, x, e));
            case Op::exp: return lresp::exp(eval_node(*nd.a, x, e));
        }
        return Interval(0.0);
    }

    static double evald_node(const Node& nd, double x, double e) {
        switch (nd.op) {
            case Op::constant: return nd.dvalue;
            case Op::x: return x;
            case Op::eps: return e;
            case Op::add: return evald_node(*nd.a, x, e) + evald_node(*nd.b, x, e);
            case Op::sub: return evald_node(*nd.a, x, e) - evald_node(*nd.b, x, e);
            case Op::mul: return evald_node(*nd.a, x, e) * evald_node(*nd.b, x, e);
            case Op::div: return evald_node(*nd.a, x, e) / evald_node(*nd.b, x, e);
            case Op::neg: return -evald_node(*nd.a, x, e);
            case Op::pow: return std::pow(evald_node(*nd.a, x, e), nd.n);
            case Op::sin: return std::sin(evald_node(*nd.a, x, e));
            case Op::cos: return std::cos(evald_node(*nd.a, x, e));
            case Op::exp: return std::exp(evald_node(*nd.a, x, e));
        }
        return 0.0;
    }

    std::shared_ptr<const Node> node_;
};

namespace detail {

// Enclosure of a decimal literal. Literals whose value is a double (integers
// below 2^53, dyadic decimals like 0.25) are exact; the rest get the two
// neighbouring doubles of the nearest one.
inline Expr decimal_literal(const std::string& text) {
    double d = std::strtod(text.c_str(), nullptr);
    std::string digits;
    int exp10 = 0;
    bool after_point = false;
    std::size_t i = 0;
    for (; i < text.size() && text[i] != 'e' && text[i] != 'E'; ++i) {
        if (text[i] == '.') {
            after_point = true;
            continue;
        }
        digits.push_back(text[i]);
        if (after_point) --exp10;
    }
    if (i < text.size()) exp10 += std::atoi(text.c_str() + i + 1);
    while (digits.size() > 1 && digits.front() == '0') digits.erase(digits.begin());
    while (digits.size() > 1 && digits.back() == '0' && exp10 < 0) {
        digits.pop_back();
        ++exp10;
    }
    if (digits.size() <= 30) {
        unsigned __int128 n = 0;
        for (char c : digits) n = n * 10 + static_cast<unsigned>(c - '0');
        bool exact = false;
        if (exp10 >= 0 && exp10 <= 15) {
            for (int k = 0; k < exp10; ++k) n *= 10;
            exact = n < (static_cast<unsigned __int128>(1) << 53);
        } else if (exp10 < 0 && exp10 >= -40) {
            unsigned __int128 p5 = 1;
            bool overflow = false;
            for (int k = 0; k < -exp10; ++k) {
                if (p5 > (~static_cast<unsigned __int128>(0)) / 5) overflow = true;
                p5 *= 5;
            }
            if (!overflow && n % p5 == 0) exact = n / p5 < (static_cast<unsigned __int128>(1) << 53);
        }
        if (exact) return Expr::constant(Interval(d), d);
    }
    return Expr::constant(Interval(rnd::next_down(d), rnd::next_up(d)), d);
}

class Parser {
public:
    Parser(const std::string& s, int line, int col0) : s_(s), line_(line), col0_(col0) {}

    Expr parse() {
        Expr e = expr();
        skip();
        if (p_ != s_.size()) fail("unexpected character '" + std::string(1, s_[p_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col0_ + static_cast<int>(p_) + 1); }

    void skip() {
        while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
    }
    bool accept(char c) {
        skip();
        if (p_ < s_.size() && s_[p_] == c) {
            ++p_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (accept('+'))
                e = e + term();
            else if (accept('-'))
                e = e - term();
            else
                return e;
        }
    }
    Expr term() {
        Expr e = unary();
        for (;;) {
            if (accept('*'))
                e = e * unary();
            else if (accept('/'))
                e = e / unary();
            else
                return e;
        }
    }
    Expr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }
    Expr power() {
        Expr base = primary();
        if (accept('^')) {
            std::size_t at = p_;
            Expr ex = unary();
            const Interval& v = ex.value();
            if (!ex.is_constant() || !v.is_point() || v.lo != std::floor(v.lo) || std::fabs(v.lo) > 64) {
                p_ = at;
                fail("exponent must be an integer constant");
            }
            return Expr::pow(base, static_cast<int>(v.lo));
        }
        return base;
    }
    Expr primary() {
        skip();
        if (p_ >= s_.size()) fail("unexpected end of expression");
        char c = s_[p_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = p_;
            while (p_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p_])) || s_[p_] == '_')) ++p_;
            std::string name = s_.substr(start, p_ - start);
            if (name == "x") return Expr::x();
            if (name == "eps") return Expr::eps();
            if (name == "pi") return Expr::pi();
            if (name == "sin" || name == "cos" || name == "exp") {
                expect('(');
                Expr arg = expr();
                expect(')');
                if (name == "sin") return Expr::sin(arg);
                if (name == "cos") return Expr::cos(arg);
                return Expr::exp(arg);
            }
            p_ = start;
            fail("unknown name '" + name + "'");
        }
        if (accept('(')) {
            Expr e = expr();
            expect(')');
            return e;
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }
    Expr number() {
        std::size_t start = p_;
        while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
        if (p_ < s_.size() && s_[p_] == '.') {
            ++p_;
            while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
        }
        if (p_ < s_.size() && (s_[p_] == 'e' || s_[p_] == 'E')) {
            std::size_t save = p_;
            ++p_;
            if (p_ < s_.size() && (s_[p_] == '+' || s_[p_] == '-')) ++p_;
            if (p_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[p_]))) {
                p_ = save;
            } else {
                while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
            }
        }
        std::string text = s_.substr(start, p_ - start);
        if (text == ".") {
            p_ = start;
            fail("malformed number");
        }
        return decimal_literal(text);
    }

    const std::string& s_;
    int line_;
    int col0_;
    std::size_t p_ = 0;
};

}  // namespace detail

// col0 is the column offset of the expression inside its source line, so
// that error positions refer to the original text.
inline Expr parse_expr(const std::string& text, int line = 1, int col0 = 0) {
    return detail::Parser(text, line, col0).parse();
}

}  // namespace lresp
