#include "enclosure/expr.hpp"

#include "enclosure/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace enclosure {

struct Expression::Node {
    enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sqrt };
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr l = nullptr, NodePtr r = nullptr, double v = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        auto n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError("expression '" + std::string(s_) + "': " + what + " at offset " +
                              std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        auto n = term();
        for (;;) {
            if (accept('+')) n = make(Kind::Add, n, term());
            else if (accept('-')) n = make(Kind::Sub, n, term());
            else return n;
        }
    }

    NodePtr term() {
        auto n = unary();
        for (;;) {
            if (accept('*')) n = make(Kind::Mul, n, unary());
            else if (accept('/')) n = make(Kind::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make(Kind::Pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        if (accept('(')) {
            auto n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::string buf(s_.substr(pos_));
            char* end = nullptr;
            double v = std::strtod(buf.c_str(), &end);
            if (end == buf.c_str()) fail("bad number");
            pos_ += static_cast<std::size_t>(end - buf.c_str());
            return make(Kind::Number, nullptr, nullptr, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string_view id = s_.substr(start, pos_ - start);
            if (id == "x") return make(Kind::Var);
            Kind k;
            if (id == "exp") k = Kind::Exp;
            else if (id == "log") k = Kind::Log;
            else if (id == "sqrt") k = Kind::Sqrt;
            else {
                pos_ = start;
                fail("unknown identifier '" + std::string(id) + "'");
            }
            if (!accept('(')) fail("expected '(' after function name");
            auto arg = expr();
            if (!accept(')')) fail("expected ')'");
            return make(k, arg);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

Jet apply_unary(double f, double f1, double f2, const Jet& u) {
    // chain rule for f(u(x)) given f(u), f'(u), f''(u)
    return {f, f1 * u.d1, f2 * u.d1 * u.d1 + f1 * u.d2};
}

Jet evaluate(const Expression::Node& n, double x) {
    switch (n.kind) {
    case Kind::Number: return {n.value, 0.0, 0.0};
    case Kind::Var: return {x, 1.0, 0.0};
    case Kind::Neg: {
        Jet a = evaluate(*n.lhs, x);
        return {-a.v, -a.d1, -a.d2};
    }
    case Kind::Add: {
        Jet a = evaluate(*n.lhs, x), b = evaluate(*n.rhs, x);
        return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
    }
    case Kind::Sub: {
        Jet a = evaluate(*n.lhs, x), b = evaluate(*n.rhs, x);
        return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
    }
    case Kind::Mul: {
        Jet a = evaluate(*n.lhs, x), b = evaluate(*n.rhs, x);
        return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
    }
    case Kind::Div: {
        Jet a = evaluate(*n.lhs, x), b = evaluate(*n.rhs, x);
        // a * (1/b)
        double r = 1.0 / b.v;
        Jet inv = apply_unary(r, -r * r, 2.0 * r * r * r, b);
        return {a.v * inv.v, a.d1 * inv.v + a.v * inv.d1,
                a.d2 * inv.v + 2.0 * a.d1 * inv.d1 + a.v * inv.d2};
    }
    case Kind::Pow: {
        Jet a = evaluate(*n.lhs, x), b = evaluate(*n.rhs, x);
        if (b.d1 == 0.0 && b.d2 == 0.0) {
            double p = b.v;
            if (p == 0.0) return {1.0, 0.0, 0.0};
            double f = std::pow(a.v, p);
            double f1 = p * std::pow(a.v, p - 1.0);
            double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
            return apply_unary(f, f1, f2, a);
        }
        // a^b = exp(b log a)
        Jet la = apply_unary(std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v), a);
        Jet e{b.v * la.v, b.d1 * la.v + b.v * la.d1, b.d2 * la.v + 2.0 * b.d1 * la.d1 + b.v * la.d2};
        double f = std::exp(e.v);
        return apply_unary(f, f, f, e);
    }
    case Kind::Exp: {
        Jet a = evaluate(*n.lhs, x);
        double f = std::exp(a.v);
        return apply_unary(f, f, f, a);
    }
    case Kind::Log: {
        Jet a = evaluate(*n.lhs, x);
        return apply_unary(std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v), a);
    }
    case Kind::Sqrt: {
        Jet a = evaluate(*n.lhs, x);
        double f = std::sqrt(a.v);
        return apply_unary(f, 0.5 / f, -0.25 / (f * a.v), a);
    }
    }
    return {};
}

} // namespace

Expression Expression::parse(std::string_view text) {
    Expression e;
    e.root_ = Parser(text).parse();
    e.text_ = std::string(text);
    return e;
}

Jet Expression::eval(double x) const { return evaluate(*root_, x); }

} // namespace enclosure
