// SPDX-License-Identifier: MIT
#include "veq/expr.hpp"

#include "veq/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace veq {

namespace {

struct FunctionName {
    std::string_view name;
    Function fn;
};

constexpr std::array<FunctionName, 8> kFunctions{{
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tan", Function::Tan},
    {"atan", Function::Atan},
    {"exp", Function::Exp},
    {"ln", Function::Ln},
    {"sqrt", Function::Sqrt},
    {"abs", Function::Abs},
}};

std::string_view function_name(Function fn) {
    for (const auto& f : kFunctions) {
        if (f.fn == fn) return f.name;
    }
    return "?";
}

std::optional<Function> lookup_function(std::string_view name) {
    for (const auto& f : kFunctions) {
        if (f.name == name) return f.fn;
    }
    return std::nullopt;
}

double constant_value(Constant c) {
    return c == Constant::Pi ? std::numbers::pi : std::numbers::e;
}

double apply_function(Function fn, double v) {
    switch (fn) {
        case Function::Sin: return std::sin(v);
        case Function::Cos: return std::cos(v);
        case Function::Tan: return std::tan(v);
        case Function::Atan: return std::atan(v);
        case Function::Exp: return std::exp(v);
        case Function::Ln: return std::log(v);
        case Function::Sqrt: return std::sqrt(v);
        case Function::Abs: return std::fabs(v);
    }
    return v;
}

// Returns nullptr when the operation is defined at these operands.
const char* function_domain_violation(Function fn, double v) {
    if (std::isnan(v)) return nullptr;
    if (fn == Function::Ln && v <= 0.0) return "ln of non-positive value";
    if (fn == Function::Sqrt && v < 0.0) return "sqrt of negative value";
    return nullptr;
}

const char* binary_domain_violation(BinaryOp op, double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return nullptr;
    if (op == BinaryOp::Div && b == 0.0) return "division by zero";
    if (op == BinaryOp::Pow) {
        if (a == 0.0 && b < 0.0) return "division by zero";
        if (a < 0.0 && std::isfinite(b) && b != std::trunc(b)) return "power with non-real result";
    }
    return nullptr;
}

double apply_binary(BinaryOp op, double a, double b) {
    switch (op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
        case BinaryOp::Pow: return std::pow(a, b);
    }
    return 0.0;
}

// Precedence levels used by the printer.
constexpr int kPrecSum = 1;
constexpr int kPrecProduct = 2;
constexpr int kPrecNegate = 3;
constexpr int kPrecPower = 4;
constexpr int kPrecAtom = 5;

int precedence(const Expr& e) {
    const auto& d = e.node().data;
    if (const auto* n = std::get_if<NumberNode>(&d)) {
        return std::signbit(n->value) ? kPrecNegate : kPrecAtom;
    }
    if (std::holds_alternative<NegateNode>(d)) return kPrecNegate;
    if (const auto* b = std::get_if<BinaryNode>(&d)) {
        switch (b->op) {
            case BinaryOp::Add:
            case BinaryOp::Sub: return kPrecSum;
            case BinaryOp::Mul:
            case BinaryOp::Div: return kPrecProduct;
            case BinaryOp::Pow: return kPrecPower;
        }
    }
    return kPrecAtom;
}

void print(const Expr& e, std::string& out);

void print_at_least(const Expr& e, int min_prec, std::string& out) {
    if (precedence(e) < min_prec) {
        out += '(';
        print(e, out);
        out += ')';
    } else {
        print(e, out);
    }
}

void print_number(double v, std::string& out) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", std::fabs(v));
    if (std::signbit(v)) out += '-';
    out += buf;
}

void print(const Expr& e, std::string& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberNode>) {
                print_number(n.value, out);
            } else if constexpr (std::is_same_v<T, VarNode>) {
                out += n.name;
            } else if constexpr (std::is_same_v<T, ConstNode>) {
                out += n.which == Constant::Pi ? "pi" : "e";
            } else if constexpr (std::is_same_v<T, NegateNode>) {
                out += '-';
                print_at_least(n.operand, kPrecNegate, out);
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                switch (n.op) {
                    case BinaryOp::Add:
                    case BinaryOp::Sub:
                        print_at_least(n.lhs, kPrecSum, out);
                        out += n.op == BinaryOp::Add ? " + " : " - ";
                        print_at_least(n.rhs, kPrecSum + 1, out);
                        break;
                    case BinaryOp::Mul:
                    case BinaryOp::Div:
                        print_at_least(n.lhs, kPrecProduct, out);
                        out += n.op == BinaryOp::Mul ? " * " : " / ";
                        print_at_least(n.rhs, kPrecProduct + 1, out);
                        break;
                    case BinaryOp::Pow:
                        print_at_least(n.lhs, kPrecAtom, out);
                        out += '^';
                        print_at_least(n.rhs, kPrecNegate, out);
                        break;
                }
            } else if constexpr (std::is_same_v<T, CallNode>) {
                out += function_name(n.fn);
                out += '(';
                print(n.arg, out);
                out += ')';
            }
        },
        e.node().data);
}

void collect_variables(const Expr& e, std::set<std::string>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VarNode>) {
                out.insert(n.name);
            } else if constexpr (std::is_same_v<T, NegateNode>) {
                collect_variables(n.operand, out);
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                collect_variables(n.lhs, out);
                collect_variables(n.rhs, out);
            } else if constexpr (std::is_same_v<T, CallNode>) {
                collect_variables(n.arg, out);
            }
        },
        e.node().data);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view src, const std::set<std::string>& vars) : src_(src), vars_(vars) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '(' || c == '.') {
                throw ParseError(pos_, "implicit multiplication is not supported",
                                 "operator or end of input");
            }
            if (c == ')') throw ParseError(pos_, "unbalanced ')'", "operator or end of input");
            throw ParseError(pos_, std::string("unexpected character '") + c + "'",
                             "operator or end of input");
        }
        return e;
    }

private:
    static constexpr int kMaxNesting = 200;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    struct NestingGuard {
        Parser& p;
        explicit NestingGuard(Parser& parser) : p(parser) {
            if (++p.nesting_ > kMaxNesting) {
                throw ParseError(p.pos_, "expression nested too deeply", "");
            }
        }
        ~NestingGuard() { --p.nesting_; }
    };

    Expr parse_expr() {
        NestingGuard guard(*this);
        Expr lhs = parse_term();
        for (;;) {
            if (consume('+')) {
                lhs = Expr::binary(BinaryOp::Add, lhs, parse_term());
            } else if (consume('-')) {
                lhs = Expr::binary(BinaryOp::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_term() {
        Expr lhs = parse_factor();
        for (;;) {
            if (consume('*')) {
                lhs = Expr::binary(BinaryOp::Mul, lhs, parse_factor());
            } else if (consume('/')) {
                lhs = Expr::binary(BinaryOp::Div, lhs, parse_factor());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_factor() {
        NestingGuard guard(*this);
        if (consume('-')) return Expr::negate(parse_factor());
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (consume('^')) return Expr::binary(BinaryOp::Pow, base, parse_factor());
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError(pos_, "unexpected end of input", "number, identifier or '('");
        }
        const char c = src_[pos_];
        if (c == '(') {
            const std::size_t open = pos_++;
            Expr inner = parse_expr();
            if (!consume(')')) {
                skip_ws();
                throw ParseError(pos_, "unbalanced '(' opened at offset " + std::to_string(open),
                                 "')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(pos_, std::string("unexpected character '") + c + "'",
                         "number, identifier or '('");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            const std::size_t from = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            return pos_ - from;
        };
        const std::size_t int_digits = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            if (digits() == 0) throw ParseError(pos_, "malformed number", "digit after '.'");
        } else if (int_digits == 0) {
            throw ParseError(start, "malformed number", "digit");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                digits();
            }
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            throw ParseError(pos_, "malformed number", "operator");
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc{} || ptr != src_.data() + pos_ || !std::isfinite(value)) {
            throw ParseError(start, "malformed number", "finite decimal literal");
        }
        return Expr::number(value);
    }

    Expr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name(src_.substr(start, pos_ - start));
        if (auto fn = lookup_function(name)) {
            if (!consume('(')) {
                throw ParseError(pos_, "function '" + name + "' requires an argument", "'('");
            }
            Expr arg = parse_expr();
            if (!consume(')')) {
                skip_ws();
                throw ParseError(pos_, "unbalanced '(' in call to '" + name + "'", "')'");
            }
            return Expr::call(*fn, arg);
        }
        Expr result;
        if (name == "pi") {
            result = Expr::constant(Constant::Pi);
        } else if (name == "e") {
            result = Expr::constant(Constant::E);
        } else if (vars_.contains(name)) {
            result = Expr::variable(name);
        } else {
            std::string hint;
            for (const auto& v : vars_) hint += (hint.empty() ? "" : ", ") + v;
            throw ParseError(start, "unknown identifier '" + name + "'",
                             hint.empty() ? "a constant or function" : "one of: " + hint);
        }
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            throw ParseError(pos_, "'" + name + "' is not a function", "operator");
        }
        return result;
    }

    std::string_view src_;
    const std::set<std::string>& vars_;
    std::size_t pos_ = 0;
    int nesting_ = 0;
};

// ---------------------------------------------------------------------------
// Polynomial extraction
// ---------------------------------------------------------------------------

using Poly = std::vector<double>;

void trim(Poly& p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
}

Poly poly_add(const Poly& a, const Poly& b, double sign) {
    Poly r(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += sign * b[i];
    trim(r);
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    }
    trim(r);
    return r;
}

std::optional<Poly> to_poly(const Expr& e, std::string_view var) {
    return std::visit(
        [&](const auto& n) -> std::optional<Poly> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberNode>) {
                return Poly{n.value};
            } else if constexpr (std::is_same_v<T, ConstNode>) {
                return Poly{constant_value(n.which)};
            } else if constexpr (std::is_same_v<T, VarNode>) {
                if (n.name != var) return std::nullopt;
                return Poly{0.0, 1.0};
            } else if constexpr (std::is_same_v<T, NegateNode>) {
                auto p = to_poly(n.operand, var);
                if (!p) return std::nullopt;
                for (auto& c : *p) c = -c;
                return p;
            } else if constexpr (std::is_same_v<T, CallNode>) {
                auto p = to_poly(n.arg, var);
                if (!p || p->size() != 1) return std::nullopt;
                const double v = apply_function(n.fn, (*p)[0]);
                if (!std::isfinite(v)) return std::nullopt;
                return Poly{v};
            } else {
                auto a = to_poly(n.lhs, var);
                auto b = to_poly(n.rhs, var);
                if (!a || !b) return std::nullopt;
                switch (n.op) {
                    case BinaryOp::Add: return poly_add(*a, *b, 1.0);
                    case BinaryOp::Sub: return poly_add(*a, *b, -1.0);
                    case BinaryOp::Mul: return poly_mul(*a, *b);
                    case BinaryOp::Div: {
                        if (b->size() != 1 || (*b)[0] == 0.0) return std::nullopt;
                        for (auto& c : *a) c /= (*b)[0];
                        return a;
                    }
                    case BinaryOp::Pow: {
                        if (b->size() != 1) return std::nullopt;
                        const double k = (*b)[0];
                        if (a->size() == 1) {
                            const double v = std::pow((*a)[0], k);
                            if (!std::isfinite(v)) return std::nullopt;
                            return Poly{v};
                        }
                        if (k < 0.0 || k > 64.0 || k != std::trunc(k)) return std::nullopt;
                        Poly r{1.0};
                        for (int i = 0; i < static_cast<int>(k); ++i) r = poly_mul(r, *a);
                        return r;
                    }
                }
                return std::nullopt;
            }
        },
        e.node().data);
}

}  // namespace

// ---------------------------------------------------------------------------
// Expr
// ---------------------------------------------------------------------------

Expr::Expr() : Expr(number(0.0)) {}

Expr Expr::number(double value) {
    return Expr(std::make_shared<const ExprNode>(ExprNode{NumberNode{value}}));
}
Expr Expr::variable(std::string name) {
    return Expr(std::make_shared<const ExprNode>(ExprNode{VarNode{std::move(name)}}));
}
Expr Expr::constant(Constant which) {
    return Expr(std::make_shared<const ExprNode>(ExprNode{ConstNode{which}}));
}
Expr Expr::negate(Expr operand) {
    return Expr(std::make_shared<const ExprNode>(ExprNode{NegateNode{std::move(operand)}}));
}
Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    return Expr(std::make_shared<const ExprNode>(
        ExprNode{BinaryNode{op, std::move(lhs), std::move(rhs)}}));
}
Expr Expr::call(Function fn, Expr arg) {
    return Expr(std::make_shared<const ExprNode>(ExprNode{CallNode{fn, std::move(arg)}}));
}

std::optional<double> Expr::as_number() const {
    if (const auto* n = std::get_if<NumberNode>(&node_->data)) return n->value;
    return std::nullopt;
}

bool Expr::depends_on(std::string_view name) const {
    return variables().contains(std::string(name));
}

std::set<std::string> Expr::variables() const {
    std::set<std::string> out;
    collect_variables(*this, out);
    return out;
}

std::string Expr::to_string() const {
    std::string out;
    print(*this, out);
    return out;
}

// ---------------------------------------------------------------------------
// Folding constructors
// ---------------------------------------------------------------------------

namespace {

bool is_literal(const Expr& e, double v) {
    auto n = e.as_number();
    return n && *n == v;
}

std::optional<Expr> fold(BinaryOp op, const Expr& a, const Expr& b) {
    auto x = a.as_number();
    auto y = b.as_number();
    if (!x || !y || binary_domain_violation(op, *x, *y)) return std::nullopt;
    const double v = apply_binary(op, *x, *y);
    if (!std::isfinite(v)) return std::nullopt;
    return Expr::number(v);
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
    if (auto f = fold(BinaryOp::Add, a, b)) return *f;
    if (is_literal(a, 0.0)) return b;
    if (is_literal(b, 0.0)) return a;
    return Expr::binary(BinaryOp::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (auto f = fold(BinaryOp::Sub, a, b)) return *f;
    if (is_literal(b, 0.0)) return a;
    if (is_literal(a, 0.0)) return -b;
    return Expr::binary(BinaryOp::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (auto f = fold(BinaryOp::Mul, a, b)) return *f;
    if (is_literal(a, 0.0) || is_literal(b, 0.0)) return Expr::number(0.0);
    if (is_literal(a, 1.0)) return b;
    if (is_literal(b, 1.0)) return a;
    return Expr::binary(BinaryOp::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (auto f = fold(BinaryOp::Div, a, b)) return *f;
    if (is_literal(a, 0.0) && !is_literal(b, 0.0)) return Expr::number(0.0);
    if (is_literal(b, 1.0)) return a;
    return Expr::binary(BinaryOp::Div, a, b);
}

Expr operator-(const Expr& a) {
    if (auto n = a.as_number()) return Expr::number(-*n);
    if (const auto* neg = std::get_if<NegateNode>(&a.node().data)) return neg->operand;
    return Expr::negate(a);
}

Expr pow(const Expr& base, const Expr& exponent) {
    if (auto f = fold(BinaryOp::Pow, base, exponent)) return *f;
    if (is_literal(exponent, 1.0)) return base;
    if (is_literal(exponent, 0.0)) return Expr::number(1.0);
    return Expr::binary(BinaryOp::Pow, base, exponent);
}

Expr apply(Function fn, const Expr& arg) {
    if (auto n = arg.as_number(); n && !function_domain_violation(fn, *n)) {
        const double v = apply_function(fn, *n);
        if (std::isfinite(v)) return Expr::number(v);
    }
    return Expr::call(fn, arg);
}

// ---------------------------------------------------------------------------
// Parse / evaluate / differentiate
// ---------------------------------------------------------------------------

Expr parse(std::string_view source, const std::set<std::string>& allowed_vars) {
    for (const auto& v : allowed_vars) {
        if (v == "pi" || v == "e" || lookup_function(v)) {
            throw ParseError(0, "'" + v + "' is reserved and cannot be a variable", "");
        }
    }
    return Parser(source, allowed_vars).parse_all();
}

double evaluate(const Expr& e, const Bindings& bindings) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberNode>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, VarNode>) {
                auto it = bindings.find(n.name);
                if (it == bindings.end()) throw DomainError("unbound variable", n.name);
                return it->second;
            } else if constexpr (std::is_same_v<T, ConstNode>) {
                return constant_value(n.which);
            } else if constexpr (std::is_same_v<T, NegateNode>) {
                return -evaluate(n.operand, bindings);
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                const double a = evaluate(n.lhs, bindings);
                const double b = evaluate(n.rhs, bindings);
                if (const char* why = binary_domain_violation(n.op, a, b)) {
                    throw DomainError(why, e.to_string());
                }
                return apply_binary(n.op, a, b);
            } else {
                const double a = evaluate(n.arg, bindings);
                if (const char* why = function_domain_violation(n.fn, a)) {
                    throw DomainError(why, e.to_string());
                }
                return apply_function(n.fn, a);
            }
        },
        e.node().data);
}

Expr differentiate(const Expr& e, std::string_view var) {
    return std::visit(
        [&](const auto& n) -> Expr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberNode> || std::is_same_v<T, ConstNode>) {
                return Expr::number(0.0);
            } else if constexpr (std::is_same_v<T, VarNode>) {
                return Expr::number(n.name == var ? 1.0 : 0.0);
            } else if constexpr (std::is_same_v<T, NegateNode>) {
                return -differentiate(n.operand, var);
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                const Expr& u = n.lhs;
                const Expr& v = n.rhs;
                const Expr du = differentiate(u, var);
                const Expr dv = differentiate(v, var);
                switch (n.op) {
                    case BinaryOp::Add: return du + dv;
                    case BinaryOp::Sub: return du - dv;
                    case BinaryOp::Mul: return du * v + u * dv;
                    case BinaryOp::Div:
                        if (is_literal(dv, 0.0)) return du / v;
                        return (du * v - u * dv) / pow(v, Expr::number(2.0));
                    case BinaryOp::Pow: {
                        const bool base_varies = u.depends_on(var);
                        const bool exp_varies = v.depends_on(var);
                        if (!base_varies && !exp_varies) return Expr::number(0.0);
                        if (!exp_varies) return v * pow(u, v - Expr::number(1.0)) * du;
                        if (!base_varies) return pow(u, v) * apply(Function::Ln, u) * dv;
                        return pow(u, v) * (dv * apply(Function::Ln, u) + v * du / u);
                    }
                }
                return Expr::number(0.0);
            } else {
                const Expr& u = n.arg;
                const Expr du = differentiate(u, var);
                if (is_literal(du, 0.0)) return Expr::number(0.0);
                switch (n.fn) {
                    case Function::Sin: return apply(Function::Cos, u) * du;
                    case Function::Cos: return -(apply(Function::Sin, u) * du);
                    case Function::Tan:
                        return du / pow(apply(Function::Cos, u), Expr::number(2.0));
                    case Function::Atan:
                        return du / (Expr::number(1.0) + pow(u, Expr::number(2.0)));
                    case Function::Exp: return apply(Function::Exp, u) * du;
                    case Function::Ln: return du / u;
                    case Function::Sqrt:
                        return du / (Expr::number(2.0) * apply(Function::Sqrt, u));
                    case Function::Abs: return u / apply(Function::Abs, u) * du;
                }
                return Expr::number(0.0);
            }
        },
        e.node().data);
}

std::optional<std::vector<double>> polynomial_coefficients(const Expr& e, std::string_view var) {
    auto p = to_poly(e, var);
    if (p) trim(*p);
    return p;
}

// ---------------------------------------------------------------------------
// CompiledExpr
// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e, std::vector<std::string> slots) : slots_(std::move(slots)) {
    for (const auto& v : e.variables()) {
        if (std::find(slots_.begin(), slots_.end(), v) == slots_.end()) {
            throw ValidationError("variable '" + v + "' of '" + e.to_string() +
                                  "' is not bound to an evaluation slot");
        }
    }
    emit(e);
    int depth = 0;
    for (const auto& in : code_) {
        switch (in.op) {
            case OpCode::Push:
            case OpCode::Load: ++depth; break;
            case OpCode::Add:
            case OpCode::Sub:
            case OpCode::Mul:
            case OpCode::Div:
            case OpCode::Pow: --depth; break;
            default: break;
        }
        max_depth_ = std::max(max_depth_, depth);
    }
}

void CompiledExpr::emit(const Expr& e) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberNode>) {
                code_.push_back({OpCode::Push, 0, n.value});
            } else if constexpr (std::is_same_v<T, ConstNode>) {
                code_.push_back({OpCode::Push, 0, constant_value(n.which)});
            } else if constexpr (std::is_same_v<T, VarNode>) {
                const auto it = std::find(slots_.begin(), slots_.end(), n.name);
                code_.push_back({OpCode::Load, static_cast<int>(it - slots_.begin()), 0.0});
            } else if constexpr (std::is_same_v<T, NegateNode>) {
                emit(n.operand);
                code_.push_back({OpCode::Neg, 0, 0.0});
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                emit(n.lhs);
                emit(n.rhs);
                static constexpr OpCode kOps[] = {OpCode::Add, OpCode::Sub, OpCode::Mul,
                                                  OpCode::Div, OpCode::Pow};
                sources_.push_back(e.to_string());
                code_.push_back({kOps[static_cast<int>(n.op)],
                                 static_cast<int>(sources_.size() - 1), 0.0});
            } else {
                emit(n.arg);
                static constexpr OpCode kOps[] = {OpCode::Sin, OpCode::Cos, OpCode::Tan,
                                                  OpCode::Atan, OpCode::Exp, OpCode::Ln,
                                                  OpCode::Sqrt, OpCode::Abs};
                sources_.push_back(e.to_string());
                code_.push_back({kOps[static_cast<int>(n.fn)],
                                 static_cast<int>(sources_.size() - 1), 0.0});
            }
        },
        e.node().data);
}

void CompiledExpr::fail(const Instr& in, const char* what) const {
    throw DomainError(what, sources_[static_cast<std::size_t>(in.index)]);
}

double CompiledExpr::operator()(std::span<const double> values) const {
    constexpr int kInline = 32;
    double inline_stack[kInline] = {};
    std::vector<double> heap_stack;
    double* stack = inline_stack;
    if (max_depth_ > kInline) {
        heap_stack.resize(static_cast<std::size_t>(max_depth_));
        stack = heap_stack.data();
    }
    int top = -1;
    for (const auto& in : code_) {
        switch (in.op) {
            case OpCode::Push: stack[++top] = in.value; break;
            case OpCode::Load: stack[++top] = values[static_cast<std::size_t>(in.index)]; break;
            case OpCode::Neg: stack[top] = -stack[top]; break;
            case OpCode::Add: --top; stack[top] += stack[top + 1]; break;
            case OpCode::Sub: --top; stack[top] -= stack[top + 1]; break;
            case OpCode::Mul: --top; stack[top] *= stack[top + 1]; break;
            case OpCode::Div:
                --top;
                if (stack[top + 1] == 0.0 && !std::isnan(stack[top])) fail(in, "division by zero");
                stack[top] /= stack[top + 1];
                break;
            case OpCode::Pow:
                --top;
                if (const char* why = binary_domain_violation(BinaryOp::Pow, stack[top], stack[top + 1])) {
                    fail(in, why);
                }
                stack[top] = std::pow(stack[top], stack[top + 1]);
                break;
            case OpCode::Sin: stack[top] = std::sin(stack[top]); break;
            case OpCode::Cos: stack[top] = std::cos(stack[top]); break;
            case OpCode::Tan: stack[top] = std::tan(stack[top]); break;
            case OpCode::Atan: stack[top] = std::atan(stack[top]); break;
            case OpCode::Exp: stack[top] = std::exp(stack[top]); break;
            case OpCode::Ln:
                if (stack[top] <= 0.0) fail(in, "ln of non-positive value");
                stack[top] = std::log(stack[top]);
                break;
            case OpCode::Sqrt:
                if (stack[top] < 0.0) fail(in, "sqrt of negative value");
                stack[top] = std::sqrt(stack[top]);
                break;
            case OpCode::Abs: stack[top] = std::fabs(stack[top]); break;
        }
    }
    return stack[0];
}

CompiledExpr compile_univariate(const Expr& e) {
    const auto vars = e.variables();
    if (vars.size() > 1) {
        throw ValidationError("expected a function of one variable, got '" + e.to_string() + "'");
    }
    return CompiledExpr(e, {vars.empty() ? std::string("_") : *vars.begin()});
}

}  // namespace veq
