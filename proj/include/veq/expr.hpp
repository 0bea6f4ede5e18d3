// SPDX-License-Identifier: MIT
/**
 * @file expr.hpp
 * @brief Math-expression DSL: parse, print, evaluate, differentiate.
 *
 * Kernels K(t,s,x), majorant factors m(s), γ(x) and algebraic majorants
 * M(ρ,r) are all written in this small language.  Grammar:
 *
 *     expr   := term (('+'|'-') term)*
 *     term   := factor (('*'|'/') factor)*
 *     factor := '-' factor | power
 *     power  := atom ('^' factor)?
 *     atom   := number | ident | ident '(' expr ')' | '(' expr ')'
 *
 * `^` is right-associative and binds tighter than unary minus, so
 * `-x^2` is `-(x^2)` and `2^3^2` is 512.  Implicit multiplication ("2x")
 * is rejected.  Functions: sin cos tan atan exp ln sqrt abs.  Constants:
 * pi, e (reserved, cannot be used as variable names).
 */
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace veq {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Function { Sin, Cos, Tan, Atan, Exp, Ln, Sqrt, Abs };
enum class Constant { Pi, E };

struct ExprNode;

/// Immutable expression tree with shared structure.  Copies are cheap.
class Expr {
public:
    /// The literal 0.
    Expr();

    static Expr number(double value);
    static Expr variable(std::string name);
    static Expr constant(Constant which);
    static Expr negate(Expr operand);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr call(Function fn, Expr arg);

    const ExprNode& node() const noexcept { return *node_; }

    /// Literal value when the tree is a plain Number node.
    std::optional<double> as_number() const;

    bool depends_on(std::string_view name) const;
    std::set<std::string> variables() const;

    /// Fully reparsable text. Numbers print with 17 significant digits so
    /// parse(to_string(e)) evaluates bit-identically to e.
    std::string to_string() const;

private:
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const ExprNode> node_;
};

struct NumberNode {
    double value;
};
struct VarNode {
    std::string name;
};
struct ConstNode {
    Constant which;
};
struct NegateNode {
    Expr operand;
};
struct BinaryNode {
    BinaryOp op;
    Expr lhs;
    Expr rhs;
};
struct CallNode {
    Function fn;
    Expr arg;
};

struct ExprNode {
    std::variant<NumberNode, VarNode, ConstNode, NegateNode, BinaryNode, CallNode> data;
};

// Folding constructors: literal-only subtrees collapse to numbers and the
// 0/1 identities are applied.  Used by differentiate().
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr apply(Function fn, const Expr& arg);

/// Parse `source`; every identifier that is not a function or constant must
/// be in `allowed_vars`.  Throws ParseError.
Expr parse(std::string_view source, const std::set<std::string>& allowed_vars);

using Bindings = std::map<std::string, double, std::less<>>;

/// Tree-walking evaluation.  Throws DomainError for ln(x<=0), sqrt(x<0),
/// division by zero, non-real powers and unbound variables.
double evaluate(const Expr& e, const Bindings& bindings);

/// Exact symbolic derivative.  d|u| is written u/|u|·du, so the result must
/// not be evaluated where u = 0.
Expr differentiate(const Expr& e, std::string_view var);

/// Coefficients c₀..c_n (ascending powers) when `e` is a polynomial in `var`
/// with constant coefficients; nullopt otherwise.  Trailing zero
/// coefficients are trimmed, so size()-1 is the exact degree.
std::optional<std::vector<double>> polynomial_coefficients(const Expr& e, std::string_view var);

/// Flat stack-machine form of an expression with variables bound to slots.
/// Evaluation is allocation-free for typical trees and safe to call from
/// several threads at once.
class CompiledExpr {
public:
    /// Every variable of `e` must appear in `slots`.  Throws ValidationError.
    CompiledExpr(const Expr& e, std::vector<std::string> slots);

    double operator()(std::span<const double> values) const;
    double operator()(double v) const { return (*this)(std::span<const double>(&v, 1)); }
    double operator()(double a, double b) const {
        const double v[2] = {a, b};
        return (*this)(std::span<const double>(v, 2));
    }
    double operator()(double a, double b, double c) const {
        const double v[3] = {a, b, c};
        return (*this)(std::span<const double>(v, 3));
    }

    const std::vector<std::string>& slots() const noexcept { return slots_; }

private:
    enum class OpCode : unsigned char {
        Push, Load, Neg, Add, Sub, Mul, Div, Pow,
        Sin, Cos, Tan, Atan, Exp, Ln, Sqrt, Abs
    };
    struct Instr {
        OpCode op;
        int index;  // slot for Load, message index for checked ops
        double value;
    };

    void emit(const Expr& e);
    [[noreturn]] void fail(const Instr& in, const char* what) const;

    std::vector<std::string> slots_;
    std::vector<Instr> code_;
    std::vector<std::string> sources_;
    int max_depth_ = 0;
};

/// Compile an expression with at most one free variable as f(v).
CompiledExpr compile_univariate(const Expr& e);

}  // namespace veq
