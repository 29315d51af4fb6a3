#pragma once

// Symbolic expressions over positional variables x1..xd.
//
// Grammar (see docs/grammar.md):
//   expr    := term   (('+' | '-') term)*
//   term    := unary  (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' digits | func '(' expr ')' | '(' expr ')'
//   func    := exp | ln | sin | cos | sqrt | tanh

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eyring {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Raised when an expression is evaluated outside its domain (division by
/// zero, ln of a nonpositive value, sqrt of a negative value, NaN result).
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& what, std::vector<double> point);
    const std::vector<double>& point() const noexcept { return point_; }

private:
    std::vector<double> point_;
};

enum class NodeKind {
    constant,
    variable,
    negate,
    add,
    sub,
    mul,
    div,
    pow,  // integer exponent stored in the node
    exp,
    ln,
    sin,
    cos,
    sqrt,
    tanh,
};

/// Immutable expression tree. Copies share structure; safe to evaluate from
/// any number of threads.
class Expression {
public:
    struct Node;

    Expression();  // the constant 0

    static Expression constant(double value);
    static Expression variable(std::size_t index);
    static Expression unary(NodeKind kind, Expression arg);
    static Expression binary(NodeKind kind, Expression lhs, Expression rhs);
    static Expression power(Expression base, int exponent);

    NodeKind kind() const;
    double value() const;        // constant nodes
    std::size_t index() const;   // variable nodes
    int exponent() const;        // pow nodes
    std::span<const Expression> children() const;

    bool is_constant(double v) const;

    double eval(std::span<const double> x) const;

    /// Fully parenthesized text that parses back to the same tree.
    std::string to_string() const;

    /// One past the largest variable index used (0 for closed expressions).
    std::size_t arity() const;

    std::size_t node_count() const;

    friend bool structurally_equal(const Expression& a, const Expression& b);

private:
    explicit Expression(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator*(double a, const Expression& b);

using VectorExpression = std::vector<Expression>;

Expression parse(std::string_view source, std::size_t dimension);

Expression differentiate(const Expression& e, std::size_t var);

VectorExpression gradient(const Expression& e, std::size_t dimension);

/// Row-major d×d matrix of second partials.
std::vector<Expression> hessian(const Expression& e, std::size_t dimension);

Expression divergence(const VectorExpression& v);

/// Flat postfix program for hot evaluation loops. Produces the same values
/// and the same faults as Expression::eval.
class CompiledExpression {
public:
    CompiledExpression() = default;
    explicit CompiledExpression(const Expression& e);

    double operator()(std::span<const double> x) const;

private:
    struct Op {
        NodeKind kind;
        int exponent;
        std::size_t index;
        double value;
    };
    std::vector<Op> ops_;
    std::size_t max_depth_ = 0;
};

}  // namespace eyring
