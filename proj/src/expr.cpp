#include "eyring/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

namespace eyring {

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at byte " + std::to_string(offset)), offset_(offset) {}

namespace {

std::string describe_point(const std::string& what, std::span<const double> x) {
    std::ostringstream os;
    os.precision(17);
    os << what << " at (";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

}  // namespace

EvalError::EvalError(const std::string& what, std::vector<double> point)
    : std::runtime_error(describe_point(what, point)), point_(std::move(point)) {}

struct Expression::Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;
    std::size_t index = 0;
    int exponent = 0;
    std::vector<Expression> children;
};

namespace {

bool is_function(NodeKind k) {
    switch (k) {
        case NodeKind::exp:
        case NodeKind::ln:
        case NodeKind::sin:
        case NodeKind::cos:
        case NodeKind::sqrt:
        case NodeKind::tanh:
            return true;
        default:
            return false;
    }
}

const char* function_name(NodeKind k) {
    switch (k) {
        case NodeKind::exp: return "exp";
        case NodeKind::ln: return "ln";
        case NodeKind::sin: return "sin";
        case NodeKind::cos: return "cos";
        case NodeKind::sqrt: return "sqrt";
        case NodeKind::tanh: return "tanh";
        default: return "?";
    }
}

const char* operator_symbol(NodeKind k) {
    switch (k) {
        case NodeKind::add: return " + ";
        case NodeKind::sub: return " - ";
        case NodeKind::mul: return " * ";
        case NodeKind::div: return " / ";
        default: return "?";
    }
}

[[noreturn]] void fault(const char* what, std::span<const double> x) {
    throw EvalError(what, std::vector<double>(x.begin(), x.end()));
}

double apply_function(NodeKind k, double a, std::span<const double> x) {
    switch (k) {
        case NodeKind::negate: return -a;
        case NodeKind::exp: return std::exp(a);
        case NodeKind::ln:
            if (!(a > 0.0)) fault("ln of nonpositive value", x);
            return std::log(a);
        case NodeKind::sin: return std::sin(a);
        case NodeKind::cos: return std::cos(a);
        case NodeKind::sqrt:
            if (a < 0.0) fault("sqrt of negative value", x);
            return std::sqrt(a);
        case NodeKind::tanh: return std::tanh(a);
        default: return a;
    }
}

double apply_binary(NodeKind k, double a, double b, std::span<const double> x) {
    switch (k) {
        case NodeKind::add: return a + b;
        case NodeKind::sub: return a - b;
        case NodeKind::mul: return a * b;
        case NodeKind::div:
            if (b == 0.0) fault("division by zero", x);
            return a / b;
        default: return 0.0;
    }
}

double apply_power(double base, int n, std::span<const double> x) {
    if (n < 0 && base == 0.0) fault("division by zero", x);
    if (n == 2) return base * base;
    return std::pow(base, n);
}

// Folding a constant subtree is only done when the value is finite and the
// operation is inside its domain; otherwise the node is kept so evaluation
// reports the fault.
bool try_fold(const std::function<double()>& compute, double& out) {
    try {
        out = compute();
    } catch (const EvalError&) {
        return false;
    }
    return std::isfinite(out);
}

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::constant;
    n->value = value;
    return Expression(std::move(n));
}

Expression Expression::variable(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::variable;
    n->index = index;
    return Expression(std::move(n));
}

Expression Expression::unary(NodeKind kind, Expression arg) {
    if (kind != NodeKind::negate && !is_function(kind))
        throw std::invalid_argument("Expression::unary: not a unary kind");
    if (arg.kind() == NodeKind::constant) {
        double folded = 0.0;
        const double a = arg.value();
        if (try_fold([&] { return apply_function(kind, a, {}); }, folded))
            return constant(folded);
    }
    if (kind == NodeKind::negate && arg.kind() == NodeKind::negate) return arg.children()[0];
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->children = {std::move(arg)};
    return Expression(std::move(n));
}

Expression Expression::binary(NodeKind kind, Expression lhs, Expression rhs) {
    if (kind != NodeKind::add && kind != NodeKind::sub && kind != NodeKind::mul &&
        kind != NodeKind::div)
        throw std::invalid_argument("Expression::binary: not a binary kind");
    if (lhs.kind() == NodeKind::constant && rhs.kind() == NodeKind::constant) {
        double folded = 0.0;
        const double a = lhs.value();
        const double b = rhs.value();
        if (try_fold([&] { return apply_binary(kind, a, b, {}); }, folded)) return constant(folded);
    }
    switch (kind) {
        case NodeKind::add:
            if (lhs.is_constant(0.0)) return rhs;
            if (rhs.is_constant(0.0)) return lhs;
            break;
        case NodeKind::sub:
            if (rhs.is_constant(0.0)) return lhs;
            if (lhs.is_constant(0.0)) return unary(NodeKind::negate, std::move(rhs));
            break;
        case NodeKind::mul:
            if (lhs.is_constant(0.0) || rhs.is_constant(0.0)) return constant(0.0);
            if (lhs.is_constant(1.0)) return rhs;
            if (rhs.is_constant(1.0)) return lhs;
            break;
        case NodeKind::div:
            if (rhs.is_constant(1.0)) return lhs;
            if (lhs.is_constant(0.0) && !rhs.is_constant(0.0)) return constant(0.0);
            break;
        default:
            break;
    }
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->children = {std::move(lhs), std::move(rhs)};
    return Expression(std::move(n));
}

Expression Expression::power(Expression base, int exponent) {
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return base;
    if (base.kind() == NodeKind::constant) {
        double folded = 0.0;
        const double b = base.value();
        if (try_fold([&] { return apply_power(b, exponent, {}); }, folded)) return constant(folded);
    }
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::pow;
    n->exponent = exponent;
    n->children = {std::move(base)};
    return Expression(std::move(n));
}

NodeKind Expression::kind() const { return node_->kind; }
double Expression::value() const { return node_->value; }
std::size_t Expression::index() const { return node_->index; }
int Expression::exponent() const { return node_->exponent; }
std::span<const Expression> Expression::children() const { return node_->children; }

bool Expression::is_constant(double v) const {
    return node_->kind == NodeKind::constant && node_->value == v;
}

double Expression::eval(std::span<const double> x) const {
    struct Walker {
        std::span<const double> x;
        double operator()(const Expression& e) const {
            const Node& n = *e.node_;
            switch (n.kind) {
                case NodeKind::constant: return n.value;
                case NodeKind::variable:
                    if (n.index >= x.size()) fault("variable index out of range", x);
                    return x[n.index];
                case NodeKind::add:
                case NodeKind::sub:
                case NodeKind::mul:
                case NodeKind::div:
                    return apply_binary(n.kind, (*this)(n.children[0]), (*this)(n.children[1]), x);
                case NodeKind::pow: return apply_power((*this)(n.children[0]), n.exponent, x);
                default: return apply_function(n.kind, (*this)(n.children[0]), x);
            }
        }
    };
    const double v = Walker{x}(*this);
    if (std::isnan(v)) fault("NaN result", x);
    return v;
}

std::string Expression::to_string() const {
    const Node& n = *node_;
    switch (n.kind) {
        case NodeKind::constant: {
            std::array<char, 40> buf{};
            std::snprintf(buf.data(), buf.size(), "%.17g", std::fabs(n.value));
            return std::signbit(n.value) ? "(-" + std::string(buf.data()) + ")"
                                         : std::string(buf.data());
        }
        case NodeKind::variable: return "x" + std::to_string(n.index + 1);
        case NodeKind::negate: return "(-" + n.children[0].to_string() + ")";
        case NodeKind::add:
        case NodeKind::sub:
        case NodeKind::mul:
        case NodeKind::div:
            return "(" + n.children[0].to_string() + operator_symbol(n.kind) +
                   n.children[1].to_string() + ")";
        case NodeKind::pow:
            return "(" + n.children[0].to_string() + "^" + std::to_string(n.exponent) + ")";
        default: return std::string(function_name(n.kind)) + "(" + n.children[0].to_string() + ")";
    }
}

std::size_t Expression::arity() const {
    if (node_->kind == NodeKind::variable) return node_->index + 1;
    std::size_t a = 0;
    for (const auto& c : node_->children) a = std::max(a, c.arity());
    return a;
}

std::size_t Expression::node_count() const {
    std::size_t count = 1;
    for (const auto& c : node_->children) count += c.node_count();
    return count;
}

bool structurally_equal(const Expression& a, const Expression& b) {
    if (a.node_ == b.node_) return true;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.kind != y.kind || x.children.size() != y.children.size()) return false;
    switch (x.kind) {
        case NodeKind::constant:
            if (!(x.value == y.value && std::signbit(x.value) == std::signbit(y.value))) return false;
            break;
        case NodeKind::variable:
            if (x.index != y.index) return false;
            break;
        case NodeKind::pow:
            if (x.exponent != y.exponent) return false;
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < x.children.size(); ++i)
        if (!structurally_equal(x.children[i], y.children[i])) return false;
    return true;
}

Expression operator+(const Expression& a, const Expression& b) {
    return Expression::binary(NodeKind::add, a, b);
}
Expression operator-(const Expression& a, const Expression& b) {
    return Expression::binary(NodeKind::sub, a, b);
}
Expression operator*(const Expression& a, const Expression& b) {
    return Expression::binary(NodeKind::mul, a, b);
}
Expression operator/(const Expression& a, const Expression& b) {
    return Expression::binary(NodeKind::div, a, b);
}
Expression operator-(const Expression& a) { return Expression::unary(NodeKind::negate, a); }
Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view src, std::size_t dimension) : src_(src), dim_(dimension) {}

    Expression run() {
        Expression e = expr();
        skip_space();
        if (pos_ != src_.size()) error("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    std::string_view src_;
    std::size_t dim_;
    std::size_t pos_ = 0;

    [[noreturn]] void error(const std::string& msg) const { throw ParseError(msg, pos_); }
    [[noreturn]] void error_at(const std::string& msg, std::size_t at) const {
        throw ParseError(msg, at);
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expression expr() {
        Expression lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = lhs + term();
            else if (accept('-'))
                lhs = lhs - term();
            else
                return lhs;
        }
    }

    Expression term() {
        Expression lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = lhs * unary();
            else if (accept('/'))
                lhs = lhs / unary();
            else
                return lhs;
        }
    }

    Expression unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Expression power() {
        Expression base = primary();
        if (!accept('^')) return base;
        Expression exponent = unary();
        if (exponent.kind() == NodeKind::constant) {
            const double p = exponent.value();
            if (p == std::trunc(p) && std::fabs(p) <= 1024.0)
                return Expression::power(std::move(base), static_cast<int>(p));
        }
        // Non-integer or non-constant exponent: b^p = exp(p·ln b).
        return Expression::unary(NodeKind::exp,
                                 exponent * Expression::unary(NodeKind::ln, std::move(base)));
    }

    Expression primary() {
        skip_space();
        if (pos_ >= src_.size()) error("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expression e = expr();
            if (!accept(')')) error("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        error("unexpected character '" + std::string(1, c) + "'");
    }

    Expression number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            }
        }
        double v = 0.0;
        const auto* first = src_.data() + start;
        const auto* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) error_at("malformed number", start);
        return Expression::constant(v);
    }

    Expression identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        if (name.size() >= 2 && name[0] == 'x') {
            std::size_t idx = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec == std::errc() && ptr == name.data() + name.size() && name[1] != '0') {
                if (idx < 1 || idx > dim_)
                    error_at("unknown identifier '" + std::string(name) + "' (dimension " +
                                 std::to_string(dim_) + ")",
                             start);
                return Expression::variable(idx - 1);
            }
        }

        static constexpr std::array<std::pair<std::string_view, NodeKind>, 6> functions{{
            {"exp", NodeKind::exp},
            {"ln", NodeKind::ln},
            {"sin", NodeKind::sin},
            {"cos", NodeKind::cos},
            {"sqrt", NodeKind::sqrt},
            {"tanh", NodeKind::tanh},
        }};
        for (const auto& [fname, kind] : functions) {
            if (name != fname) continue;
            if (!accept('(')) error("function '" + std::string(name) + "' expects one argument");
            Expression arg = expr();
            if (accept(','))
                error_at("arity mismatch: '" + std::string(name) + "' takes one argument", start);
            if (!accept(')')) error("expected ')'");
            return Expression::unary(kind, std::move(arg));
        }
        error_at("unknown identifier '" + std::string(name) + "'", start);
    }
};

}  // namespace

Expression parse(std::string_view source, std::size_t dimension) {
    return Parser(source, dimension).run();
}

// ---------------------------------------------------------------------------
// Differentiation

Expression differentiate(const Expression& e, std::size_t var) {
    using K = NodeKind;
    switch (e.kind()) {
        case K::constant: return Expression::constant(0.0);
        case K::variable: return Expression::constant(e.index() == var ? 1.0 : 0.0);
        default: break;
    }
    const auto kids = e.children();
    const Expression& u = kids[0];
    const Expression du = differentiate(u, var);
    switch (e.kind()) {
        case K::negate: return -du;
        case K::add: return du + differentiate(kids[1], var);
        case K::sub: return du - differentiate(kids[1], var);
        case K::mul: {
            const Expression& v = kids[1];
            return du * v + u * differentiate(v, var);
        }
        case K::div: {
            const Expression& v = kids[1];
            const Expression dv = differentiate(v, var);
            if (dv.is_constant(0.0)) return du / v;
            return (du * v - u * dv) / Expression::power(v, 2);
        }
        case K::pow: {
            const int n = e.exponent();
            return Expression::constant(n) * Expression::power(u, n - 1) * du;
        }
        case K::exp: return e * du;
        case K::ln: return du / u;
        case K::sin: return Expression::unary(K::cos, u) * du;
        case K::cos: return -(Expression::unary(K::sin, u) * du);
        case K::sqrt: return du / (Expression::constant(2.0) * e);
        case K::tanh: return (Expression::constant(1.0) - Expression::power(e, 2)) * du;
        default: return Expression::constant(0.0);
    }
}

VectorExpression gradient(const Expression& e, std::size_t dimension) {
    VectorExpression g;
    g.reserve(dimension);
    for (std::size_t i = 0; i < dimension; ++i) g.push_back(differentiate(e, i));
    return g;
}

std::vector<Expression> hessian(const Expression& e, std::size_t dimension) {
    const auto g = gradient(e, dimension);
    std::vector<Expression> h(dimension * dimension);
    for (std::size_t i = 0; i < dimension; ++i)
        for (std::size_t j = 0; j < dimension; ++j) h[i * dimension + j] = differentiate(g[i], j);
    return h;
}

Expression divergence(const VectorExpression& v) {
    Expression sum = Expression::constant(0.0);
    for (std::size_t i = 0; i < v.size(); ++i) sum = sum + differentiate(v[i], i);
    return sum;
}

// ---------------------------------------------------------------------------
// Compiled form

CompiledExpression::CompiledExpression(const Expression& e) {
    std::size_t depth = 0;
    auto emit = [&](auto&& self, const Expression& node) -> void {
        for (const auto& c : node.children()) self(self, c);
        Op op{node.kind(), 0, 0, 0.0};
        switch (node.kind()) {
            case NodeKind::constant:
                op.value = node.value();
                ++depth;
                break;
            case NodeKind::variable:
                op.index = node.index();
                ++depth;
                break;
            case NodeKind::pow: op.exponent = node.exponent(); break;
            case NodeKind::add:
            case NodeKind::sub:
            case NodeKind::mul:
            case NodeKind::div: --depth; break;
            default: break;
        }
        max_depth_ = std::max(max_depth_, depth);
        ops_.push_back(op);
    };
    emit(emit, e);
}

double CompiledExpression::operator()(std::span<const double> x) const {
    constexpr std::size_t inline_depth = 64;
    std::array<double, inline_depth> small;  // written before read
    std::vector<double> large;
    double* stack = small.data();
    if (max_depth_ > inline_depth) {
        large.resize(max_depth_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const Op& op : ops_) {
        switch (op.kind) {
            case NodeKind::constant: stack[top++] = op.value; break;
            case NodeKind::variable:
                if (op.index >= x.size()) fault("variable index out of range", x);
                stack[top++] = x[op.index];
                break;
            case NodeKind::add: --top; stack[top - 1] += stack[top]; break;
            case NodeKind::sub: --top; stack[top - 1] -= stack[top]; break;
            case NodeKind::mul: --top; stack[top - 1] *= stack[top]; break;
            case NodeKind::div:
                --top;
                if (stack[top] == 0.0) fault("division by zero", x);
                stack[top - 1] /= stack[top];
                break;
            case NodeKind::pow: stack[top - 1] = apply_power(stack[top - 1], op.exponent, x); break;
            default: stack[top - 1] = apply_function(op.kind, stack[top - 1], x); break;
        }
    }
    const double v = top ? stack[0] : 0.0;
    if (std::isnan(v)) fault("NaN result", x);
    return v;
}

}  // namespace eyring
