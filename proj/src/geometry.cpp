#include "eyring/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eyring {

bool Box::contains(const Point& x) const {
    for (std::size_t i = 0; i < axes.size(); ++i)
        if (x[static_cast<Eigen::Index>(i)] < axes[i].first ||
            x[static_cast<Eigen::Index>(i)] > axes[i].second)
            return false;
    return true;
}

double Box::diameter() const {
    double s = 0.0;
    for (const auto& [lo, hi] : axes) s += (hi - lo) * (hi - lo);
    return std::sqrt(s);
}

double Box::max_side() const {
    double s = 0.0;
    for (const auto& [lo, hi] : axes) s = std::max(s, hi - lo);
    return s;
}

std::vector<CompiledExpression> compile(const std::vector<Expression>& es) {
    std::vector<CompiledExpression> out;
    out.reserve(es.size());
    for (const auto& e : es) out.emplace_back(e);
    return out;
}

Point eval_vector(const std::vector<CompiledExpression>& fs, const Point& x) {
    Point out(static_cast<Eigen::Index>(fs.size()));
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < fs.size(); ++i) out[static_cast<Eigen::Index>(i)] = fs[i](xs);
    return out;
}

Matrix eval_matrix(const std::vector<CompiledExpression>& fs, const Point& x) {
    const auto d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(fs.size()))));
    Matrix out(d, d);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            out(i, j) = fs[static_cast<std::size_t>(i * d + j)](xs);
    return out;
}

double determinant(const Matrix& m) {
    if (m.rows() == 0) return 1.0;
    return m.determinant();
}

ImplicitDomain::ImplicitDomain(Expression g, Box bbox, double eps_proj)
    : g_(std::move(g)), bbox_(std::move(bbox)), eps_proj_(eps_proj), g_c_(g_) {
    const std::size_t d = bbox_.dimension();
    if (d == 0) throw GeometryError("domain dimension must be at least 1");
    if (g_.arity() > d) throw GeometryError("domain function uses variables beyond the dimension");
    for (const auto& [lo, hi] : bbox_.axes)
        if (!(lo < hi)) throw GeometryError("bounding box axis with lo >= hi");
    grad_c_ = compile(gradient(g_, d));
    hess_c_ = compile(hessian(g_, d));
}

ImplicitDomain ImplicitDomain::ball(const Point& center, double radius, double eps_proj) {
    if (!(radius > 0.0)) throw GeometryError("ball radius must be positive");
    const auto d = static_cast<std::size_t>(center.size());
    Expression g = Expression::constant(-radius * radius);
    Box box;
    for (std::size_t i = 0; i < d; ++i) {
        const double c = center[static_cast<Eigen::Index>(i)];
        g = g + Expression::power(Expression::variable(i) - Expression::constant(c), 2);
        box.axes.emplace_back(c - radius, c + radius);
    }
    return ImplicitDomain(std::move(g), std::move(box), eps_proj);
}

double ImplicitDomain::value(const Point& x) const {
    return g_c_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double ImplicitDomain::grad_norm_at(std::span<const double> x) const {
    double sq = 0.0;
    for (const auto& c : grad_c_) {
        const double v = c(x);
        sq += v * v;
    }
    return std::sqrt(sq);
}

Point ImplicitDomain::grad(const Point& x) const { return eval_vector(grad_c_, x); }

Matrix ImplicitDomain::hess(const Point& x) const { return eval_matrix(hess_c_, x); }

Point project_to_boundary(const ImplicitDomain& domain, const Point& x, int max_iterations) {
    Point z = x;
    for (int it = 0; it <= max_iterations; ++it) {
        const double gz = domain.value(z);
        if (std::fabs(gz) <= domain.eps_proj()) return z;
        if (it == max_iterations) break;
        const Point gr = domain.grad(z);
        const double n2 = gr.squaredNorm();
        if (!(n2 > 0.0) || !std::isfinite(n2))
            throw ProjectionError("boundary projection failed: vanishing gradient of g", z);
        z -= (gz / n2) * gr;
        if (!z.allFinite()) throw ProjectionError("boundary projection diverged", z);
    }
    throw ProjectionError(
        "boundary projection did not converge in " + std::to_string(max_iterations) + " iterations",
        z);
}

BoundaryFrame boundary_frame(const ImplicitDomain& domain, const Point& z) {
    const Eigen::Index d = z.size();
    const Point gr = domain.grad(z);
    const double norm = gr.norm();
    if (!(norm > 0.0)) throw GeometryError("boundary frame: vanishing gradient of g");

    BoundaryFrame frame;
    frame.z = z;
    frame.normal = gr / norm;
    frame.tangents.resize(d, d - 1);

    Eigen::Index skip = 0;
    frame.normal.cwiseAbs().maxCoeff(&skip);
    Eigen::Index col = 0;
    for (Eigen::Index axis = 0; axis < d; ++axis) {
        if (axis == skip) continue;
        Point t = Point::Unit(d, axis);
        // Two Gram–Schmidt passes keep orthogonality at round-off level.
        for (int pass = 0; pass < 2; ++pass) {
            t -= t.dot(frame.normal) * frame.normal;
            for (Eigen::Index k = 0; k < col; ++k) t -= t.dot(frame.tangents.col(k)) * frame.tangents.col(k);
        }
        frame.tangents.col(col++) = t.normalized();
    }
    return frame;
}

BoundaryHessian boundary_hessian(const ImplicitDomain& domain, const VectorExpression& grad_f,
                                 const std::vector<Expression>& hess_f, const Point& z,
                                 double tol_crit) {
    BoundaryHessian out;
    out.frame = boundary_frame(domain, z);
    const Point gf = eval_vector(compile(grad_f), z);
    const Matrix hf = eval_matrix(compile(hess_f), z);
    const Point& n = out.frame.normal;
    const Matrix& t = out.frame.tangents;

    out.mu = gf.dot(n);
    out.tangential_gradient = (gf - out.mu * n).norm();
    if (out.tangential_gradient > tol_crit)
        throw NotCriticalError("boundary Hessian requested away from a critical point of f on the "
                               "boundary (tangential gradient " +
                                   std::to_string(out.tangential_gradient) + ")",
                               out.tangential_gradient);

    const double lagrange = out.mu / domain.grad(z).norm();
    Matrix h = t.transpose() * hf * t - lagrange * (t.transpose() * domain.hess(z) * t);
    out.h = 0.5 * (h + h.transpose());
    out.det = determinant(out.h);
    return out;
}

BoundaryHessian boundary_hessian(const ImplicitDomain& domain, const Expression& f, const Point& z,
                                 double tol_crit) {
    const std::size_t d = domain.dimension();
    return boundary_hessian(domain, gradient(f, d), hessian(f, d), z, tol_crit);
}

}  // namespace eyring
