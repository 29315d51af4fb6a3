#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>
#include <vector>

#include "eyring/expr.hpp"

namespace eyring {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class ProjectionError : public std::runtime_error {
public:
    ProjectionError(const std::string& what, Point last_iterate)
        : std::runtime_error(what), last_(std::move(last_iterate)) {}
    const Point& last_iterate() const noexcept { return last_; }

private:
    Point last_;
};

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by boundary_hessian away from critical points of f restricted to
/// the boundary, where the restricted Hessian depends on the chosen frame.
class NotCriticalError : public GeometryError {
public:
    NotCriticalError(const std::string& what, double tangential_gradient)
        : GeometryError(what), tangential_gradient_(tangential_gradient) {}
    double tangential_gradient() const noexcept { return tangential_gradient_; }

private:
    double tangential_gradient_;
};

struct Box {
    std::vector<std::pair<double, double>> axes;  // [lo, hi] per axis

    std::size_t dimension() const { return axes.size(); }
    bool contains(const Point& x) const;
    double diameter() const;
    double max_side() const;
};

/// Ω = {g < 0}, bounded by `bbox`.
class ImplicitDomain {
public:
    ImplicitDomain(Expression g, Box bbox, double eps_proj = 1e-12);

    /// Sugar for the ball |x − center|² − r² < 0 with a tight bounding box.
    static ImplicitDomain ball(const Point& center, double radius, double eps_proj = 1e-12);

    std::size_t dimension() const { return bbox_.dimension(); }
    const Expression& g() const { return g_; }
    const Box& bbox() const { return bbox_; }
    double eps_proj() const { return eps_proj_; }

    double value(const Point& x) const;
    double value_at(std::span<const double> x) const { return g_c_(x); }
    Point grad(const Point& x) const;
    /// |∇g(x)| without allocating, for per-step use in simulations.
    double grad_norm_at(std::span<const double> x) const;
    Matrix hess(const Point& x) const;
    bool inside(const Point& x) const { return value(x) < 0.0; }

private:
    Expression g_;
    Box bbox_;
    double eps_proj_;
    CompiledExpression g_c_;
    std::vector<CompiledExpression> grad_c_;
    std::vector<CompiledExpression> hess_c_;
};

struct BoundaryFrame {
    Point z;
    Point normal;     // unit, outward
    Matrix tangents;  // d × (d−1), orthonormal columns
};

struct BoundaryHessian {
    BoundaryFrame frame;
    Matrix h;            // (d−1)×(d−1), symmetric
    double mu = 0.0;     // ∂_n f(z)
    double det = 1.0;    // det of the empty matrix is 1
    double tangential_gradient = 0.0;
};

/// Newton iteration z ← z − g(z)∇g(z)/|∇g(z)|² until |g(z)| ≤ eps_proj.
Point project_to_boundary(const ImplicitDomain& domain, const Point& x, int max_iterations = 100);

BoundaryFrame boundary_frame(const ImplicitDomain& domain, const Point& z);

/// Hessian of f restricted to ∂Ω at a tangential critical point z, computed
/// as t_i·Hess f·t_j − (∂_n f/|∇g|)·t_i·Hess g·t_j.
BoundaryHessian boundary_hessian(const ImplicitDomain& domain, const VectorExpression& grad_f,
                                 const std::vector<Expression>& hess_f, const Point& z,
                                 double tol_crit = 1e-8);

BoundaryHessian boundary_hessian(const ImplicitDomain& domain, const Expression& f, const Point& z,
                                 double tol_crit = 1e-8);

/// Determinant with the 0×0 convention det = 1.
double determinant(const Matrix& m);

/// Evaluates a list of compiled expressions into a vector.
Point eval_vector(const std::vector<CompiledExpression>& fs, const Point& x);

/// Evaluates a row-major d×d list of compiled expressions into a matrix.
Matrix eval_matrix(const std::vector<CompiledExpression>& fs, const Point& x);

std::vector<CompiledExpression> compile(const std::vector<Expression>& es);

}  // namespace eyring
