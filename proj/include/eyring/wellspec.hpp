#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eyring/expr.hpp"
#include "eyring/geometry.hpp"

namespace eyring {

struct SolverOptions {
    std::uint64_t seed = 1;
    std::size_t interior_starts = 0;  // 0 selects 16·d
    std::size_t boundary_starts = 0;  // 0 selects 32·d
    std::size_t samples = 10000;
    std::size_t workers = 1;

    double tol_grad = 1e-10;       // interior critical point
    double tol_crit = 1e-8;        // tangential gradient at boundary critical points
    double tol_level_rel = 1e-9;   // argmin f|∂Ω membership, relative to the barrier
    double dedupe_rel = 1e-6;      // cluster radius, relative to the bounding-box diameter
    double det_min = 1e-10;        // smallest admissible |det H_z|

    double eps_x = 1e-10;          // flow: terminal distance to x0
    double t_max = 1e3;
    double flow_tol = 1e-12;       // local error tolerance of the integrator
    double eps_tail = 1e-12;
    double fd_step_rel = 1e-4;     // finite-difference step relative to the box side

    std::size_t interior_start_count(std::size_t d) const {
        return interior_starts ? interior_starts : 16 * d;
    }
    std::size_t boundary_start_count(std::size_t d) const {
        return boundary_starts ? boundary_starts : 32 * d;
    }
};

/// Potential f, transverse field ℓ and domain Ω = {g < 0}. The drift of the
/// diffusion is b = −(∇f + ℓ).
struct ProblemSpec {
    std::size_t dimension = 0;
    Expression f;
    VectorExpression ell;
    ImplicitDomain domain;
    Point witness;
    SolverOptions options;
};

class AssumptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Symbolic derivatives of a ProblemSpec, compiled for evaluation.
class Model {
public:
    explicit Model(ProblemSpec spec);

    const ProblemSpec& spec() const { return spec_; }
    std::size_t dimension() const { return spec_.dimension; }
    const ImplicitDomain& domain() const { return spec_.domain; }
    const SolverOptions& options() const { return spec_.options; }

    const VectorExpression& grad_f_expr() const { return grad_f_; }
    const std::vector<Expression>& hess_f_expr() const { return hess_f_; }
    const Expression& div_ell_expr() const { return div_ell_; }

    double f(const Point& x) const;
    Point grad_f(const Point& x) const { return eval_vector(grad_f_c_, x); }
    Matrix hess_f(const Point& x) const { return eval_matrix(hess_f_c_, x); }
    Point ell(const Point& x) const { return eval_vector(ell_c_, x); }
    double div_ell(const Point& x) const;

    /// b = −(∇f + ℓ)
    Point drift(const Point& x) const { return eval_vector(drift_c_, x); }
    void drift(std::span<const double> x, std::span<double> out) const;

    /// −(∇f − ℓ), the field generating ψ_t.
    Point flow_field(const Point& x) const { return eval_vector(flow_c_, x); }

    /// True when div ℓ simplifies to the constant 0.
    bool divergence_free() const { return div_ell_.is_constant(0.0); }

private:
    ProblemSpec spec_;
    VectorExpression grad_f_;
    std::vector<Expression> hess_f_;
    Expression div_ell_;
    CompiledExpression f_c_;
    CompiledExpression div_ell_c_;
    std::vector<CompiledExpression> grad_f_c_;
    std::vector<CompiledExpression> hess_f_c_;
    std::vector<CompiledExpression> ell_c_;
    std::vector<CompiledExpression> drift_c_;
    std::vector<CompiledExpression> flow_c_;
};

struct InteriorMinimum {
    Point x0;
    Matrix hess;
    double f0 = 0.0;
    double grad_norm = 0.0;
    double min_eigenvalue = 0.0;
    std::size_t converged_starts = 0;
};

/// Damped Newton on ∇f = 0 from multistart points inside Ω. Throws
/// AssumptionError on non-convergence, a non-SPD Hessian, or when more than
/// one interior critical point is found.
InteriorMinimum find_interior_minimum(const Model& model);

struct Saddle {
    Point z;
    double f = 0.0;
    BoundaryHessian geometry;  // frame, μ_z, H_z, det H_z
};

struct SaddleSet {
    std::vector<Saddle> members;
    double f_min = 0.0;        // min over ∂Ω of f
    double tol_level = 0.0;
    std::size_t candidates = 0;  // converged boundary starts before clustering
};

/// Global minimizers of f on ∂Ω located by multistart projected descent and
/// tangential Newton refinement. No assumption checks; see find_saddle_set.
/// `f_reference` (normally f(x0)) sets the scale of the level tolerance.
SaddleSet locate_boundary_minima(const Model& model, std::optional<double> f_reference = {});

/// locate_boundary_minima plus the standing checks: nonempty, μ_z > 0 and
/// |det H_z| ≥ det_min for every member. Throws AssumptionError otherwise.
SaddleSet find_saddle_set(const Model& model, std::optional<double> f_reference = {});

enum class Status { pass, warn, fail };

const char* to_string(Status s);

struct AssumptionCheck {
    std::string name;
    Status status = Status::pass;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;

    double max_orthogonality = 0.0;  // max sampled |ℓ·∇f|
    double max_grad_sq = 0.0;        // max sampled |∇f|²
    std::size_t interior_samples = 0;
    std::size_t boundary_samples = 0;
    std::optional<Point> x0;
    double min_hess_eigenvalue = 0.0;
    double drift_at_x0 = 0.0;        // |b(x0)|
    double div_ell_at_x0 = 0.0;
    std::size_t saddle_count = 0;
    double min_abs_det = 0.0;
    double min_mu = 0.0;

    bool passed() const;
    const AssumptionCheck* find(const std::string& name) const;
};

AssumptionReport verify_assumptions(const Model& model);

}  // namespace eyring
