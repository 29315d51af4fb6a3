#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "eyring/wellspec.hpp"

namespace eyring {

class FlowError : public std::runtime_error {
public:
    FlowError(const std::string& what, Point last) : std::runtime_error(what), last_(std::move(last)) {}
    const Point& last_state() const noexcept { return last_; }

private:
    Point last_;
};

struct FlowControls {
    double eps_x = 1e-10;     // stop once |ψ_T − x0| ≤ eps_x
    double t_max = 1e3;
    double tol = 1e-12;       // local error tolerance (absolute and relative)
    double eps_tail = 1e-12;  // divergence integral: last step contribution
    std::size_t max_steps = 50'000'000;

    static FlowControls from(const SolverOptions& opt);
};

struct StepperStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

/// Embedded Dormand–Prince 5(4) pair with the standard step-size controller.
/// The observer sees every accepted step and returns false to stop.
class DormandPrince {
public:
    using Rhs = std::function<void(double t, const Point& y, Point& dydt)>;
    using Observer = std::function<bool(double t, const Point& y, const Point& error_estimate)>;

    DormandPrince(Rhs rhs, double tol) : rhs_(std::move(rhs)), tol_(tol) {}

    /// Per-component absolute tolerance; by default every component uses tol.
    void set_absolute_tolerance(Point atol) { atol_ = std::move(atol); }

    /// Integrates from (t, y) until the observer stops or t_end is reached
    /// exactly. Returns the final time; y is updated in place.
    double integrate(double t, Point& y, double t_end, const Observer& observer,
                     std::size_t max_steps = 50'000'000);

    const StepperStats& stats() const { return stats_; }

private:
    Rhs rhs_;
    double tol_;
    Point atol_;
    StepperStats stats_;
};

struct FlowSample {
    double t = 0.0;
    Point x;
};

/// ψ_t(start) for dψ/dt = −(∇f − ℓ)(ψ).
struct FlowTrajectory {
    std::vector<FlowSample> samples;
    double t_end = 0.0;
    double terminal_distance = 0.0;
    StepperStats stats;
};

/// Integrates until |ψ_T − x0| ≤ eps_x; throws FlowError if t_max is reached first.
FlowTrajectory integrate_flow(const Model& model, const Point& x0, const Point& start,
                              const FlowControls& controls);

/// ψ_t(start) at an exact time t.
Point flow_at(const Model& model, const Point& start, double t, const FlowControls& controls);

struct DivergenceIntegral {
    double value = 0.0;
    double tail = 0.0;         // estimated ∫_T^∞, reported, not added
    double error = 0.0;        // ≥ |tail|
    double t_end = 0.0;
    double decay_rate = 0.0;   // observed exponential rate of |ψ_t − x0| near T
    Status status = Status::pass;  // warn when the decay rate could not be estimated
    std::size_t steps = 0;
};

/// ∫_0^∞ div ℓ(ψ_t(z)) dt, carried as an extra coordinate of the ODE.
DivergenceIntegral divergence_integral(const Model& model, const Point& x0, const Point& z,
                                       const FlowControls& controls);

/// c0 = |det Hess f(x0)|^{1/2} π^{−d/2}
double density_normalization(const Matrix& hess_x0);

struct R0Value {
    double value = 0.0;
    double error = 0.0;
    DivergenceIntegral integral;
};

/// Leading order of the invariant density shape, c0·exp(∫_0^∞ div ℓ(ψ_t(x)) dt).
R0Value r0(const Model& model, const InteriorMinimum& minimum, const Point& x,
           const FlowControls& controls);

/// Normalized residual of −(∇f − ℓ)·∇R0 + R0 div ℓ with ∇R0 by central
/// differences of step `step`.
double r0_transport_residual(const Model& model, const InteriorMinimum& minimum, const Point& x,
                             const FlowControls& controls, double step);

}  // namespace eyring
