#include "eyring/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace eyring {

FlowControls FlowControls::from(const SolverOptions& opt) {
    FlowControls c;
    c.eps_x = opt.eps_x;
    c.t_max = opt.t_max;
    c.tol = opt.flow_tol;
    c.eps_tail = opt.eps_tail;
    return c;
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b − b̂ (fifth minus embedded fourth order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

double DormandPrince::integrate(double t, Point& y, double t_end, const Observer& observer,
                                std::size_t max_steps) {
    const Eigen::Index n = y.size();
    Point k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n);
    rhs_(t, y, k1);
    ++stats_.rhs_evaluations;

    const double span = t_end - t;
    if (!(span > 0.0)) return t;
    double h = std::min(span, 1e-2 * std::max(1e-3, y.norm()) / std::max(1e-3, k1.norm()));
    h = std::max(h, 1e-12 * span);

    std::size_t steps = 0;
    while (t < t_end) {
        if (++steps > max_steps) break;
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }
        using namespace dp;
        tmp = y + h * a21 * k1;
        rhs_(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        rhs_(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs_(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs_(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs_(t + h, tmp, k6);
        y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs_(t + h, y_new, k7);
        stats_.rhs_evaluations += 6;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = (atol_.size() == n ? atol_[i] : tol_) + tol_ * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
            norm = std::max(norm, std::fabs(err[i]) / sc);
        }
        if (!std::isfinite(norm)) {
            ++stats_.rejected;
            h *= 0.2;
            if (h < 1e-300) throw FlowError("integrator step size underflow", y);
            continue;
        }
        if (norm <= 1.0) {
            ++stats_.accepted;
            t = last ? t_end : t + h;
            y = y_new;
            k1 = k7;
            if (!observer(t, y, err)) return t;
            const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
            h *= factor;
        } else {
            ++stats_.rejected;
            h *= std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 1.0);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// ψ flow

namespace {

std::string describe(const Point& x) {
    std::ostringstream os;
    os.precision(10);
    os << "(" << x.transpose() << ")";
    return os.str();
}

}  // namespace

FlowTrajectory integrate_flow(const Model& model, const Point& x0, const Point& start,
                              const FlowControls& controls) {
    FlowTrajectory out;
    out.samples.push_back({0.0, start});
    out.terminal_distance = (start - x0).norm();
    if (out.terminal_distance <= controls.eps_x) return out;

    DormandPrince stepper([&](double, const Point& y, Point& dy) { dy = model.flow_field(y); },
                          controls.tol);
    Point y = start;
    bool converged = false;
    const double t = stepper.integrate(
        0.0, y, controls.t_max,
        [&](double ts, const Point& ys, const Point&) {
            out.samples.push_back({ts, ys});
            converged = (ys - x0).norm() <= controls.eps_x;
            return !converged;
        },
        controls.max_steps);
    out.t_end = t;
    out.terminal_distance = (y - x0).norm();
    out.stats = stepper.stats();
    if (!converged)
        throw FlowError("flow from " + describe(start) + " did not reach x0 within t_max = " +
                            std::to_string(controls.t_max) + " (distance " +
                            std::to_string(out.terminal_distance) + ")",
                        y);
    return out;
}

Point flow_at(const Model& model, const Point& start, double t, const FlowControls& controls) {
    if (t <= 0.0) return start;
    DormandPrince stepper([&](double, const Point& y, Point& dy) { dy = model.flow_field(y); },
                          controls.tol);
    Point y = start;
    const double reached =
        stepper.integrate(0.0, y, t, [](double, const Point&, const Point&) { return true; },
                          controls.max_steps);
    if (reached < t) throw FlowError("flow_at: step budget exhausted", y);
    return y;
}

DivergenceIntegral divergence_integral(const Model& model, const Point& x0, const Point& z,
                                       const FlowControls& controls) {
    DivergenceIntegral out;
    const Eigen::Index d = z.size();
    const double start_distance = (z - x0).norm();
    if (start_distance <= controls.eps_x) {
        const double div0 = std::fabs(model.div_ell(z));
        out.status = div0 == 0.0 ? Status::pass : Status::warn;
        out.error = out.tail = div0 == 0.0 ? 0.0 : div0 * controls.t_max;
        return out;
    }

    // Augmented state (ψ, I) with dI/dt = div ℓ(ψ).
    DormandPrince stepper(
        [&](double, const Point& y, Point& dy) {
            const Point x = y.head(d);
            dy.resize(d + 1);
            dy.head(d) = model.flow_field(x);
            dy[d] = model.div_ell(x);
        },
        controls.tol);
    // The tail estimate reads |ψ_t − x0| down to about eps_x, so ψ has to be
    // resolved well below that.
    Point atol = Point::Constant(d + 1, controls.tol);
    atol.head(d).setConstant(controls.tol * std::min(1.0, controls.eps_x));
    stepper.set_absolute_tolerance(atol);

    Point y(d + 1);
    y.head(d) = z;
    y[d] = 0.0;

    std::vector<double> times{0.0};
    std::vector<double> distances{start_distance};
    double local_error = 0.0;
    double previous_integral = 0.0;
    bool done = false;

    const double t_end = stepper.integrate(
        0.0, y, controls.t_max,
        [&](double t, const Point& ys, const Point& err) {
            local_error += std::fabs(err[d]);
            const double r = (ys.head(d) - x0).norm();
            times.push_back(t);
            distances.push_back(r);
            const double contribution = std::fabs(ys[d] - previous_integral);
            previous_integral = ys[d];
            done = r <= controls.eps_x && contribution <= controls.eps_tail;
            return !done;
        },
        controls.max_steps);
    out.steps = stepper.stats().accepted;
    out.t_end = t_end;
    out.value = y[d];
    if (!done)
        throw FlowError("divergence integral from " + describe(z) +
                            " did not converge within t_max = " + std::to_string(controls.t_max),
                        y.head(d));

    // Exponential decay rate of |ψ_t − x0| over the final window.
    const double window = std::min(0.5 * t_end, 2.0);
    const double t_from = t_end - window;
    std::size_t first = times.size() - 1;
    while (first > 0 && times[first - 1] >= t_from) --first;
    if (first > 0) --first;
    bool monotone = true;
    for (std::size_t i = first + 1; i < times.size(); ++i)
        if (!(distances[i] < distances[i - 1])) monotone = false;

    const double div_end = std::fabs(model.div_ell(y.head(d)));
    const double dt = times.back() - times[first];
    const double r_end = distances.back();
    const double r_first = distances[first];
    if (monotone && dt > 0.0 && r_end > 0.0 && r_first > r_end) {
        out.decay_rate = std::log(r_first / r_end) / dt;
        out.tail = div_end / out.decay_rate;
    } else if (r_end == 0.0 && div_end == 0.0) {
        out.tail = 0.0;
    } else {
        // No usable rate: bound the tail as if the integrand stayed at its
        // terminal size for another t_end.
        out.status = Status::warn;
        out.tail = div_end * std::max(t_end, 1.0);
    }
    out.error = out.tail + local_error;
    return out;
}

double density_normalization(const Matrix& hess_x0) {
    const double d = static_cast<double>(hess_x0.rows());
    return std::sqrt(std::fabs(determinant(hess_x0))) * std::pow(std::numbers::pi, -0.5 * d);
}

R0Value r0(const Model& model, const InteriorMinimum& minimum, const Point& x,
           const FlowControls& controls) {
    R0Value out;
    const double c0 = density_normalization(minimum.hess);
    out.integral = divergence_integral(model, minimum.x0, x, controls);
    out.value = c0 * std::exp(out.integral.value);
    out.error = out.value * std::expm1(out.integral.error);
    return out;
}

double r0_transport_residual(const Model& model, const InteriorMinimum& minimum, const Point& x,
                             const FlowControls& controls, double step) {
    const Eigen::Index d = x.size();
    for (Eigen::Index i = 0; i < d; ++i)
        for (double s : {-2.0 * step, 2.0 * step}) {
            Point probe = x;
            probe[i] += s;
            if (!(model.domain().value(probe) < 0.0))
                throw std::invalid_argument("r0_transport_residual: point closer than two "
                                            "finite-difference steps to the boundary");
        }

    const double center = r0(model, minimum, x, controls).value;
    Point grad(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Point xp = x;
        Point xm = x;
        xp[i] += step;
        xm[i] -= step;
        grad[i] = (r0(model, minimum, xp, controls).value - r0(model, minimum, xm, controls).value) /
                  (2.0 * step);
    }
    const Point field = model.flow_field(x);  // −(∇f − ℓ)
    const double transport = field.dot(grad);
    const double source = center * model.div_ell(x);
    const double scale = std::fabs(source) + field.norm() * grad.norm() + 1e-10 * std::fabs(center);
    if (scale == 0.0) return 0.0;
    return std::fabs(transport + source) / scale;
}

}  // namespace eyring
