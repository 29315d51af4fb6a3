#include "eyring/kramers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace eyring {

PrefactorReport compute_prefactor(const Model& model, const InteriorMinimum& minimum,
                                  const SaddleSet& saddles, const FlowControls& controls) {
    if (saddles.members.empty()) throw AssumptionError("empty saddle set");

    PrefactorReport out;
    out.x0 = minimum.x0;
    out.f0 = minimum.f0;
    out.det_hess_x0 = determinant(minimum.hess);
    out.f_min_boundary = saddles.f_min;
    out.barrier = saddles.f_min - minimum.f0;
    if (!(out.barrier > 0.0)) throw AssumptionError("barrier min f|bd - f(x0) is not positive");
    if (!(out.det_hess_x0 > 0.0)) throw AssumptionError("det Hess f(x0) is not positive");

    double sum = 0.0;
    double max_integral_error = 0.0;
    for (const auto& s : saddles.members) {
        if (!(s.geometry.det > 0.0)) {
            std::ostringstream os;
            os << "boundary Hessian at z = (" << s.z.transpose() << ") has det " << s.geometry.det
               << " <= 0; z is not a boundary minimizer";
            throw AssumptionError(os.str());
        }
        SaddleContribution c;
        c.z = s.z;
        c.f = s.f;
        c.mu = s.geometry.mu;
        c.det_h = s.geometry.det;
        c.integral = divergence_integral(model, minimum.x0, s.z, controls);
        c.non_gibbs_factor = std::exp(c.integral.value);
        c.weight = c.mu / std::sqrt(c.det_h) * c.non_gibbs_factor;
        sum += c.weight;
        max_integral_error = std::max(max_integral_error, c.integral.error);
        out.saddles.push_back(std::move(c));
    }

    out.inv_kappa0 = std::sqrt(out.det_hess_x0) / std::sqrt(std::numbers::pi) * sum;
    out.kappa0 = 1.0 / out.inv_kappa0;
    out.zeta0 = out.inv_kappa0;
    out.log_kappa0 = -std::log(out.inv_kappa0);
    // Every exp(I_z) factor moves by at most a relative expm1(δI_z).
    const double rel = std::expm1(max_integral_error);
    out.kappa0_error = out.kappa0 * rel;
    out.zeta0_error = out.zeta0 * rel;
    return out;
}

PrefactorReport compute_prefactor(const Model& model) {
    const InteriorMinimum minimum = find_interior_minimum(model);
    const SaddleSet saddles = find_saddle_set(model, minimum.f0);
    return compute_prefactor(model, minimum, saddles, FlowControls::from(model.options()));
}

namespace {

void check_temperature(const PrefactorReport& report, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("temperature h must be positive");
    if (!(report.barrier > 0.0)) throw std::invalid_argument("barrier must be positive");
}

}  // namespace

LogScaled predict_mean_exit_time(const PrefactorReport& report, double h) {
    check_temperature(report, h);
    const double log_value = std::log(report.kappa0) + 0.5 * std::log(h) + 2.0 * report.barrier / h;
    return {std::exp(log_value), log_value};
}

LogScaled predict_principal_eigenvalue(const PrefactorReport& report, double h) {
    check_temperature(report, h);
    const double log_value = std::log(report.zeta0) - 0.5 * std::log(h) - 2.0 * report.barrier / h;
    return {std::exp(log_value), log_value};
}

double classical_boundary_prefactor(const PrefactorReport& report) {
    double sum = 0.0;
    for (const auto& s : report.saddles) sum += s.mu / std::sqrt(s.det_h);
    return std::sqrt(std::numbers::pi) / (std::sqrt(report.det_hess_x0) * sum);
}

}  // namespace eyring
