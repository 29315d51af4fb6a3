#pragma once

#include <vector>

#include "eyring/flow.hpp"
#include "eyring/wellspec.hpp"

namespace eyring {

/// Contribution of one generalized saddle point z to 1/κ0:
/// ∂_n f(z) / √det H_z · exp(∫_0^∞ div ℓ(ψ_t(z)) dt).
struct SaddleContribution {
    Point z;
    double f = 0.0;
    double mu = 0.0;
    double det_h = 1.0;
    DivergenceIntegral integral;
    double non_gibbs_factor = 1.0;  // exp(I_z)
    double weight = 0.0;            // mu / sqrt(det_h) · exp(I_z)
};

struct PrefactorReport {
    Point x0;
    double f0 = 0.0;
    double det_hess_x0 = 0.0;
    double f_min_boundary = 0.0;
    double barrier = 0.0;  // min_∂Ω f − f(x0)
    std::vector<SaddleContribution> saddles;

    double inv_kappa0 = 0.0;
    double kappa0 = 0.0;
    double kappa0_error = 0.0;
    double zeta0 = 0.0;  // equals inv_kappa0
    double zeta0_error = 0.0;
    double log_kappa0 = 0.0;
};

/// Leading-order prefactors assembled from a located minimum and saddle set.
PrefactorReport compute_prefactor(const Model& model, const InteriorMinimum& minimum,
                                  const SaddleSet& saddles, const FlowControls& controls);

/// Locates x0 and the saddle set, then assembles the prefactors.
PrefactorReport compute_prefactor(const Model& model);

/// A possibly huge or tiny value together with its natural logarithm.
struct LogScaled {
    double value = 0.0;
    double log_value = 0.0;
};

/// E_x[τ_Ω] ≈ κ0 √h e^{2Δ/h}
LogScaled predict_mean_exit_time(const PrefactorReport& report, double h);

/// λ_h ≈ ζ0 h^{−1/2} e^{−2Δ/h}
LogScaled predict_principal_eigenvalue(const PrefactorReport& report, double h);

/// Gibbsian value of κ0, 1 / Σ_z (√det Hess f(x0)/√π)·μ_z/√det H_z, evaluated
/// from the report geometry with every exp(I_z) set to 1.
double classical_boundary_prefactor(const PrefactorReport& report);

}  // namespace eyring
