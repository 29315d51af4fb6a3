#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "eyring/wellspec.hpp"

namespace eyring {

class MonteCarloError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CrossingMode {
    interpolate,      // linear interpolation of g over the exit step
    brownian_bridge,  // plus a half-plane bridge test on steps that stay inside
};

struct MCConfig {
    double h = 0.0;
    double dt = 1e-4;
    std::size_t n = 1000;
    Point start;
    std::uint64_t seed = 1;
    CrossingMode crossing = CrossingMode::interpolate;
    std::size_t max_steps = 0;  // per trajectory; 0 selects 10⁹/n
    std::size_t workers = 1;

    std::size_t step_budget() const;
};

struct MCResult {
    std::vector<double> exit_times;  // by trajectory index; +inf when censored
    std::size_t n = 0;
    std::size_t censored = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double standard_error = 0.0;
    double censor_time = 0.0;  // max_steps·dt

    std::size_t uncensored() const { return n - censored; }
    std::vector<double> finite_times() const;
};

/// Euler–Maruyama for dX = b dt + √h dB from cfg.start until g(X) ≥ 0.
/// Trajectory i draws from its own stream keyed by (seed, i), so the result
/// is identical for any worker count.
MCResult simulate_exit(const Model& model, const MCConfig& cfg);

struct KSResult {
    double statistic = 0.0;
    double critical = 0.0;  // asymptotic 1% value 1.628/√n
    std::size_t samples = 0;
    bool pass = false;
};

/// Kolmogorov–Smirnov distance of rate·τ_i against Exp(1).
KSResult exponentiality_test(std::span<const double> times, double rate);
KSResult exponentiality_test(const MCResult& result, double rate);

}  // namespace eyring
