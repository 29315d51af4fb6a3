#include "eyring/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "eyring/parallel.hpp"
#include "eyring/random.hpp"

namespace eyring {

std::size_t MCConfig::step_budget() const {
    if (max_steps) return max_steps;
    return std::max<std::size_t>(1, static_cast<std::size_t>(1e9) / std::max<std::size_t>(n, 1));
}

std::vector<double> MCResult::finite_times() const {
    std::vector<double> out;
    out.reserve(uncensored());
    for (double t : exit_times)
        if (std::isfinite(t)) out.push_back(t);
    return out;
}

namespace {

double boundary_distance(const ImplicitDomain& domain, std::span<const double> x, double gx) {
    const double gn = domain.grad_norm_at(x);
    return gn > 0.0 ? -gx / gn : std::numeric_limits<double>::infinity();
}

double run_trajectory(const Model& model, const MCConfig& cfg, std::size_t index,
                      std::size_t budget) {
    const ImplicitDomain& domain = model.domain();
    const std::size_t d = model.dimension();
    auto rng = keyed_engine(cfg.seed, streams::trajectories, index);
    // Bridge draws have their own stream so both crossing modes follow the
    // same path up to the exit.
    auto bridge_rng = keyed_engine(cfg.seed, streams::bridge_tests, index);
    boost::random::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;

    std::vector<double> x(cfg.start.data(), cfg.start.data() + d);
    std::vector<double> b(d);
    const double sigma = std::sqrt(cfg.h * cfg.dt);
    const bool bridge = cfg.crossing == CrossingMode::brownian_bridge;

    double g_prev = domain.value_at(x);
    double dist_prev = bridge ? boundary_distance(domain, x, g_prev) : 0.0;
    for (std::size_t step = 0; step < budget; ++step) {
        model.drift(x, b);
        for (std::size_t i = 0; i < d; ++i) x[i] += b[i] * cfg.dt + sigma * normal(rng);
        const double g_new = domain.value_at(x);
        const double t_prev = static_cast<double>(step) * cfg.dt;
        if (g_new >= 0.0) return t_prev + cfg.dt * g_prev / (g_prev - g_new);
        if (bridge) {
            const double dist_new = boundary_distance(domain, x, g_new);
            // Probability that a Brownian bridge between two points at these
            // distances from a flat boundary touches it.
            const double exponent = 2.0 * dist_prev * dist_new / (cfg.h * cfg.dt);
            if (exponent < 40.0 && uniform(bridge_rng) < std::exp(-exponent)) return t_prev + 0.5 * cfg.dt;
            dist_prev = dist_new;
        }
        g_prev = g_new;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

MCResult simulate_exit(const Model& model, const MCConfig& cfg) {
    if (!(cfg.h > 0.0)) throw std::invalid_argument("mc: h must be positive");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("mc: dt must be positive");
    if (cfg.n < 1) throw std::invalid_argument("mc: n must be at least 1");
    if (static_cast<std::size_t>(cfg.start.size()) != model.dimension())
        throw std::invalid_argument("mc: start point has the wrong dimension");
    if (!(model.domain().value(cfg.start) < 0.0))
        throw std::invalid_argument("mc: start point is not inside the domain");

    const std::size_t budget = cfg.step_budget();
    MCResult out;
    out.n = cfg.n;
    out.censor_time = static_cast<double>(budget) * cfg.dt;
    out.exit_times.resize(cfg.n);
    parallel_for(cfg.n, cfg.workers, [&](std::size_t i) {
        out.exit_times[i] = run_trajectory(model, cfg, i, budget);
    });

    // Reduction in index order: identical for any worker count.
    double sum = 0.0;
    for (double t : out.exit_times) {
        if (std::isfinite(t))
            sum += t;
        else
            ++out.censored;
    }
    const std::size_t m = out.uncensored();
    if (m == 0) {
        std::ostringstream os;
        os << "all " << cfg.n << " trajectories were censored at t = " << out.censor_time
           << " (max_steps = " << budget << ", dt = " << cfg.dt
           << "); raise max_steps to at least " << 10 * budget << " for h = " << cfg.h;
        throw MonteCarloError(os.str());
    }
    out.mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (double t : out.exit_times)
        if (std::isfinite(t)) ss += (t - out.mean) * (t - out.mean);
    out.stddev = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
    out.standard_error = out.stddev / std::sqrt(static_cast<double>(m));
    return out;
}

KSResult exponentiality_test(std::span<const double> times, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponentiality test: rate must be positive");
    std::vector<double> scaled;
    scaled.reserve(times.size());
    for (double t : times)
        if (std::isfinite(t)) scaled.push_back(rate * t);
    if (scaled.size() < 100)
        throw std::invalid_argument("exponentiality test needs at least 100 uncensored samples, got " +
                                    std::to_string(scaled.size()));
    std::sort(scaled.begin(), scaled.end());
    const double n = static_cast<double>(scaled.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        const double cdf = -std::expm1(-scaled[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        dmax = std::max({dmax, cdf - lo, hi - cdf});
    }
    KSResult out;
    out.samples = scaled.size();
    out.statistic = dmax;
    out.critical = 1.628 / std::sqrt(n);
    out.pass = dmax < out.critical;
    return out;
}

KSResult exponentiality_test(const MCResult& result, double rate) {
    return exponentiality_test(result.exit_times, rate);
}

}  // namespace eyring
