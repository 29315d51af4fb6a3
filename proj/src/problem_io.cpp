#include "eyring/problem_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace eyring {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ProblemFileError(msg); }

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key)) fail("unknown key '" + key + "' in " + where);
}

double number(const nlohmann::json& j, const std::string& what) {
    if (!j.is_number()) fail(what + " must be a number");
    return j.get<double>();
}

Point point(const nlohmann::json& j, std::size_t d, const std::string& what) {
    if (!j.is_array() || j.size() != d)
        fail(what + " must be an array of " + std::to_string(d) + " numbers");
    Point x(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) x[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return x;
}

Expression expression(const nlohmann::json& j, std::size_t d, const std::string& what) {
    if (!j.is_string()) fail(what + " must be an expression string");
    try {
        return parse(j.get<std::string>(), d);
    } catch (const ParseError& e) {
        fail(what + ": " + e.what());
    }
}

ImplicitDomain domain_from(const nlohmann::json& j, std::size_t d, double eps_proj) {
    if (!j.is_object()) fail("domain must be an object");
    if (!j.contains("type") || !j["type"].is_string()) fail("domain.type must be a string");
    const std::string type = j["type"].get<std::string>();
    if (type == "ball") {
        reject_unknown(j, {"type", "center", "radius"}, "domain");
        if (!j.contains("center") || !j.contains("radius")) fail("ball domain needs center and radius");
        const double r = number(j["radius"], "domain.radius");
        if (!(r > 0.0)) fail("domain.radius must be positive");
        return ImplicitDomain::ball(point(j["center"], d, "domain.center"), r, eps_proj);
    }
    if (type == "implicit") {
        reject_unknown(j, {"type", "g", "bbox"}, "domain");
        if (!j.contains("g") || !j.contains("bbox")) fail("implicit domain needs g and bbox");
        const auto& bb = j["bbox"];
        if (!bb.is_array() || bb.size() != d) fail("domain.bbox must list one [lo, hi] pair per axis");
        Box box;
        for (const auto& axis : bb) {
            if (!axis.is_array() || axis.size() != 2) fail("domain.bbox entries must be [lo, hi]");
            const double lo = number(axis[0], "domain.bbox");
            const double hi = number(axis[1], "domain.bbox");
            if (!(lo < hi)) fail("domain.bbox entries need lo < hi");
            box.axes.emplace_back(lo, hi);
        }
        return ImplicitDomain(expression(j["g"], d, "domain.g"), std::move(box), eps_proj);
    }
    fail("domain.type must be \"ball\" or \"implicit\", got \"" + type + "\"");
}

SolverOptions options_from(const nlohmann::json& j) {
    SolverOptions o;
    if (j.is_null()) return o;
    if (!j.is_object()) fail("options must be an object");
    reject_unknown(j,
                   {"seed", "interior_starts", "boundary_starts", "samples", "workers", "tol_grad",
                    "tol_crit", "tol_level_rel", "dedupe_rel", "det_min", "eps_x", "t_max",
                    "flow_tol", "eps_tail", "fd_step_rel", "eps_proj"},
                   "options");
    auto count = [&](const char* key, std::size_t& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_unsigned()) fail(std::string("options.") + key + " must be a nonnegative integer");
        out = j[key].get<std::size_t>();
    };
    auto positive = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        const double v = number(j[key], std::string("options.") + key);
        if (!(v > 0.0)) fail(std::string("options.") + key + " must be positive");
        out = v;
    };
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("options.seed must be a nonnegative integer");
        o.seed = j["seed"].get<std::uint64_t>();
    }
    count("interior_starts", o.interior_starts);
    count("boundary_starts", o.boundary_starts);
    count("samples", o.samples);
    count("workers", o.workers);
    positive("tol_grad", o.tol_grad);
    positive("tol_crit", o.tol_crit);
    positive("tol_level_rel", o.tol_level_rel);
    positive("dedupe_rel", o.dedupe_rel);
    positive("det_min", o.det_min);
    positive("eps_x", o.eps_x);
    positive("t_max", o.t_max);
    positive("flow_tol", o.flow_tol);
    positive("eps_tail", o.eps_tail);
    positive("fd_step_rel", o.fd_step_rel);
    return o;
}

}  // namespace

ProblemSpec parse_problem(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail("problem file must be a JSON object");
    reject_unknown(j, {"name", "dimension", "f", "ell", "domain", "witness", "options"}, "problem");
    for (const char* key : {"dimension", "f", "ell", "domain", "witness"})
        if (!j.contains(key)) fail(std::string("missing required key '") + key + "'");
    if (!j["dimension"].is_number_unsigned() || j["dimension"].get<std::size_t>() < 1)
        fail("dimension must be a positive integer");
    const auto d = j["dimension"].get<std::size_t>();

    const nlohmann::json opts = j.contains("options") ? j["options"] : nlohmann::json();
    double eps_proj = 1e-12;
    if (opts.is_object() && opts.contains("eps_proj")) {
        eps_proj = number(opts["eps_proj"], "options.eps_proj");
        if (!(eps_proj > 0.0)) fail("options.eps_proj must be positive");
    }

    const auto& ell = j["ell"];
    if (!ell.is_array() || ell.size() != d)
        fail("ell must be an array of " + std::to_string(d) + " expression strings");
    VectorExpression ell_e;
    for (std::size_t i = 0; i < d; ++i)
        ell_e.push_back(expression(ell[i], d, "ell[" + std::to_string(i) + "]"));

    ProblemSpec spec{d,
                     expression(j["f"], d, "f"),
                     std::move(ell_e),
                     domain_from(j["domain"], d, eps_proj),
                     point(j["witness"], d, "witness"),
                     options_from(opts)};
    return spec;
}

ProblemSpec load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

std::string input_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(num(m(i, k)));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

Json to_json(const Point& x) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(num(x[i]));
    return a;
}

Json to_json(const AssumptionReport& report) {
    Json j;
    j["passed"] = report.passed();
    Json checks = Json::array();
    for (const auto& c : report.checks)
        checks.push_back(Json{{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}});
    j["checks"] = checks;
    j["max_abs_ell_dot_grad_f"] = num(report.max_orthogonality);
    j["max_grad_f_sq"] = num(report.max_grad_sq);
    j["interior_samples"] = report.interior_samples;
    j["boundary_samples"] = report.boundary_samples;
    j["x0"] = report.x0 ? to_json(*report.x0) : Json(nullptr);
    j["min_hess_eigenvalue"] = num(report.min_hess_eigenvalue);
    j["abs_drift_x0"] = num(report.drift_at_x0);
    j["div_ell_x0"] = num(report.div_ell_at_x0);
    j["saddle_count"] = report.saddle_count;
    j["min_abs_det_hz"] = num(report.min_abs_det);
    j["min_mu_z"] = num(report.min_mu);
    return j;
}

Json to_json(const SaddleSet& set) {
    Json j;
    j["f_min_boundary"] = num(set.f_min);
    j["tol_level"] = num(set.tol_level);
    j["candidates"] = set.candidates;
    Json members = Json::array();
    for (const auto& s : set.members) {
        members.push_back(Json{{"z", to_json(s.z)},
                               {"f", num(s.f)},
                               {"normal", to_json(s.geometry.frame.normal)},
                               {"mu_z", num(s.geometry.mu)},
                               {"h_z", matrix_json(s.geometry.h)},
                               {"det_h_z", num(s.geometry.det)},
                               {"tangential_gradient", num(s.geometry.tangential_gradient)}});
    }
    j["members"] = members;
    return j;
}

Json to_json(const PrefactorReport& r) {
    Json j;
    j["x0"] = to_json(r.x0);
    j["f_x0"] = num(r.f0);
    j["det_hess_f_x0"] = num(r.det_hess_x0);
    j["min_boundary_f"] = num(r.f_min_boundary);
    j["barrier"] = num(r.barrier);
    Json saddles = Json::array();
    for (const auto& s : r.saddles) {
        saddles.push_back(Json{{"z", to_json(s.z)},
                               {"f", num(s.f)},
                               {"mu_z", num(s.mu)},
                               {"det_h_z", num(s.det_h)},
                               {"divergence_integral", num(s.integral.value)},
                               {"divergence_integral_error", num(s.integral.error)},
                               {"divergence_integral_tail", num(s.integral.tail)},
                               {"decay_rate", num(s.integral.decay_rate)},
                               {"flow_time", num(s.integral.t_end)},
                               {"integral_status", to_string(s.integral.status)},
                               {"non_gibbs_factor", num(s.non_gibbs_factor)},
                               {"weight", num(s.weight)}});
    }
    j["saddles"] = saddles;
    j["inv_kappa0"] = num(r.inv_kappa0);
    j["kappa0"] = num(r.kappa0);
    j["kappa0_error"] = num(r.kappa0_error);
    j["log_kappa0"] = num(r.log_kappa0);
    j["zeta0"] = num(r.zeta0);
    j["zeta0_error"] = num(r.zeta0_error);
    j["classical_kappa0"] = num(classical_boundary_prefactor(r));
    return j;
}

Json to_json(const MCResult& result, bool include_times) {
    Json j;
    j["n"] = result.n;
    j["censored"] = result.censored;
    j["censor_time"] = num(result.censor_time);
    j["mean"] = num(result.mean);
    j["stddev"] = num(result.stddev);
    j["standard_error"] = num(result.standard_error);
    if (include_times) {
        Json times = Json::array();
        for (double t : result.exit_times) times.push_back(num(t));
        j["exit_times"] = times;
    }
    return j;
}

Json to_json(const KSResult& ks) {
    return Json{{"statistic", num(ks.statistic)},
                {"critical_1pct", num(ks.critical)},
                {"samples", ks.samples},
                {"pass", ks.pass}};
}

Json summary_json(const GridSolution& s) {
    Json j;
    j["dx"] = num(s.lattice.dx);
    j["shape"] = s.lattice.shape;
    j["interior_nodes"] = s.lattice.node.size();
    j["residual_backward_error"] = num(s.residual);
    j["refinements"] = s.refinements;
    j["upwind_nodes"] = s.upwind_nodes;
    j["max_u"] = num(s.max_u);
    j["min_u"] = num(s.min_u);
    return j;
}

Json to_json(const EigenEstimate& e) {
    return Json{{"lambda", num(e.lambda)},
                {"single_signed", e.single_signed},
                {"iterations", e.iterations},
                {"residual", num(e.residual)}};
}

}  // namespace eyring
