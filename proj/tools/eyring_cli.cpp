// Command-line front end: reads a JSON problem file, runs one subcommand and
// writes a JSON report to stdout (or --out). Tables and timings go to stderr
// so that the JSON body depends only on the input file and the seed.
//
// Exit codes: 0 success, 1 usage or parse error, 2 assumption, validation or
// computation failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eyring/flow.hpp"
#include "eyring/kramers.hpp"
#include "eyring/montecarlo.hpp"
#include "eyring/pde2d.hpp"
#include "eyring/problem_io.hpp"

#ifndef EYRING_VERSION
#define EYRING_VERSION "0.0.0"
#endif

namespace {

using namespace eyring;

enum Exit { ok = 0, usage = 1, failure = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Inputs {
    std::string file;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

struct Loaded {
    std::string bytes;
    ProblemSpec spec;
};

Loaded load(const Inputs& in) {
    std::ifstream f(in.file, std::ios::binary);
    if (!f) throw ProblemFileError("cannot open problem file '" + in.file + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    Loaded l{ss.str(), parse_problem(ss.str())};
    if (in.seed) l.spec.options.seed = *in.seed;
    l.spec.options.workers = in.workers;
    return l;
}

Json envelope(const char* subcommand, const Loaded& l) {
    Json j;
    j["tool"] = "eyring";
    j["version"] = EYRING_VERSION;
    j["subcommand"] = subcommand;
    j["input_hash"] = input_hash(l.bytes);
    j["seed"] = l.spec.options.seed;
    return j;
}

void emit(const Json& report, const std::string& out) {
    const std::string text = report.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + out + "'");
    f << text;
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << std::setprecision(17);
    return f;
}

void print_checks(const AssumptionReport& r) {
    std::cerr << std::left << std::setw(12) << "check" << std::setw(7) << "status" << "detail\n";
    for (const auto& c : r.checks)
        std::cerr << std::setw(12) << c.name << std::setw(7) << to_string(c.status) << c.detail << "\n";
}

// Assumptions must pass before any prediction is made.
bool gate(const Model& model, Json& report) {
    const AssumptionReport a = verify_assumptions(model);
    report["assumptions"] = to_json(a);
    if (!a.passed()) {
        print_checks(a);
        std::cerr << "assumptions failed; see the report\n";
    }
    return a.passed();
}

Point parse_point(const std::string& text, std::size_t d, const std::string& what) {
    std::vector<double> xs;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            xs.push_back(std::stod(cell, &used));
            if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw UsageError(what + ": '" + cell + "' is not a number");
        }
    }
    if (xs.size() != d)
        throw UsageError(what + " needs " + std::to_string(d) + " comma-separated coordinates");
    return Eigen::Map<Point>(xs.data(), static_cast<Eigen::Index>(d));
}

// One point per line; blank lines, '#' comments and a non-numeric first line
// (header) are skipped.
std::vector<Point> read_points(const std::string& path, std::size_t d) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open points file '" + path + "'");
    std::vector<Point> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        try {
            points.push_back(parse_point(line, d, path + ":" + std::to_string(lineno)));
        } catch (const UsageError&) {
            if (lineno == 1) continue;
            throw;
        }
    }
    if (points.empty()) throw UsageError("no points in '" + path + "'");
    return points;
}

// ---------------------------------------------------------------------------

int cmd_check(const Inputs& in) {
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("check", l);
    const AssumptionReport a = verify_assumptions(model);
    report["assumptions"] = to_json(a);
    print_checks(a);
    emit(report, in.out);
    return a.passed() ? ok : failure;
}

int cmd_prefactor(const Inputs& in) {
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("prefactor", l);
    if (!gate(model, report)) {
        emit(report, in.out);
        return failure;
    }
    const InteriorMinimum minimum = find_interior_minimum(model);
    const SaddleSet saddles = find_saddle_set(model, minimum.f0);
    const PrefactorReport p = compute_prefactor(model, minimum, saddles, FlowControls::from(l.spec.options));
    report["saddle_set"] = to_json(saddles);
    report["prefactor"] = to_json(p);
    std::cerr << std::setprecision(10) << "kappa0 = " << p.kappa0 << " +- " << p.kappa0_error
              << ", zeta0 = " << p.zeta0 << ", barrier = " << p.barrier << "\n";
    for (const auto& s : p.saddles)
        std::cerr << "  z = (" << s.z.transpose() << "): mu = " << s.mu << ", det H = " << s.det_h
                  << ", exp(I) = " << s.non_gibbs_factor << "\n";
    emit(report, in.out);
    return ok;
}

int cmd_predict(const Inputs& in, const std::vector<double>& hs) {
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("predict", l);
    if (!gate(model, report)) {
        emit(report, in.out);
        return failure;
    }
    const PrefactorReport p = compute_prefactor(model);
    report["prefactor"] = to_json(p);
    Json rows = Json::array();
    for (double h : hs) {
        const LogScaled tau = predict_mean_exit_time(p, h);
        const LogScaled lambda = predict_principal_eigenvalue(p, h);
        rows.push_back(Json{{"h", h},
                            {"mean_exit_time", std::isfinite(tau.value) ? Json(tau.value) : Json(nullptr)},
                            {"log_mean_exit_time", tau.log_value},
                            {"principal_eigenvalue", lambda.value},
                            {"log_principal_eigenvalue", lambda.log_value}});
        std::cerr << std::setprecision(10) << "h = " << h << ": E[tau] = " << tau.value
                  << " (log " << tau.log_value << "), lambda = " << lambda.value << "\n";
    }
    report["predictions"] = rows;
    emit(report, in.out);
    return ok;
}

struct McArgs {
    double h = 0.0;
    double dt = 1e-4;
    std::size_t n = 1000;
    std::size_t max_steps = 0;
    bool bridge = false;
    std::string start;
    std::string csv;
};

int cmd_mc(const Inputs& in, const McArgs& a) {
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("mc", l);
    MCConfig cfg;
    cfg.h = a.h;
    cfg.dt = a.dt;
    cfg.n = a.n;
    cfg.seed = l.spec.options.seed;
    cfg.workers = in.workers;
    cfg.max_steps = a.max_steps;
    cfg.crossing = a.bridge ? CrossingMode::brownian_bridge : CrossingMode::interpolate;
    cfg.start = a.start.empty() ? find_interior_minimum(model).x0
                                : parse_point(a.start, l.spec.dimension, "--start");
    report["config"] = Json{{"h", cfg.h},
                            {"dt", cfg.dt},
                            {"n", cfg.n},
                            {"start", to_json(cfg.start)},
                            {"max_steps", cfg.step_budget()},
                            {"crossing", a.bridge ? "brownian_bridge" : "interpolate"}};
    const auto t0 = std::chrono::steady_clock::now();
    const MCResult r = simulate_exit(model, cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["result"] = to_json(r);
    if (r.uncensored() >= 100 && r.mean > 0.0)
        report["exponentiality"] = to_json(exponentiality_test(r, 1.0 / r.mean));
    std::cerr << std::setprecision(8) << "mean exit time " << r.mean << " +- " << r.standard_error << " ("
              << r.censored << " censored), " << wall << " s\n";
    if (!a.csv.empty()) {
        auto f = open_csv(a.csv);
        f << "index,exit_time\n";
        for (std::size_t i = 0; i < r.exit_times.size(); ++i) {
            f << i << ",";
            if (std::isfinite(r.exit_times[i]))
                f << r.exit_times[i];
            else
                f << "inf";
            f << "\n";
        }
    }
    emit(report, in.out);
    return ok;
}

struct PdeArgs {
    double h = 0.0;
    std::size_t grid = 256;
    bool eig = false;
    bool shortley_weller = false;
    std::string csv;
};

int cmd_pde(const Inputs& in, const PdeArgs& a) {
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("pde", l);
    GridOptions opts;
    opts.m = a.grid;
    opts.shortley_weller = a.shortley_weller;
    const Point x0 = find_interior_minimum(model).x0;
    const auto t0 = std::chrono::steady_clock::now();
    const GridOperator op(model, a.h, opts);
    const GridSolution s = solve_mean_exit_time(op);
    report["config"] = Json{{"h", a.h}, {"grid", a.grid}, {"shortley_weller", a.shortley_weller}};
    report["x0"] = to_json(x0);
    report["u_x0"] = s.value_at(x0);
    report["grid_solution"] = summary_json(s);
    if (a.eig) {
        const EigenEstimate e = estimate_principal_eigenvalue(op, opts);
        report["principal_eigenvalue"] = to_json(e);
        report["lambda_times_u_x0"] = e.lambda * s.value_at(x0);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << std::setprecision(10) << "u(x0) = " << s.value_at(x0) << ", " << wall << " s\n";
    if (!a.csv.empty()) {
        auto f = open_csv(a.csv);
        for (std::size_t k = 0; k < s.lattice.dimension; ++k) f << "x" << k + 1 << ",";
        f << "u\n";
        for (std::size_t node = 0; node < s.lattice.node_count(); ++node) {
            const Point p = s.lattice.position(node);
            for (Eigen::Index k = 0; k < p.size(); ++k) f << p[k] << ",";
            f << s.u[node] << "\n";
        }
    }
    emit(report, in.out);
    return ok;
}

int cmd_r0(const Inputs& in, const std::string& points_path, bool residual) {
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("r0", l);
    const std::vector<Point> points = read_points(points_path, l.spec.dimension);
    const InteriorMinimum minimum = find_interior_minimum(model);
    const FlowControls controls = FlowControls::from(l.spec.options);
    const double step = l.spec.options.fd_step_rel * l.spec.domain.bbox().max_side();
    report["x0"] = to_json(minimum.x0);
    report["c0"] = density_normalization(minimum.hess);
    Json rows = Json::array();
    int status = ok;
    for (const Point& x : points) {
        Json row{{"x", to_json(x)}};
        try {
            const R0Value v = r0(model, minimum, x, controls);
            row["r0"] = v.value;
            row["error"] = v.error;
            row["divergence_integral"] = v.integral.value;
        } catch (const std::exception& e) {
            row["error_message"] = e.what();
            status = failure;
            rows.push_back(row);
            continue;
        }
        // The residual is a diagnostic; a point too close to the boundary for
        // the stencil does not invalidate its R0 value.
        if (residual) {
            try {
                row["transport_residual"] = r0_transport_residual(model, minimum, x, controls, step);
            } catch (const std::exception& e) {
                row["transport_residual"] = nullptr;
                row["transport_residual_note"] = e.what();
            }
        }
        rows.push_back(row);
    }
    report["points"] = rows;
    emit(report, in.out);
    return status;
}

struct ValidateArgs {
    std::vector<double> hs;
    std::size_t grid = 256;
    bool shortley_weller = false;
    std::size_t mc_n = 0;
    double dt = 1e-4;
    std::size_t max_steps = 0;
    std::string csv;
};

int cmd_validate(const Inputs& in, const ValidateArgs& a) {
    if (a.hs.empty()) throw UsageError("validate needs a nonempty --h list");
    const Loaded l = load(in);
    const Model model(l.spec);
    Json report = envelope("validate", l);
    if (!gate(model, report)) {
        emit(report, in.out);
        return failure;
    }
    const InteriorMinimum minimum = find_interior_minimum(model);
    const PrefactorReport p = compute_prefactor(model);
    report["prefactor"] = to_json(p);
    report["config"] = Json{{"grid", a.grid}, {"shortley_weller", a.shortley_weller},
                            {"mc_n", a.mc_n}, {"dt", a.dt}};
    const bool pde = l.spec.dimension <= 2;

    Json rows = Json::array();
    bool all_ok = true;
    std::ostringstream csv;
    csv << std::setprecision(17) << "h,prediction,pde,pde_ratio,mc_mean,mc_standard_error,mc_ratio,status\n";
    std::cerr << std::left << std::setw(8) << "h" << std::setw(16) << "prediction" << std::setw(16) << "pde"
              << std::setw(12) << "pde/pred" << std::setw(24) << "mc" << "status\n";
    for (double h : a.hs) {
        Json row{{"h", h}};
        std::vector<std::string> problems;
        const LogScaled pred = predict_mean_exit_time(p, h);
        row["prediction"] = std::isfinite(pred.value) ? Json(pred.value) : Json(nullptr);
        row["log_prediction"] = pred.log_value;
        double u0 = NAN, mc_mean = NAN, mc_se = NAN;
        if (pde) {
            try {
                GridOptions opts;
                opts.m = a.grid;
                opts.shortley_weller = a.shortley_weller;
                const GridSolution s = solve_mean_exit_time(model, h, opts);
                u0 = s.value_at(minimum.x0);
                row["pde"] = u0;
                row["pde_ratio"] = u0 / pred.value;
                row["pde_residual"] = s.residual;
            } catch (const std::exception& e) {
                problems.push_back(std::string("pde: ") + e.what());
            }
        }
        if (a.mc_n > 0) {
            try {
                MCConfig cfg;
                cfg.h = h;
                cfg.dt = a.dt;
                cfg.n = a.mc_n;
                cfg.start = minimum.x0;
                cfg.seed = l.spec.options.seed;
                cfg.workers = in.workers;
                cfg.max_steps = a.max_steps;
                const MCResult r = simulate_exit(model, cfg);
                mc_mean = r.mean;
                mc_se = r.standard_error;
                row["mc"] = to_json(r);
                row["mc_ratio"] = r.mean / pred.value;
                if (r.censored) problems.push_back("mc: " + std::to_string(r.censored) + " censored");
            } catch (const std::exception& e) {
                problems.push_back(std::string("mc: ") + e.what());
            }
        }
        std::string status = "ok";
        if (!problems.empty()) {
            status.clear();
            for (const auto& s : problems) status += (status.empty() ? "" : "; ") + s;
            all_ok = false;
        }
        row["status"] = status;
        rows.push_back(row);

        csv << h << "," << pred.value << "," << u0 << "," << u0 / pred.value << "," << mc_mean << "," << mc_se
            << "," << mc_mean / pred.value << ",\"" << status << "\"\n";
        std::ostringstream mc;
        if (std::isfinite(mc_mean)) mc << std::setprecision(6) << mc_mean << " +- " << mc_se;
        std::cerr << std::setprecision(8) << std::setw(8) << h << std::setw(16) << pred.value << std::setw(16)
                  << u0 << std::setw(12) << u0 / pred.value << std::setw(24) << mc.str() << status << "\n";
    }
    report["rows"] = rows;
    if (!a.csv.empty()) open_csv(a.csv) << csv.str();
    emit(report, in.out);
    return all_ok ? ok : failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eyring-Kramers prefactors for non-reversible diffusions, with PDE and Monte Carlo checks"};
    app.set_version_flag("--version", EYRING_VERSION);
    // "-h" would shadow the noise-level option --h in every subcommand.
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    Inputs in;
    auto common = [&](CLI::App* sub) {
        sub->add_option("file", in.file, "JSON problem file")->required();
        sub->add_option("--out,-o", in.out, "write the JSON report here instead of stdout");
        sub->add_option("--seed", in.seed, "override options.seed of the problem file");
        sub->add_option("--workers", in.workers, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* check = app.add_subcommand("check", "verify the standing assumptions");
    common(check);

    auto* prefactor = app.add_subcommand("prefactor", "x0, saddle set and the prefactors kappa0, zeta0");
    common(prefactor);

    std::vector<double> predict_h;
    auto* predict = app.add_subcommand("predict", "leading-order E[tau] and lambda_h at given h");
    common(predict);
    predict->add_option("--h", predict_h, "noise level(s); repeat or comma-separate")
        ->required()
        ->delimiter(',')
        ->check(CLI::PositiveNumber);

    McArgs mc_args;
    auto* mc = app.add_subcommand("mc", "Euler-Maruyama exit times");
    common(mc);
    mc->add_option("--h", mc_args.h, "noise level")->required()->check(CLI::PositiveNumber);
    mc->add_option("--dt", mc_args.dt, "time step")->check(CLI::PositiveNumber);
    mc->add_option("--n", mc_args.n, "trajectories")->check(CLI::PositiveNumber);
    mc->add_option("--max-steps", mc_args.max_steps, "per-trajectory step budget (0: 1e9/n)");
    mc->add_option("--start", mc_args.start, "start point as x1,x2,... (default x0)");
    mc->add_flag("--bridge", mc_args.bridge, "Brownian-bridge crossing test between steps");
    mc->add_option("--csv", mc_args.csv, "write exit times as CSV");

    PdeArgs pde_args;
    auto* pde = app.add_subcommand("pde", "grid solution of L_h u = 1 (d = 1, 2)");
    common(pde);
    pde->add_option("--h", pde_args.h, "noise level")->required()->check(CLI::PositiveNumber);
    pde->add_option("--grid", pde_args.grid, "cells along the longest bounding-box side")
        ->check(CLI::Range(std::size_t{32}, std::size_t{1} << 14));
    pde->add_flag("--eig", pde_args.eig, "also estimate the principal eigenvalue");
    pde->add_flag("--shortley-weller", pde_args.shortley_weller, "cut-cell boundary treatment");
    pde->add_option("--csv", pde_args.csv, "write u on the lattice as CSV");

    std::string points;
    bool residual = false;
    auto* r0_cmd = app.add_subcommand("r0", "leading-order density shape R0 at given points");
    common(r0_cmd);
    r0_cmd->add_option("--points", points, "CSV file with one point per line")->required();
    r0_cmd->add_flag("--residual", residual, "also report the transport-equation residual");

    ValidateArgs v_args;
    auto* validate = app.add_subcommand("validate", "prediction against PDE and Monte Carlo over an h list");
    common(validate);
    validate->add_option("--h", v_args.hs, "comma-separated noise levels")
        ->required()
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    validate->add_option("--grid", v_args.grid, "PDE grid cells")->check(CLI::Range(std::size_t{32}, std::size_t{1} << 14));
    validate->add_flag("--shortley-weller", v_args.shortley_weller, "cut-cell boundary treatment");
    validate->add_option("--mc-n", v_args.mc_n, "Monte Carlo trajectories per h (0 disables)");
    validate->add_option("--dt", v_args.dt, "Monte Carlo time step")->check(CLI::PositiveNumber);
    validate->add_option("--max-steps", v_args.max_steps, "Monte Carlo step budget");
    validate->add_option("--csv", v_args.csv, "write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (check->parsed()) return cmd_check(in);
        if (prefactor->parsed()) return cmd_prefactor(in);
        if (predict->parsed()) return cmd_predict(in, predict_h);
        if (mc->parsed()) return cmd_mc(in, mc_args);
        if (pde->parsed()) return cmd_pde(in, pde_args);
        if (r0_cmd->parsed()) return cmd_r0(in, points, residual);
        if (validate->parsed()) return cmd_validate(in, v_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const ProblemFileError& e) {
        std::cerr << "problem file error: " << e.what() << "\n";
        return usage;
    } catch (const AssumptionError& e) {
        std::cerr << "assumption failure: " << e.what() << "\n";
        return failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return usage;
}
