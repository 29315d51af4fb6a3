#include "eyring/wellspec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eyring/parallel.hpp"
#include "eyring/random.hpp"

namespace eyring {

namespace {

std::span<const double> as_span(const Point& x) {
    return {x.data(), static_cast<std::size_t>(x.size())};
}

Point uniform_in_box(const Box& box, std::mt19937_64& rng) {
    Point x(static_cast<Eigen::Index>(box.dimension()));
    for (std::size_t i = 0; i < box.dimension(); ++i) {
        std::uniform_real_distribution<double> u(box.axes[i].first, box.axes[i].second);
        x[static_cast<Eigen::Index>(i)] = u(rng);
    }
    return x;
}

std::optional<Point> uniform_in_domain(const ImplicitDomain& domain, std::mt19937_64& rng,
                                       int max_tries = 1000) {
    for (int k = 0; k < max_tries; ++k) {
        Point x = uniform_in_box(domain.bbox(), rng);
        try {
            if (domain.value(x) < 0.0) return x;
        } catch (const EvalError&) {
        }
    }
    return std::nullopt;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

Model::Model(ProblemSpec spec) : spec_(std::move(spec)) {
    const std::size_t d = spec_.dimension;
    if (d == 0) throw AssumptionError("dimension must be at least 1");
    if (spec_.ell.size() != d)
        throw AssumptionError("transverse field has " + std::to_string(spec_.ell.size()) +
                              " components, expected " + std::to_string(d));
    if (spec_.domain.dimension() != d)
        throw AssumptionError("domain dimension does not match the problem dimension");
    if (static_cast<std::size_t>(spec_.witness.size()) != d)
        throw AssumptionError("witness point has the wrong dimension");
    if (spec_.f.arity() > d) throw AssumptionError("f uses variables beyond the dimension");
    for (const auto& e : spec_.ell)
        if (e.arity() > d) throw AssumptionError("ell uses variables beyond the dimension");

    grad_f_ = gradient(spec_.f, d);
    hess_f_ = hessian(spec_.f, d);
    div_ell_ = divergence(spec_.ell);

    VectorExpression drift_e;
    VectorExpression flow_e;
    for (std::size_t i = 0; i < d; ++i) {
        drift_e.push_back(-(grad_f_[i] + spec_.ell[i]));
        flow_e.push_back(-(grad_f_[i] - spec_.ell[i]));
    }
    f_c_ = CompiledExpression(spec_.f);
    div_ell_c_ = CompiledExpression(div_ell_);
    grad_f_c_ = compile(grad_f_);
    hess_f_c_ = compile(hess_f_);
    ell_c_ = compile(spec_.ell);
    drift_c_ = compile(drift_e);
    flow_c_ = compile(flow_e);
}

double Model::f(const Point& x) const { return f_c_(as_span(x)); }

double Model::div_ell(const Point& x) const { return div_ell_c_(as_span(x)); }

void Model::drift(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < drift_c_.size(); ++i) out[i] = drift_c_[i](x);
}

// ---------------------------------------------------------------------------
// Interior minimum

namespace {

std::optional<Point> newton_critical_point(const Model& model, Point y, double tol) {
    const ImplicitDomain& domain = model.domain();
    try {
        Point gr = model.grad_f(y);
        double gnorm = gr.norm();
        for (int it = 0; it < 200; ++it) {
            if (gnorm <= tol) return y;
            const Matrix h = model.hess_f(y);
            Eigen::FullPivLU<Matrix> lu(h);
            Point step = lu.isInvertible() ? Point(-lu.solve(gr)) : Point(-gr);
            double alpha = 1.0;
            bool accepted = false;
            while (alpha > 1e-12) {
                Point trial = y + alpha * step;
                if (domain.value(trial) < 0.0) {
                    Point tg = model.grad_f(trial);
                    const double tn = tg.norm();
                    if (tn < (1.0 - 1e-4 * alpha) * gnorm || tn <= tol) {
                        y = std::move(trial);
                        gr = std::move(tg);
                        gnorm = tn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if (!accepted) return gnorm <= tol ? std::optional<Point>(y) : std::nullopt;
        }
        return gnorm <= tol ? std::optional<Point>(y) : std::nullopt;
    } catch (const EvalError&) {
        return std::nullopt;
    }
}

}  // namespace

InteriorMinimum find_interior_minimum(const Model& model) {
    const auto& opt = model.options();
    const ImplicitDomain& domain = model.domain();
    const std::size_t d = model.dimension();
    if (!(domain.value(model.spec().witness) < 0.0))
        throw AssumptionError("witness point is not inside the domain (g >= 0)");

    const std::size_t starts = opt.interior_start_count(d) + 1;
    std::vector<std::optional<Point>> found(starts);
    parallel_for(starts, opt.workers, [&](std::size_t k) {
        std::optional<Point> start;
        if (k == 0) {
            start = model.spec().witness;
        } else {
            auto rng = keyed_engine(opt.seed, streams::interior_starts, k);
            start = uniform_in_domain(domain, rng);
        }
        if (start) found[k] = newton_critical_point(model, *start, opt.tol_grad);
    });

    const double radius = opt.dedupe_rel * domain.bbox().diameter();
    // Newton from different starts stops within tol of the same root, so
    // clusters are merged at a radius well above the solver tolerance.
    const double merge = std::max(radius, 1e-7 * domain.bbox().diameter());
    std::vector<Point> distinct;
    std::size_t converged = 0;
    for (const auto& p : found) {
        if (!p) continue;
        ++converged;
        const bool dup = std::any_of(distinct.begin(), distinct.end(),
                                     [&](const Point& q) { return (q - *p).norm() <= merge; });
        if (!dup) distinct.push_back(*p);
    }
    if (distinct.empty())
        throw AssumptionError("interior Newton search did not converge from any start");
    if (distinct.size() > 1) {
        std::ostringstream os;
        os << "multiple critical points of f inside the domain (" << distinct.size() << " found, e.g. ";
        for (std::size_t i = 0; i < std::min<std::size_t>(distinct.size(), 3); ++i)
            os << (i ? ", " : "") << "(" << distinct[i].transpose() << ")";
        os << ")";
        throw AssumptionError(os.str());
    }

    InteriorMinimum out;
    out.x0 = distinct.front();
    out.hess = model.hess_f(out.x0);
    out.hess = 0.5 * (out.hess + out.hess.transpose());
    out.f0 = model.f(out.x0);
    out.grad_norm = model.grad_f(out.x0).norm();
    out.converged_starts = converged;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.hess, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (!(out.min_eigenvalue > 0.0))
        throw AssumptionError("Hessian of f at the interior critical point is not positive definite "
                              "(smallest eigenvalue " + fmt(out.min_eigenvalue) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// Boundary minima

namespace {

struct TangentialState {
    Point gf;
    Point normal;
    Point tangential;
};

TangentialState tangential_gradient(const Model& model, const Point& z) {
    TangentialState s;
    s.gf = model.grad_f(z);
    const Point gg = model.domain().grad(z);
    s.normal = gg / gg.norm();
    s.tangential = s.gf - s.gf.dot(s.normal) * s.normal;
    return s;
}

std::optional<Point> descend_on_boundary(const Model& model, Point z, double tol_crit) {
    const ImplicitDomain& domain = model.domain();
    const double scale = domain.bbox().max_side();
    try {
        // Projected gradient descent with backtracking.
        double alpha = 0.1 * scale;
        double fz = model.f(z);
        for (int it = 0; it < 2000; ++it) {
            const TangentialState s = tangential_gradient(model, z);
            const double gn = s.tangential.norm();
            if (gn <= 1e-3 * tol_crit || gn * alpha < 1e-14 * scale) break;
            bool accepted = false;
            while (alpha > 1e-16 * scale) {
                const Point trial = project_to_boundary(domain, z - (alpha / gn) * s.tangential);
                const double ft = model.f(trial);
                if (ft < fz - 1e-4 * alpha * gn) {
                    z = trial;
                    fz = ft;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;
            alpha = std::min(2.0 * alpha, 0.25 * scale);
            if (gn < 1e-3) break;  // hand over to Newton
        }

        // Tangential Newton refinement.
        for (int it = 0; it < 60; ++it) {
            const BoundaryFrame frame = boundary_frame(domain, z);
            const std::size_t d = model.dimension();
            if (d == 1) break;
            const Point gf = model.grad_f(z);
            const Point gt = frame.tangents.transpose() * gf;
            if (gt.norm() <= 1e-3 * tol_crit) break;
            const double lagrange = gf.dot(frame.normal) / domain.grad(z).norm();
            const Matrix hr = frame.tangents.transpose() * model.hess_f(z) * frame.tangents -
                              lagrange * (frame.tangents.transpose() * domain.hess(z) * frame.tangents);
            Eigen::LDLT<Matrix> ldlt(hr);
            Point step;
            if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                (ldlt.vectorD().array() > 0.0).all())
                step = -ldlt.solve(gt);
            else
                step = -1e-2 * scale * gt / gt.norm();
            Point next = project_to_boundary(domain, z + frame.tangents * step);
            const Point gt_next = boundary_frame(domain, next).tangents.transpose() * model.grad_f(next);
            if (gt_next.norm() >= gt.norm() && it > 5) break;
            z = std::move(next);
        }
        if (tangential_gradient(model, z).tangential.norm() > tol_crit) return std::nullopt;
        return z;
    } catch (const ProjectionError&) {
        return std::nullopt;
    } catch (const GeometryError&) {
        return std::nullopt;
    } catch (const EvalError&) {
        return std::nullopt;
    }
}

}  // namespace

SaddleSet locate_boundary_minima(const Model& model, std::optional<double> f_reference) {
    const auto& opt = model.options();
    const ImplicitDomain& domain = model.domain();
    const std::size_t d = model.dimension();
    const std::size_t starts = opt.boundary_start_count(d);

    std::vector<std::optional<Point>> found(starts);
    parallel_for(starts, opt.workers, [&](std::size_t k) {
        auto rng = keyed_engine(opt.seed, streams::boundary_starts, k);
        const Point x = uniform_in_box(domain.bbox(), rng);
        try {
            found[k] = descend_on_boundary(model, project_to_boundary(domain, x), opt.tol_crit);
        } catch (const ProjectionError&) {
        } catch (const EvalError&) {
        }
    });

    struct Candidate {
        Point z;
        double f;
    };
    std::vector<Candidate> candidates;
    for (auto& p : found)
        if (p) candidates.push_back({*p, model.f(*p)});

    SaddleSet out;
    out.candidates = candidates.size();
    if (candidates.empty()) return out;

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
    out.f_min = candidates.front().f;
    const double barrier = f_reference ? out.f_min - *f_reference : 0.0;
    const double scale = barrier > 0.0 ? barrier : std::max(1.0, std::fabs(out.f_min));
    out.tol_level = opt.tol_level_rel * scale;
    const double radius = opt.dedupe_rel * domain.bbox().diameter();

    std::vector<Point> kept;
    for (const auto& c : candidates) {
        if (c.f - out.f_min > out.tol_level) break;
        const bool dup = std::any_of(kept.begin(), kept.end(),
                                     [&](const Point& q) { return (q - c.z).norm() <= radius; });
        if (dup) continue;
        kept.push_back(c.z);
    }
    // Members are reported in lexicographic order so the set does not depend
    // on which start found which point first. Coordinates are compared on the
    // dedupe grid so that round-off (e.g. ±1e-17 instead of 0) cannot reorder
    // them.
    auto key = [radius](const Point& p) {
        std::vector<double> k(static_cast<std::size_t>(p.size()));
        for (Eigen::Index i = 0; i < p.size(); ++i) k[static_cast<std::size_t>(i)] = std::round(p[i] / radius);
        return k;
    };
    std::sort(kept.begin(), kept.end(), [&](const Point& a, const Point& b) { return key(a) < key(b); });
    for (const auto& z : kept) {
        Saddle s;
        s.z = z;
        s.f = model.f(z);
        s.geometry =
            boundary_hessian(domain, model.grad_f_expr(), model.hess_f_expr(), z, opt.tol_crit);
        out.members.push_back(std::move(s));
    }
    return out;
}

SaddleSet find_saddle_set(const Model& model, std::optional<double> f_reference) {
    SaddleSet set = locate_boundary_minima(model, f_reference);
    if (set.members.empty())
        throw AssumptionError("no critical point of f on the boundary was found");
    for (const auto& s : set.members) {
        if (!(s.geometry.mu > 0.0)) {
            std::ostringstream os;
            os << "boundary is characteristic at z = (" << s.z.transpose()
               << "): normal derivative of f is " << s.geometry.mu;
            throw AssumptionError(os.str());
        }
        if (!(std::fabs(s.geometry.det) >= model.options().det_min)) {
            std::ostringstream os;
            os << "degenerate boundary Hessian at z = (" << s.z.transpose()
               << "): det = " << s.geometry.det;
            throw AssumptionError(os.str());
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Assumption report

const char* to_string(Status s) {
    switch (s) {
        case Status::pass: return "pass";
        case Status::warn: return "warn";
        case Status::fail: return "fail";
    }
    return "?";
}

bool AssumptionReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AssumptionCheck& c) { return c.status == Status::fail; });
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

AssumptionReport verify_assumptions(const Model& model) {
    const auto& opt = model.options();
    const ImplicitDomain& domain = model.domain();
    const Box& box = domain.bbox();
    const std::size_t d = model.dimension();
    AssumptionReport report;

    // Domain: witness, boundedness, smooth boundary.
    {
        AssumptionCheck check{"domain", Status::pass, ""};
        std::vector<std::string> problems;
        try {
            if (!(domain.value(model.spec().witness) < 0.0))
                problems.push_back("g(witness) >= 0: the domain must be {g < 0}");
        } catch (const EvalError& e) {
            problems.push_back(std::string("g(witness) faults: ") + e.what());
        }
        // Ω ⊂ box: g must be nonnegative on the box faces.
        auto rng = keyed_engine(opt.seed, streams::samples, 0);
        std::size_t face_violations = 0;
        const std::size_t face_samples = std::max<std::size_t>(opt.samples / 10, 10);
        for (std::size_t k = 0; k < face_samples; ++k) {
            Point x = uniform_in_box(box, rng);
            const std::size_t axis = k % d;
            x[static_cast<Eigen::Index>(axis)] =
                (k / d) % 2 == 0 ? box.axes[axis].first : box.axes[axis].second;
            try {
                if (domain.value(x) < -domain.eps_proj()) ++face_violations;
            } catch (const EvalError&) {
                ++face_violations;
            }
        }
        if (face_violations)
            problems.push_back(std::to_string(face_violations) +
                               " bounding-box face samples lie inside the domain");
        if (problems.empty()) {
            check.detail = "witness inside; " + std::to_string(face_samples) +
                           " face samples outside the domain";
        } else {
            check.status = Status::fail;
            for (std::size_t i = 0; i < problems.size(); ++i)
                check.detail += (i ? "; " : "") + problems[i];
        }
        report.checks.push_back(check);
    }

    // Orthogonality ℓ·∇f = 0 and global regularity on samples.
    std::size_t faults = 0;
    double min_grad_g = std::numeric_limits<double>::infinity();
    {
        auto rng = keyed_engine(opt.seed, streams::samples, 1);
        for (std::size_t k = 0; k < opt.samples; ++k) {
            Point x = uniform_in_box(box, rng);
            try {
                if (domain.value(x) > 0.0) continue;
                ++report.interior_samples;
                const Point gf = model.grad_f(x);
                const Point l = model.ell(x);
                report.max_orthogonality = std::max(report.max_orthogonality, std::fabs(l.dot(gf)));
                report.max_grad_sq = std::max(report.max_grad_sq, gf.squaredNorm());
                (void)model.div_ell(x);
                (void)model.hess_f(x);
            } catch (const EvalError&) {
                ++faults;
            }
        }
        auto brng = keyed_engine(opt.seed, streams::samples, 2);
        const std::size_t boundary_samples = std::max<std::size_t>(opt.samples / 10, 10);
        for (std::size_t k = 0; k < boundary_samples; ++k) {
            try {
                const Point z = project_to_boundary(domain, uniform_in_box(box, brng));
                ++report.boundary_samples;
                min_grad_g = std::min(min_grad_g, domain.grad(z).norm());
                const Point gf = model.grad_f(z);
                const Point l = model.ell(z);
                report.max_orthogonality = std::max(report.max_orthogonality, std::fabs(l.dot(gf)));
                report.max_grad_sq = std::max(report.max_grad_sq, gf.squaredNorm());
            } catch (const ProjectionError&) {
            } catch (const EvalError&) {
                ++faults;
            }
        }
        const double limit = 1e-8 * (1.0 + report.max_grad_sq);
        AssumptionCheck check{"A_perp", Status::pass,
                              "max |ell.grad f| = " + fmt(report.max_orthogonality) +
                                  " (limit " + fmt(limit) + ") over " +
                                  std::to_string(report.interior_samples + report.boundary_samples) +
                                  " samples"};
        if (report.interior_samples == 0) {
            check.status = Status::fail;
            check.detail = "no sample fell inside the domain";
        } else if (!(report.max_orthogonality <= limit)) {
            check.status = Status::fail;
        }
        report.checks.push_back(check);
    }

    // Unique interior minimum, b(x0) = 0, div ℓ(x0) = 0.
    std::optional<double> f0;
    {
        AssumptionCheck check{"A_x0", Status::pass, ""};
        AssumptionCheck div_check{"div_ell_x0", Status::pass, ""};
        try {
            const InteriorMinimum m = find_interior_minimum(model);
            report.x0 = m.x0;
            f0 = m.f0;
            report.min_hess_eigenvalue = m.min_eigenvalue;
            report.drift_at_x0 = model.drift(m.x0).norm();
            report.div_ell_at_x0 = model.div_ell(m.x0);
            std::ostringstream os;
            os << "x0 = (" << m.x0.transpose() << "), min eig Hess f = " << fmt(m.min_eigenvalue)
               << ", |b(x0)| = " << fmt(report.drift_at_x0);
            check.detail = os.str();
            if (!(report.drift_at_x0 <= 1e-8)) {
                check.status = Status::fail;
                check.detail += " (ell(x0) != 0)";
            }
            div_check.detail = "div ell(x0) = " + fmt(report.div_ell_at_x0);
            if (!(std::fabs(report.div_ell_at_x0) <= 1e-8)) div_check.status = Status::fail;
        } catch (const std::exception& e) {
            check.status = Status::fail;
            check.detail = e.what();
            div_check.status = Status::fail;
            div_check.detail = "x0 unavailable";
        }
        report.checks.push_back(check);
        report.checks.push_back(div_check);
    }

    // Generalized saddle set.
    {
        AssumptionCheck check{"A_Psp", Status::pass, ""};
        try {
            const SaddleSet set = locate_boundary_minima(model, f0);
            report.saddle_count = set.members.size();
            if (set.members.empty()) {
                check.status = Status::fail;
                check.detail = "no boundary minimizer found";
            } else {
                report.min_abs_det = std::numeric_limits<double>::infinity();
                report.min_mu = std::numeric_limits<double>::infinity();
                for (const auto& s : set.members) {
                    report.min_abs_det = std::min(report.min_abs_det, std::fabs(s.geometry.det));
                    report.min_mu = std::min(report.min_mu, s.geometry.mu);
                }
                check.detail = std::to_string(set.members.size()) + " saddle(s), min mu_z = " +
                               fmt(report.min_mu) + ", min |det H_z| = " + fmt(report.min_abs_det);
                if (!(report.min_mu > 0.0) || !(report.min_abs_det >= opt.det_min))
                    check.status = Status::fail;
                if (f0 && !(set.f_min - *f0 > 0.0)) {
                    check.status = Status::fail;
                    check.detail += "; barrier min f|bd - f(x0) is not positive";
                }
            }
        } catch (const std::exception& e) {
            check.status = Status::fail;
            check.detail = e.what();
        }
        report.checks.push_back(check);
    }

    // Global growth conditions cannot be established from a bounded sample.
    {
        AssumptionCheck check{"A_inf", Status::warn,
                              "regularity checked on the bounding box only; growth of b outside "
                              "it is not verified"};
        if (faults) {
            check.status = Status::fail;
            check.detail = std::to_string(faults) + " evaluation faults while sampling";
        } else if (report.boundary_samples && !(min_grad_g > 0.0)) {
            check.status = Status::fail;
            check.detail = "grad g vanishes at a sampled boundary point";
        }
        report.checks.push_back(check);
    }
    return report;
}

}  // namespace eyring
