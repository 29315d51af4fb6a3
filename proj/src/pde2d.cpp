#include "eyring/pde2d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eyring {

std::size_t Lattice::node_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Point Lattice::position(std::size_t lattice_node) const {
    Point x(static_cast<Eigen::Index>(dimension));
    for (std::size_t k = dimension; k-- > 0;) {
        const std::size_t i = lattice_node % shape[k];
        lattice_node /= shape[k];
        x[static_cast<Eigen::Index>(k)] = origin[static_cast<Eigen::Index>(k)] + dx * static_cast<double>(i);
    }
    return x;
}

struct GridOperator::Factor {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

namespace {

Lattice build_lattice(const ImplicitDomain& domain, std::size_t m) {
    const Box& box = domain.bbox();
    Lattice lat;
    lat.dimension = box.dimension();
    lat.dx = box.max_side() / static_cast<double>(m);
    lat.origin.resize(static_cast<Eigen::Index>(lat.dimension));
    for (std::size_t k = 0; k < lat.dimension; ++k) {
        lat.origin[static_cast<Eigen::Index>(k)] = box.axes[k].first;
        const double cells = (box.axes[k].second - box.axes[k].first) / lat.dx;
        lat.shape.push_back(static_cast<std::size_t>(std::ceil(cells - 1e-9)) + 1);
    }
    const std::size_t total = lat.node_count();
    lat.unknown.assign(total, -1);
    for (std::size_t p = 0; p < total; ++p) {
        if (domain.value(lat.position(p)) < 0.0) {
            lat.unknown[p] = static_cast<long>(lat.node.size());
            lat.node.push_back(p);
        }
    }
    if (lat.node.empty()) throw GridError("no lattice node lies inside the domain; increase m");
    return lat;
}

// Fraction θ ∈ (0, 1] of the way from an interior node to an exterior
// neighbour at which g changes sign.
double boundary_fraction(const ImplicitDomain& domain, const Point& inside, const Point& outside) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (domain.value(Point(inside + mid * (outside - inside))) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return std::max(0.5 * (lo + hi), 1e-6);
}

}  // namespace

GridOperator::GridOperator(const Model& model, double h, const GridOptions& options)
    : h_(h), options_(options) {
    const std::size_t d = model.dimension();
    if (d < 1 || d > 2) throw GridError("grid solver supports dimension 1 or 2 only");
    if (!(h > 0.0)) throw GridError("h must be positive");
    if (options.m < 32) throw GridError("grid resolution m must be at least 32");

    const ImplicitDomain& domain = model.domain();
    lattice_ = build_lattice(domain, options.m);
    const double dx = lattice_.dx;
    const std::size_t n = lattice_.node.size();

    std::vector<std::size_t> stride(d, 1);
    for (std::size_t k = d - 1; k-- > 0;) stride[k] = stride[k + 1] * lattice_.shape[k + 1];

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * (2 * d + 1));
    for (std::size_t row = 0; row < n; ++row) {
        const std::size_t p = lattice_.node[row];
        const Point x = lattice_.position(p);
        const Point coef = -model.drift(x);  // ∇f + ℓ
        double diag = 0.0;
        bool upwinded = false;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t ik = (p / stride[k]) % lattice_.shape[k];
            long left = -1;
            long right = -1;
            if (ik > 0) left = lattice_.unknown[p - stride[k]];
            if (ik + 1 < lattice_.shape[k]) right = lattice_.unknown[p + stride[k]];

            double tl = 1.0;
            double tr = 1.0;
            if (options.shortley_weller) {
                Point step = Point::Zero(static_cast<Eigen::Index>(d));
                step[static_cast<Eigen::Index>(k)] = dx;
                if (left < 0) tl = boundary_fraction(domain, x, Point(x - step));
                if (right < 0) tr = boundary_fraction(domain, x, Point(x + step));
            }

            // −(h/2) u'' on the (possibly non-uniform) three-point stencil.
            const double half_h = 0.5 * h;
            const double c_right = 2.0 / (dx * dx * tr * (tl + tr));
            const double c_left = 2.0 / (dx * dx * tl * (tl + tr));
            const double c_center = -2.0 / (dx * dx * tl * tr);
            double a_left = -half_h * c_left;
            double a_right = -half_h * c_right;
            diag += -half_h * c_center;

            const double ck = coef[static_cast<Eigen::Index>(k)];
            if (std::fabs(ck) * dx / h > 1.0) {
                // Upwind along b = −ck.
                upwinded = true;
                if (ck < 0.0) {
                    a_right += ck / (tr * dx);
                    diag -= ck / (tr * dx);
                } else {
                    a_left -= ck / (tl * dx);
                    diag += ck / (tl * dx);
                }
            } else {
                const double denom = tl * tr * (tl + tr) * dx;
                a_right += ck * tl * tl / denom;
                a_left -= ck * tr * tr / denom;
                diag += ck * (tr * tr - tl * tl) / denom;
            }
            if (left >= 0) triplets.emplace_back(static_cast<int>(row), static_cast<int>(left), a_left);
            if (right >= 0) triplets.emplace_back(static_cast<int>(row), static_cast<int>(right), a_right);
        }
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);
        if (upwinded) ++upwind_nodes_;
    }
    a_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    a_.setFromTriplets(triplets.begin(), triplets.end());
    a_.makeCompressed();
    factorize();
}

GridOperator::~GridOperator() = default;
GridOperator::GridOperator(GridOperator&&) noexcept = default;
GridOperator& GridOperator::operator=(GridOperator&&) noexcept = default;

void GridOperator::factorize() {
    const auto n = static_cast<std::size_t>(a_.rows());
    if (lattice_.dimension == 1) {
        lower_.assign(n, 0.0);
        diag_.assign(n, 0.0);
        upper_.assign(n, 0.0);
        for (Eigen::Index r = 0; r < a_.outerSize(); ++r) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_, r); it; ++it) {
                const auto row = static_cast<std::size_t>(it.row());
                const auto col = static_cast<std::size_t>(it.col());
                if (col == row)
                    diag_[row] = it.value();
                else if (col + 1 == row)
                    lower_[row] = it.value();
                else if (col == row + 1)
                    upper_[row] = it.value();
                else
                    throw GridError("one-dimensional operator is not tridiagonal");
            }
        }
        return;
    }
    factor_ = std::make_unique<Factor>();
    Eigen::SparseMatrix<double> col_major = a_;
    factor_->lu.analyzePattern(col_major);
    factor_->lu.factorize(col_major);
    if (factor_->lu.info() != Eigen::Success)
        throw GridError("sparse LU factorization failed: " + factor_->lu.lastErrorMessage());
}

Eigen::VectorXd GridOperator::solve(const Eigen::VectorXd& rhs, double* relative_residual,
                                    std::size_t* refinements) const {
    auto direct = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
        if (lattice_.dimension == 1) {
            // Thomas algorithm.
            const std::size_t n = diag_.size();
            std::vector<double> c(n), d(n);
            Eigen::VectorXd x(static_cast<Eigen::Index>(n));
            double denom = diag_[0];
            c[0] = upper_[0] / denom;
            d[0] = b[0] / denom;
            for (std::size_t i = 1; i < n; ++i) {
                denom = diag_[i] - lower_[i] * c[i - 1];
                if (denom == 0.0) throw GridError("tridiagonal solve hit a zero pivot");
                c[i] = upper_[i] / denom;
                d[i] = (b[static_cast<Eigen::Index>(i)] - lower_[i] * d[i - 1]) / denom;
            }
            x[static_cast<Eigen::Index>(n - 1)] = d[n - 1];
            for (std::size_t i = n - 1; i-- > 0;)
                x[static_cast<Eigen::Index>(i)] = d[i] - c[i] * x[static_cast<Eigen::Index>(i + 1)];
            return x;
        }
        Eigen::VectorXd x = factor_->lu.solve(b);
        if (factor_->lu.info() != Eigen::Success) throw GridError("sparse LU solve failed");
        return x;
    };

    // Normwise backward error: the size of the perturbation of A and b for
    // which x is exact. A plain |b − Ax|/|b| stalls near cond(A)·ε on the
    // fine 1-D grids, long before the solve is actually inaccurate.
    double a_norm = 0.0;
    for (Eigen::Index r = 0; r < a_.outerSize(); ++r) {
        double row = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_, r); it; ++it)
            row += std::fabs(it.value());
        a_norm = std::max(a_norm, row);
    }
    auto backward_error = [&](const Eigen::VectorXd& x) {
        const double scale = a_norm * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        return scale > 0.0 ? (rhs - a_ * x).lpNorm<Eigen::Infinity>() / scale : 0.0;
    };

    Eigen::VectorXd x = direct(rhs);
    double rel = backward_error(x);
    std::size_t steps = 0;
    while (rel > options_.rel_tol && steps < 5) {
        x += direct(rhs - a_ * x);
        rel = backward_error(x);
        ++steps;
    }
    if (relative_residual) *relative_residual = rel;
    if (refinements) *refinements = steps;
    if (!(rel <= options_.rel_tol))
        throw GridError("linear solve did not reach the residual target (backward error " +
                        std::to_string(rel) + ")");
    return x;
}

// ---------------------------------------------------------------------------

double GridSolution::value_at(const Point& x) const {
    const std::size_t d = lattice.dimension;
    std::vector<std::size_t> base(d);
    std::vector<double> frac(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double s = (x[static_cast<Eigen::Index>(k)] - lattice.origin[static_cast<Eigen::Index>(k)]) / lattice.dx;
        if (s < 0.0 || s > static_cast<double>(lattice.shape[k] - 1)) return 0.0;
        const auto i = std::min(static_cast<std::size_t>(std::floor(s)), lattice.shape[k] - 2);
        base[k] = i;
        frac[k] = s - static_cast<double>(i);
    }
    double out = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double w = 1.0;
        std::size_t p = 0;
        for (std::size_t k = 0; k < d; ++k) {
            const bool up = (corner >> k) & 1U;
            w *= up ? frac[k] : 1.0 - frac[k];
            p = p * lattice.shape[k] + base[k] + (up ? 1 : 0);
        }
        if (w != 0.0) out += w * u[p];
    }
    return out;
}

GridSolution solve_mean_exit_time(const GridOperator& op) {
    GridSolution out;
    out.lattice = op.lattice();
    out.upwind_nodes = op.upwind_nodes();
    const auto n = static_cast<Eigen::Index>(out.lattice.node.size());
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd x = op.solve(ones, &out.residual, &out.refinements);
    out.u.assign(out.lattice.node_count(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) out.u[out.lattice.node[static_cast<std::size_t>(i)]] = x[i];
    out.max_u = x.maxCoeff();
    out.min_u = x.minCoeff();
    return out;
}

GridSolution solve_mean_exit_time(const Model& model, double h, const GridOptions& options) {
    return solve_mean_exit_time(GridOperator(model, h, options));
}

EigenEstimate estimate_principal_eigenvalue(const GridOperator& op, const GridOptions& options) {
    const Lattice& lat = op.lattice();
    const auto n = static_cast<Eigen::Index>(lat.node.size());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    EigenEstimate out;
    double previous = 0.0;
    bool converged = false;
    for (std::size_t it = 1; it <= options.max_eig_iterations; ++it) {
        Eigen::VectorXd w = op.solve(v);
        const double ww = w.squaredNorm();
        if (!(ww > 0.0) || !std::isfinite(ww)) throw GridError("inverse iteration broke down");
        out.lambda = v.dot(w) / ww;
        v = w / std::sqrt(ww);
        out.iterations = it;
        if (it > 1 && std::fabs(out.lambda - previous) <= options.eig_tol * std::fabs(out.lambda)) {
            converged = true;
            break;
        }
        previous = out.lambda;
    }
    if (!converged) throw GridError("inverse iteration stagnated");

    if (v.sum() < 0.0) v = -v;
    out.residual = (op.matrix() * v - out.lambda * v).norm() / (std::fabs(out.lambda) * v.norm());
    const double vmax = v.cwiseAbs().maxCoeff();
    out.single_signed = (v.array() >= -1e-12 * vmax).all();
    out.eigenvector.assign(lat.node_count(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) out.eigenvector[lat.node[static_cast<std::size_t>(i)]] = v[i] / vmax;
    return out;
}

EigenEstimate estimate_principal_eigenvalue(const Model& model, double h, const GridOptions& options) {
    return estimate_principal_eigenvalue(GridOperator(model, h, options), options);
}

}  // namespace eyring
