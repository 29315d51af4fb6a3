#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <stdexcept>
#include <vector>

#include "eyring/wellspec.hpp"

namespace eyring {

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridOptions {
    std::size_t m = 256;           // cells along the longest bounding-box side
    bool shortley_weller = false;  // cut-cell boundary distances instead of stair steps
    double rel_tol = 1e-10;        // normwise backward error of the linear solve
    std::size_t max_eig_iterations = 2000;
    double eig_tol = 1e-13;
};

/// Lattice over the bounding box with spacing dx; interior nodes are those
/// with g < 0, every other node carries the Dirichlet value 0.
struct Lattice {
    std::size_t dimension = 0;
    double dx = 0.0;
    Point origin;
    std::vector<std::size_t> shape;  // nodes per axis
    std::vector<long> unknown;       // lattice node → unknown index, −1 outside
    std::vector<std::size_t> node;   // unknown index → lattice node

    std::size_t node_count() const;
    Point position(std::size_t lattice_node) const;
};

/// Discretization of L_h = −(h/2)Δ + (∇f + ℓ)·∇ on the interior nodes.
class GridOperator {
public:
    GridOperator(const Model& model, double h, const GridOptions& options);
    ~GridOperator();
    GridOperator(GridOperator&&) noexcept;
    GridOperator& operator=(GridOperator&&) noexcept;

    const Lattice& lattice() const { return lattice_; }
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return a_; }
    std::size_t upwind_nodes() const { return upwind_nodes_; }
    double h() const { return h_; }

    /// Direct solve followed by iterative refinement to the residual target.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double* relative_residual = nullptr,
                          std::size_t* refinements = nullptr) const;

private:
    void factorize();

    Lattice lattice_;
    double h_;
    GridOptions options_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> a_;
    std::size_t upwind_nodes_ = 0;
    // d = 1: tridiagonal bands; d = 2: sparse LU.
    std::vector<double> lower_, diag_, upper_;
    struct Factor;
    std::unique_ptr<Factor> factor_;
};

struct GridSolution {
    Lattice lattice;
    std::vector<double> u;  // one value per lattice node, 0 outside Ω
    double residual = 0.0;  // |1 − A u|∞ / (|A|∞ |u|∞ + 1)
    std::size_t refinements = 0;
    std::size_t upwind_nodes = 0;
    double max_u = 0.0;
    double min_u = 0.0;

    /// Multilinear interpolation of the lattice values.
    double value_at(const Point& x) const;
};

/// Mean exit time u solving L_h u = 1 in Ω, u = 0 outside (d ∈ {1, 2}).
GridSolution solve_mean_exit_time(const Model& model, double h, const GridOptions& options);
GridSolution solve_mean_exit_time(const GridOperator& op);

struct EigenEstimate {
    double lambda = 0.0;
    bool single_signed = false;
    std::size_t iterations = 0;
    double residual = 0.0;  // |A v − λ v| / |λ v|
    std::vector<double> eigenvector;  // per lattice node, max-normalized, positive
};

/// Smallest-magnitude eigenvalue of the discretized L_h by inverse iteration.
EigenEstimate estimate_principal_eigenvalue(const Model& model, double h, const GridOptions& options);
EigenEstimate estimate_principal_eigenvalue(const GridOperator& op, const GridOptions& options);

}  // namespace eyring
