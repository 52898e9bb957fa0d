#ifndef PMLMC_FEM_HPP
#define PMLMC_FEM_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pmlmc/cost.hpp"
#include "pmlmc/errors.hpp"
#include "pmlmc/mesh.hpp"

namespace pmlmc {

// Piecewise-linear Galerkin discretization of -div(k grad u) = 0 with
// u = 1 on the inflow boundary, u = 0 on the outflow boundary and natural
// (no-flux) conditions elsewhere. k is evaluated once per element at the
// midpoint/centroid.

struct fem_solution {
    int level = 0; // index into the mesh hierarchy
    Eigen::VectorXd values;
};

// Dirichlet rows are eliminated; the lifting of the boundary values moves to
// the right-hand side, keeping the interior block SPD.
struct linear_system {
    int level = 0;
    Eigen::SparseMatrix<double> a_interior;
    Eigen::VectorXd rhs;
    std::vector<int> interior_ids;    // interior dof -> vertex id
    Eigen::VectorXd boundary_values;  // per vertex; 0 at interior vertices
};

inline double dirichlet_value(boundary_mark m) {
    return m == boundary_mark::dirichlet_in ? 1.0 : 0.0;
}

inline std::vector<point> element_midpoints(const mesh_level& lv) {
    std::vector<point> pts(lv.n_elements());
    for (int e = 0; e < lv.n_elements(); ++e) {
        const auto& el = lv.elements[e];
        if (lv.dim == 1) {
            pts[e] = {0.5 * (lv.vertices[el[0]][0] + lv.vertices[el[1]][0]), 0.0};
        } else {
            pts[e] = {(lv.vertices[el[0]][0] + lv.vertices[el[1]][0] + lv.vertices[el[2]][0]) / 3.0,
                      (lv.vertices[el[0]][1] + lv.vertices[el[1]][1] + lv.vertices[el[2]][1]) / 3.0};
        }
    }
    return pts;
}

namespace detail {

// grad of the P1 hats on a triangle: grad lambda_i = (b_i, c_i) / (2|K|)
inline void p1_gradients(const mesh_level& lv, const std::array<int, 3>& el,
                         std::array<std::array<double, 2>, 3>& grad, double& area) {
    const point& p1 = lv.vertices[el[0]];
    const point& p2 = lv.vertices[el[1]];
    const point& p3 = lv.vertices[el[2]];
    const double two_a = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
    area = 0.5 * std::abs(two_a);
    const double s = 1.0 / two_a;
    grad[0] = {(p2[1] - p3[1]) * s, (p3[0] - p2[0]) * s};
    grad[1] = {(p3[1] - p1[1]) * s, (p1[0] - p3[0]) * s};
    grad[2] = {(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s};
}

} // namespace detail

// Stiffness entries A_ij = int_D k grad phi_i . grad phi_j with one-point
// coefficient quadrature. `k_elem` holds k at the element midpoints.
inline linear_system assemble(const mesh_level& lv, const Eigen::VectorXd& k_elem, int level,
                              cost_counter* cost = nullptr) {
    require(int(k_elem.size()) == lv.n_elements(), "assemble: one k value per element");
    for (int e = 0; e < lv.n_elements(); ++e)
        require_numeric(std::isfinite(k_elem[e]) && k_elem[e] > 0.0,
                        "assemble: nonpositive coefficient at element " + std::to_string(e));

    const int nv = lv.n_vertices();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(lv.n_elements()) * (lv.dim == 1 ? 4 : 9));
    for (int e = 0; e < lv.n_elements(); ++e) {
        const auto& el = lv.elements[e];
        if (lv.dim == 1) {
            const double h = std::abs(lv.vertices[el[1]][0] - lv.vertices[el[0]][0]);
            const double w = k_elem[e] / h;
            const int i = el[0], j = el[1];
            trips.emplace_back(i, i, w);
            trips.emplace_back(j, j, w);
            trips.emplace_back(i, j, -w);
            trips.emplace_back(j, i, -w);
        } else {
            std::array<std::array<double, 2>, 3> g;
            double area = 0.0;
            detail::p1_gradients(lv, el, g, area);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    trips.emplace_back(el[a], el[b],
                                       k_elem[e] * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
        }
    }
    Eigen::SparseMatrix<double> a_full(nv, nv);
    a_full.setFromTriplets(trips.begin(), trips.end());

    linear_system sys;
    sys.level = level;
    sys.boundary_values = Eigen::VectorXd::Zero(nv);
    std::vector<int> pos(nv, -1);
    for (int i = 0; i < nv; ++i) {
        if (lv.boundary[i] == boundary_mark::interior) {
            pos[i] = int(sys.interior_ids.size());
            sys.interior_ids.push_back(i);
        } else {
            sys.boundary_values[i] = dirichlet_value(lv.boundary[i]);
        }
    }
    const int ni = int(sys.interior_ids.size());
    require_numeric(ni > 0, "assemble: no interior degrees of freedom");
    const Eigen::VectorXd lift = a_full * sys.boundary_values;
    sys.rhs.resize(ni);
    for (int r = 0; r < ni; ++r) sys.rhs[r] = -lift[sys.interior_ids[r]];

    std::vector<Eigen::Triplet<double>> itrips;
    for (int col = 0; col < nv; ++col) {
        if (pos[col] < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_full, col); it; ++it)
            if (pos[it.row()] >= 0) itrips.emplace_back(pos[it.row()], pos[col], it.value());
    }
    sys.a_interior.resize(ni, ni);
    sys.a_interior.setFromTriplets(itrips.begin(), itrips.end());

    if (cost) cost->ops += double(lv.n_elements()) * (lv.dim == 1 ? 8.0 : 40.0);
    return sys;
}

// Reusable sparse Cholesky with the symbolic analysis done once per sparsity
// pattern; falls back to CG if the factorization breaks down. The residual
// contract |Ax-b| <= 1e-10 |b| is checked on every solve.
class sparse_spd_solver {
public:
    Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                          cost_counter* cost, const std::string& context) {
        if (!analyzed_ || a.rows() != n_) {
            llt_.analyzePattern(a);
            analyzed_ = true;
            n_ = a.rows();
            factor_flops_ = -1.0;
        }
        llt_.factorize(a);
        Eigen::VectorXd x;
        bool ok = llt_.info() == Eigen::Success;
        if (ok) {
            x = llt_.solve(b);
            if (factor_flops_ < 0.0) measure_factor_cost();
            if (cost) {
                cost->ops += factor_flops_ + solve_flops_;
                ++cost->factorizations;
                ++cost->solves;
            }
        }
        double rel = ok ? (a * x - b).norm() / std::max(b.norm(), 1e-300) : 1.0;
        if (!ok || rel > 1e-10) {
            Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
            cg.setTolerance(1e-13);
            cg.setMaxIterations(20 * a.rows());
            cg.compute(a);
            x = ok ? cg.solveWithGuess(b, x).eval() : cg.solve(b).eval();
            rel = (a * x - b).norm() / std::max(b.norm(), 1e-300);
            if (cost) {
                cost->ops += 4.0 * double(a.nonZeros()) * double(cg.iterations());
                ++cost->solves;
            }
            require_numeric(rel <= 1e-10,
                            "solver failed to reach residual tolerance (" + context + ")");
        }
        return x;
    }

    // flop estimate from the factor pattern; fixed per sparsity
    double factor_flops() const { return factor_flops_ < 0.0 ? 0.0 : factor_flops_; }
    double solve_flops() const { return solve_flops_; }

private:
    void measure_factor_cost() {
        const Eigen::SparseMatrix<double> l = llt_.matrixL();
        factor_flops_ = 0.0;
        for (int j = 0; j < l.outerSize(); ++j) {
            double c = 0.0;
            for (Eigen::SparseMatrix<double>::InnerIterator it(l, j); it; ++it) ++c;
            factor_flops_ += c * c;
        }
        solve_flops_ = 4.0 * double(l.nonZeros());
    }

    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    bool analyzed_ = false;
    Eigen::Index n_ = -1;
    double factor_flops_ = -1.0;
    double solve_flops_ = 0.0;
};

inline fem_solution solve(const mesh_level& lv, const linear_system& sys,
                          cost_counter* cost = nullptr, const std::string& context = "") {
    sparse_spd_solver solver;
    const Eigen::VectorXd xi = solver.solve(sys.a_interior, sys.rhs, cost, context);
    fem_solution u;
    u.level = sys.level;
    u.values = sys.boundary_values;
    for (int r = 0; r < int(sys.interior_ids.size()); ++r) u.values[sys.interior_ids[r]] = xi[r];
    (void)lv;
    return u;
}

// H1 Gram matrix: stiffness with k = 1 plus the exact P1 mass matrix. This is
// the inner product <u,v> = int (grad u . grad v + u v) behind every norm,
// projection and reported error.
inline Eigen::SparseMatrix<double> h1_gram_matrix(const mesh_level& lv) {
    const int nv = lv.n_vertices();
    std::vector<Eigen::Triplet<double>> trips;
    for (int e = 0; e < lv.n_elements(); ++e) {
        const auto& el = lv.elements[e];
        if (lv.dim == 1) {
            const double h = std::abs(lv.vertices[el[1]][0] - lv.vertices[el[0]][0]);
            const double s = 1.0 / h;
            const std::array<std::array<double, 2>, 2> local = {
                {{s + h / 3.0, -s + h / 6.0}, {-s + h / 6.0, s + h / 3.0}}};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) trips.emplace_back(el[a], el[b], local[a][b]);
        } else {
            std::array<std::array<double, 2>, 3> g;
            double area = 0.0;
            detail::p1_gradients(lv, el, g, area);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    const double stiff = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    const double mass = area / 12.0 * (a == b ? 2.0 : 1.0);
                    trips.emplace_back(el[a], el[b], stiff + mass);
                }
        }
    }
    Eigen::SparseMatrix<double> gram(nv, nv);
    gram.setFromTriplets(trips.begin(), trips.end());
    return gram;
}

inline double h1_inner(const fem_solution& u, const fem_solution& v,
                       const Eigen::SparseMatrix<double>& gram) {
    require(u.level == v.level, "h1_inner: solutions live on different levels");
    return u.values.dot(gram * v.values);
}

inline double h1_norm(const fem_solution& u, const Eigen::SparseMatrix<double>& gram) {
    return std::sqrt(std::max(0.0, h1_inner(u, u, gram)));
}

// --- exports ----------------------------------------------------------------

inline void write_solution_csv(const std::string& path, const mesh_level& lv,
                               const fem_solution& u) {
    std::ofstream os(path);
    require(bool(os), "cannot open solution file for writing: " + path);
    char buf[160];
    os << (lv.dim == 1 ? "vertex,x,value\n" : "vertex,x,y,value\n");
    for (int i = 0; i < lv.n_vertices(); ++i) {
        if (lv.dim == 1)
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", i, lv.vertices[i][0], u.values[i]);
        else
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", i, lv.vertices[i][0],
                          lv.vertices[i][1], u.values[i]);
        os << buf;
    }
}

// Matrix Market dump of the interior system, for debugging a realization.
inline void write_matrix_market(const std::string& path, const linear_system& sys) {
    std::ofstream os(path);
    require(bool(os), "cannot open matrix file for writing: " + path);
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    std::vector<std::string> lines;
    char buf[128];
    for (int col = 0; col < sys.a_interior.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.a_interior, col); it; ++it)
            if (it.row() >= it.col()) {
                std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", long(it.row()) + 1,
                              long(it.col()) + 1, it.value());
                lines.push_back(buf);
            }
    os << sys.a_interior.rows() << ' ' << sys.a_interior.cols() << ' ' << lines.size() << '\n';
    for (const auto& l : lines) os << l;
}

} // namespace pmlmc

#endif
