#ifndef PMLMC_TRANSFER_HPP
#define PMLMC_TRANSFER_HPP

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pmlmc/cost.hpp"
#include "pmlmc/errors.hpp"
#include "pmlmc/fem.hpp"
#include "pmlmc/mesh.hpp"

namespace pmlmc {

// Level transfer P_l from V_l onto V_{l-1} and the detail w_l = (I - P_l) u_l.
// Two inequivalent readings are supported: nodal interpolation at the coarse
// vertices (the cheap one; details vanish at every coarse vertex) and the
// H1-orthogonal projection (Pythagoras holds exactly). Default is
// interpolation.
enum class transfer_mode { interpolation, h1 };

inline const char* to_string(transfer_mode m) {
    return m == transfer_mode::interpolation ? "interp" : "h1";
}

// --- sub-triangle machinery --------------------------------------------------
// A coarse triangle K splits into K_1..K_4 by its edge midpoints; K_i for
// i<=3 touches vertex v_i, K_4 is the center. A fine piecewise-linear
// function on K restricted to K_j is spanned by the weights
//   w_ij(x) = [2 w_i(x) - delta_ij] chi_j(x),   w_i4(x) = [1 - 2 w_i(x)] chi_4(x)
// in terms of the coarse barycentric coordinates w_i.

inline int subtriangle_index(const std::array<double, 3>& w) {
    for (int i = 0; i < 3; ++i)
        if (w[i] >= 0.5) return i + 1;
    return 4;
}

struct subtriangle_weights {
    std::array<std::array<double, 4>, 3> w{}; // w[i][j] for K_{j+1}
    int chi = 0;                              // sub-triangle containing x (1..4)
};

inline subtriangle_weights subtriangle_weights_at(const triangle_geometry& k, const point& x) {
    const auto bary = barycentric(k, x);
    subtriangle_weights out;
    out.chi = subtriangle_index(bary);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
            out.w[i][j] = (out.chi == j + 1) ? 2.0 * bary[i] - (i == j ? 1.0 : 0.0) : 0.0;
        out.w[i][3] = (out.chi == 4) ? 1.0 - 2.0 * bary[i] : 0.0;
    }
    return out;
}

// Deviations y_i of a vertex-vanishing fine function at the edge midpoints
// m_1..m_3 of one coarse triangle (m_i opposite v_i).
using midpoint_deviations = std::array<double, 3>;

struct subtriangle_square_result {
    std::array<double, 4> per_sub{};
    double total = 0.0;
};

// Closed forms for int_{K_j} v^2 dx of the piecewise-linear v that vanishes
// at the vertices of K and takes values y_i at the midpoints. Each |K_j| is
// |K|/4.
inline subtriangle_square_result subtriangle_square_integral(const midpoint_deviations& y,
                                                             const triangle_geometry& k) {
    subtriangle_square_result r;
    const double sub_area = k.area / 4.0;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, l = (i + 2) % 3;
        r.per_sub[i] = sub_area / 6.0 * (y[j] * y[j] + y[l] * y[l] + y[j] * y[l]);
    }
    r.per_sub[3] = sub_area / 6.0 *
                   (y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[0] * y[1] + y[0] * y[2] +
                    y[1] * y[2]);
    r.total = r.per_sub[0] + r.per_sub[1] + r.per_sub[2] + r.per_sub[3];
    return r;
}

// int_K |grad v|^2 dx assembled from the per-sub-triangle expansions
//   grad v|_{K_i} = 2 (y_j grad w_k + y_k grad w_j),  grad v|_{K_4} = -2 sum y_i grad w_i
// with int_{K_i} |grad w_j|^2 = |K_i| e_j^2 / (4|K|^2) and
// int_{K_i} grad w_j . grad w_k = -|K_i| e_j e_k cos(theta_l) / (4|K|^2).
inline double subtriangle_gradient_integral(const midpoint_deviations& y,
                                            const triangle_geometry& k) {
    const auto& e = k.edge;
    const auto cos_at = [&e](int i) {
        const int j = (i + 1) % 3, l = (i + 2) % 3;
        return (e[j] * e[j] + e[l] * e[l] - e[i] * e[i]) / (2.0 * e[j] * e[l]);
    };
    const double scale = 1.0 / (4.0 * k.area);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, l = (i + 2) % 3;
        total += scale * (y[j] * y[j] * e[l] * e[l] + y[l] * y[l] * e[j] * e[j] -
                          2.0 * y[j] * y[l] * e[j] * e[l] * cos_at(i));
    }
    double center = 0.0;
    for (int i = 0; i < 3; ++i) center += y[i] * y[i] * e[i] * e[i];
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, l = (i + 2) % 3;
        center -= 2.0 * y[i] * y[j] * e[i] * e[j] * cos_at(l);
    }
    return total + scale * center;
}

// Constant of the regular-triangulation condition diam/indiam <= C/6, never
// below the 5/48 floor of the L2 bound.
inline double regular_triangulation_constant(const mesh_level& lv) {
    return std::max(5.0 / 48.0, 6.0 * regularity_check(lv));
}

// --- level-pair transfer operators -------------------------------------------

// Operators for one nested pair (fine level and its parent). The coarse Gram
// factorization for the H1 mode is computed once here and reused, sample
// independent.
class transfer_workspace {
public:
    transfer_workspace(const hier_mesh& mesh, int fine_level)
        : mesh_(&mesh), fine_(fine_level) {
        require(fine_level >= 1 && fine_level < mesh.n_levels(),
                "transfer: fine level must have a coarse parent");
        const mesh_level& fl = mesh.level(fine_level);
        const mesh_level& cl = mesh.level(fine_level - 1);
        require(!fl.vparent.empty(), "transfer: missing parent map (non-nested levels)");

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(fl.vertices.size() * 2);
        for (int fv = 0; fv < fl.n_vertices(); ++fv) {
            const auto& vp = fl.vparent[fv];
            if (vp.is_coarse_copy()) {
                trips.emplace_back(fv, vp.coarse_vertex, 1.0);
            } else {
                trips.emplace_back(fv, vp.edge_a, 0.5);
                trips.emplace_back(fv, vp.edge_b, 0.5);
            }
        }
        prolong_.resize(fl.n_vertices(), cl.n_vertices());
        prolong_.setFromTriplets(trips.begin(), trips.end());

        gram_fine_ = h1_gram_matrix(fl);
        gram_coarse_ = h1_gram_matrix(cl);
        gram_llt_.compute(gram_coarse_);
        require_numeric(gram_llt_.info() == Eigen::Success,
                        "transfer: singular coarse Gram system");
    }

    int fine_level() const { return fine_; }
    const Eigen::SparseMatrix<double>& prolongation() const { return prolong_; }
    const Eigen::SparseMatrix<double>& gram_fine() const { return gram_fine_; }
    const Eigen::SparseMatrix<double>& gram_coarse() const { return gram_coarse_; }

    // nodal values at the coarse vertices; the identity on V_{l-1}
    fem_solution interpolate_to_coarse(const fem_solution& u, cost_counter* cost = nullptr) const {
        check_level(u);
        const mesh_level& fl = mesh_->level(fine_);
        fem_solution out;
        out.level = fine_ - 1;
        out.values.resize(prolong_.cols());
        for (int fv = 0; fv < fl.n_vertices(); ++fv)
            if (fl.vparent[fv].is_coarse_copy())
                out.values[fl.vparent[fv].coarse_vertex] = u.values[fv];
        if (cost) cost->ops += double(prolong_.cols());
        return out;
    }

    // H1-orthogonal projection: solve G_c w = P^T G_f u. Pythagoras
    // |u|^2 = |Pw|^2 + |u - Pw|^2 holds to solver accuracy.
    fem_solution h1_project_to_coarse(const fem_solution& u, cost_counter* cost = nullptr) const {
        check_level(u);
        fem_solution out;
        out.level = fine_ - 1;
        out.values = gram_llt_.solve(prolong_.transpose() * (gram_fine_ * u.values));
        if (cost)
            cost->ops += 2.0 * double(gram_fine_.nonZeros()) + 2.0 * double(prolong_.nonZeros()) +
                         4.0 * double(gram_coarse_.nonZeros());
        return out;
    }

    fem_solution to_coarse(const fem_solution& u, transfer_mode mode,
                           cost_counter* cost = nullptr) const {
        return mode == transfer_mode::interpolation ? interpolate_to_coarse(u, cost)
                                                    : h1_project_to_coarse(u, cost);
    }

    fem_solution prolong(const fem_solution& coarse, cost_counter* cost = nullptr) const {
        require(coarse.level == fine_ - 1, "transfer: prolong expects the coarse level");
        fem_solution out;
        out.level = fine_;
        out.values = prolong_ * coarse.values;
        if (cost) cost->ops += 2.0 * double(prolong_.nonZeros());
        return out;
    }

    // w = (I - P_l) u at the fine level. In interpolation mode w vanishes at
    // every coarse-vertex position.
    fem_solution detail(const fem_solution& u, transfer_mode mode,
                        cost_counter* cost = nullptr) const {
        fem_solution w = prolong(to_coarse(u, mode, cost), cost);
        w.values = u.values - w.values;
        if (cost) cost->ops += double(w.values.size());
        return w;
    }

private:
    void check_level(const fem_solution& u) const {
        require(u.level == fine_, "transfer: solution level does not match workspace");
    }

    const hier_mesh* mesh_;
    int fine_;
    Eigen::SparseMatrix<double> prolong_, gram_fine_, gram_coarse_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> gram_llt_;
};

// --- variance bound ----------------------------------------------------------

struct variance_bound {
    double lhs = 0.0;   // sample variance of the details in the V-norm
    double rhs = 0.0;   // C (diam^2 + 1) sum_K sum_i Var[detail(m_i(K))]
    double c_reg = 0.0; // constant used
};

// Both sides of the midpoint variance bound for an ensemble of
// interpolation-mode details at one fine level. Pass c_reg <= 0 to derive it
// from the measured coarse-level regularity.
inline variance_bound midpoint_variance_bound(const hier_mesh& mesh, int fine_level,
                                              const std::vector<fem_solution>& details,
                                              const Eigen::SparseMatrix<double>& gram_fine,
                                              double c_reg = 0.0) {
    require(details.size() >= 2, "midpoint_variance_bound: need at least 2 ensemble members");
    const mesh_level& fl = mesh.level(fine_level);
    const mesh_level& cl = mesh.level(fine_level - 1);
    const int s = int(details.size());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(fl.n_vertices());
    for (const auto& d : details) {
        require(d.level == fine_level, "midpoint_variance_bound: mixed levels in ensemble");
        mean += d.values;
    }
    mean /= double(s);

    variance_bound out;
    for (const auto& d : details) {
        const Eigen::VectorXd dev = d.values - mean;
        out.lhs += dev.dot(gram_fine * dev);
    }
    out.lhs /= double(s - 1);

    // fine vertex ids of the coarse-edge midpoints, per coarse element
    std::vector<std::array<int, 3>> mids(cl.n_elements(), {-1, -1, -1});
    if (fl.dim == 1) {
        for (int fe = 0; fe < fl.n_elements(); ++fe)
            if (fl.eparent[fe].local_index == 1) mids[fl.eparent[fe].coarse_elem][0] = fl.elements[fe][1];
    } else {
        for (int fe = 0; fe < fl.n_elements(); ++fe)
            if (fl.eparent[fe].local_index == 4) {
                const auto& el = fl.elements[fe];
                mids[fl.eparent[fe].coarse_elem] = {el[0], el[1], el[2]};
            }
    }

    double mid_var_sum = 0.0;
    for (int ce = 0; ce < cl.n_elements(); ++ce) {
        for (int i = 0; i < (fl.dim == 1 ? 1 : 3); ++i) {
            const int fv = mids[ce][i];
            double m1 = 0.0, m2 = 0.0;
            for (const auto& d : details) {
                m1 += d.values[fv];
                m2 += d.values[fv] * d.values[fv];
            }
            m1 /= double(s);
            mid_var_sum += std::max(0.0, (m2 - double(s) * m1 * m1) / double(s - 1));
        }
    }
    const double diam = hier_mesh::max_diameter(cl);
    out.c_reg = c_reg > 0.0 ? c_reg : regular_triangulation_constant(cl);
    out.rhs = out.c_reg * (diam * diam + 1.0) * mid_var_sum;
    return out;
}

} // namespace pmlmc

#endif
