#ifndef PMLMC_ESTIMATORS_HPP
#define PMLMC_ESTIMATORS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pmlmc/cost.hpp"
#include "pmlmc/errors.hpp"
#include "pmlmc/fem.hpp"
#include "pmlmc/mesh.hpp"
#include "pmlmc/random_field.hpp"
#include "pmlmc/rng.hpp"
#include "pmlmc/transfer.hpp"

namespace pmlmc {

// Estimator levels are 1-based (level 1 = coarsest grid, level L = finest),
// matching the telescoping sums they implement; fem_solution::level stores
// the 0-based mesh index, so mesh index = estimator level - 1.

template <class Value>
struct level_stats {
    int level = 1;
    std::int64_t n = 0;
    Value mean{};
    double sample_var = 0.0; // V-norm sample variance of the corrections (N-1)
    cost_counter cost;
};

template <class Value>
struct estimator_result {
    std::string method;
    int finest_level = 1;
    Value mean{};
    std::vector<level_stats<Value>> levels;
    double variance_model = 0.0; // sum over levels of sample_var / N
    cost_counter cost;
    double wall_seconds = 0.0;
};

// Core multilevel mean: per-level Monte Carlo means of correction samples,
// combined after lifting everything to the finest level. The Space supplies
// the value algebra (fields or scalars):
//   value_type zero(int level); add_scaled(y, a, x); norm2(v, level);
//   lift(v, from, to)
// and each sampler yields i.i.d. correction draws at its level. Aggregation
// is a plain sum over sample indices, so results do not depend on scheduling.
template <class Space, class Sampler>
estimator_result<typename Space::value_type> multilevel_estimate(
    const Space& space, std::vector<Sampler>& samplers, const std::vector<std::int64_t>& counts,
    const std::string& method) {
    using value_type = typename Space::value_type;
    require(!samplers.empty() && samplers.size() == counts.size(),
            "estimator: one sample count per level sampler");
    const auto t0 = std::chrono::steady_clock::now();

    estimator_result<value_type> res;
    res.method = method;
    for (const auto& s : samplers) res.finest_level = std::max(res.finest_level, s.level());

    res.mean = space.zero(res.finest_level);
    for (std::size_t li = 0; li < samplers.size(); ++li) {
        auto& sampler = samplers[li];
        const std::int64_t n = counts[li];
        require(n >= 1, "estimator: sample counts must be >= 1");

        level_stats<value_type> st;
        st.level = sampler.level();
        st.n = n;
        value_type sum = space.zero(st.level);
        double sum_norm2 = 0.0;
        for (std::int64_t k = 0; k < n; ++k) {
            const value_type w = sampler.draw(k, st.cost);
            space.add_scaled(sum, 1.0, w);
            sum_norm2 += space.norm2(w, st.level);
        }
        st.mean = space.zero(st.level);
        space.add_scaled(st.mean, 1.0 / double(n), sum);
        if (n > 1) {
            const double centered = sum_norm2 - double(n) * space.norm2(st.mean, st.level);
            st.sample_var = std::max(0.0, centered / double(n - 1));
        }
        res.variance_model += st.sample_var / double(n);
        res.cost += st.cost;
        space.add_scaled(res.mean, 1.0, space.lift(st.mean, st.level, res.finest_level));
        res.levels.push_back(std::move(st));
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// --- Darcy problem context ----------------------------------------------------

// Everything shared across samples: the mesh ladder, the KL basis evaluated
// at each level's element midpoints, H1 Gram matrices, transfer workspaces
// and per-level solver patterns. Frozen after construction; the solver
// objects only cache the symbolic factorization.
class darcy_hierarchy {
public:
    darcy_hierarchy(hier_mesh mesh, kl_basis basis)
        : mesh_(std::move(mesh)), basis_(std::move(basis)) {
        const int nl = mesh_.n_levels();
        sqrt_theta_ = basis_.theta.array().sqrt();
        phi_mid_.resize(nl);
        mean_mid_.resize(nl);
        gram_.resize(nl);
        solver_.resize(nl);
        for (int i = 0; i < nl; ++i) {
            const auto mids = element_midpoints(mesh_.level(i));
            phi_mid_[i] = basis_.eval_matrix(mids);
            mean_mid_[i].resize(mids.size());
            for (std::size_t p = 0; p < mids.size(); ++p)
                mean_mid_[i][int(p)] = basis_.spec.mean_at(mids[p]);
            gram_[i] = h1_gram_matrix(mesh_.level(i));
            solver_[i] = std::make_unique<sparse_spd_solver>();
        }
        for (int f = 1; f < nl; ++f)
            transfer_.push_back(std::make_unique<transfer_workspace>(mesh_, f));
    }

    const hier_mesh& mesh() const { return mesh_; }
    const kl_basis& basis() const { return basis_; }
    int n_levels() const { return mesh_.n_levels(); }
    const Eigen::SparseMatrix<double>& gram(int mesh_idx) const { return gram_.at(mesh_idx); }
    const transfer_workspace& transfer(int fine_mesh_idx) const {
        return *transfer_.at(fine_mesh_idx - 1);
    }

    Eigen::VectorXd log_conductivity(int mesh_idx, const Eigen::VectorXd& xi,
                                     cost_counter* cost = nullptr) const {
        Eigen::VectorXd v = mean_mid_[mesh_idx];
        if (xi.size() > 0) v += phi_mid_[mesh_idx] * (sqrt_theta_.array() * xi.array()).matrix();
        if (cost) {
            cost->ops += double(v.size()) * (2.0 * double(xi.size()) + 2.0);
            ++cost->field_evals;
        }
        return v;
    }

    fem_solution solve_with_xi(int mesh_idx, const Eigen::VectorXd& xi, cost_counter& cost,
                               const std::string& context) const {
        const Eigen::VectorXd k = log_conductivity(mesh_idx, xi, &cost).array().exp();
        const linear_system sys = assemble(mesh_.level(mesh_idx), k, mesh_idx, &cost);
        const Eigen::VectorXd x =
            solver_[mesh_idx]->solve(sys.a_interior, sys.rhs, &cost, context);
        fem_solution u;
        u.level = mesh_idx;
        u.values = sys.boundary_values;
        for (int r = 0; r < int(sys.interior_ids.size()); ++r)
            u.values[sys.interior_ids[r]] = x[r];
        return u;
    }

    // exp underflow can only produce k = 0; such a realization is rejected
    // and redrawn on the attempt sub-counter, keeping the i.i.d. structure
    // auditable
    bool realization_valid(int mesh_idx, const Eigen::VectorXd& xi) const {
        const Eigen::VectorXd k = log_conductivity(mesh_idx, xi).array().exp();
        for (int e = 0; e < int(k.size()); ++e)
            if (!(std::isfinite(k[e]) && k[e] > 0.0)) return false;
        return true;
    }

    fem_solution prolong_to(const fem_solution& u, int target_mesh_idx,
                            cost_counter* cost = nullptr) const {
        require(u.level <= target_mesh_idx, "prolong_to: target must be at or above the level");
        fem_solution out = u;
        while (out.level < target_mesh_idx) out = transfer(out.level + 1).prolong(out, cost);
        return out;
    }

    double h1_norm_of(const fem_solution& u) const { return h1_norm(u, gram_[u.level]); }

    // H1 distance after exact nested prolongation to the finer of the two
    double h1_error(const fem_solution& u, const fem_solution& ref) const {
        require(ref.level >= u.level, "h1_error: reference must be at or above the level");
        fem_solution d = prolong_to(u, ref.level);
        d.values -= ref.values;
        return h1_norm(d, gram_[ref.level]);
    }

private:
    hier_mesh mesh_;
    kl_basis basis_;
    Eigen::VectorXd sqrt_theta_;
    std::vector<Eigen::MatrixXd> phi_mid_;
    std::vector<Eigen::VectorXd> mean_mid_;
    std::vector<Eigen::SparseMatrix<double>> gram_;
    std::vector<std::unique_ptr<transfer_workspace>> transfer_;
    std::vector<std::unique_ptr<sparse_spd_solver>> solver_;
};

// Space model over a darcy_hierarchy; values are nodal fields.
struct field_space {
    const darcy_hierarchy* h = nullptr;

    using value_type = fem_solution;

    value_type zero(int est_level) const {
        fem_solution u;
        u.level = est_level - 1;
        u.values = Eigen::VectorXd::Zero(h->mesh().level(u.level).n_vertices());
        return u;
    }
    void add_scaled(value_type& y, double a, const value_type& x) const {
        y.values += a * x.values;
    }
    double norm2(const value_type& v, int) const {
        return v.values.dot(h->gram(v.level) * v.values);
    }
    value_type lift(const value_type& v, int, int to_est_level) const {
        return h->prolong_to(v, to_est_level - 1);
    }
};

// --- Darcy level samplers -------------------------------------------------

inline constexpr int max_redraw_attempts = 64;

class darcy_sampler {
public:
    darcy_sampler(const darcy_hierarchy& h, std::uint64_t seed, int level)
        : h_(&h), seed_(seed), level_(level) {
        require(level >= 1 && level <= h.n_levels(), "sampler: level out of range");
    }

    int level() const { return level_; }
    void record_keys_into(std::vector<rng_key>* audit) { audit_ = audit; }

protected:
    // One xi per (level, index); shared by every grid this sample touches.
    Eigen::VectorXd valid_xi(std::int64_t index, std::initializer_list<int> mesh_indices,
                             cost_counter& cost) const {
        for (std::uint32_t attempt = 0; attempt < max_redraw_attempts; ++attempt) {
            const rng_key key{seed_, std::uint32_t(level_), std::uint64_t(index),
                              rng_role::field, attempt};
            const Eigen::VectorXd xi = draw_xi(key, h_->basis().modes());
            bool ok = true;
            for (int mi : mesh_indices) ok = ok && h_->realization_valid(mi, xi);
            if (ok) {
                if (audit_) audit_->push_back(key);
                return xi;
            }
            ++cost.rejects;
        }
        throw numerical_error("realization rejected " + std::to_string(max_redraw_attempts) +
                              " times at level " + std::to_string(level_) + ", sample " +
                              std::to_string(index));
    }

    std::string context(std::int64_t index) const {
        return "level " + std::to_string(level_) + ", sample " + std::to_string(index);
    }

    const darcy_hierarchy* h_;
    std::uint64_t seed_;
    int level_;
    std::vector<rng_key>* audit_ = nullptr;
};

// plain sample of u_l
class darcy_mc_sampler : public darcy_sampler {
public:
    using darcy_sampler::darcy_sampler;

    fem_solution draw(std::int64_t index, cost_counter& cost) const {
        const int mi = level_ - 1;
        const Eigen::VectorXd xi = valid_xi(index, {mi}, cost);
        return h_->solve_with_xi(mi, xi, cost, context(index));
    }
};

// MLMC correction u_l - u_{l-1}: the same realization solved on both grids
// of the pair (two solves per sample). Level 1 degenerates to u_1.
class darcy_mlmc_sampler : public darcy_sampler {
public:
    using darcy_sampler::darcy_sampler;

    fem_solution draw(std::int64_t index, cost_counter& cost) const {
        const int fine = level_ - 1;
        if (level_ == 1) {
            const Eigen::VectorXd xi = valid_xi(index, {fine}, cost);
            return h_->solve_with_xi(fine, xi, cost, context(index));
        }
        const Eigen::VectorXd xi = valid_xi(index, {fine, fine - 1}, cost);
        fem_solution w = h_->solve_with_xi(fine, xi, cost, context(index));
        const fem_solution uc = h_->solve_with_xi(fine - 1, xi, cost, context(index));
        w.values -= h_->transfer(fine).prolong(uc, &cost).values;
        return w;
    }
};

// PMLMC correction (I - P_l) u_l: one fine solve plus a transfer, no coarse
// solve. Level 1 degenerates to u_1.
class darcy_pmlmc_sampler : public darcy_sampler {
public:
    darcy_pmlmc_sampler(const darcy_hierarchy& h, std::uint64_t seed, int level,
                        transfer_mode mode)
        : darcy_sampler(h, seed, level), mode_(mode) {}

    fem_solution draw(std::int64_t index, cost_counter& cost) const {
        const int fine = level_ - 1;
        const Eigen::VectorXd xi = valid_xi(index, {fine}, cost);
        fem_solution u = h_->solve_with_xi(fine, xi, cost, context(index));
        if (level_ == 1) return u;
        return h_->transfer(fine).detail(u, mode_, &cost);
    }

private:
    transfer_mode mode_;
};

// --- the four estimators ----------------------------------------------------

inline estimator_result<fem_solution> mc_estimate(const darcy_hierarchy& h, std::uint64_t seed,
                                                  int level, std::int64_t n,
                                                  std::vector<rng_key>* audit = nullptr) {
    std::vector<darcy_mc_sampler> samplers{darcy_mc_sampler(h, seed, level)};
    if (audit) samplers[0].record_keys_into(audit);
    return multilevel_estimate(field_space{&h}, samplers, {n}, "mc");
}

inline estimator_result<fem_solution> mlmc_estimate(const darcy_hierarchy& h, std::uint64_t seed,
                                                    const std::vector<std::int64_t>& counts,
                                                    std::vector<rng_key>* audit = nullptr) {
    std::vector<darcy_mlmc_sampler> samplers;
    for (int l = 1; l <= int(counts.size()); ++l) {
        samplers.emplace_back(h, seed, l);
        if (audit) samplers.back().record_keys_into(audit);
    }
    return multilevel_estimate(field_space{&h}, samplers, counts, "mlmc");
}

inline estimator_result<fem_solution> pmlmc_estimate(const darcy_hierarchy& h, std::uint64_t seed,
                                                     const std::vector<std::int64_t>& counts,
                                                     transfer_mode mode,
                                                     std::vector<rng_key>* audit = nullptr) {
    std::vector<darcy_pmlmc_sampler> samplers;
    for (int l = 1; l <= int(counts.size()); ++l) {
        samplers.emplace_back(h, seed, l, mode);
        if (audit) samplers.back().record_keys_into(audit);
    }
    return multilevel_estimate(field_space{&h}, samplers, counts, "pmlmc");
}

// H1 distance of the estimator mean to a reference mean field at a level at
// or above the estimator's finest level.
inline double error_vs_reference(const darcy_hierarchy& h,
                                 const estimator_result<fem_solution>& result,
                                 const fem_solution& reference) {
    return h.h1_error(result.mean, reference);
}

// P1 point evaluation; the probe functional used by the unbiasedness tests.
inline double eval_at(const mesh_level& lv, const fem_solution& u, const point& x) {
    if (lv.dim == 1) {
        for (const auto& el : lv.elements) {
            const double a = lv.vertices[el[0]][0], b = lv.vertices[el[1]][0];
            if (x[0] >= std::min(a, b) - 1e-12 && x[0] <= std::max(a, b) + 1e-12) {
                const double t = (x[0] - a) / (b - a);
                return (1.0 - t) * u.values[el[0]] + t * u.values[el[1]];
            }
        }
    } else {
        for (int e = 0; e < lv.n_elements(); ++e) {
            const auto t = element_geometry(lv, e);
            const double s = signed_area(t.v[0], t.v[1], t.v[2]);
            const std::array<double, 3> w{signed_area(x, t.v[1], t.v[2]) / s,
                                          signed_area(t.v[0], x, t.v[2]) / s,
                                          signed_area(t.v[0], t.v[1], x) / s};
            if (w[0] >= -1e-10 && w[1] >= -1e-10 && w[2] >= -1e-10)
                return w[0] * u.values[lv.elements[e][0]] + w[1] * u.values[lv.elements[e][1]] +
                       w[2] * u.values[lv.elements[e][2]];
        }
    }
    throw config_error("eval_at: point outside the mesh");
}

struct z_statistic {
    double z = 0.0;
    double mean = 0.0;
    double se = 0.0;
};

// Standardized deviation of the mean of R independent estimator outputs from
// the mean of the telescoped target. `run` maps a repetition index to one
// scalar estimator output.
template <class Runner>
z_statistic unbiasedness_check(Runner&& run, int repetitions, double reference_mean) {
    require(repetitions >= 30, "unbiasedness_check: need at least 30 repetitions");
    std::vector<double> out(repetitions);
    double sum = 0.0;
    for (int r = 0; r < repetitions; ++r) {
        out[r] = run(r);
        sum += out[r];
    }
    z_statistic zs;
    zs.mean = sum / repetitions;
    double ss = 0.0;
    for (double v : out) ss += (v - zs.mean) * (v - zs.mean);
    zs.se = std::sqrt(ss / double(repetitions - 1) / double(repetitions));
    const double dev = zs.mean - reference_mean;
    zs.z = zs.se > 0.0 ? dev / zs.se : (dev == 0.0 ? 0.0 : std::copysign(HUGE_VAL, dev));
    return zs;
}

} // namespace pmlmc

#endif
