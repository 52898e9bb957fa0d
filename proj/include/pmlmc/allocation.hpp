#ifndef PMLMC_ALLOCATION_HPP
#define PMLMC_ALLOCATION_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "pmlmc/errors.hpp"
#include "pmlmc/estimators.hpp"

namespace pmlmc {

// Inputs of the sample-count optimizer: the mean-square norm of the solution,
// the per-level discretization errors and the per-level mean costs in
// operation units.
struct error_model {
    double norm_u = 0.0;
    std::vector<double> disc_error; // |u - u_l|, l = 1..L, decreasing
    std::vector<double> level_cost; // C_l, increasing

    int levels() const { return int(disc_error.size()); }

    void validate() const {
        require(levels() >= 1 && int(level_cost.size()) == levels(),
                "error model: need one error and one cost per level");
        require(norm_u > 0.0, "error model: |u| must be positive");
        for (int l = 0; l < levels(); ++l) {
            // zero errors are legal (exactly resolved problems)
            require(disc_error[l] >= 0.0 && level_cost[l] > 0.0,
                    "error model: errors must be nonnegative, costs positive");
            if (l > 0) {
                require(disc_error[l] <= disc_error[l - 1],
                        "error model: discretization errors must decrease");
                require(level_cost[l] >= level_cost[l - 1],
                        "error model: costs must increase");
            }
        }
    }
};

struct allocation_plan {
    double eps = 0.0;
    double eps_tilde = 0.0; // eps minus the discretization-error floor
    double eta = 0.0;
    std::vector<double> n_real;      // optimizer output before ceiling
    std::vector<std::int64_t> n;     // per-level counts, ceiled
    double predicted_cost = 0.0;     // eta^3 / eps_tilde^2
};

// N = |u|^2 / eps^2, the single-level count that meets the target error.
inline std::int64_t mc_sample_count(double eps, double norm_u) {
    require(eps > 0.0, "mc_sample_count: eps must be positive");
    return std::int64_t(std::ceil(norm_u * norm_u / (eps * eps)));
}

namespace detail {

// error-bound coefficients a_l of the N_l^{-1/2} terms
inline std::vector<double> allocation_coefficients(const error_model& m) {
    std::vector<double> a(m.levels());
    a[0] = m.disc_error[0] + m.norm_u;
    for (int l = 1; l < m.levels(); ++l)
        a[l] = 2.0 * (m.disc_error[l] + m.disc_error[l - 1] + m.norm_u);
    return a;
}

} // namespace detail

// Cost-optimal per-level counts: minimize sum N_l C_l subject to the error
// bound meeting eps. Closed form via Lagrange multipliers:
//   N_l = eta^2 eps~^{-2} a_l^{2/3} C_l^{-2/3},
//   eta = sum a_l^{2/3} C_l^{1/3},  cost = eta^3 eps~^{-2},
// where a_1 = |u-u_1| + |u| and a_l = 2(|u-u_l| + |u-u_{l-1}| + |u|). Counts
// are ceiled, never floored, so the bound stays valid.
inline allocation_plan pmlmc_allocation(double eps, const error_model& m) {
    m.validate();
    require(eps > 0.0, "allocation: eps must be positive");

    double floor = m.disc_error[0];
    for (int l = 1; l < m.levels(); ++l) floor += 2.0 * m.disc_error[l];
    if (eps <= floor) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "allocation: eps = %.6g is below the discretization-error floor %.6g; "
                      "refine the mesh ladder or relax eps",
                      eps, floor);
        throw config_error(buf);
    }

    allocation_plan plan;
    plan.eps = eps;
    plan.eps_tilde = eps - floor;
    const auto a = detail::allocation_coefficients(m);
    plan.eta = 0.0;
    for (int l = 0; l < m.levels(); ++l)
        plan.eta += std::pow(a[l], 2.0 / 3.0) * std::cbrt(m.level_cost[l]);

    const double scale = (plan.eta / plan.eps_tilde) * (plan.eta / plan.eps_tilde);
    plan.n_real.resize(m.levels());
    plan.n.resize(m.levels());
    for (int l = 0; l < m.levels(); ++l) {
        plan.n_real[l] = scale * std::pow(a[l], 2.0 / 3.0) /
                         std::pow(m.level_cost[l], 2.0 / 3.0);
        plan.n[l] = std::max<std::int64_t>(1, std::int64_t(std::ceil(plan.n_real[l] - 1e-12)));
    }
    plan.predicted_cost = std::pow(plan.eta, 3) / (plan.eps_tilde * plan.eps_tilde);
    return plan;
}

// The error bound g(N_1..N_L) the optimizer is tight against.
inline double allocation_error_bound(const error_model& m, const std::vector<double>& n) {
    const auto a = detail::allocation_coefficients(m);
    double g = m.disc_error[0];
    for (int l = 1; l < m.levels(); ++l) g += 2.0 * m.disc_error[l];
    for (int l = 0; l < m.levels(); ++l) g += a[l] / std::sqrt(n[l]);
    return g;
}

// Cost model specialization for P1 elements: |u-u_l| <= C h_l, C_l <= C' h_l^{-2d},
// h_l = 2^{-l} eps / C. The leading behaviour is eps^{-2(1+d)}.
inline double complexity_bound(double eps, int d, double c, double c_prime, double norm_u,
                               int levels) {
    require(eps > 0.0 && c > 0.0 && c_prime > 0.0 && levels >= 1,
            "complexity_bound: positive inputs required");
    require(d == 1 || d == 2, "complexity_bound: d must be 1 or 2");
    // precondition h_1 < eps / C holds by construction (h_1 = eps / (2C))
    double bracket = std::pow(eps / 2.0 + norm_u, 2.0 / 3.0);
    for (int l = 2; l <= levels; ++l)
        bracket += std::pow(3.0 * eps / std::pow(2.0, l) + norm_u, 2.0 / 3.0) *
                   std::pow(2.0, 2.0 * (1.0 + l * d) / 3.0);
    return std::pow(4.0, 1 + d) * std::pow(eps, -2.0 * (1 + d)) * std::pow(c, 2 * d) * c_prime *
           std::pow(bracket, 3);
}

// Pilot-based bridge from a Darcy hierarchy to the optimizer inputs. The
// theorem assumes |u|, |u-u_l| and C_l are known; here they are measured:
// matched-realization H1 distances to a finer reference level for the
// errors, the mean reference H1 norm for |u|, and the observed op count per
// PMLMC correction sample for C_l. Pilot keys live on the auxiliary role so
// they never collide with estimation samples.
inline error_model estimate_error_model(const darcy_hierarchy& h, std::uint64_t seed, int levels,
                                        int reference_level, std::int64_t pilots,
                                        transfer_mode mode = transfer_mode::interpolation) {
    require(pilots >= 10, "estimate_error_model: need at least 10 pilot samples per level");
    require(reference_level > levels && reference_level <= h.n_levels(),
            "estimate_error_model: reference level must exceed the ladder");
    error_model m;
    m.disc_error.assign(levels, 0.0);
    m.level_cost.assign(levels, 0.0);

    double norm_sum = 0.0;
    for (std::int64_t k = 0; k < pilots; ++k) {
        cost_counter scratch;
        const rng_key key{seed, std::uint32_t(reference_level), std::uint64_t(k),
                          rng_role::auxiliary, 0};
        const Eigen::VectorXd xi = draw_xi(key, h.basis().modes());
        require_numeric(h.realization_valid(reference_level - 1, xi),
                        "estimate_error_model: rejected pilot realization");
        const fem_solution u_ref =
            h.solve_with_xi(reference_level - 1, xi, scratch, "pilot reference");
        norm_sum += h.h1_norm_of(u_ref);
        for (int l = 1; l <= levels; ++l) {
            cost_counter cost;
            fem_solution u_l = h.solve_with_xi(l - 1, xi, cost, "pilot");
            if (l >= 2) h.transfer(l - 1).detail(u_l, mode, &cost); // correction-step cost
            m.disc_error[l - 1] += h.h1_error(u_l, u_ref);
            m.level_cost[l - 1] += cost.ops;
        }
    }
    m.norm_u = norm_sum / double(pilots);
    for (int l = 0; l < levels; ++l) {
        m.disc_error[l] /= double(pilots);
        m.level_cost[l] /= double(pilots);
    }
    return m;
}

} // namespace pmlmc

#endif
