// Shared fixtures: independent oracles (analytic KL eigenvalues, Gauss
// quadrature, constrained minimizer) and the scalar toy model used for
// estimator statistics. Everything here stays independent of the library
// paths it is used to check.
#ifndef PMLMC_TEST_HELPERS_HPP
#define PMLMC_TEST_HELPERS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "pmlmc/cost.hpp"
#include "pmlmc/mesh.hpp"
#include "pmlmc/rng.hpp"

namespace testutil {

// --- analytic eigenvalues of the 1D exponential kernel ----------------------
// sigma2 exp(-|x-y|/lambda) on [0,1]: after shifting to [-1/2,1/2] the
// frequencies solve, with c = 1/lambda,
//   even modes:  c cos(w/2) - w sin(w/2) = 0,  w in ((2k)pi, (2k+1)pi)
//   odd modes:   w cos(w/2) + c sin(w/2) = 0,  w in ((2k+1)pi, (2k+2)pi)
// one root per interval, theta = 2 c sigma2 / (w^2 + c^2). Solved by
// bisection on forms that stay finite at the interval ends.
inline std::vector<double> analytic_exponential_eigenvalues(double sigma2, double lambda,
                                                            int count) {
    const double c = 1.0 / lambda;
    const double pi = 3.14159265358979323846;
    std::vector<double> theta(count);
    for (int n = 1; n <= count; ++n) {
        const bool even = (n % 2 == 1); // intervals alternate starting with the even family
        const std::function<double(double)> f = even
            ? std::function<double(double)>([c](double w) {
                  return c * std::cos(0.5 * w) - w * std::sin(0.5 * w);
              })
            : std::function<double(double)>([c](double w) {
                  return w * std::cos(0.5 * w) + c * std::sin(0.5 * w);
              });
        double lo = (n - 1) * pi + 1e-12, hi = n * pi - 1e-12;
        double flo = f(lo);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if ((flo <= 0.0) == (fm <= 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        const double w = 0.5 * (lo + hi);
        theta[n - 1] = 2.0 * c * sigma2 / (w * w + c * c);
    }
    return theta;
}

// --- Gauss quadrature on a triangle (degree 5, 7 points) --------------------
inline double gauss7_triangle(const pmlmc::triangle_geometry& k,
                              const std::function<double(pmlmc::point)>& f) {
    static const double a1 = 0.059715871789769820459117580973;
    static const double b1 = 0.470142064105115089770441209513;
    static const double w1 = 0.132394152788506180737649387833;
    static const double a2 = 0.797426985353087322398025276170;
    static const double b2 = 0.101286507323456338800987361915;
    static const double w2 = 0.125939180544827152595683945500;
    static const std::array<std::array<double, 4>, 7> pts = {{
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
        {a1, b1, b1, w1},
        {b1, a1, b1, w1},
        {b1, b1, a1, w1},
        {a2, b2, b2, w2},
        {b2, a2, b2, w2},
        {b2, b2, a2, w2},
    }};
    double sum = 0.0;
    for (const auto& p : pts) {
        const pmlmc::point x{p[0] * k.v[0][0] + p[1] * k.v[1][0] + p[2] * k.v[2][0],
                             p[0] * k.v[0][1] + p[1] * k.v[1][1] + p[2] * k.v[2][1]};
        sum += p[3] * f(x);
    }
    return sum * k.area;
}

// P1 value and gradient on a triangle from its corner values.
inline double p1_value(const pmlmc::triangle_geometry& k, const std::array<double, 3>& c,
                       const pmlmc::point& x) {
    const auto w = pmlmc::barycentric(k, x, 1e-9);
    return w[0] * c[0] + w[1] * c[1] + w[2] * c[2];
}

inline std::array<double, 2> p1_gradient(const pmlmc::triangle_geometry& k,
                                         const std::array<double, 3>& c) {
    const double two_a = 2.0 * pmlmc::signed_area(k.v[0], k.v[1], k.v[2]);
    std::array<double, 2> g{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const auto& pj = k.v[(i + 1) % 3];
        const auto& pk = k.v[(i + 2) % 3];
        g[0] += c[i] * (pj[1] - pk[1]) / two_a;
        g[1] += c[i] * (pk[0] - pj[0]) / two_a;
    }
    return g;
}

// corner values of the vertex-vanishing midpoint bubble on sub-triangle j
// (corners follow the refinement orientation table)
inline std::array<double, 3> subtriangle_corner_values(int j, const std::array<double, 3>& y) {
    switch (j) {
    case 0: return {0.0, y[2], y[1]};  // (v1, m3, m2)
    case 1: return {y[2], 0.0, y[0]};  // (m3, v2, m1)
    case 2: return {y[1], y[0], 0.0};  // (m2, m1, v3)
    default: return {y[0], y[1], y[2]}; // (m1, m2, m3)
    }
}

inline pmlmc::triangle_geometry subtriangle_geometry(const pmlmc::triangle_geometry& k, int j) {
    const auto mid = [&](int a, int b) {
        return pmlmc::point{0.5 * (k.v[a][0] + k.v[b][0]), 0.5 * (k.v[a][1] + k.v[b][1])};
    };
    const pmlmc::point m1 = mid(1, 2), m2 = mid(0, 2), m3 = mid(0, 1);
    switch (j) {
    case 0: return pmlmc::make_triangle(k.v[0], m3, m2);
    case 1: return pmlmc::make_triangle(m3, k.v[1], m1);
    case 2: return pmlmc::make_triangle(m2, m1, k.v[2]);
    default: return pmlmc::make_triangle(m1, m2, m3);
    }
}

// --- deterministic test randomness -------------------------------------------

class test_rng {
public:
    explicit test_rng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ull) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
        const double u = double(state_ >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    double normal() {
        const double u1 = 1.0 - uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.2831853071795864769 * u2);
    }

private:
    std::uint64_t state_;
};

inline pmlmc::triangle_geometry random_triangle(test_rng& rng) {
    for (;;) {
        const pmlmc::point a{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const pmlmc::point b{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const pmlmc::point c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double area = std::abs(pmlmc::signed_area(a, b, c));
        if (area > 0.05) return pmlmc::make_triangle(a, b, c);
    }
}

// --- scalar toy model ---------------------------------------------------------
// Level "solutions" u_l = b_l + a_l Z with one standard normal Z per
// (level, sample); means are analytic, so estimator statistics have exact
// oracles. The toy "projection" is multiplication by proj_factor.
struct toy_model {
    std::vector<double> b{0.70, 0.85, 0.925}; // E[u_l]
    std::vector<double> a{0.60, 0.75, 0.80};  // spread
    double proj_factor = 0.9;

    double u(int level, double z) const { return b[level - 1] + a[level - 1] * z; }

    double mc_mean(int level) const { return b[level - 1]; }
    double mlmc_mean(int levels) const { return b[levels - 1]; } // telescoping
    double pmlmc_mean(int levels) const {
        double m = b[0];
        for (int l = 2; l <= levels; ++l) m += (1.0 - proj_factor) * b[l - 1];
        return m;
    }
};

struct toy_space {
    using value_type = double;
    double zero(int) const { return 0.0; }
    void add_scaled(double& y, double s, double x) const { y += s * x; }
    double norm2(double v, int) const { return v * v; }
    double lift(double v, int, int) const { return v; }
};

inline double toy_draw_z(std::uint64_t seed, int level, std::int64_t index) {
    return pmlmc::draw_xi(
        pmlmc::rng_key{seed, std::uint32_t(level), std::uint64_t(index), pmlmc::rng_role::field,
                       0},
        1)[0];
}

struct toy_mc_sampler {
    const toy_model* m;
    std::uint64_t seed;
    int lvl;
    int level() const { return lvl; }
    double draw(std::int64_t index, pmlmc::cost_counter& c) const {
        c.ops += 1;
        return m->u(lvl, toy_draw_z(seed, lvl, index));
    }
};

struct toy_mlmc_sampler {
    const toy_model* m;
    std::uint64_t seed;
    int lvl;
    int level() const { return lvl; }
    double draw(std::int64_t index, pmlmc::cost_counter& c) const {
        c.ops += 2;
        const double z = toy_draw_z(seed, lvl, index);
        if (lvl == 1) return m->u(1, z);
        return m->u(lvl, z) - m->u(lvl - 1, z); // same realization on both levels
    }
};

struct toy_pmlmc_sampler {
    const toy_model* m;
    std::uint64_t seed;
    int lvl;
    int level() const { return lvl; }
    double draw(std::int64_t index, pmlmc::cost_counter& c) const {
        c.ops += 1;
        const double z = toy_draw_z(seed, lvl, index);
        if (lvl == 1) return m->u(1, z);
        return (1.0 - m->proj_factor) * m->u(lvl, z);
    }
};

} // namespace testutil

#endif
