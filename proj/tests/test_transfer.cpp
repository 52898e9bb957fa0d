#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmlmc/estimators.hpp"
#include "pmlmc/transfer.hpp"
#include "test_helpers.hpp"

using namespace pmlmc;

namespace {

// quadrature oracle for int_K v^2 over the four sub-triangles
double square_integral_oracle(const triangle_geometry& k, const std::array<double, 3>& y,
                              int sub) {
    const auto kj = testutil::subtriangle_geometry(k, sub);
    const auto c = testutil::subtriangle_corner_values(sub, y);
    return testutil::gauss7_triangle(
        kj, [&](point x) { const double v = testutil::p1_value(kj, c, x); return v * v; });
}

// direct piecewise-gradient oracle for int_K |grad v|^2
double gradient_integral_oracle(const triangle_geometry& k, const std::array<double, 3>& y) {
    double total = 0.0;
    for (int sub = 0; sub < 4; ++sub) {
        const auto kj = testutil::subtriangle_geometry(k, sub);
        const auto g = testutil::p1_gradient(kj, testutil::subtriangle_corner_values(sub, y));
        total += (g[0] * g[0] + g[1] * g[1]) * kj.area;
    }
    return total;
}

darcy_hierarchy small_darcy_2d(int base, int levels, int modes) {
    random_field_spec spec;
    spec.sigma2 = 1.0;
    spec.corr_length = 0.3;
    spec.dimension = 2;
    spec.modes = modes;
    auto mesh = hier_mesh::structured_unit_square(base);
    mesh.refine_to(levels);
    return darcy_hierarchy(std::move(mesh), build_kl_basis(spec, 1.0 / 64));
}

} // namespace

TEST_CASE("sub-triangle weights carry the Kronecker/characteristic structure") {
    const auto k = make_triangle({0, 0}, {2, 0}, {0.4, 1.7});
    testutil::test_rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        double w1 = rng.uniform(), w2 = rng.uniform();
        if (w1 + w2 > 1.0) {
            w1 = 1.0 - w1;
            w2 = 1.0 - w2;
        }
        const double w3 = 1.0 - w1 - w2;
        const point x{w1 * k.v[0][0] + w2 * k.v[1][0] + w3 * k.v[2][0],
                      w1 * k.v[0][1] + w2 * k.v[1][1] + w3 * k.v[2][1]};
        const auto sw = subtriangle_weights_at(k, x);

        // partition of unity on the hosting sub-triangle, zero elsewhere
        for (int j = 0; j < 4; ++j) {
            const double col = sw.w[0][j] + sw.w[1][j] + sw.w[2][j];
            REQUIRE(col == Catch::Approx(j + 1 == sw.chi ? 1.0 : 0.0).margin(1e-12));
        }

        // the weights reproduce a fine P1 function: pick nodal values at the
        // vertices and midpoints and compare with direct sub-triangle P1 eval
        const std::array<double, 3> vert{0.3, -1.1, 0.7};
        const std::array<double, 3> mid{0.9, 0.2, -0.5};
        const int j = sw.chi - 1;
        // ordered points v_ij: rows are (vertex, midpoint, midpoint) per column
        const std::array<std::array<double, 3>, 4> node_vals = {{
            {vert[0], mid[2], mid[1]},
            {mid[2], vert[1], mid[0]},
            {mid[1], mid[0], vert[2]},
            {mid[0], mid[1], mid[2]},
        }};
        double via_weights = 0.0;
        for (int i = 0; i < 3; ++i) via_weights += sw.w[i][j] * node_vals[j][i];
        const auto kj = testutil::subtriangle_geometry(k, j);
        const double direct = testutil::p1_value(kj, node_vals[j], x);
        REQUIRE(via_weights == Catch::Approx(direct).margin(1e-11));
    }
}

TEST_CASE("reference-triangle square integrals match the worked values") {
    const auto k = make_triangle({0, 0}, {1, 0}, {0, 1});
    const auto r = subtriangle_square_integral({1.0, 0.0, 0.0}, k);
    REQUIRE(r.per_sub[0] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(r.per_sub[1] == Catch::Approx(1.0 / 48.0).epsilon(1e-13));
    REQUIRE(r.per_sub[2] == Catch::Approx(1.0 / 48.0).epsilon(1e-13));
    REQUIRE(r.per_sub[3] == Catch::Approx(1.0 / 48.0).epsilon(1e-13));
    REQUIRE(r.total == Catch::Approx(1.0 / 16.0).epsilon(1e-13));

    const auto zero = subtriangle_square_integral({0, 0, 0}, k);
    REQUIRE(zero.total == 0.0);
}

TEST_CASE("closed-form integrals match quadrature on random triangles") {
    testutil::test_rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto k = testutil::random_triangle(rng);
        const std::array<double, 3> y{rng.uniform(-1, 1), rng.uniform(-1, 1),
                                      rng.uniform(-1, 1)};
        const auto closed = subtriangle_square_integral(y, k);
        for (int sub = 0; sub < 4; ++sub) {
            const double oracle = square_integral_oracle(k, y, sub);
            const double scale = std::max({std::abs(oracle), std::abs(closed.per_sub[sub]),
                                           1e-12});
            REQUIRE(std::abs(closed.per_sub[sub] - oracle) / scale < 1e-12);
        }
        const double grad_closed = subtriangle_gradient_integral(y, k);
        const double grad_oracle = gradient_integral_oracle(k, y);
        const double gscale = std::max({std::abs(grad_oracle), std::abs(grad_closed), 1e-12});
        REQUIRE(std::abs(grad_closed - grad_oracle) / gscale < 1e-12);

        // the two closed-form bounds
        const double sum_y2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        const double sum_e2 =
            k.edge[0] * k.edge[0] + k.edge[1] * k.edge[1] + k.edge[2] * k.edge[2];
        REQUIRE(closed.total <= 5.0 / 24.0 * k.area * sum_y2 * (1.0 + 1e-13));
        REQUIRE(grad_closed <= sum_e2 * sum_y2 / k.area * (1.0 + 1e-13));
    }
}

TEST_CASE("gradient integral vanishes only with zero deviations") {
    const auto k = make_triangle({0, 0}, {1, 0}, {0, 1});
    REQUIRE(subtriangle_gradient_integral({0, 0, 0}, k) == 0.0);
    REQUIRE(subtriangle_gradient_integral({1, 0, 0}, k) ==
            Catch::Approx(gradient_integral_oracle(k, {1, 0, 0})).epsilon(1e-13));
}

TEST_CASE("interpolation transfer is the identity on coarse functions") {
    auto mesh = hier_mesh::structured_unit_square(4);
    mesh.refine();
    const transfer_workspace tw(mesh, 1);

    testutil::test_rng rng(8);
    fem_solution coarse;
    coarse.level = 0;
    coarse.values.resize(mesh.level(0).n_vertices());
    for (int i = 0; i < coarse.values.size(); ++i) coarse.values[i] = rng.normal();

    const fem_solution up = tw.prolong(coarse);
    const fem_solution back = tw.interpolate_to_coarse(up);
    for (int i = 0; i < coarse.values.size(); ++i)
        REQUIRE(back.values[i] == coarse.values[i]); // exact

    // fine hat centered at an edge midpoint restricts to the coarse zero
    fem_solution hat;
    hat.level = 1;
    hat.values = Eigen::VectorXd::Zero(mesh.level(1).n_vertices());
    hat.values[mesh.level(0).n_vertices()] = 1.0; // first midpoint vertex
    const fem_solution r = tw.interpolate_to_coarse(hat);
    REQUIRE(r.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("1D interpolation keeps endpoint values and drops the midpoint") {
    auto mesh = hier_mesh::uniform_1d(1.0);
    mesh.refine();
    const transfer_workspace tw(mesh, 1);
    fem_solution u;
    u.level = 1;
    u.values.resize(3);
    u.values << 4.0, -2.0, 100.0; // fine ordering: coarse nodes first, then midpoint
    const fem_solution c = tw.interpolate_to_coarse(u);
    REQUIRE(c.values[0] == 4.0);
    REQUIRE(c.values[1] == -2.0);
}

TEST_CASE("h1 projection: identity on V_{l-1}, contraction, orthogonality") {
    auto mesh = hier_mesh::structured_unit_square(4);
    mesh.refine();
    const transfer_workspace tw(mesh, 1);
    testutil::test_rng rng(13);

    for (int trial = 0; trial < 20; ++trial) {
        fem_solution coarse;
        coarse.level = 0;
        coarse.values.resize(mesh.level(0).n_vertices());
        for (int i = 0; i < coarse.values.size(); ++i) coarse.values[i] = rng.normal();
        const fem_solution up = tw.prolong(coarse);
        const fem_solution p = tw.h1_project_to_coarse(up);
        for (int i = 0; i < coarse.values.size(); ++i)
            REQUIRE(p.values[i] == Catch::Approx(coarse.values[i]).margin(1e-12));
    }

    for (int trial = 0; trial < 20; ++trial) {
        fem_solution u;
        u.level = 1;
        u.values.resize(mesh.level(1).n_vertices());
        for (int i = 0; i < u.values.size(); ++i) u.values[i] = rng.normal();
        const fem_solution p = tw.h1_project_to_coarse(u);
        const double nu = std::sqrt(u.values.dot(tw.gram_fine() * u.values));
        const double np = std::sqrt(p.values.dot(tw.gram_coarse() * p.values));
        REQUIRE(np <= nu * (1.0 + 1e-12));

        // defining property: <u - Pu, v> = 0 for every coarse basis function
        const Eigen::VectorXd detail_vec = u.values - tw.prolong(p).values;
        const Eigen::VectorXd residual =
            tw.prolongation().transpose() * (tw.gram_fine() * detail_vec);
        REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, nu));

        // Pythagoras
        const double nd = detail_vec.dot(tw.gram_fine() * detail_vec);
        const double npf = tw.prolong(p).values.dot(tw.gram_fine() * tw.prolong(p).values);
        REQUIRE(nd + npf == Catch::Approx(nu * nu).epsilon(1e-10));
    }
}

TEST_CASE("h1 projection is idempotent and self-adjoint") {
    auto mesh = hier_mesh::uniform_1d(1.0 / 8);
    mesh.refine();
    const transfer_workspace tw(mesh, 1);
    testutil::test_rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        fem_solution u, w;
        u.level = w.level = 1;
        u.values.resize(mesh.level(1).n_vertices());
        w.values.resize(mesh.level(1).n_vertices());
        for (int i = 0; i < u.values.size(); ++i) {
            u.values[i] = rng.normal();
            w.values[i] = rng.normal();
        }
        const fem_solution pu = tw.prolong(tw.h1_project_to_coarse(u));
        const fem_solution ppu = tw.prolong(tw.h1_project_to_coarse(pu));
        for (int i = 0; i < pu.values.size(); ++i)
            REQUIRE(ppu.values[i] == Catch::Approx(pu.values[i]).margin(1e-12));

        const fem_solution pw = tw.prolong(tw.h1_project_to_coarse(w));
        const double lhs = pu.values.dot(tw.gram_fine() * w.values);
        const double rhs = u.values.dot(tw.gram_fine() * pw.values);
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-11).margin(1e-11));
    }
}

TEST_CASE("details vanish where they should") {
    auto mesh = hier_mesh::structured_unit_square(3);
    mesh.refine();
    const transfer_workspace tw(mesh, 1);
    testutil::test_rng rng(29);

    fem_solution coarse;
    coarse.level = 0;
    coarse.values.resize(mesh.level(0).n_vertices());
    for (int i = 0; i < coarse.values.size(); ++i) coarse.values[i] = rng.normal();
    const fem_solution up = tw.prolong(coarse);
    for (transfer_mode mode : {transfer_mode::interpolation, transfer_mode::h1}) {
        const fem_solution w = tw.detail(up, mode);
        REQUIRE(w.values.cwiseAbs().maxCoeff() < 1e-12);
    }

    // interpolation-mode details vanish exactly at coarse-vertex positions
    fem_solution u;
    u.level = 1;
    u.values.resize(mesh.level(1).n_vertices());
    for (int i = 0; i < u.values.size(); ++i) u.values[i] = rng.normal();
    const fem_solution w = tw.detail(u, transfer_mode::interpolation);
    for (int i = 0; i < mesh.level(0).n_vertices(); ++i) REQUIRE(w.values[i] == 0.0);

    // h1-mode: |detail|^2 + |Pu|^2 = |u|^2 to 1e-10 relative
    const fem_solution wh = tw.detail(u, transfer_mode::h1);
    const fem_solution pu = tw.prolong(tw.h1_project_to_coarse(u));
    const double n2u = u.values.dot(tw.gram_fine() * u.values);
    const double n2w = wh.values.dot(tw.gram_fine() * wh.values);
    const double n2p = pu.values.dot(tw.gram_fine() * pu.values);
    REQUIRE(n2w + n2p == Catch::Approx(n2u).epsilon(1e-10));
}

TEST_CASE("regular triangulation constant respects the floor and the ratio") {
    auto mesh = hier_mesh::structured_unit_square(3);
    const double ratio = regularity_check(mesh.level(0));
    const double c = regular_triangulation_constant(mesh.level(0));
    REQUIRE(c >= 5.0 / 48.0);
    REQUIRE(c >= 6.0 * ratio - 1e-12);
}

TEST_CASE("midpoint variance bound: degenerate ensembles give zero on both sides") {
    darcy_hierarchy h = small_darcy_2d(3, 2, 8);
    cost_counter cost;
    const Eigen::VectorXd xi = draw_xi(rng_key{3, 2, 0, rng_role::field, 0}, 8);
    const fem_solution u = h.solve_with_xi(1, xi, cost, "test");
    const fem_solution w = h.transfer(1).detail(u, transfer_mode::interpolation);

    std::vector<fem_solution> same(5, w);
    const auto vb = midpoint_variance_bound(h.mesh(), 1, same, h.gram(1));
    REQUIRE(vb.lhs == Catch::Approx(0.0).margin(1e-18));
    REQUIRE(vb.rhs == Catch::Approx(0.0).margin(1e-18));

    // details of coarse-space members are identically zero
    std::vector<fem_solution> zero_details;
    testutil::test_rng rng(31);
    for (int s = 0; s < 4; ++s) {
        fem_solution coarse;
        coarse.level = 0;
        coarse.values.resize(h.mesh().level(0).n_vertices());
        for (int i = 0; i < coarse.values.size(); ++i) coarse.values[i] = rng.normal();
        zero_details.push_back(
            h.transfer(1).detail(h.transfer(1).prolong(coarse), transfer_mode::interpolation));
    }
    const auto vz = midpoint_variance_bound(h.mesh(), 1, zero_details, h.gram(1));
    REQUIRE(vz.lhs < 1e-24);
    REQUIRE(vz.rhs < 1e-24);

    REQUIRE_THROWS_AS(midpoint_variance_bound(h.mesh(), 1, {w}, h.gram(1)), config_error);
}

TEST_CASE("midpoint variance bound holds on Darcy ensembles") {
    darcy_hierarchy h = small_darcy_2d(4, 2, 16);
    const darcy_pmlmc_sampler sampler(h, 91, 2, transfer_mode::interpolation);
    cost_counter cost;
    std::vector<fem_solution> details;
    for (int s = 0; s < 60; ++s) details.push_back(sampler.draw(s, cost));
    const auto vb = midpoint_variance_bound(h.mesh(), 1, details, h.gram(1));
    REQUIRE(vb.lhs > 0.0);
    REQUIRE(vb.lhs <= vb.rhs);
}

TEST_CASE("1D analog of the variance bound uses interval midpoints") {
    random_field_spec spec;
    spec.corr_length = 0.2;
    spec.modes = 6;
    auto mesh = hier_mesh::uniform_1d(1.0 / 8);
    mesh.refine();
    darcy_hierarchy h(std::move(mesh), build_kl_basis(spec, 1.0 / 64));
    const darcy_pmlmc_sampler sampler(h, 7, 2, transfer_mode::interpolation);
    cost_counter cost;
    std::vector<fem_solution> details;
    for (int s = 0; s < 30; ++s) details.push_back(sampler.draw(s, cost));
    const auto vb = midpoint_variance_bound(h.mesh(), 1, details, h.gram(1));
    REQUIRE(vb.lhs > 0.0);
    REQUIRE(vb.rhs > 0.0);
    REQUIRE(vb.c_reg == 6.0); // interval regularity ratio is 1 by convention
}
