#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rbsaddle/kernels.hpp"
#include "rbsaddle/stokes.hpp"
#include "test_support.hpp"

#include <sstream>

using namespace rbs;

TEST_CASE("build_benchmark invariants") {
    const auto& b = testsupport::tiny_bench();
    CHECK(b.space.n_free_vel > 0);
    CHECK(b.space.n_pressure == static_cast<Index>(b.mesh.vertices.size()));
    CHECK(b.space.n_total == b.space.n_free_vel + b.space.n_pressure);
    CHECK(b.disc.a.q() == 10);
    CHECK(b.disc.b.q() == 10);
    // rhs decompositions keep only the terms the lift actually touches
    CHECK(b.disc.f.q() >= 1);
    CHECK(b.disc.f.q() <= b.disc.a.q());
    CHECK(b.disc.g.q() >= 1);
    CHECK(b.disc.g.q() <= b.disc.b.q());
    // gram matrices are SPD-shaped and symmetric
    CHECK(b.disc.x_gram.rows() == b.space.n_free_vel);
    CHECK(b.disc.y_gram.rows() == b.space.n_pressure);
    CHECK(is_symmetric(b.disc.x_gram));
    CHECK(is_symmetric(b.disc.y_gram));
    // every lifted coefficient sits on a Dirichlet node
    for (Index i = 0; i < b.disc.lift.size(); ++i) {
        if (b.disc.lift[i] != 0.0) {
            const auto node = static_cast<size_t>(i / 2);
            CHECK(b.space.dirichlet[node]);
        }
    }
}

TEST_CASE("invalid geometry is rejected") {
    GeometryConfig g = testsupport::tiny_geometry();
    g.nx_base[2] = 0;
    CHECK_THROWS_AS(build_benchmark(g), InvalidGeometry);

    GeometryConfig g2 = testsupport::tiny_geometry();
    g2.fixed_left = 1.2; // obstacle half-width up to 0.6 would cross this band
    CHECK_THROWS_AS(build_benchmark(g2), InvalidGeometry);
}

TEST_CASE("deform_mesh is the identity at the reference parameter") {
    const auto& b = testsupport::tiny_bench();
    const Mesh moved = deform_mesh(b.mesh, b.geometry, b.geometry.reference_mu());
    REQUIRE(moved.vertices.size() == b.mesh.vertices.size());
    for (size_t i = 0; i < moved.vertices.size(); ++i)
        CHECK((moved.vertices[i] - b.mesh.vertices[i]).norm() <= 1e-14);
}

TEST_CASE("affine assembly matches direct assembly on the deformed mesh") {
    // independent oracle: push the mesh through the geometry map, assemble
    // the plain (unparametrized) forms there, and compare entrywise with the
    // affine decomposition evaluated at the same parameter
    const auto& b = testsupport::tiny_bench();
    for (const Vector& mu : testsupport::random_mus(3, 2024)) {
        const Mesh moved = deform_mesh(b.mesh, b.geometry, mu);
        SparseMatrix a_full, b_full;
        assemble_plain(moved, b.space, a_full, b_full);

        const SparseMatrix a_aff = assemble_at(b.disc.a, b.disc.domain, mu);
        const SparseMatrix a_dir = restrict_velocity_both(a_full, b.space);
        const double a_scale = DenseMatrix(a_dir).cwiseAbs().maxCoeff();
        CHECK((DenseMatrix(a_aff) - DenseMatrix(a_dir)).cwiseAbs().maxCoeff() <=
              1e-10 * a_scale);

        const SparseMatrix b_aff = assemble_at(b.disc.b, b.disc.domain, mu);
        const SparseMatrix b_dir = restrict_velocity_cols(b_full, b.space);
        const double b_scale = DenseMatrix(b_dir).cwiseAbs().maxCoeff();
        CHECK((DenseMatrix(b_aff) - DenseMatrix(b_dir)).cwiseAbs().maxCoeff() <=
              1e-10 * b_scale);

        // rhs terms encode -form(lift, .): compare with the direct route
        const Vector f_aff = assemble_at(b.disc.f, b.disc.domain, mu);
        const Vector f_dir = -restrict_free(a_full * b.disc.lift, b.space);
        CHECK((f_aff - f_dir).norm() <= 1e-10 * std::max(1.0, f_dir.norm()));

        const Vector g_aff = assemble_at(b.disc.g, b.disc.domain, mu);
        const Vector g_dir = -(b_full * b.disc.lift);
        CHECK((g_aff - g_dir).norm() <= 1e-10 * std::max(1.0, g_dir.norm()));
    }
}

TEST_CASE("truth solve satisfies the saddle system and reports its residual") {
    const auto& b = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.35, 0.52;
    const TruthSolution sol = truth_solve(b.disc, b.mesh, b.space, mu);
    CHECK(sol.residual_norm <= 1e-8);

    const SparseMatrix a_mu = assemble_at(b.disc.a, b.disc.domain, mu);
    const SparseMatrix b_mu = assemble_at(b.disc.b, b.disc.domain, mu);
    const Vector f_mu = assemble_at(b.disc.f, b.disc.domain, mu);
    const Vector g_mu = assemble_at(b.disc.g, b.disc.domain, mu);
    const Vector r1 = a_mu * sol.u + b_mu.transpose() * sol.p - f_mu;
    const Vector r2 = b_mu * sol.u - g_mu;
    const double scale = std::max({f_mu.norm(), g_mu.norm(), 1.0});
    CHECK(std::sqrt(r1.squaredNorm() + r2.squaredNorm()) <= 1e-8 * scale);

    // the two-argument overload returns the same coefficients
    const TruthSolution slim = truth_solve(b.disc, mu);
    CHECK((slim.u - sol.u).norm() <= 1e-13 * std::max(1.0, sol.u.norm()));
    CHECK((slim.p - sol.p).norm() <= 1e-13 * std::max(1.0, sol.p.norm()));
    CHECK(slim.u_full.size() == 0);
    CHECK(sol.u_full.size() == 2 * static_cast<Index>(b.space.p2_coords.size()));
}

TEST_CASE("mass conservation: inflow flux balances outflow flux") {
    // the inflow profile 4*y*(1-y) is pinned in reference coordinates, so on
    // the deformed mesh the physical flux is the exact piecewise integral
    //   F(h) = (h/0.4) * int_0^0.4 4y(1-y) dy + ((1-h)/0.6) * int_0.4^1 ...
    // with int_0^0.4 = 0.704/3 and int_0.4^1 = 1.296/3 (computed by hand)
    const auto& b = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.45, 0.3;
    const double h = mu[1];
    const double expected = (h / 0.4) * (0.704 / 3.0) + ((1.0 - h) / 0.6) * (1.296 / 3.0);

    const TruthSolution sol = truth_solve(b.disc, b.mesh, b.space, mu);
    const Mesh moved = deform_mesh(b.mesh, b.geometry, mu);
    const double in = boundary_flux(moved, b.space, sol.u_full, kInflow);
    const double out = boundary_flux(moved, b.space, sol.u_full, kOutflow);
    CHECK(in == doctest::Approx(-expected).epsilon(1e-9));
    CHECK(out == doctest::Approx(expected).epsilon(1e-8));
    CHECK(std::abs(in + out) <= 1e-8);
}

TEST_CASE("expand and restrict are mutually consistent") {
    const auto& b = testsupport::tiny_bench();
    const Vector u_free = seeded_vector(b.space.n_free_vel, 5);
    const Vector full = expand_velocity(b.disc, b.space, u_free);
    CHECK((restrict_free(full, b.space) - u_free).norm() == 0.0);
    // expanding zero free coefficients yields exactly the lift
    CHECK((expand_velocity(b.disc, b.space, Vector::Zero(b.space.n_free_vel)) -
           b.disc.lift)
              .norm() == 0.0);
}

TEST_CASE("mesh export emits a readable summary") {
    const auto& b = testsupport::tiny_bench();
    std::ostringstream out;
    export_mesh(b.mesh, out);
    const std::string text = out.str();
    CHECK(text.find("vertices") != std::string::npos);
    CHECK(text.find("triangles") != std::string::npos);
}
