#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rbsaddle/rb_online.hpp"
#include "test_support.hpp"

using namespace rbs;

namespace {

// Small generic space: a few truth solutions plus supremizers so the reduced
// saddle problem is stable, grown over two generations.
RBSpace make_space(const ReducedModelBuilder* builder_sink = nullptr) {
    (void)builder_sink;
    const auto& b = testsupport::tiny_bench();
    RBSpace space;
    int gen = 0;
    for (const Vector& mu : testsupport::random_mus(3, 314)) {
        const TruthSolution sol = truth_solve(b.disc, mu);
        insert(space, b.disc.y_gram, {{sol.p, BasisRole::PSnapshot}}, WhichSpace::Y, gen);
        insert(space, b.disc.x_gram,
               {{sol.u, BasisRole::USnapshot},
                {supremizer(b.disc, mu, sol.p), BasisRole::Supremizer}},
               WhichSpace::X, gen);
        ++gen;
    }
    return space;
}

} // namespace

TEST_CASE("projected blocks match the dense Z^T M Z oracle") {
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    const ReducedModel model = project(b.disc, space);
    REQUIRE(model.n_x() == space.n_x());
    REQUIRE(model.n_y() == space.n_y());

    for (size_t q = 0; q < model.a_blocks.size(); ++q) {
        const DenseMatrix oracle =
            space.zu.transpose() * (b.disc.a.terms[q] * space.zu);
        CHECK((model.a_blocks[q] - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    }
    for (size_t q = 0; q < model.b_blocks.size(); ++q) {
        const DenseMatrix oracle =
            space.zp.transpose() * (b.disc.b.terms[q] * space.zu);
        CHECK((model.b_blocks[q] - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    }
    for (size_t q = 0; q < model.f_blocks.size(); ++q)
        CHECK((model.f_blocks[q] - space.zu.transpose() * b.disc.f.terms[q]).norm() <= 1e-12);
    for (size_t q = 0; q < model.g_blocks.size(); ++q)
        CHECK((model.g_blocks[q] - space.zp.transpose() * b.disc.g.terms[q]).norm() <= 1e-12);
}

TEST_CASE("online solve reproduces snapshots contained in the space") {
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    const ReducedModel model = project(b.disc, space);

    for (const Vector& mu : testsupport::random_mus(3, 314)) {
        const TruthSolution truth = truth_solve(b.disc, mu);
        const RBSolution red = online_solve(model, mu);
        const Vector u_rec = space.zu * red.u;
        const Vector p_rec = space.zp * red.p;
        CHECK((u_rec - truth.u).norm() <= 1e-9 * std::max(1.0, truth.u.norm()));
        CHECK((p_rec - truth.p).norm() <= 1e-9 * std::max(1.0, truth.p.norm()));
    }
}

TEST_CASE("online solve per generation uses the nested sub-blocks") {
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    const ReducedModel model = project(b.disc, space);
    REQUIRE(model.generations.size() >= 1);

    Vector mu(2);
    mu << 0.44, 0.36;
    const RBSolution latest = online_solve(model, mu, -1);
    CHECK(latest.n_x == model.n_x());
    const RBSolution first = online_solve(model, mu, 0);
    CHECK(first.n_x == model.generations[0].first);
    CHECK(first.n_y == model.generations[0].second);
    CHECK_THROWS_AS(online_solve(model, mu, 999), Error);
}

TEST_CASE("galerkin orthogonality of the online solution") {
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    const ReducedModel model = project(b.disc, space);
    Vector mu(2);
    mu << 0.52, 0.47;
    const RBSolution sol = online_solve(model, mu);
    const Vector r1 = truth_residual_1(b.disc, space, mu, sol);
    const Vector r2 = truth_residual_2(b.disc, space, mu, sol);
    const double scale = std::max(1.0, r1.norm() + r2.norm());
    CHECK((space.zu.transpose() * r1).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK((space.zp.transpose() * r2).cwiseAbs().maxCoeff() <= 1e-9 * scale);
}

TEST_CASE("residual dual norms match the direct riesz oracle") {
    // independent oracle: form the truth residual vectors, solve the Gram
    // systems directly, and take the induced norms
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    const ReducedModel model = project(b.disc, space);
    SpdSolver xs(b.disc.x_gram), ys(b.disc.y_gram);

    for (const Vector& mu : testsupport::random_mus(10, 555)) {
        const RBSolution sol = online_solve(model, mu);
        const auto [n1, n2] = residual_dual_norms(model, mu, sol);
        const Vector r1 = truth_residual_1(b.disc, space, mu, sol);
        const Vector r2 = truth_residual_2(b.disc, space, mu, sol);
        const double o1 = std::sqrt(r1.dot(xs.solve(r1)));
        const double o2 = std::sqrt(r2.dot(ys.solve(r2)));
        CHECK(std::abs(n1 - o1) <= 1e-8 * std::max(1.0, o1));
        CHECK(std::abs(n2 - o2) <= 1e-8 * std::max(1.0, o2));
    }
}

TEST_CASE("dual norms scale linearly with the data at frozen coefficients") {
    // doubling f and g doubles both residual norms when the reduced
    // coefficients are kept fixed (the expansion is quadratic in the data)
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    ReducedModel model = project(b.disc, space);
    Vector mu(2);
    mu << 0.33, 0.5;
    RBSolution sol = online_solve(model, mu);
    sol.u *= 0.5; // make the residual visibly nonzero
    const auto [n1, n2] = residual_dual_norms(model, mu, sol);

    TruthDiscretization scaled = b.disc;
    for (auto& t : scaled.f.terms) t *= 2.0;
    for (auto& t : scaled.g.terms) t *= 2.0;
    const ReducedModel model2 = project(scaled, space);
    RBSolution sol2 = sol;
    sol2.u *= 2.0;
    sol2.p *= 2.0;
    const auto [m1, m2] = residual_dual_norms(model2, mu, sol2);
    CHECK(m1 == doctest::Approx(2.0 * n1).epsilon(1e-7));
    CHECK(m2 == doctest::Approx(2.0 * n2).epsilon(1e-7));
}

TEST_CASE("energy residual norm: exact value sits inside the sandwich") {
    const auto& b = testsupport::tiny_bench();
    const RBSpace space = make_space();
    const ReducedModel model = project(b.disc, space);
    Vector mu(2);
    mu << 0.27, 0.58;
    RBSolution sol = online_solve(model, mu);
    sol.u *= 0.9;
    const auto [r1, r2] = residual_dual_norms(model, mu, sol);
    (void)r2;
    const double exact = energy_residual_norm_exact(b.disc, space, mu, sol);
    // sandwich with the exact alpha/gamma at this mu is checked in the
    // acceptance run; here use crude safe constants alpha<=1<=gamma scaling
    const auto [lo, hi] = energy_residual_sandwich(r1, 0.5, 2.0);
    CHECK(lo == doctest::Approx(r1 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(hi == doctest::Approx(r1 / std::sqrt(0.5)).epsilon(1e-14));
    CHECK(exact > 0.0);
    // exact energy norm and dual norm agree up to the spectral bounds of
    // A(mu) vs the X-Gram on this mesh (alpha ~ 0.6, gamma ~ 1.6)
    CHECK(exact >= r1 / 2.0);
    CHECK(exact <= r1 * 2.0);
}

TEST_CASE("incremental builder agrees with the one-shot projection") {
    const auto& b = testsupport::tiny_bench();
    RBSpace space;
    ReducedModelBuilder builder(b.disc);
    int gen = 0;
    for (const Vector& mu : testsupport::random_mus(3, 314)) {
        const TruthSolution sol = truth_solve(b.disc, mu);
        insert(space, b.disc.y_gram, {{sol.p, BasisRole::PSnapshot}}, WhichSpace::Y, gen);
        insert(space, b.disc.x_gram,
               {{sol.u, BasisRole::USnapshot},
                {supremizer(b.disc, mu, sol.p), BasisRole::Supremizer}},
               WhichSpace::X, gen);
        builder.sync(space);
        ++gen;
    }
    const ReducedModel& inc = builder.model();
    const ReducedModel one = project(b.disc, space);
    REQUIRE(inc.n_x() == one.n_x());
    REQUIRE(inc.generations.size() == 3);

    for (size_t q = 0; q < one.a_blocks.size(); ++q)
        CHECK((inc.a_blocks[q] - one.a_blocks[q]).cwiseAbs().maxCoeff() <= 1e-12);
    for (size_t q = 0; q < one.b_blocks.size(); ++q)
        CHECK((inc.b_blocks[q] - one.b_blocks[q]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((inc.r1_aa - one.r1_aa).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((inc.r1_ab - one.r1_ab).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((inc.r1_bb - one.r1_bb).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((inc.r1_fa - one.r1_fa).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((inc.r1_fb - one.r1_fb).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((inc.r2_gb - one.r2_gb).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((inc.r2_bb - one.r2_bb).cwiseAbs().maxCoeff() <= 1e-10);

    // the two models produce matching online solutions and residual norms
    Vector mu(2);
    mu << 0.38, 0.41;
    const RBSolution si = online_solve(inc, mu);
    const RBSolution so = online_solve(one, mu);
    CHECK((si.u - so.u).norm() <= 1e-10 * std::max(1.0, so.u.norm()));
    const auto [a1, a2] = residual_dual_norms(inc, mu, si);
    const auto [b1, b2] = residual_dual_norms(one, mu, so);
    CHECK(a1 == doctest::Approx(b1).epsilon(1e-6));
    CHECK(a2 == doctest::Approx(b2).epsilon(1e-6));
}

TEST_CASE("builder rejects a non-nested space") {
    const auto& b = testsupport::tiny_bench();
    RBSpace space;
    insert(space, b.disc.x_gram,
           {{seeded_vector(b.space.n_free_vel, 1), BasisRole::USnapshot}}, WhichSpace::X, 0);
    insert(space, b.disc.y_gram,
           {{seeded_vector(b.space.n_pressure, 2), BasisRole::PSnapshot}}, WhichSpace::Y, 0);
    ReducedModelBuilder builder(b.disc);
    builder.sync(space);

    RBSpace other;
    insert(other, b.disc.x_gram,
           {{seeded_vector(b.space.n_free_vel, 3), BasisRole::USnapshot}}, WhichSpace::X, 0);
    insert(other, b.disc.y_gram,
           {{seeded_vector(b.space.n_pressure, 4), BasisRole::PSnapshot}}, WhichSpace::Y, 0);
    CHECK_THROWS_AS(builder.sync(other), Error);
}

TEST_CASE("singular reduced system is reported") {
    // a space with pressure modes but no velocity modes cannot satisfy the
    // reduced saddle system
    const auto& b = testsupport::tiny_bench();
    RBSpace space;
    insert(space, b.disc.y_gram,
           {{seeded_vector(b.space.n_pressure, 7), BasisRole::PSnapshot}}, WhichSpace::Y, 0);
    const ReducedModel model = project(b.disc, space);
    Vector mu(2);
    mu << 0.4, 0.4;
    CHECK_THROWS_AS(online_solve(model, mu), SingularReducedSystem);
}
