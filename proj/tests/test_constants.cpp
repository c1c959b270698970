#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rbsaddle/constants.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>

using namespace rbs;

namespace {

// Dense generalized eigenvalue oracles, independent of the library kernels.
double dense_lambda_min(const DenseMatrix& m, const DenseMatrix& g) {
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(m, g);
    return es.eigenvalues().minCoeff();
}

double dense_lambda_max(const DenseMatrix& m, const DenseMatrix& g) {
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(m, g);
    return es.eigenvalues().maxCoeff();
}

struct DenseForms {
    DenseMatrix a, b, x, y;
};

DenseForms dense_forms(const Vector& mu) {
    const auto& bench = testsupport::tiny_bench();
    DenseForms d;
    d.a = DenseMatrix(assemble_at(bench.disc.a, bench.disc.domain, mu));
    d.b = DenseMatrix(assemble_at(bench.disc.b, bench.disc.domain, mu));
    d.x = DenseMatrix(bench.disc.x_gram);
    d.y = DenseMatrix(bench.disc.y_gram);
    return d;
}

} // namespace

TEST_CASE("coercivity and continuity constants match dense oracles") {
    const auto& bench = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.3, 0.5;
    const DenseForms d = dense_forms(mu);

    const double alpha = alpha_exact(bench.disc, mu);
    const double gamma = gamma_exact(bench.disc, mu);
    CHECK(alpha == doctest::Approx(dense_lambda_min(d.a, d.x)).epsilon(1e-8));
    CHECK(gamma == doctest::Approx(dense_lambda_max(d.a, d.x)).epsilon(1e-8));
    CHECK(alpha > 0.0);
    CHECK(alpha <= gamma);
}

TEST_CASE("divergence-form constants match dense Schur oracles") {
    // beta_br^2 = lambda_min(B A(mu-bar-free) ... ) is implemented against the
    // X-Gram: beta_br^2 = lambda_min(B X^-1 B^T, Y), gamma_b^2 = lambda_max
    const auto& bench = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.55, 0.25;
    const DenseForms d = dense_forms(mu);
    const DenseMatrix schur = d.b * d.x.ldlt().solve(d.b.transpose());

    const double beta_br = beta_brezzi_exact(bench.disc, mu);
    const double gamma_b = gamma_b_exact(bench.disc, mu);
    CHECK(beta_br == doctest::Approx(std::sqrt(dense_lambda_min(schur, d.y))).epsilon(1e-7));
    CHECK(gamma_b == doctest::Approx(std::sqrt(dense_lambda_max(schur, d.y))).epsilon(1e-7));
    CHECK(0.0 < beta_br);
    CHECK(beta_br <= gamma_b);
}

TEST_CASE("tilde-beta matches its dense oracle and the sandwich holds") {
    // tilde_beta^2 = lambda_min(B A(mu)^-1 B^T, Y); the sandwich
    // beta_br/sqrt(gamma) <= tilde_beta <= beta_br/sqrt(alpha) must hold
    const auto& bench = testsupport::tiny_bench();
    for (const Vector& mu : testsupport::random_mus(3, 77)) {
        const DenseForms d = dense_forms(mu);
        const DenseMatrix schur_a = d.b * d.a.ldlt().solve(d.b.transpose());
        const double tb = tilde_beta_exact(bench.disc, mu);
        CHECK(tb == doctest::Approx(std::sqrt(dense_lambda_min(schur_a, d.y))).epsilon(1e-7));

        const double alpha = alpha_exact(bench.disc, mu);
        const double gamma = gamma_exact(bench.disc, mu);
        const double beta_br = beta_brezzi_exact(bench.disc, mu);
        CHECK(beta_br / std::sqrt(gamma) <= tb * (1 + 1e-9));
        CHECK(tb <= beta_br / std::sqrt(alpha) * (1 + 1e-9));
    }
}

TEST_CASE("babuska constant matches the dense saddle oracle") {
    // beta_ba = sqrt(lambda_min(K Z^-1 K, Z)) with K the full saddle matrix
    // and Z = diag(X, Y)
    const auto& bench = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.4, 0.45;
    const DenseForms d = dense_forms(mu);
    const Index nx = d.a.rows(), ny = d.b.rows();
    DenseMatrix k = DenseMatrix::Zero(nx + ny, nx + ny);
    k.topLeftCorner(nx, nx) = d.a;
    k.topRightCorner(nx, ny) = d.b.transpose();
    k.bottomLeftCorner(ny, nx) = d.b;
    DenseMatrix z = DenseMatrix::Zero(nx + ny, nx + ny);
    z.topLeftCorner(nx, nx) = d.x;
    z.bottomRightCorner(ny, ny) = d.y;

    const DenseMatrix kzk = k * z.ldlt().solve(k);
    const double oracle = std::sqrt(dense_lambda_min(kzk, z));
    const double beta_ba = beta_babuska_exact(bench.disc, mu);
    CHECK(beta_ba == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(beta_ba > 0.0);
}

TEST_CASE("exact_bounds packs matching lower and upper values") {
    const auto& bench = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.5, 0.5;
    const ConstantBounds c = exact_bounds(bench.disc, mu, true);
    CHECK(c.mode == ConstantsMode::Exact);
    CHECK(c.alpha_lb == c.alpha_ub);
    CHECK(c.gamma_lb == c.gamma_ub);
    CHECK(c.beta_br_lb == c.beta_br_ub);
    CHECK(c.alpha_lb == doctest::Approx(alpha_exact(bench.disc, mu)).epsilon(1e-10));
    CHECK(c.beta_ba_lb > 0.0);
    CHECK(c.tilde_beta > 0.0);

    const ConstantBounds c2 = exact_bounds(bench.disc, mu, false);
    CHECK(c2.beta_ba_lb == 0.0);
}

TEST_CASE("surrogate reproduces training points up to the safety factors") {
    const auto& bench = testsupport::tiny_bench();
    const std::vector<Vector> mus = testsupport::random_mus(4, 11);
    const SurrogateModel model = build_surrogate(bench.disc, mus);
    REQUIRE(model.samples.size() == mus.size());

    const Vector& mu = mus[1];
    CHECK(nearest_sample_distance(model, mu) == 0.0);
    const ConstantBounds s = surrogate_bounds(bench.disc, model, mu);
    const ConstantBounds e = exact_bounds(bench.disc, mu);
    CHECK(s.mode == ConstantsMode::Surrogate);
    CHECK(s.alpha_lb <= e.alpha_lb * (1 + 1e-9));
    CHECK(s.gamma_ub >= e.gamma_ub * (1 - 1e-9));
    CHECK(s.beta_br_lb <= e.beta_br_lb * (1 + 1e-9));
    // at a training point the guards are exactly the safety factors
    CHECK(s.alpha_lb == doctest::Approx(model.safety_lb * e.alpha_lb).epsilon(1e-7));
    CHECK(s.gamma_ub == doctest::Approx(model.safety_ub * e.gamma_ub).epsilon(1e-7));
    CHECK(s.beta_br_lb == doctest::Approx(model.safety_lb * e.beta_br_lb).epsilon(1e-7));
}

TEST_CASE("nearest_sample_distance measures euclidean parameter distance") {
    const auto& bench = testsupport::tiny_bench();
    std::vector<Vector> mus;
    Vector a(2), b(2);
    a << 0.3, 0.3;
    b << 0.5, 0.5;
    mus = {a, b};
    const SurrogateModel model = build_surrogate(bench.disc, mus);
    Vector probe(2);
    probe << 0.3, 0.4;
    CHECK(nearest_sample_distance(model, probe) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("constants cache memoizes evaluations") {
    const auto& bench = testsupport::tiny_bench();
    ConstantsCache cache(bench.disc, ConstantsMode::Exact);
    Vector mu(2);
    mu << 0.42, 0.37;
    const ConstantBounds& first = cache.at(mu);
    CHECK(cache.entries().size() == 1);
    const ConstantBounds& again = cache.at(mu);
    CHECK(cache.entries().size() == 1);
    CHECK(&first == &again);

    // preloaded values win over recomputation
    Vector other(2);
    other << 0.5, 0.21;
    ConstantBounds fake;
    fake.alpha_lb = 123.0;
    cache.preload(other, fake);
    CHECK(cache.at(other).alpha_lb == 123.0);
}
