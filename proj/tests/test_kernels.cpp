#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rbsaddle/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <random>

using namespace rbs;

namespace {

SparseMatrix sparse_from(const DenseMatrix& d) {
    std::vector<Triplet> trips;
    for (Index i = 0; i < d.rows(); ++i)
        for (Index j = 0; j < d.cols(); ++j)
            if (d(i, j) != 0.0) trips.emplace_back(i, j, d(i, j));
    SparseMatrix s(d.rows(), d.cols());
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
}

DenseMatrix random_spd(Index n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = dist(gen);
    return m.transpose() * m + DenseMatrix::Identity(n, n);
}

DenseMatrix random_symmetric(Index n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = dist(gen);
    return 0.5 * (m + m.transpose());
}

} // namespace

TEST_CASE("solve_spd identity and diagonal cases") {
    DenseMatrix id = DenseMatrix::Identity(3, 3);
    Vector rhs(3);
    rhs << 1, 2, 3;
    CHECK((solve_spd(sparse_from(id), rhs) - rhs).norm() == doctest::Approx(0.0).epsilon(1e-14));

    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 4;
    Vector r2(2);
    r2 << 2, 4;
    const Vector x = solve_spd(sparse_from(d), r2);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("solve_spd matches a dense factorization oracle on random SPD systems") {
    const DenseMatrix m = random_spd(20, 42);
    std::mt19937_64 gen(7);
    std::normal_distribution<double> dist;
    Vector rhs(20);
    for (Index i = 0; i < 20; ++i) rhs[i] = dist(gen);
    const Vector x = solve_spd(sparse_from(m), rhs);
    const Vector oracle = m.fullPivLu().solve(rhs); // dense Gaussian elimination
    CHECK((x - oracle).norm() <= 1e-10 * oracle.norm());
    CHECK((m * x - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("solve_spd rejects indefinite matrices") {
    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = -1;
    Vector rhs = Vector::Ones(2);
    CHECK_THROWS_AS(solve_spd(sparse_from(d), rhs), NotSPD);
}

TEST_CASE("solve_saddle 3x3 dense oracle") {
    const SparseMatrix a = sparse_from(DenseMatrix::Identity(2, 2));
    DenseMatrix bd(1, 2);
    bd << 1, 0;
    Vector f(2), g(1);
    f << 1, 1;
    g << 0;
    const auto [u, p] = solve_saddle(a, sparse_from(bd), f, g);
    CHECK(u[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_saddle recovers a manufactured solution") {
    const DenseMatrix ad = random_spd(8, 3);
    DenseMatrix bd(3, 8);
    std::mt19937_64 gen(11);
    std::normal_distribution<double> dist;
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 8; ++j) bd(i, j) = dist(gen);
    Vector u_star(8), p_star(3);
    for (Index i = 0; i < 8; ++i) u_star[i] = dist(gen);
    for (Index i = 0; i < 3; ++i) p_star[i] = dist(gen);
    const Vector f = ad * u_star + bd.transpose() * p_star;
    const Vector g = bd * u_star;
    const auto [u, p] = solve_saddle(sparse_from(ad), sparse_from(bd), f, g);
    CHECK((u - u_star).norm() <= 1e-9 * u_star.norm());
    CHECK((p - p_star).norm() <= 1e-9 * p_star.norm());
}

TEST_CASE("solve_saddle flags a rank-deficient constraint block") {
    const SparseMatrix a = sparse_from(DenseMatrix::Identity(3, 3));
    DenseMatrix bd = DenseMatrix::Zero(2, 3);
    bd(0, 0) = 1; // second row is zero
    Vector f = Vector::Ones(3), g = Vector::Zero(2);
    CHECK_THROWS_AS(solve_saddle(a, sparse_from(bd), f, g), SingularSystem);
}

TEST_CASE("solve_saddle agrees with dense block elimination") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const Index nu = 40, np = 12;
        const DenseMatrix ad = random_spd(nu, seed);
        std::mt19937_64 gen(seed + 100);
        std::normal_distribution<double> dist;
        DenseMatrix bd(np, nu);
        for (Index i = 0; i < np; ++i)
            for (Index j = 0; j < nu; ++j) bd(i, j) = dist(gen);
        Vector f(nu), g(np);
        for (Index i = 0; i < nu; ++i) f[i] = dist(gen);
        for (Index i = 0; i < np; ++i) g[i] = dist(gen);

        DenseMatrix K = DenseMatrix::Zero(nu + np, nu + np);
        K.topLeftCorner(nu, nu) = ad;
        K.block(nu, 0, np, nu) = bd;
        K.block(0, nu, nu, np) = bd.transpose();
        Vector rhs(nu + np);
        rhs.head(nu) = f;
        rhs.tail(np) = g;
        const Vector oracle = K.fullPivLu().solve(rhs);

        const auto [u, p] = solve_saddle(sparse_from(ad), sparse_from(bd), f, g);
        CHECK((u - oracle.head(nu)).norm() <= 1e-9 * oracle.norm());
        CHECK((p - oracle.tail(np)).norm() <= 1e-9 * oracle.norm());
    }
}

TEST_CASE("eig_extreme on trivial pencils") {
    DenseMatrix m = DenseMatrix::Zero(2, 2);
    m(0, 0) = 1;
    m(1, 1) = 5;
    const SparseMatrix G = sparse_from(DenseMatrix::Identity(2, 2));
    CHECK(eig_extreme(sparse_from(m), G, EigWhich::Min).value == doctest::Approx(1.0));
    CHECK(eig_extreme(sparse_from(m), G, EigWhich::Max).value == doctest::Approx(5.0));

    const SparseMatrix spd = sparse_from(random_spd(6, 9));
    CHECK(eig_extreme(spd, spd, EigWhich::Min).value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig_extreme(spd, spd, EigWhich::Max).value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("eig_extreme matches a dense full-spectrum oracle") {
    const DenseMatrix m = random_symmetric(30, 5);
    const DenseMatrix g = random_spd(30, 6);
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(m, g);
    const double lo = es.eigenvalues()[0];
    const double hi = es.eigenvalues()[29];

    const EigenResult rmin = eig_extreme(sparse_from(m), sparse_from(g), EigWhich::Min);
    const EigenResult rmax = eig_extreme(sparse_from(m), sparse_from(g), EigWhich::Max);
    CHECK(rmin.value == doctest::Approx(lo).epsilon(1e-8));
    CHECK(rmax.value == doctest::Approx(hi).epsilon(1e-8));
}

TEST_CASE("eig_extreme iterative path matches the dense oracle") {
    // force the Lanczos route by lowering the dense threshold
    const Index n = 150;
    DenseMatrix m = DenseMatrix::Zero(n, n);
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> dist(1.0, 2.0);
    for (Index i = 0; i < n; ++i) m(i, i) = dist(gen);
    m(0, 0) = 0.1;     // isolated minimum
    m(n - 1, n - 1) = 5.0; // isolated maximum
    const DenseMatrix g = random_spd(n, 18);

    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(m, g);
    EigOptions opts;
    opts.dense_threshold = 0;
    const EigenResult rmin = eig_extreme(sparse_from(m), sparse_from(g), EigWhich::Min, opts);
    const EigenResult rmax = eig_extreme(sparse_from(m), sparse_from(g), EigWhich::Max, opts);
    CHECK(rmin.value == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-8));
    CHECK(rmax.value == doctest::Approx(es.eigenvalues()[n - 1]).epsilon(1e-8));
    CHECK(rmin.residual_norm <= 1e-8);
    CHECK(rmax.residual_norm <= 1e-8);
}

TEST_CASE("eig_extreme brackets the Rayleigh quotient of random vectors") {
    const DenseMatrix m = random_symmetric(25, 21);
    const DenseMatrix g = random_spd(25, 22);
    const double lo = eig_extreme(sparse_from(m), sparse_from(g), EigWhich::Min).value;
    const double hi = eig_extreme(sparse_from(m), sparse_from(g), EigWhich::Max).value;

    std::mt19937_64 gen(23);
    std::normal_distribution<double> dist;
    for (int k = 0; k < 100; ++k) {
        Vector v(25);
        for (Index i = 0; i < 25; ++i) v[i] = dist(gen);
        const double rq = v.dot(m * v) / v.dot(g * v);
        const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
        CHECK(rq >= lo - 1e-8 * scale);
        CHECK(rq <= hi + 1e-8 * scale);
    }
}

TEST_CASE("seeded starting vectors make the iterative solver reproducible") {
    const Vector a = seeded_vector(64, 12345);
    const Vector b = seeded_vector(64, 12345);
    CHECK((a - b).norm() == 0.0);
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
}
