#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rbsaddle/affine.hpp"
#include "test_support.hpp"

using namespace rbs;

namespace {

ParameterDomain unit_box(Index n) {
    ParameterDomain d;
    d.lower = Vector::Zero(n);
    d.upper = Vector::Ones(n) * 10.0;
    return d;
}

SparseMatrix sparse_id(Index n) {
    SparseMatrix s(n, n);
    s.setIdentity();
    return s;
}

} // namespace

TEST_CASE("parameter domain membership") {
    const ParameterDomain d = testsupport::tiny_geometry().domain();
    Vector inside(2), outside(2);
    inside << 0.3, 0.5;
    outside << 0.1, 0.5;
    CHECK(d.contains(inside));
    CHECK(!d.contains(outside));
    CHECK_THROWS_AS(d.require(outside), OutOfDomain);
    CHECK(d.center()[0] == doctest::Approx(0.4));
    CHECK(d.center()[1] == doctest::Approx(0.4));
}

TEST_CASE("theta evaluation: constants and coordinate ratios") {
    const auto one = ThetaExpr::constant(1.0);
    const auto ratio = ThetaExpr::div(ThetaExpr::coord(0), ThetaExpr::coord(1));
    Vector mu(2);
    mu << 2, 4;
    CHECK(one->eval(mu) == 1.0);
    CHECK(ratio->eval(mu) == doctest::Approx(0.5));
}

TEST_CASE("theta serialization round-trips including operand order") {
    const auto expr = ThetaExpr::div(
        ThetaExpr::sub(ThetaExpr::constant(1.0), ThetaExpr::coord(0)),
        ThetaExpr::mul(ThetaExpr::constant(1.5), ThetaExpr::coord(1)));
    const std::string text = expr->serialize();
    const auto parsed = ThetaExpr::parse(text);
    CHECK(parsed->serialize() == text);
    Vector mu(2);
    mu << 0.25, 2.0;
    // operand order matters for '-' and '/': (1 - 0.25) / (1.5 * 2) = 0.25
    CHECK(expr->eval(mu) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(parsed->eval(mu) == expr->eval(mu));
}

TEST_CASE("theta parse rejects malformed input") {
    CHECK_THROWS_AS(ThetaExpr::parse("(+ (c 1)"), Error);
    CHECK_THROWS_AS(ThetaExpr::parse("(? (c 1) (c 2))"), Error);
    CHECK_THROWS_AS(ThetaExpr::parse("(c 1) junk"), Error);
}

TEST_CASE("eval_thetas validates the parameter and returns finite coefficients") {
    AffineMatrix dec;
    dec.thetas = {ThetaExpr::constant(1.0),
                  ThetaExpr::div(ThetaExpr::coord(0), ThetaExpr::coord(1))};
    dec.terms = {sparse_id(3), sparse_id(3)};
    const ParameterDomain d = unit_box(2);
    Vector mu(2);
    mu << 2, 4;
    const Vector coeffs = eval_thetas(dec, d, mu);
    CHECK(coeffs[0] == 1.0);
    CHECK(coeffs[1] == doctest::Approx(0.5));
    Vector bad(2);
    bad << -1, 1;
    CHECK_THROWS_AS(eval_thetas(dec, d, bad), OutOfDomain);
}

TEST_CASE("assemble_at: single term, cancellation, and symmetry preservation") {
    const ParameterDomain d = unit_box(1);
    Vector mu(1);
    mu << 1.0;

    AffineMatrix one_term;
    one_term.thetas = {ThetaExpr::constant(1.0)};
    one_term.terms = {sparse_id(4)};
    const SparseMatrix got = assemble_at(one_term, d, mu);
    CHECK((DenseMatrix(got) - DenseMatrix::Identity(4, 4)).norm() == 0.0);

    AffineMatrix cancel;
    cancel.thetas = {ThetaExpr::constant(1.0), ThetaExpr::constant(-1.0)};
    cancel.terms = {sparse_id(4), sparse_id(4)};
    CHECK(DenseMatrix(assemble_at(cancel, d, mu)).norm() == 0.0);

    const auto& bench = testsupport::tiny_bench();
    Vector mu2(2);
    mu2 << 0.33, 0.52;
    CHECK(is_symmetric(assemble_at(bench.disc.a, bench.disc.domain, mu2)));
}

TEST_CASE("benchmark thetas at the reference parameter equal one") {
    // at the domain center the geometric map is the identity, so every
    // scaling coefficient reduces to 1 (independent symbolic evaluation)
    const auto& bench = testsupport::tiny_bench();
    const Vector mu = bench.geometry.reference_mu();
    const Vector ta = eval_thetas(bench.disc.a, bench.disc.domain, mu);
    const Vector tb = eval_thetas(bench.disc.b, bench.disc.domain, mu);
    for (Index q = 0; q < ta.size(); ++q) CHECK(ta[q] == doctest::Approx(1.0).epsilon(1e-14));
    for (Index q = 0; q < tb.size(); ++q) CHECK(tb[q] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("benchmark thetas match a by-hand oracle away from the center") {
    // hand evaluation of the band scale factors against the geometry:
    // obstacle x-band stretches by sx_ob = mu0/0.4, the side bands between the
    // fixed mesh and the obstacle by sx_lr = (1 - mu0)/0.6, the y-band below
    // the obstacle top by sy_lo = mu1/0.4 and the band above by
    // sy_hi = (1 - mu1)/0.6. The fluid occupies five (sx, sy) groups; viscous
    // thetas are sy/sx and sx/sy per group, divergence thetas are sy and sx.
    const auto& bench = testsupport::tiny_bench();
    Vector mu(2);
    mu << 0.5, 0.3;
    const double sx_ob = 0.5 / 0.4;
    const double sx_lr = (1.0 - 0.5) / 0.6;
    const double sy_lo = 0.3 / 0.4;
    const double sy_hi = (1.0 - 0.3) / 0.6;

    const Vector ta = eval_thetas(bench.disc.a, bench.disc.domain, mu);
    const Vector tb = eval_thetas(bench.disc.b, bench.disc.domain, mu);
    CHECK(ta.size() == 10);
    CHECK(tb.size() == 10);
    const std::vector<std::pair<double, double>> groups = {
        {1.0, sy_lo}, {1.0, sy_hi}, {sx_lr, sy_lo}, {sx_lr, sy_hi}, {sx_ob, sy_hi}};
    auto appears = [](const Vector& vals, double e) {
        for (Index q = 0; q < vals.size(); ++q)
            if (std::abs(vals[q] - e) <= 1e-14 * std::abs(e)) return true;
        return false;
    };
    for (const auto& [sx, sy] : groups) {
        CHECK_MESSAGE(appears(ta, sy / sx), "missing viscous theta ", sy / sx);
        CHECK_MESSAGE(appears(ta, sx / sy), "missing viscous theta ", sx / sy);
        CHECK_MESSAGE(appears(tb, sy), "missing divergence theta ", sy);
        CHECK_MESSAGE(appears(tb, sx), "missing divergence theta ", sx);
    }
}
