#include "aperture/error.hpp"
#include "aperture/expression.hpp"
#include "aperture/operators.hpp"
#include "aperture/symmetric_matrix.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace aperture;

namespace {

Eigen::MatrixXd to_eigen(const SymmetricMatrix& m) {
    Eigen::MatrixXd e(m.dim(), m.dim());
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) e(i, j) = m(i, j);
    return e;
}

// Pucci operators straight from the eigenvalues of an independent solver.
double pucci_plus_oracle(const SymmetricMatrix& m, double lambda, double Lambda) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i) {
        const double e = es.eigenvalues()(i);
        s += e > 0 ? Lambda * e : lambda * e;
    }
    return s;
}

}  // namespace

TEST_CASE("eigenvalues agree with a library eigen-solver") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 600; ++i) {
        const int d = 1 + i % 3;
        const auto m = random_symmetric(d, rng, 4.0);
        const auto ev = eigenvalues(m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
        for (int k = 0; k < d; ++k) CHECK(ev[k] == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-10).scale(4.0));
        const auto dec = eigen_decompose(m);
        for (int k = 0; k < d; ++k) {
            const SpatialVec mv = m.apply(dec.vectors[k]);
            for (int a = 0; a < d; ++a) CHECK(mv[a] == doctest::Approx(dec.values[k] * dec.vectors[k][a]).scale(4.0));
        }
        CHECK(operator_norm(m) == doctest::Approx(std::max(std::abs(ev[0]), std::abs(ev[d - 1]))));
        double tn = 0.0;
        for (int k = 0; k < d; ++k) tn += std::abs(ev[k]);
        CHECK(trace_norm(m) == doctest::Approx(tn));
    }
}

TEST_CASE("symmetric matrix construction rejects asymmetric input") {
    CHECK_THROWS_AS(SymmetricMatrix(2, {1.0, 2.0, 3.0, 4.0}), PreconditionError);
    const SymmetricMatrix m(2, {1.0, 2.0, 2.0, -3.0});
    CHECK(m.trace() == -2.0);
    CHECK(m.frobenius_inner(SymmetricMatrix::identity(2)) == -2.0);
    CHECK(m.quadratic_form({1.0, 1.0, 0.0}) == doctest::Approx(2.0));
}

TEST_CASE("Pucci operators on diagonal matrices by hand") {
    const auto pair = EllipticityPair::make(0.5, 2.0);
    const auto m = SymmetricMatrix::diagonal({3.0, -1.0, 0.0});
    CHECK(pucci_plus(m, pair) == doctest::Approx(2.0 * 3.0 + 0.5 * -1.0));
    CHECK(pucci_minus(m, pair) == doctest::Approx(0.5 * 3.0 + 2.0 * -1.0));
    CHECK(ellipticity_aperture(pair) == doctest::Approx(3.0));
}

TEST_CASE("Pucci operators match the eigen-solver oracle") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        const int d = 1 + i % 3;
        const auto m = random_symmetric(d, rng, 2.0);
        const auto pair = EllipticityPair::make(0.3, 1.7);
        CHECK(pucci_plus(m, pair) == doctest::Approx(pucci_plus_oracle(m, 0.3, 1.7)));
        CHECK(pucci_minus(m, pair) == doctest::Approx(-pucci_plus_oracle(m * -1.0, 0.3, 1.7)));
    }
}

TEST_CASE("Pucci plus is the sup of Tr(A M) over admissible A") {
    // Random A with spectrum in [lambda, Lambda] never beats M+.
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> in(0.5, 1.5);
    const auto pair = EllipticityPair::make(0.5, 1.5);
    for (int i = 0; i < 300; ++i) {
        const int d = 1 + i % 3;
        const auto m = random_symmetric(d, rng, 2.0);
        std::array<double, kMaxDim> spec{};
        for (int k = 0; k < d; ++k) spec[k] = in(rng);
        const auto a = from_spectrum(d, random_rotation(d, rng), spec);
        CHECK(a.frobenius_inner(m) <= pucci_plus(m, pair) + 1e-12);
        CHECK(a.frobenius_inner(m) >= pucci_minus(m, pair) - 1e-12);
    }
}

TEST_CASE("ellipticity pair validation") {
    CHECK_THROWS_AS(EllipticityPair::make(2.0, 1.0), ValidationError);
    CHECK_THROWS_AS(EllipticityPair::make(0.0, 1.0), ValidationError);
    try {
        EllipticityPair::make(2.0, 1.0);
    } catch (const ValidationError& e) {
        CHECK(e.code() == "ellipticity");
    }
    const auto p = EllipticityPair::from_aperture(2.0, 0.25);
    CHECK(p.Lambda == doctest::Approx(2.5));
}

TEST_CASE("Isaacs operator evaluates sup over beta of inf over gamma") {
    const auto pair = EllipticityPair::make(1.0, 3.0);
    auto constant = [](double a) { return [a](const SpatialVec&, double) { return SymmetricMatrix::identity(1, a); }; };
    auto offset = [](double c) { return [c](const SpatialVec&, double) { return c; }; };
    // Each pair contributes Tr(a M) - f.
    std::vector<std::vector<IsaacsPair>> fam{{{constant(1.0), offset(0.0)}, {constant(3.0), offset(-1.0)}},
                                             {{constant(2.0), offset(0.5)}, {constant(2.0), offset(1.0)}}};
    const auto F = OperatorSpec::isaacs(1, fam, pair);
    for (double m : {-2.0, -0.3, 0.0, 0.4, 1.0, 5.0}) {
        const double b0 = std::min(m, 3 * m + 1), b1 = std::min(2 * m - 0.5, 2 * m - 1);
        CHECK(F.evaluate({}, 0.0, SymmetricMatrix::identity(1, m)) == doctest::Approx(std::max(b0, b1)));
    }
    CHECK_THROWS_AS(OperatorSpec::isaacs(1, {}, pair), PreconditionError);
}

TEST_CASE("normalized p-Laplacian uses the supplied direction") {
    const auto F = OperatorSpec::plaplace(2, 3.0);
    const SymmetricMatrix m(2, {1.0, 0.5, 0.5, -2.0});
    const SpatialVec nu{3.0, 4.0, 0.0};  // normalized to (0.6, 0.8)
    const double expected = m.trace() + (3.0 - 2.0) * m.quadratic_form({0.6, 0.8, 0.0});
    CHECK(F.evaluate({}, 0.0, m, &nu) == doctest::Approx(expected));
    CHECK_THROWS_AS(F.evaluate({}, 0.0, m), PreconditionError);
    const auto pr = plaplace_pair(1.5);
    CHECK(pr.lambda == 0.5);
    CHECK(pr.Lambda == 1.0);
}

TEST_CASE("normalized operators vanish at the origin") {
    const auto pair = EllipticityPair::make(1.0, 2.0);
    LinearCoefficient lin{[](const SpatialVec&, double) { return SymmetricMatrix::identity(1, 1.5); },
                          [](const SpatialVec& x, double t) { return 2.0 + x[0] + t; }};
    const OperatorSpec F(1, lin, pair);
    const SymmetricMatrix zero(1);
    CHECK(F.evaluate({}, 0.0, zero) == doctest::Approx(2.0));
    const auto G = F.normalized();
    CHECK(G.evaluate({}, 0.0, zero) == doctest::Approx(0.0));
    CHECK(G.evaluate({0.5, 0, 0}, 0.0, zero) == doctest::Approx(0.5));
}

TEST_CASE("sampled ellipticity check catches an out-of-range coefficient") {
    const auto pair = EllipticityPair::make(1.0, 2.0);
    auto bad = OperatorSpec::linear(2, [](const SpatialVec&, double) { return SymmetricMatrix::diagonal({1.0, 3.0}); },
                                    pair);
    const auto samples = random_ellipticity_samples(2, 100, 1);
    CHECK_FALSE(check_uniform_ellipticity(bad, pair, samples).pass);
    auto good = OperatorSpec::linear(2, [](const SpatialVec&, double) { return SymmetricMatrix::diagonal({1.0, 2.0}); },
                                     pair);
    const auto rep = check_uniform_ellipticity(good, pair, samples);
    CHECK(rep.pass);
    CHECK(rep.min_ratio >= 1.0 - 1e-12);
    CHECK(rep.max_ratio <= 2.0 + 1e-12);

    EllipticitySample s;
    s.m = SymmetricMatrix(1);
    s.n = SymmetricMatrix::identity(1, -1.0);
    CHECK_THROWS_AS(check_uniform_ellipticity(OperatorSpec::pucci_plus(1, pair), pair, {s}), PreconditionError);
}

TEST_CASE("trace norm is the norm for which Pucci operators are elliptic") {
    // With N = I in d = 3: M+(N) = 3 Lambda = Lambda |N|_trace, while the
    // operator norm would give |N| = 1 and break the upper bound.
    const auto pair = EllipticityPair::make(1.0, 2.0);
    const auto n = SymmetricMatrix::identity(3);
    CHECK(pucci_plus(n, pair) == doctest::Approx(pair.Lambda * trace_norm(n)));
    CHECK(pucci_plus(n, pair) > pair.Lambda * operator_norm(n));
}

TEST_CASE("oscillation is zero for x-independent operators and grows with the sample count") {
    const auto pair = EllipticityPair::make(1.0, 2.0);
    const auto P = OperatorSpec::pucci_plus(2, pair);
    CHECK(oscillation(P, {}, 0.0, {0.5, 0.5, 0}, -0.2, 1.0, 50).value == 0.0);
    LinearCoefficient lin{[](const SpatialVec& x, double) { return SymmetricMatrix::diagonal({1.0 + 0.5 * x[0] * x[0], 1.0}); }, {}};
    const OperatorSpec F(2, lin, pair);
    double prev = 0.0;
    for (std::size_t n : {1u, 5u, 20u, 100u}) {
        const double v = oscillation(F, {}, 0.0, {1.0, 0, 0}, 0.0, 2.0, n).value;
        CHECK(v >= prev);
        prev = v;
    }
    // sup over |M| <= 2 of 0.5 |M_11| / (|M| + 1) is 0.5 * 2 / 3.
    CHECK(prev == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Cordes check: small aperture keeps a/lambda near the identity") {
    const MatrixField a = [](const SpatialVec& x, double) { return SymmetricMatrix::diagonal({1.0, 1.0 + 0.05 * (1 + x[0])}); };
    std::vector<std::pair<SpatialVec, double>> pts{{{-1, 0, 0}, 0.0}, {{0, 0, 0}, 0.0}, {{1, 0, 0}, 0.0}};
    const auto rep = cordes_check(a, 2, 1.0, 0.15, pts);
    CHECK(rep.applicable);
    CHECK(rep.pass);
    CHECK(rep.worst_deviation == doctest::Approx(0.1));
    const MatrixField low = [](const SpatialVec&, double) { return SymmetricMatrix::identity(2, 0.9); };
    CHECK_THROWS_AS(cordes_check(low, 2, 1.0, 0.1, pts), ValidationError);
}

TEST_CASE("expressions: grammar, precedence and errors") {
    const auto e = Expression::parse("2 + 3 * x1 ^ 2 - sin(pi * t) / 2", 1);
    CHECK(e({2.0, 0, 0}, 0.5) == doctest::Approx(2 + 12 - 0.5));
    CHECK(Expression::parse("-2^2", 1)({}, 0.0) == doctest::Approx(-4.0));
    CHECK(Expression::parse("max(x, y) + min(abs(z), 1) + sign(-3)", 3)({1, 2, -0.5}, 0) == doctest::Approx(1.5));
    CHECK(Expression::parse("exp(log(2)) + sqrt(16) + pow(2, 3) + cos(0)", 1)({}, 0) == doctest::Approx(15.0));
    CHECK(Expression::parse("4", 2).is_constant());
    CHECK_FALSE(Expression::parse("x1", 2).is_constant());
    CHECK_THROWS_AS(Expression::parse("x2", 1), ValidationError);
    CHECK_THROWS_AS(Expression::parse("1 +", 1), ValidationError);
    CHECK_THROWS_AS(Expression::parse("foo(1)", 1), ValidationError);
    CHECK_THROWS_AS(Expression::parse("(1", 1), ValidationError);
}

TEST_CASE("gridded tables interpolate multilinearly") {
    const std::string json = R"({"dim": 1, "axes": [[0, 1, 3]], "time": [-1, 1, 2], "values": [0, 1, 2, 10, 11, 12]})";
    const auto t = GriddedTable::from_json_text(json, 1);
    CHECK(t({0.25, 0, 0}, -1.0) == doctest::Approx(0.5));
    CHECK(t({0.5, 0, 0}, -0.5) == doctest::Approx(3.5));
    CHECK(t({2.0, 0, 0}, 1.0) == doctest::Approx(12.0));
    CHECK_THROWS_AS(GriddedTable::from_json_text(R"({"dim": 1})", 1), ValidationError);
    CHECK_THROWS_AS(GriddedTable::from_json_text(R"({"dim": 2, "axes": [[0,1,2]], "time": [0,1,2], "values": [1,2,3,4]})", 1),
                    ValidationError);
}
