#include "aperture/error.hpp"
#include "aperture/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace aperture;

namespace {

const ScalarField zero = [](const SpatialVec&, double) { return 0.0; };

double max_error(const GridFunction& u, const ScalarField& exact) {
    double e = 0.0;
    const auto& g = u.grid();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Point p = g.point(n);
        e = std::max(e, std::abs(u[n] - exact({p.x[0], p.x[1], p.x[2]}, p.t)));
    }
    return e;
}

}  // namespace

TEST_CASE("CFL limit and refusal") {
    CHECK(cfl_limit(0.1, 2, 3.0) == doctest::Approx(0.01 / 12.0));
    const Box dom{2, {Interval{-1, 1}, Interval{-1, 1}}, Interval{-0.5, 0.0}};
    ProblemSpec spec{OperatorSpec::pucci_minus(2, EllipticityPair::make(0.5, 3.0)), zero, zero, dom, std::nullopt};
    const auto grid = SpaceTimeGrid::covering(dom, 0.25, 0.5);
    std::vector<double> a(grid.spatial_size(), 0.0), out(a.size());
    const double lim = cfl_limit(0.25, 2, 3.0);
    CHECK_NOTHROW(step(spec, grid, a, -0.5, lim, out));
    CHECK_THROWS_AS(step(spec, grid, a, -0.5, lim * 1.001, out), CflError);
    SchemeConfig cfg;
    cfg.h = 0.25;
    cfg.dt = lim * 2;
    CHECK_THROWS_AS(solve(spec, cfg), CflError);
}

TEST_CASE("discrete derivatives are exact on quadratics") {
    const Box dom{3, {Interval{-1, 1}, Interval{-1, 1}, Interval{-1, 1}}, Interval{-1, 0}};
    const auto g = SpaceTimeGrid::covering(dom, 0.25, 1.0);
    // q = x^T A x / 2 + b.x with A = [[2,1,0],[1,-3,0.5],[0,0.5,1]].
    const auto q = GridFunction::sample(g, [](const SpatialVec& x, double) {
        return 0.5 * (2 * x[0] * x[0] - 3 * x[1] * x[1] + x[2] * x[2]) + x[0] * x[1] + 0.5 * x[1] * x[2] + 0.3 * x[0] -
               x[2];
    });
    const std::size_t s = g.spatial_index({3, 5, 2});
    const auto hess = discrete_hessian(q, g.node(1, s));
    const double expect[3][3] = {{2, 1, 0}, {1, -3, 0.5}, {0, 0.5, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(hess(i, j) == doctest::Approx(expect[i][j]).scale(1.0));
    const auto grad = discrete_gradient(g, q.slice(1), s);
    const Point p = g.point(g.node(1, s));
    CHECK(grad[0] == doctest::Approx(2 * p.x[0] + p.x[1] + 0.3));
    CHECK(grad[1] == doctest::Approx(p.x[0] - 3 * p.x[1] + 0.5 * p.x[2]));
    CHECK(grad[2] == doctest::Approx(0.5 * p.x[1] + p.x[2] - 1));
    CHECK_THROWS_AS(discrete_hessian(q, g.node(1, 0)), PreconditionError);
}

TEST_CASE("Pucci problems with quadratic solutions are solved to rounding") {
    // u = x^2 - y^2 + c t with M+(diag(2,-2)) = 2 Lambda - 2 lambda and
    // M-(diag(2,-2)) = 2 lambda - 2 Lambda. The scheme is exact on quadratics.
    const auto pair = EllipticityPair::make(1.0, 2.5);
    const Box dom{2, {Interval{-1, 1}, Interval{-1, 1}}, Interval{-0.25, 0.0}};
    for (bool plus : {true, false}) {
        const double c = plus ? 3.0 : -3.0;
        const ScalarField exact = [c](const SpatialVec& x, double t) { return x[0] * x[0] - x[1] * x[1] + c * t; };
        ProblemSpec spec{plus ? OperatorSpec::pucci_plus(2, pair) : OperatorSpec::pucci_minus(2, pair), zero, exact, dom,
                         std::nullopt};
        SchemeConfig cfg;
        cfg.h = 1.0 / 8;
        const auto sol = solve(spec, cfg);
        CHECK(max_error(sol.u, exact) < 1e-12);
        CHECK(sol.residual.lower < 1e-9);
        CHECK(sol.residual.upper < 1e-9);
    }
}

TEST_CASE("heat equation in two dimensions converges at second order") {
    const ScalarField exact = [](const SpatialVec& x, double t) {
        return std::exp(-2 * M_PI * M_PI * t) * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
    };
    auto err = [&](double h) {
        ProblemSpec spec{OperatorSpec::scaled_trace(2, 1.0), zero, exact,
                         Box{2, {Interval{0, 1}, Interval{0, 1}}, Interval{-0.125, 0.0}}, std::nullopt};
        SchemeConfig cfg;
        cfg.h = h;
        cfg.dt = h * h / 8;
        cfg.store_levels = 3;
        const auto sol = solve(spec, cfg);
        CHECK(sol.u.grid().n_t() == 3);
        return max_error(sol.u, exact);
    };
    const double ratio = err(1.0 / 8) / err(1.0 / 16);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("sources enter with the expected sign") {
    // d_t u - Lap u = f with u = t x^2: f = x^2 - 2t.
    const ScalarField exact = [](const SpatialVec& x, double t) { return t * x[0] * x[0]; };
    ProblemSpec spec{OperatorSpec::scaled_trace(1, 1.0), [](const SpatialVec& x, double t) { return x[0] * x[0] - 2 * t; },
                     exact, Box{1, {Interval{-1, 1}}, Interval{-0.5, 0.0}}, std::nullopt};
    SchemeConfig cfg;
    cfg.h = 1.0 / 16;
    // Exact in space; forward Euler is exact for linear-in-t right-hand sides only up to O(dt).
    CHECK(max_error(solve(spec, cfg).u, exact) < 1e-3);
}

TEST_CASE("maximum principle holds for nonpositive sources and is skipped otherwise") {
    const auto pair = EllipticityPair::make(1.0, 2.0);
    const Box dom{1, {Interval{-1, 1}}, Interval{-0.5, 0.0}};
    const ScalarField g = [](const SpatialVec& x, double t) { return std::cos(2 * x[0]) + t; };
    ProblemSpec cold{OperatorSpec::pucci_plus(1, pair), [](const SpatialVec& x, double) { return -x[0] * x[0]; }, g, dom,
                     std::nullopt};
    SchemeConfig cfg;
    cfg.h = 1.0 / 16;
    auto rep = maximum_principle_check(solve(cold, cfg));
    CHECK(rep.applicable);
    CHECK(rep.pass);
    CHECK(rep.interior_sup <= rep.boundary_sup + 1e-12);

    ProblemSpec hot = cold;
    hot.source = [](const SpatialVec&, double) { return 5.0; };
    rep = maximum_principle_check(solve(hot, cfg));
    CHECK_FALSE(rep.applicable);
    CHECK(rep.excess > 0.0);
    CHECK(rep.excess_ratio > 0.0);
}

TEST_CASE("normalization: operator and source vanish at the origin") {
    const auto pair = EllipticityPair::make(1.0, 2.0);
    LinearCoefficient lin{[](const SpatialVec&, double) { return SymmetricMatrix::identity(1, 1.5); },
                          [](const SpatialVec& x, double) { return -0.4 + x[0]; }};
    ProblemSpec spec{OperatorSpec(1, lin, pair), [](const SpatialVec& x, double t) { return 2.0 + x[0] - t; },
                     [](const SpatialVec& x, double) { return x[0]; }, Box{1, {Interval{-1, 1}}, Interval{-0.25, 0.0}},
                     std::nullopt};
    double c = 0.0;
    const auto n = normalize_problem(spec, &c);
    // F0 = -0.4, f(0,0) = 2, c = 1.6.
    CHECK(c == doctest::Approx(1.6));
    CHECK(n.op.evaluate({}, 0.0, SymmetricMatrix(1)) == doctest::Approx(0.0));
    CHECK(n.source({}, 0.0) == doctest::Approx(0.0));
    CHECK(n.boundary({0.5, 0, 0}, -0.1) == doctest::Approx(0.5 + 0.16));
}

TEST_CASE("ball domains mark outside nodes as boundary") {
    const Box dom{2, {Interval{-1, 1}, Interval{-1, 1}}, Interval{-0.25, 0.0}};
    ProblemSpec spec{OperatorSpec::scaled_trace(2, 1.0), zero, zero, dom,
                     ParabolicCylinder{Point::make({0.0, 0.0}, 0.0), 0.6}};
    const auto g = SpaceTimeGrid::covering(dom, 0.25, 0.25);
    const auto mask = boundary_mask(spec, g);
    for (std::size_t s = 0; s < g.spatial_size(); ++s) {
        const auto idx = g.spatial_multi_index(s);
        const double r = std::hypot(g.coord(0, idx[0]), g.coord(1, idx[1]));
        CHECK((mask[s] != 0) == (r >= 0.6 - 1e-12));
    }
}

TEST_CASE("non-finite data is reported as a numeric error") {
    ProblemSpec spec{OperatorSpec::scaled_trace(1, 1.0), [](const SpatialVec&, double) { return std::nan(""); }, zero,
                     Box{1, {Interval{-1, 1}}, Interval{-0.25, 0.0}}, std::nullopt};
    SchemeConfig cfg;
    cfg.h = 0.25;
    CHECK_THROWS_AS(solve(spec, cfg), NumericError);
}

TEST_CASE("caloric derivative ratios on x^2 + 2t") {
    const Box dom{1, {Interval{-1, 1}}, Interval{-1, 0}};
    const auto g = SpaceTimeGrid::covering(dom, 1.0 / 32, 1.0 / 1024);
    const auto h = GridFunction::sample(g, [](const SpatialVec& x, double t) { return x[0] * x[0] + 2 * t; });
    // d_t h = 2; Q_R excludes t = -R^2, so the sup over its nodes is 2 (R^2 - dt).
    const auto rep = caloric_derivative_check(h, {0.25, 0.5, 0.75}, 1, {0, 0, 0});
    CHECK(rep.pass);
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        const double r = rep.radii[i];
        CHECK(rep.ratios[i] == doctest::Approx(r * r / (r * r - g.dt())).epsilon(1e-9));
    }
    const auto not_caloric = GridFunction::sample(g, [](const SpatialVec& x, double) { return x[0] * x[0]; });
    CHECK_THROWS_AS(caloric_derivative_check(not_caloric, {0.5}, 0, {2, 0, 0}), PreconditionError);
}
