#include "aperture/error.hpp"
#include "aperture/goodsets.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace aperture;

namespace {

SpaceTimeGrid small_grid(double h = 0.25, double dt = 1.0 / 16) {
    return SpaceTimeGrid::covering(Box{1, {Interval{-1, 1}}, Interval{-0.5, 0}}, h, dt);
}

template <class Fn>
double ternary_min(double lo, double hi, Fn&& f) {
    for (int i = 0; i < 120; ++i) {
        const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
        if (f(a) < f(b))
            hi = b;
        else
            lo = a;
    }
    return f(0.5 * (lo + hi));
}

// Opening needed from below for a fixed affine part, minimized over (B, C) by
// nested ternary search; the objective is a max of affine functions, hence convex.
double opening_oracle(const GridFunction& u, std::size_t p0, const std::vector<std::size_t>& domain, bool space_only) {
    const auto& g = u.grid();
    const Point q = g.point(p0);
    auto need = [&](double B, double C) {
        double m = 0.0;
        for (std::size_t n : domain) {
            if (n == p0) continue;
            const Point p = g.point(n);
            const double dx = p.x[0] - q.x[0], dt = p.t - q.t;
            m = std::max(m, (B * dx + C * dt - (u[n] - u[p0])) / (dx * dx + std::abs(dt)));
        }
        return m;
    };
    if (space_only) return ternary_min(-60, 60, [&](double B) { return need(B, 0.0); });
    return ternary_min(-60, 60, [&](double B) { return ternary_min(-60, 60, [&](double C) { return need(B, C); }); });
}

std::vector<std::size_t> every_node(const SpaceTimeGrid& g) {
    std::vector<std::size_t> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_CASE("minimal opening agrees with a nested ternary search") {
    const auto g = small_grid();
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u01(-1, 1);
    GridFunction u(g);
    for (std::size_t n = 0; n < g.size(); ++n) u[n] = u01(rng);
    const auto dom = every_node(g);
    TouchingOptions opt;
    opt.threads = 1;
    for (std::size_t p0 : {std::size_t{10}, std::size_t{40}, std::size_t{60}, g.size() - 5}) {
        for (bool space_only : {false, true}) {
            opt.space_only = space_only;
            const double oracle = opening_oracle(u, p0, dom, space_only);
            Paraboloid w;
            const double got = minimal_opening(u, p0, dom, false, opt, &w);
            CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
            // The witness touches at p0 and stays below u.
            const Point q = g.point(p0);
            CHECK(w({q.x[0], 0, 0}, q.t) == doctest::Approx(u[p0]));
            for (std::size_t n : dom) {
                const Point p = g.point(n);
                CHECK(w({p.x[0], 0, 0}, p.t) <= u[n] + 1e-9);
            }
            CHECK(touches_from_below(u, p0, got * (1 + 1e-9) + 1e-12, dom, opt));
            if (got > 1e-6) CHECK_FALSE(touches_from_below(u, p0, got * 0.99, dom, opt));
            // From above is from below for -u.
            CHECK(minimal_opening(u, p0, dom, true, opt) ==
                  doctest::Approx(minimal_opening(u.scaled(-1.0), p0, dom, false, opt)));
        }
    }
}

TEST_CASE("openings of affine and concave fields") {
    const auto g = small_grid();
    const auto dom = every_node(g);
    const auto affine = GridFunction::sample(g, [](const SpatialVec& x, double t) { return 1 + 2 * x[0] - 3 * t; });
    for (std::size_t p0 : {std::size_t{12}, std::size_t{50}}) {
        CHECK(minimal_opening(affine, p0, dom, false) == doctest::Approx(0.0).scale(1.0));
        CHECK(minimal_opening(affine, p0, dom, true) == doctest::Approx(0.0).scale(1.0));
    }
    // -x^2 needs opening 1 from below in space; with t-independence the time part costs nothing.
    const auto cap = GridFunction::sample(g, [](const SpatialVec& x, double) { return -x[0] * x[0]; });
    CHECK(minimal_opening(cap, g.node(3, g.spatial_index({4, 0, 0})), dom, false) == doctest::Approx(1.0));
    CHECK(minimal_opening(cap, g.node(3, g.spatial_index({4, 0, 0})), dom, true) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("opening tables, masks and the C^{1,1} bound") {
    const auto g = small_grid(0.125, 1.0 / 64);
    const auto u = GridFunction::sample(g, [](const SpatialVec& x, double t) { return x[0] * x[0] + 3 * t; });
    CHECK(c11_bound(u) == doctest::Approx(3.0));
    const ParabolicCube k{1, 0.5};
    const auto table = compute_openings(u, k);
    CHECK(table.nodes.size() == nodes_in(g, k).size());
    CHECK(table.domain_is_full_grid);
    const auto mask = mask_at(table, c11_bound(u));
    CHECK(mask.bad_measure == 0.0);
    CHECK(mask.good_measure == doctest::Approx(mask.cube_measure));
    CHECK_THROWS_AS(compute_openings(u, ParabolicCube{1, 2.0}), PreconditionError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> r(-1, 1);
    GridFunction noisy(g);
    for (std::size_t n = 0; n < g.size(); ++n) noisy[n] = r(rng);
    const auto t2 = compute_openings(noisy, k);
    double prev = 2.0;
    for (double M : {0.5, 2.0, 8.0, 32.0, 128.0}) {
        const auto m = mask_at(t2, M);
        CHECK(m.bad_measure / m.cube_measure <= prev);
        prev = m.bad_measure / m.cube_measure;
        for (std::size_t i = 0; i < m.nodes.size(); ++i) {
            CHECK((m.below[i] != 0) == (t2.below[i] <= M));
            CHECK((m.above[i] != 0) == (t2.above[i] <= M));
        }
    }
    CHECK(prev < 1.0);
}

TEST_CASE("run-length encoding") {
    const auto rl = run_length({1, 1, 0, 0, 0, 1});
    REQUIRE(rl.size() == 3);
    CHECK(rl[0] == std::pair<int, std::size_t>{1, 2});
    CHECK(rl[1] == std::pair<int, std::size_t>{0, 3});
    CHECK(rl[2] == std::pair<int, std::size_t>{1, 1});
    CHECK(run_length({}).empty());
}

TEST_CASE("A_M decay from raw measures") {
    const std::vector<double> M{1, 2, 4, 8};
    std::vector<double> meas;
    for (double m : M) meas.push_back(5.0 * std::pow(m, -2.0));
    const auto rep = a_decay(M, meas);
    CHECK_FALSE(rep.empty);
    CHECK(rep.delta == doctest::Approx(2.0));
    CHECK(a_decay(M, {0, 0, 0, 0}).empty);
}

TEST_CASE("alpha/beta sequences need a resolved K_1") {
    const auto coarse = SpaceTimeGrid::covering(Box{1, {Interval{-1, 1}}, Interval{-1, 0}}, 0.5, 0.25);
    const GridFunction u(coarse), f(coarse);
    try {
        alpha_beta_sequences(u, f, 2.0, 1.0, 0.5, 3, {0.25}, 1.0);
        FAIL("expected a resolution error");
    } catch (const PreconditionError& e) {
        CHECK(e.code() == "resolution");
    }
}

TEST_CASE("alpha/beta sequences on a smooth field vanish past the C^{1,1} bound") {
    const auto g = SpaceTimeGrid::covering(Box{1, {Interval{-1, 1}}, Interval{-1, 0}}, 0.125, 1.0 / 64);
    const auto u = GridFunction::sample(g, [](const SpatialVec& x, double t) { return x[0] * x[0] + 2 * t; });
    const GridFunction f(g);
    const auto rep = alpha_beta_sequences(u, f, 2.0, 1.0, 0.5, 4, {0.25}, 1.0);
    REQUIRE(rep.levels.size() == 4);
    for (const auto& lv : rep.levels) {
        CHECK(lv.beta == 0.0);
        if (std::pow(2.0, lv.k) >= c11_bound(u)) CHECK(lv.alpha == 0.0);
        CHECK(lv.recursion);
    }
    CHECK(rep.sum_beta == 0.0);
}

TEST_CASE("cell sets: indexing, boxes and measure") {
    CellSet s(1, 2);
    CHECK(s.size() == static_cast<std::size_t>(4 * 16));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.index(s.cell(i)) == i);
    CHECK(s.cell_measure() == doctest::Approx(0.5 * (1.0 / 16)));
    CHECK(s.insert_box(Box{1, {Interval{-1, 0}}, Interval{-1, -0.5}}));
    CHECK(s.count() == 2 * 8);
    CHECK(s.measure() == doctest::Approx(0.5));
    CHECK_FALSE(s.insert_box(Box{1, {Interval{0, 2}}, Interval{-1, -0.5}}));
    CHECK(s.count() == 16);
    CHECK(s.covers_box(Box{1, {Interval{-0.5, 0}}, Interval{-0.75, -0.5}}));
    CHECK_FALSE(s.covers_box(Box{1, {Interval{-0.5, 0.5}}, Interval{-0.75, -0.5}}));
    CellSet full(1, 2);
    full.insert_box(Box{1, {Interval{-1, 1}}, Interval{-1, 0}});
    CHECK(s.subset_of(full));
    CHECK_FALSE(full.subset_of(s));
    CHECK(full.count_in(DyadicCube::root(1)) == full.size());
    CHECK_THROWS_AS(CellSet(1, 7), PreconditionError);
}

TEST_CASE("covering lemma on a hand-built instance") {
    const int m = 2;
    const double rho = 0.5;
    // A single level-2 cell at the bottom of K_1, so its stack fits.
    DyadicCube parent = DyadicCube::root(1);
    for (const auto& c : DyadicCube::root(1).subdivide())
        if (c.bounds().t.lo == -1.0 && c.bounds().x[0].lo == -1.0) parent = c;
    DyadicCube cell = parent;
    for (const auto& c : parent.subdivide())
        if (c.bounds().t.lo == -1.0 && c.bounds().x[0].lo == -1.0) cell = c;
    REQUIRE(cell.level() == 2);

    CellSet a(1, 2), b(1, 2);
    a.insert(cell);
    b.insert(cell);
    REQUIRE(b.insert_box(cell.stack(m)));
    const auto rep = covering_lemma_verify(a, b, rho, m);
    CHECK(rep.hypothesis_i);
    CHECK(rep.hypothesis_ii);
    CHECK(rep.dense_cubes == 1);
    CHECK(rep.conclusion_checked);
    CHECK(rep.conclusion);
    CHECK(rep.bound == doctest::Approx(rho * (m + 1) / m * b.measure()));

    CellSet bare(1, 2);
    bare.insert(cell);
    CHECK_FALSE(covering_lemma_verify(a, bare, rho, m).hypothesis_ii);
    CHECK_THROWS_AS(covering_lemma_verify(b, a, rho, m), PreconditionError);
    CHECK_THROWS_AS(covering_lemma_verify(a, CellSet(1, 3), rho, m), PreconditionError);
}

TEST_CASE("random covering instances satisfy the hypotheses and the conclusion") {
    const auto inst = random_covering_instances(1, 3, 30, 9);
    CHECK(inst.size() == 30);
    for (const auto& in : inst) {
        const auto rep = covering_lemma_verify(in.a, in.b, in.rho, in.m);
        CHECK(rep.hypothesis_i);
        CHECK(rep.hypothesis_ii);
        CHECK(rep.conclusion);
        CHECK(rep.measure_a <= rep.bound + 1e-12);
    }
    const auto sweep = covering_lemma_sweep(1, 3, 30, 9);
    CHECK(sweep.passed == sweep.instances);
}
