#include "aperture/lp.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>

using namespace aperture;

namespace {

// Enumerates every vertex: n active constraints among the rows and box faces.
std::optional<double> vertex_oracle(const LinearProgram& lp) {
    const int n = lp.n;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < lp.rows(); ++r) {
        rows.emplace_back(lp.a.begin() + r * n, lp.a.begin() + (r + 1) * n);
        rhs.push_back(lp.b[r]);
    }
    for (int j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        rows.push_back(e);
        rhs.push_back(lp.hi[j]);
        e[j] = -1.0;
        rows.push_back(e);
        rhs.push_back(-lp.lo[j]);
    }
    const int m = static_cast<int>(rows.size());
    std::optional<double> best;
    std::vector<int> pick(n);
    std::function<void(int, int)> rec = [&](int k, int start) {
        if (k == n) {
            Eigen::MatrixXd A(n, n);
            Eigen::VectorXd b(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) A(i, j) = rows[pick[i]][j];
                b(i) = rhs[pick[i]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (!lu.isInvertible()) return;
            const Eigen::VectorXd x = lu.solve(b);
            for (int r = 0; r < m; ++r) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += rows[r][j] * x(j);
                if (s > rhs[r] + 1e-9) return;
            }
            double v = 0.0;
            for (int j = 0; j < n; ++j) v += lp.c[j] * x(j);
            if (!best || v > *best) best = v;
            return;
        }
        for (int i = start; i < m; ++i) {
            pick[k] = i;
            rec(k + 1, i + 1);
        }
    };
    rec(0, 0);
    return best;
}

LinearProgram random_lp(int n, int rows, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LinearProgram lp;
    lp.n = n;
    for (int j = 0; j < n; ++j) {
        lp.c.push_back(g(rng));
        lp.lo.push_back(-1.0 - 2 * u(rng));
        lp.hi.push_back(1.0 + 2 * u(rng));
    }
    for (int r = 0; r < rows; ++r) {
        std::vector<double> row(n);
        for (auto& v : row) v = g(rng);
        // Mostly feasible: rhs around zero, sometimes negative.
        lp.add_row(row, g(rng) * 0.7);
    }
    return lp;
}

}  // namespace

TEST_CASE("Seidel LP agrees with vertex enumeration on random programs") {
    std::mt19937_64 rng(17);
    int feasible = 0, infeasible = 0;
    for (int it = 0; it < 400; ++it) {
        const int n = 1 + it % 3;
        const int rows = 1 + static_cast<int>(rng() % 9);
        const auto lp = random_lp(n, rows, rng);
        const auto oracle = vertex_oracle(lp);
        const auto sol = solve_lp(lp, 1 + it);
        REQUIRE(sol.feasible == oracle.has_value());
        if (!oracle) {
            ++infeasible;
            continue;
        }
        ++feasible;
        CHECK(sol.value == doctest::Approx(*oracle).epsilon(1e-9).scale(1.0));
        for (std::size_t r = 0; r < lp.rows(); ++r) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += lp.a[r * n + j] * sol.x[j];
            CHECK(s <= lp.b[r] + 1e-9);
        }
        for (int j = 0; j < n; ++j) {
            CHECK(sol.x[j] >= lp.lo[j] - 1e-12);
            CHECK(sol.x[j] <= lp.hi[j] + 1e-12);
        }
    }
    CHECK(feasible > 50);
    CHECK(infeasible > 5);
}

TEST_CASE("hand-sized programs") {
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6 on [0,10]^2: vertex (1.6, 1.2).
    LinearProgram lp;
    lp.n = 2;
    lp.c = {1.0, 1.0};
    lp.lo = {0.0, 0.0};
    lp.hi = {10.0, 10.0};
    lp.add_row({1.0, 2.0}, 4.0);
    lp.add_row({3.0, 1.0}, 6.0);
    const auto s = solve_lp(lp);
    REQUIRE(s.feasible);
    CHECK(s.x[0] == doctest::Approx(1.6));
    CHECK(s.x[1] == doctest::Approx(1.2));
    CHECK(s.value == doctest::Approx(2.8));

    // Contradictory rows.
    LinearProgram bad;
    bad.n = 1;
    bad.c = {1.0};
    bad.lo = {-5.0};
    bad.hi = {5.0};
    bad.add_row({1.0}, -1.0);
    bad.add_row({-1.0}, -1.0);
    CHECK_FALSE(solve_lp(bad).feasible);

    // No rows: the box corner.
    LinearProgram box;
    box.n = 3;
    box.c = {1.0, -1.0, 0.5};
    box.lo = {-1.0, -2.0, -3.0};
    box.hi = {1.0, 2.0, 3.0};
    CHECK(solve_lp(box).value == doctest::Approx(1.0 + 2.0 + 1.5));
}

TEST_CASE("result does not depend on the seed") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 50; ++it) {
        const auto lp = random_lp(3, 12, rng);
        const auto a = solve_lp(lp, 1), b = solve_lp(lp, 99);
        REQUIRE(a.feasible == b.feasible);
        if (a.feasible) CHECK(a.value == doctest::Approx(b.value));
    }
}

TEST_CASE("many redundant rows in four variables") {
    // Rows x.v <= 1 for unit v on a sphere sample: the max of c.x is close to |c|.
    std::mt19937_64 rng(29);
    std::normal_distribution<double> g;
    LinearProgram lp;
    lp.n = 4;
    lp.c = {0.5, -0.5, 0.5, 0.5};
    lp.lo.assign(4, -10.0);
    lp.hi.assign(4, 10.0);
    for (int r = 0; r < 3000; ++r) {
        std::vector<double> v(4);
        double nrm = 0.0;
        for (auto& x : v) {
            x = g(rng);
            nrm += x * x;
        }
        for (auto& x : v) x /= std::sqrt(nrm);
        lp.add_row(v, 1.0);
    }
    lp.add_row({0.5, -0.5, 0.5, 0.5}, 1.0);
    const auto s = solve_lp(lp);
    REQUIRE(s.feasible);
    CHECK(s.value == doctest::Approx(1.0));
}
