#include "aperture/lp.hpp"

#include "aperture/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace aperture {

void LinearProgram::add_row(const std::vector<double>& row, double rhs) {
    if (static_cast<int>(row.size()) != n) throw PreconditionError("dimension", "LP row has the wrong length");
    a.insert(a.end(), row.begin(), row.end());
    b.push_back(rhs);
}

namespace {

constexpr double kTol = 1e-11;
constexpr int kMaxVars = 16;

struct Sub {
    int n;
    std::vector<double> c;
    std::vector<double> a;  // rows x n, already in processing order
    std::vector<double> b;
    std::vector<double> lo, hi;
};

double row_dot(const double* row, const std::vector<double>& x, int n) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
    return s;
}

double row_scale(const double* row, const std::vector<double>& x, int n, double rhs) {
    double s = std::abs(rhs);
    for (int j = 0; j < n; ++j) s += std::abs(row[j] * x[static_cast<std::size_t>(j)]);
    return std::max(s, 1.0);
}

/// Scratch storage per recursion depth, reused across violations.
struct Workspace {
    std::vector<Sub> subs;
    std::vector<std::vector<double>> ys;
};

bool solve(const Sub& p, std::vector<double>& x, Workspace& ws, std::size_t depth) {
    const int n = p.n;
    const std::size_t m = p.b.size();
    if (n == 0) {
        for (std::size_t r = 0; r < m; ++r)
            if (p.b[r] < -1e-9 * std::max(1.0, std::abs(p.b[r]))) return false;
        x.clear();
        return true;
    }
    x.assign(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        if (p.lo[j] > p.hi[j]) return false;
        x[j] = p.c[j] > 0.0 ? p.hi[j] : (p.c[j] < 0.0 ? p.lo[j] : p.lo[j]);
    }

    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = &p.a[i * n];
        const double lhs = row_dot(ai, x, n);
        if (lhs <= p.b[i] + kTol * row_scale(ai, x, n, p.b[i])) continue;

        int k = 0;
        for (int j = 1; j < n; ++j)
            if (std::abs(ai[j]) > std::abs(ai[k])) k = j;
        double amax = 0.0;
        for (int j = 0; j < n; ++j) amax = std::max(amax, std::abs(ai[j]));
        if (amax <= 1e-14 * std::max(1.0, std::abs(p.b[i]))) {
            if (p.b[i] < -1e-9 * std::max(1.0, std::abs(p.b[i]))) return false;
            continue;
        }

        // x_k = (b_i - sum_{j != k} a_ij x_j) / a_ik
        const double aik = ai[k];
        Sub& q = ws.subs[depth];
        q.n = n - 1;
        const std::size_t rows = i + 2;
        q.a.resize(rows * static_cast<std::size_t>(q.n));
        q.b.resize(rows);
        double* qa = q.a.data();
        double* qb = q.b.data();
        auto reduce = [&](const double* row, double rhs) {
            const double f = row[k] / aik;
            for (int j = 0; j < n; ++j)
                if (j != k) *qa++ = row[j] - f * ai[j];
            *qb++ = rhs - f * p.b[i];
        };
        // Bounds of the eliminated variable come first: they keep the
        // subproblem's optimum where it belongs and are cheap to satisfy.
        {
            double unit[kMaxVars] = {};
            unit[k] = 1.0;
            reduce(unit, p.hi[k]);
            unit[k] = -1.0;
            reduce(unit, -p.lo[k]);
        }
        for (std::size_t r = 0; r < i; ++r) reduce(&p.a[r * n], p.b[r]);
        q.c.clear();
        q.lo.clear();
        q.hi.clear();
        for (int j = 0; j < n; ++j) {
            if (j == k) continue;
            q.c.push_back(p.c[j] - p.c[k] * ai[j] / aik);
            q.lo.push_back(p.lo[j]);
            q.hi.push_back(p.hi[j]);
        }
        std::vector<double>& y = ws.ys[depth];
        if (!solve(q, y, ws, depth + 1)) return false;
        double s = p.b[i];
        int t = 0;
        for (int j = 0; j < n; ++j) {
            if (j == k) continue;
            x[j] = y[static_cast<std::size_t>(t++)];
            s -= ai[j] * x[j];
        }
        x[k] = std::clamp(s / aik, p.lo[k], p.hi[k]);
    }
    return true;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, std::uint64_t seed) {
    const int n = lp.n;
    if (n < 1 || n > kMaxVars) throw PreconditionError("dimension", "LP needs between 1 and 16 variables");
    if (static_cast<int>(lp.c.size()) != n || static_cast<int>(lp.lo.size()) != n ||
        static_cast<int>(lp.hi.size()) != n || lp.a.size() != lp.b.size() * static_cast<std::size_t>(n))
        throw PreconditionError("dimension", "LP arrays have inconsistent sizes");
    for (int j = 0; j < n; ++j)
        if (!std::isfinite(lp.lo[j]) || !std::isfinite(lp.hi[j]))
            throw PreconditionError("unbounded", "LP box bounds must be finite");

    std::vector<std::size_t> order(lp.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Sub p;
    p.n = n;
    p.c = lp.c;
    p.lo = lp.lo;
    p.hi = lp.hi;
    p.a.reserve(lp.a.size());
    p.b.reserve(lp.b.size());
    for (std::size_t r : order) {
        p.a.insert(p.a.end(), lp.a.begin() + static_cast<std::ptrdiff_t>(r * n),
                   lp.a.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
        p.b.push_back(lp.b[r]);
    }

    LpSolution out;
    // Sized up front: subproblems hold references into these vectors.
    Workspace ws;
    ws.subs.resize(static_cast<std::size_t>(n));
    ws.ys.resize(static_cast<std::size_t>(n));
    out.feasible = solve(p, out.x, ws, 0);
    if (out.feasible) {
        out.value = 0.0;
        for (int j = 0; j < n; ++j) out.value += lp.c[j] * out.x[j];
    }
    return out;
}

}  // namespace aperture
