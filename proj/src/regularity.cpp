#include "aperture/regularity.hpp"

#include "aperture/error.hpp"
#include "aperture/lp.hpp"
#include "aperture/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

namespace aperture {

double QuadraticPolynomial::operator()(const SpatialVec& x, double t) const {
    SpatialVec y{};
    for (int i = 0; i < dim; ++i) y[i] = x[i] - center[i];
    double v = A + C * (t - t0) + 0.5 * D.quadratic_form(y);
    for (int i = 0; i < dim; ++i) v += B[i] * y[i];
    return v;
}

double AffineFunction::operator()(const SpatialVec& x) const {
    double v = A;
    for (int i = 0; i < dim; ++i) v += B[i] * x[i];
    return v;
}

std::vector<double> default_radii() { return {0.5, 0.25, 0.125, 0.0625, 0.03125}; }

DecayFit decay_exponent_fit(const std::vector<double>& scales, const std::vector<double>& values) {
    if (scales.size() != values.size()) throw PreconditionError("dimension", "scales and values differ in length");
    DecayFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(values[i] > 1e-15) || !(scales[i] > 0.0)) continue;
        fit.scales.push_back(scales[i]);
        fit.values.push_back(values[i]);
        lx.push_back(std::log(scales[i]));
        ly.push_back(std::log(values[i]));
    }
    const std::size_t n = lx.size();
    if (n < 3) throw PreconditionError("too_few_scales", "decay fit needs at least 3 positive values");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw PreconditionError("too_few_scales", "decay fit needs distinct scales");
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    fit.constant = std::exp(intercept);
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + fit.exponent * lx[i]);
        ssr += r * r;
    }
    fit.r2 = syy > 0.0 ? std::max(0.0, 1.0 - ssr / syy) : 1.0;
    return fit;
}

namespace {

bool has_stencil(const SpaceTimeGrid& g, std::size_t s) {
    const auto idx = g.spatial_multi_index(s);
    for (int a = 0; a < g.dim(); ++a)
        if (idx[a] < 1 || idx[a] > g.n_x(a) - 2) return false;
    return true;
}

double time_difference(const GridFunction& u, std::size_t node) {
    const auto& g = u.grid();
    const int k = g.time_level(node);
    const std::size_t s = g.spatial_of(node);
    if (g.n_t() < 2) throw PreconditionError("stencil", "region too thin for a time difference");
    if (k + 1 < g.n_t()) return (u[g.node(k + 1, s)] - u[node]) / g.dt();
    return (u[node] - u[g.node(k - 1, s)]) / g.dt();
}

std::vector<std::size_t> region_nodes(const GridFunction& u, const Region& region) {
    auto nodes = nodes_in(u.grid(), region);
    if (nodes.empty()) throw PreconditionError("empty_region", "region contains no grid nodes");
    return nodes;
}

double holder_on(const SpaceTimeGrid& g, const std::vector<std::size_t>& nodes, const std::vector<double>& vals,
                 double alpha, const HolderOptions& opt) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError("alpha", "alpha must lie in (0, 1]");
    const std::size_t n = nodes.size();
    if (n == 0) throw PreconditionError("empty_region", "region contains no grid nodes");
    std::vector<Point> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = g.point(nodes[i]);
    double best = 0.0;
    auto consider = [&](std::size_t i, std::size_t j) {
        const double dist = parabolic_distance(pts[i], pts[j]);
        if (dist > 0.0) best = std::max(best, std::abs(vals[i] - vals[j]) / std::pow(dist, alpha));
    };
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    if (pairs <= static_cast<double>(opt.pair_budget)) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) consider(i, j);
        return best;
    }

    std::unordered_map<std::size_t, std::size_t> pos;
    pos.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) pos.emplace(nodes[i], i);
    int extent = g.n_t();
    for (int a = 0; a < g.dim(); ++a) extent = std::max(extent, g.n_x(a));
    for (std::size_t i = 0; i < n; ++i) {
        const int k = g.time_level(nodes[i]);
        const auto idx = g.spatial_multi_index(g.spatial_of(nodes[i]));
        for (int off = 1; off < extent; off *= 2) {
            // One step along each spatial axis, one in time, and one diagonal.
            for (int dir = 0; dir <= g.dim() + 1; ++dir) {
                auto j = idx;
                int kk = k;
                bool ok = true;
                for (int a = 0; a < g.dim(); ++a) {
                    if (dir == a || dir == g.dim() + 1) {
                        j[a] += off;
                        ok = ok && j[a] < g.n_x(a);
                    }
                }
                if (dir >= g.dim()) kk += off;
                if (!ok || kk >= g.n_t()) continue;
                const auto it = pos.find(g.node(kk, g.spatial_index(j)));
                if (it != pos.end()) consider(i, it->second);
            }
        }
    }
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t r = 0; r < opt.pair_budget / 2; ++r) consider(pick(rng), pick(rng));
    return best;
}

}  // namespace

double holder_seminorm(const GridFunction& u, double alpha, const Region& region, const HolderOptions& opt) {
    const auto nodes = region_nodes(u, region);
    std::vector<double> vals(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) vals[i] = u[nodes[i]];
    return holder_on(u.grid(), nodes, vals, alpha, opt);
}

double c2alpha_seminorm(const GridFunction& u, double alpha, const Region& region, const HolderOptions& opt) {
    const auto& g = u.grid();
    const int d = g.dim();
    std::vector<std::size_t> nodes;
    for (std::size_t node : region_nodes(u, region))
        if (has_stencil(g, g.spatial_of(node))) nodes.push_back(node);
    if (nodes.empty() || g.n_t() < 2) throw PreconditionError("stencil", "region too thin for difference stencils");

    std::vector<double> ut(nodes.size());
    std::vector<std::vector<double>> hess(static_cast<std::size_t>(d * d), std::vector<double>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        ut[i] = time_difference(u, nodes[i]);
        const SymmetricMatrix m = discrete_hessian(u, nodes[i]);
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) hess[static_cast<std::size_t>(a * d + b)][i] = m(a, b);
    }
    double hmax = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b)
            hmax = std::max(hmax, holder_on(g, nodes, hess[static_cast<std::size_t>(a * d + b)], alpha, opt));
    return holder_on(g, nodes, ut, alpha, opt) + hmax;
}

namespace {

/// Polynomial basis in scaled coordinates y = (x - x0)/rho, s = (t - t0)/rho^2.
/// Column order: 1, y_1..y_d, s, then D entries (i <= j): y_i^2/2 or y_i y_j.
struct ScaledSample {
    SpatialVec y{};
    double s = 0.0;
    double value = 0.0;
};

std::vector<ScaledSample> scaled_samples(const GridFunction& u, const std::vector<std::size_t>& nodes,
                                         const SpatialVec& x0, double t0, double rho) {
    const auto& g = u.grid();
    std::vector<ScaledSample> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Point p = g.point(nodes[i]);
        for (int a = 0; a < g.dim(); ++a) out[i].y[a] = (p.x[a] - x0[a]) / rho;
        out[i].s = (p.t - t0) / (rho * rho);
        out[i].value = u[nodes[i]];
    }
    return out;
}

QuadraticPolynomial unscale(int d, const Eigen::VectorXd& c, const SpatialVec& x0, double t0, double rho) {
    QuadraticPolynomial p;
    p.dim = d;
    p.D = SymmetricMatrix(d);
    p.center = x0;
    p.t0 = t0;
    p.A = c(0);
    for (int i = 0; i < d; ++i) p.B[i] = c(1 + i) / rho;
    p.C = c(1 + d) / (rho * rho);
    int col = 2 + d;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) p.D.set(i, j, c(col++) / (rho * rho));
    return p;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    return a.colPivHouseholderQr().solve(b);
}

QuadraticPolynomial ls_fit(int d, const std::vector<ScaledSample>& smp, const SpatialVec& x0, double t0, double rho) {
    const int cols = QuadraticPolynomial::dimension(d);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(smp.size()), cols);
    Eigen::VectorXd b(static_cast<Eigen::Index>(smp.size()));
    for (std::size_t r = 0; r < smp.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        a(i, 0) = 1.0;
        for (int k = 0; k < d; ++k) a(i, 1 + k) = smp[r].y[k];
        a(i, 1 + d) = smp[r].s;
        int col = 2 + d;
        for (int k = 0; k < d; ++k)
            for (int l = k; l < d; ++l) a(i, col++) = k == l ? 0.5 * smp[r].y[k] * smp[r].y[k] : smp[r].y[k] * smp[r].y[l];
        b(i) = smp[r].value;
    }
    return unscale(d, least_squares(a, b), x0, t0, rho);
}

/// Chebyshev fit by LP over (coefficients, s) in scaled coordinates.
QuadraticPolynomial chebyshev_fit(int d, const std::vector<ScaledSample>& smp, const QuadraticPolynomial& start,
                                  double start_sup, const SpatialVec& x0, double t0, double rho) {
    const int cols = QuadraticPolynomial::dimension(d);
    Eigen::VectorXd c0(cols);
    c0(0) = start.A;
    for (int i = 0; i < d; ++i) c0(1 + i) = start.B[i] * rho;
    c0(1 + d) = start.C * rho * rho;
    int col = 2 + d;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) c0(col++) = start.D(i, j) * rho * rho;

    LinearProgram lp;
    lp.n = cols + 1;
    lp.c.assign(static_cast<std::size_t>(lp.n), 0.0);
    lp.c.back() = -1.0;
    const double span = 1e3 * (start_sup + 1e-300);
    for (int k = 0; k < cols; ++k) {
        lp.lo.push_back(c0(k) - span);
        lp.hi.push_back(c0(k) + span);
    }
    lp.lo.push_back(0.0);
    lp.hi.push_back(start_sup);
    std::vector<double> row(static_cast<std::size_t>(lp.n));
    for (const auto& sm : smp) {
        row[0] = 1.0;
        for (int k = 0; k < d; ++k) row[static_cast<std::size_t>(1 + k)] = sm.y[k];
        row[static_cast<std::size_t>(1 + d)] = sm.s;
        int cc = 2 + d;
        for (int k = 0; k < d; ++k)
            for (int l = k; l < d; ++l)
                row[static_cast<std::size_t>(cc++)] = k == l ? 0.5 * sm.y[k] * sm.y[k] : sm.y[k] * sm.y[l];
        // P - u <= s and u - P <= s
        row.back() = -1.0;
        lp.add_row(row, sm.value);
        std::vector<double> neg(row);
        for (int k = 0; k < cols; ++k) neg[static_cast<std::size_t>(k)] = -neg[static_cast<std::size_t>(k)];
        lp.add_row(neg, -sm.value);
    }
    const LpSolution sol = solve_lp(lp);
    if (!sol.feasible) return start;
    Eigen::VectorXd c(cols);
    for (int k = 0; k < cols; ++k) c(k) = sol.x[static_cast<std::size_t>(k)];
    return unscale(d, c, x0, t0, rho);
}

std::pair<double, double> residual_range(const GridFunction& u, const std::vector<std::size_t>& nodes,
                                         const QuadraticPolynomial& p) {
    const auto& g = u.grid();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t node : nodes) {
        const Point q = g.point(node);
        const double r = u[node] - p(q.x, q.t);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {lo, hi};
}

std::vector<std::size_t> cylinder_nodes(const GridFunction& u, const ParabolicCylinder& q, int min_nodes) {
    if (!region_within(u.grid(), q)) throw PreconditionError("outside", "cylinder is not contained in the grid");
    auto nodes = nodes_in(u.grid(), q);
    if (static_cast<int>(nodes.size()) < min_nodes)
        throw PreconditionError("insufficient_nodes", "cylinder of radius " + std::to_string(q.radius) + " holds " +
                                                          std::to_string(nodes.size()) + " nodes, fewer than " +
                                                          std::to_string(min_nodes));
    return nodes;
}

}  // namespace

CampanatoReport campanato_seminorm(const GridFunction& u, double alpha, const Point& center,
                                   const std::vector<double>& radii, const CampanatoOptions& opt) {
    const auto& g = u.grid();
    const int d = g.dim();
    if (center.dim != d) throw PreconditionError("dimension", "center dimension does not match grid");
    if (opt.exact && d != 1) throw PreconditionError("exact_mode", "exact Chebyshev fits are limited to d = 1");
    if (radii.empty()) throw PreconditionError("radii", "need at least one radius");
    CampanatoReport rep;
    for (double rho : radii) {
        const ParabolicCylinder q{center, rho};
        const auto nodes = cylinder_nodes(u, q, QuadraticPolynomial::dimension(d));
        const auto smp = scaled_samples(u, nodes, center.x, center.t, rho);
        QuadraticPolynomial p = ls_fit(d, smp, center.x, center.t, rho);
        auto [lo, hi] = residual_range(u, nodes, p);
        p.A += 0.5 * (lo + hi);
        double sup = 0.5 * (hi - lo);
        if (opt.exact && sup > 0.0) {
            QuadraticPolynomial e = chebyshev_fit(d, smp, p, sup, center.x, center.t, rho);
            auto [elo, ehi] = residual_range(u, nodes, e);
            e.A += 0.5 * (elo + ehi);
            const double esup = 0.5 * (ehi - elo);
            if (esup < sup) {
                p = e;
                sup = esup;
            }
        }
        CampanatoLevel lvl{rho, p, sup, sup / std::pow(rho, 2.0 + alpha), nodes.size()};
        rep.value = std::max(rep.value, lvl.normalized);
        rep.levels.push_back(lvl);
    }
    return rep;
}

CampanatoReport campanato_seminorm(const GridFunction& u, double alpha, const std::vector<Point>& centers,
                                   const std::vector<double>& radii, const CampanatoOptions& opt) {
    if (centers.empty()) throw PreconditionError("centers", "need at least one center");
    CampanatoReport best;
    bool first = true;
    for (const auto& c : centers) {
        CampanatoReport r = campanato_seminorm(u, alpha, c, radii, opt);
        if (first || r.value > best.value) best = std::move(r);
        first = false;
    }
    return best;
}

QuadraticPolynomial constrained_polyfit(const GridFunction& u, const ParabolicCylinder& cylinder,
                                        const OperatorSpec& F, double f0) {
    const auto& g = u.grid();
    const int d = g.dim();
    if (F.dim() != d) throw PreconditionError("dimension", "operator dimension does not match grid");
    const auto nodes = cylinder_nodes(u, cylinder, QuadraticPolynomial::dimension(d));
    const double rho = cylinder.radius;
    const SpatialVec x0 = cylinder.center.x;
    const double t0 = cylinder.center.t;
    const auto smp = scaled_samples(u, nodes, x0, t0, rho);
    const SpatialVec origin{};
    const SpatialVec e1{1.0, 0.0, 0.0};
    const auto rows = static_cast<Eigen::Index>(smp.size());
    const int nd = d * (d + 1) / 2;

    SymmetricMatrix D = ls_fit(d, smp, x0, t0, rho).D;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const Linearization lin = F.linearization(origin, 0.0, D, &e1);
        Eigen::MatrixXd a(rows, 1 + d + nd);
        Eigen::VectorXd b(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& sm = smp[static_cast<std::size_t>(r)];
            a(r, 0) = 1.0;
            for (int k = 0; k < d; ++k) a(r, 1 + k) = sm.y[k];
            int col = 1 + d;
            for (int k = 0; k < d; ++k)
                for (int l = k; l < d; ++l)
                    a(r, col++) = k == l ? 0.5 * sm.y[k] * sm.y[k] + lin.a(k, k) * sm.s
                                         : sm.y[k] * sm.y[l] + 2.0 * lin.a(k, l) * sm.s;
            // C t = (Tr(aD) + c + f0) t; the constant part moves to the target.
            b(r) = sm.value - (lin.c + f0) * sm.s * rho * rho;
        }
        const Eigen::VectorXd c = least_squares(a, b);
        SymmetricMatrix next(d);
        int col = 1 + d;
        for (int k = 0; k < d; ++k)
            for (int l = k; l < d; ++l) next.set(k, l, c(col++) / (rho * rho));
        if (it >= 10) next = (next + D) * 0.5;
        const double change = (next - D).max_abs_entry();
        D = next;
        if (change <= 1e-10 * (1.0 + D.max_abs_entry())) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("constrained polynomial fit did not settle within 100 passes");

    QuadraticPolynomial p;
    p.dim = d;
    p.center = x0;
    p.t0 = t0;
    p.D = D;
    p.C = F.evaluate(origin, 0.0, D, &e1) + f0;
    Eigen::MatrixXd a(rows, 1 + d);
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& sm = smp[static_cast<std::size_t>(r)];
        a(r, 0) = 1.0;
        SpatialVec y{};
        for (int k = 0; k < d; ++k) {
            a(r, 1 + k) = sm.y[k];
            y[k] = sm.y[k] * rho;
        }
        b(r) = sm.value - p.C * sm.s * rho * rho - 0.5 * D.quadratic_form(y);
    }
    const Eigen::VectorXd c = least_squares(a, b);
    p.A = c(0);
    for (int k = 0; k < d; ++k) p.B[k] = c(1 + k) / rho;
    return p;
}

PolySequenceReport dyadic_polynomial_sequence(const GridFunction& u, const OperatorSpec& F, double rho, double alpha,
                                              int k_max, double f0) {
    if (!(rho > 0.0 && rho <= 0.5)) throw PreconditionError("rho", "rho must lie in (0, 1/2]");
    if (k_max < 1) throw PreconditionError("k_max", "k_max must be positive");
    const int d = u.grid().dim();
    const Point origin{d, {}, 0.0};
    // Check the deepest scale first so the error names the real problem.
    cylinder_nodes(u, ParabolicCylinder{origin, std::pow(rho, k_max)}, QuadraticPolynomial::dimension(d));

    PolySequenceReport rep;
    rep.rho = rho;
    rep.alpha = alpha;
    std::vector<double> scales, errors;
    for (int k = 1; k <= k_max; ++k) {
        const double r = std::pow(rho, k);
        const ParabolicCylinder q{origin, r};
        PolySequenceLevel lvl;
        lvl.k = k;
        lvl.radius = r;
        lvl.poly = constrained_polyfit(u, q, F, f0);
        const auto nodes = nodes_in(u.grid(), q);
        auto [lo, hi] = residual_range(u, nodes, lvl.poly);
        lvl.sup_error = std::max(std::abs(lo), std::abs(hi));
        if (k > 1) {
            const auto& prev = rep.levels.back().poly;
            const double w = std::pow(rho, k - 1);
            double db = 0.0;
            for (int i = 0; i < d; ++i) db += (lvl.poly.B[i] - prev.B[i]) * (lvl.poly.B[i] - prev.B[i]);
            db = std::sqrt(db);
            lvl.delta_D = operator_norm(lvl.poly.D - prev.D);
            const double cd = std::abs(lvl.poly.C - prev.C) + lvl.delta_D;
            const double da = std::abs(lvl.poly.A - prev.A);
            lvl.increment_linear = da + w * db + w * cd;
            lvl.increment_quadratic = da + w * db + w * w * cd;
        }
        scales.push_back(r);
        errors.push_back(lvl.sup_error);
        rep.levels.push_back(lvl);
    }
    rep.fit = decay_exponent_fit(scales, errors);
    return rep;
}

LogLipReport loglip_fit(const GridFunction& u, const Point& center, const std::vector<double>& radii) {
    const auto& g = u.grid();
    const int d = g.dim();
    if (radii.size() < 4) throw PreconditionError("radii", "Log-Lip fit needs at least 4 radii");
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < d; ++a) {
        idx[a] = g.nearest_index(a, center.x[a]);
        if (std::abs(g.coord(a, idx[a]) - center.x[a]) > 1e-9 * g.h())
            throw PreconditionError("center", "center is not a grid node");
    }
    const int level = g.nearest_level(center.t);
    if (std::abs(g.time(level) - center.t) > 1e-9 * g.dt()) throw PreconditionError("center", "center is not a grid node");
    const std::size_t s = g.spatial_index(idx);
    if (!has_stencil(g, s)) throw PreconditionError("boundary", "center too close to the boundary");
    const auto slice = u.slice(level);
    const SpatialVec du = discrete_gradient(g, slice, s);
    const double u0 = slice[s];

    LogLipReport rep;
    for (double r : radii) {
        if (!(r > 0.0 && r < 1.0)) throw PreconditionError("radii", "Log-Lip radii must lie in (0, 1)");
        const ParabolicCylinder q{center, r};
        if (!region_within(g, q)) throw PreconditionError("boundary", "center too close to the boundary");
        double m = 0.0;
        for (std::size_t node : nodes_in(g, q)) {
            const Point p = g.point(node);
            double lin = u0;
            for (int a = 0; a < d; ++a) lin += du[a] * (p.x[a] - center.x[a]);
            m = std::max(m, std::abs(u[node] - lin));
        }
        rep.radii.push_back(r);
        rep.moduli.push_back(m);
    }
    bool degenerate = true;
    for (double m : rep.moduli) degenerate = degenerate && !(m > 1e-15);
    if (degenerate) {
        rep.preferred = "degenerate";
        return rep;
    }
    auto fit_one = [&](auto model, double& constant, double& ssr) {
        std::vector<double> y;
        for (std::size_t i = 0; i < rep.radii.size(); ++i) {
            const double m = std::max(rep.moduli[i], 1e-300);
            y.push_back(std::log(m) - std::log(model(rep.radii[i])));
        }
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        ssr = 0.0;
        for (double v : y) ssr += (v - mean) * (v - mean);
        constant = std::exp(mean);
    };
    fit_one([](double r) { return r * r; }, rep.c_plain, rep.ssr_plain);
    fit_one([](double r) { return r * r * std::log(1.0 / r); }, rep.c_log, rep.ssr_log);
    rep.preferred = rep.ssr_log < rep.ssr_plain ? "log" : "plain";
    return rep;
}

double sobolev_norm(const GridFunction& u, double p, const Region& region) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw PreconditionError("p", "p must lie in [1, inf)");
    const auto& g = u.grid();
    const int d = g.dim();
    const auto nodes = region_nodes(u, region);
    for (std::size_t node : nodes)
        if (!has_stencil(g, g.spatial_of(node))) throw PreconditionError("stencil", "region too thin for difference stencils");
    if (g.n_t() < 2) throw PreconditionError("stencil", "region too thin for a time difference");

    const bool box = std::holds_alternative<Box>(region);
    std::array<int, kMaxDim + 1> lo{}, hi{};
    lo.fill(std::numeric_limits<int>::max());
    hi.fill(std::numeric_limits<int>::min());
    for (std::size_t node : nodes) {
        const auto idx = g.spatial_multi_index(g.spatial_of(node));
        for (int a = 0; a < d; ++a) {
            lo[a] = std::min(lo[a], idx[a]);
            hi[a] = std::max(hi[a], idx[a]);
        }
        lo[d] = std::min(lo[d], g.time_level(node));
        hi[d] = std::max(hi[d], g.time_level(node));
    }
    auto trap = [](int i, int l, int h, double step) {
        if (l == h) return step;
        return (i == l || i == h) ? 0.5 * step : step;
    };

    double su = 0.0, sut = 0.0, sdu = 0.0, sd2 = 0.0;
    for (std::size_t node : nodes) {
        double w = g.cell_measure();
        if (box) {
            const auto idx = g.spatial_multi_index(g.spatial_of(node));
            w = trap(g.time_level(node), lo[d], hi[d], g.dt());
            for (int a = 0; a < d; ++a) w *= trap(idx[a], lo[a], hi[a], g.h());
        }
        const std::size_t s = g.spatial_of(node);
        const auto slice = u.slice(g.time_level(node));
        const SpatialVec du = discrete_gradient(g, slice, s);
        const SymmetricMatrix m = discrete_hessian(g, slice, s);
        double gn = 0.0;
        for (int a = 0; a < d; ++a) gn += du[a] * du[a];
        double fro = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) fro += m(a, b) * m(a, b);
        su += w * std::pow(std::abs(u[node]), p);
        sut += w * std::pow(std::abs(time_difference(u, node)), p);
        sdu += w * std::pow(std::sqrt(gn), p);
        sd2 += w * std::pow(std::sqrt(fro), p);
    }
    return std::pow(su + sut + sdu + sd2, 1.0 / p);
}

double pbmo_norm(const GridFunction& g, double p, const Region& region, const std::vector<double>& radii,
                 int center_stride) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw PreconditionError("p", "p must lie in [1, inf)");
    if (center_stride < 1) throw PreconditionError("stride", "center stride must be positive");
    const auto& grid = g.grid();
    const auto nodes = region_nodes(g, region);
    std::vector<char> in(grid.size(), 0);
    for (std::size_t n : nodes) in[n] = 1;
    double best = 0.0;
    std::vector<double> vals;
    for (std::size_t c : nodes) {
        const auto idx = grid.spatial_multi_index(grid.spatial_of(c));
        bool keep = grid.time_level(c) % center_stride == 0;
        for (int a = 0; a < grid.dim(); ++a) keep = keep && idx[a] % center_stride == 0;
        if (!keep) continue;
        const Point cp = grid.point(c);
        for (double r : radii) {
            vals.clear();
            for (std::size_t n : nodes_in(grid, ParabolicCylinder{cp, r}))
                if (in[n]) vals.push_back(g[n]);
            if (vals.empty()) continue;
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double osc = 0.0;
            for (double v : vals) osc += std::pow(std::abs(v - mean), p);
            best = std::max(best, std::pow(osc / static_cast<double>(vals.size()), 1.0 / p));
        }
    }
    return best;
}

double parabolic_maximal(const GridFunction& g, const Point& point, const std::vector<double>& radii) {
    double best = 0.0;
    for (double r : radii) {
        const auto nodes = nodes_in(g.grid(), ParabolicCylinder{point, r});
        if (nodes.empty()) continue;
        double s = 0.0;
        for (std::size_t n : nodes) {
            if (g[n] < 0.0) throw PreconditionError("negative", "maximal function needs g >= 0");
            s += g[n];
        }
        best = std::max(best, s / static_cast<double>(nodes.size()));
    }
    return best;
}

std::vector<double> parabolic_maximal_field(const GridFunction& g, const std::vector<double>& radii) {
    const auto& grid = g.grid();
    for (double v : g.values())
        if (v < 0.0) throw PreconditionError("negative", "maximal function needs g >= 0");
    std::vector<double> out(grid.size(), 0.0);
    if (grid.dim() != 1) {
        for (std::size_t n = 0; n < grid.size(); ++n) out[n] = parabolic_maximal(g, grid.point(n), radii);
        return out;
    }
    // d = 1: Q_r(x_i, t_k) covers an index rectangle; use 2-D prefix sums.
    const int nx = grid.n_x(0);
    const int nt = grid.n_t();
    std::vector<double> pre(static_cast<std::size_t>((nx + 1) * (nt + 1)), 0.0);
    auto P = [&](int k, int i) -> double& { return pre[static_cast<std::size_t>(k * (nx + 1) + i)]; };
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nx; ++i)
            P(k + 1, i + 1) = g[grid.node(k, static_cast<std::size_t>(i))] + P(k, i + 1) + P(k + 1, i) - P(k, i);
    for (double r : radii) {
        const int m = static_cast<int>(std::ceil(r / grid.h() - 1e-9)) - 1;
        const double lag = r * r / grid.dt();
        for (int k = 0; k < nt; ++k) {
            const int k_lo = std::max(0, static_cast<int>(std::floor(k - lag + 1e-9)) + 1);
            for (int i = 0; i < nx; ++i) {
                if (m < 0) continue;
                const int i_lo = std::max(0, i - m);
                const int i_hi = std::min(nx - 1, i + m);
                if (k_lo > k) continue;
                const double sum = P(k + 1, i_hi + 1) - P(k_lo, i_hi + 1) - P(k + 1, i_lo) + P(k_lo, i_lo);
                const double cnt = static_cast<double>((k - k_lo + 1) * (i_hi - i_lo + 1));
                auto& o = out[grid.node(k, static_cast<std::size_t>(i))];
                o = std::max(o, sum / cnt);
            }
        }
    }
    return out;
}

}  // namespace aperture
