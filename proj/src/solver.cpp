#include "aperture/solver.hpp"

#include "aperture/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace aperture {

ProblemSpec normalize_problem(const ProblemSpec& spec, double* shift) {
    const SpatialVec zero{};
    const OperatorSpec g = spec.op.normalized();
    const double F0 = g.shift() - spec.op.shift();  // F(0,0,0) of the input
    const double c = (spec.source ? spec.source(zero, 0.0) : 0.0) + F0;
    ProblemSpec out{g, {}, {}, spec.domain, spec.ball};
    const ScalarField f = spec.source;
    const ScalarField b = spec.boundary;
    out.source = [f, F0, c](const SpatialVec& x, double t) { return (f ? f(x, t) : 0.0) + F0 - c; };
    out.boundary = [b, c](const SpatialVec& x, double t) { return (b ? b(x, t) : 0.0) - c * t; };
    if (shift) *shift = c;
    return out;
}

double cfl_limit(double h, int dim, double Lambda) { return h * h / (2.0 * dim * Lambda); }

namespace {

bool has_stencil(const SpaceTimeGrid& grid, std::size_t s) {
    const auto idx = grid.spatial_multi_index(s);
    for (int a = 0; a < grid.dim(); ++a)
        if (idx[a] < 1 || idx[a] > grid.n_x(a) - 2) return false;
    return true;
}

void require_stencil(const SpaceTimeGrid& grid, std::size_t s) {
    if (!has_stencil(grid, s)) throw PreconditionError("stencil", "node has no full difference stencil");
}

/// D^beta by tensor products of central stencils: (u+ - u-)/2h for order 1,
/// (u+ - 2u + u-)/h^2 for order 2.
double apply_derivative(const SpaceTimeGrid& grid, std::span<const double> slice, std::size_t s,
                        std::array<int, kMaxDim> beta) {
    int axis = -1;
    for (int a = 0; a < grid.dim(); ++a)
        if (beta[a] > 0) {
            axis = a;
            break;
        }
    if (axis < 0) return slice[s];
    const auto idx = grid.spatial_multi_index(s);
    if (idx[axis] < 1 || idx[axis] > grid.n_x(axis) - 2)
        throw PreconditionError("stencil", "node has no full difference stencil");
    const int order = beta[axis];
    beta[axis] = 0;
    const std::size_t st = grid.stride(axis);
    const double up = apply_derivative(grid, slice, s + st, beta);
    const double dn = apply_derivative(grid, slice, s - st, beta);
    const double h = grid.h();
    if (order == 1) return (up - dn) / (2.0 * h);
    if (order == 2) return (up - 2.0 * apply_derivative(grid, slice, s, beta) + dn) / (h * h);
    throw PreconditionError("order", "derivative order per axis must be at most 2");
}

SymmetricMatrix hessian_unchecked(const SpaceTimeGrid& grid, std::span<const double> u, std::size_t s) {
    const int d = grid.dim();
    const double h2 = grid.h() * grid.h();
    SymmetricMatrix m(d);
    for (int i = 0; i < d; ++i) {
        const std::size_t si = grid.stride(i);
        m(i, i) = (u[s + si] - 2.0 * u[s] + u[s - si]) / h2;
        for (int j = i + 1; j < d; ++j) {
            const std::size_t sj = grid.stride(j);
            m.set(i, j, (u[s + si + sj] - u[s + si - sj] - u[s - si + sj] + u[s - si - sj]) / (4.0 * h2));
        }
    }
    return m;
}

SpatialVec gradient_unchecked(const SpaceTimeGrid& grid, std::span<const double> u, std::size_t s) {
    SpatialVec g{};
    for (int i = 0; i < grid.dim(); ++i) {
        const std::size_t si = grid.stride(i);
        g[i] = (u[s + si] - u[s - si]) / (2.0 * grid.h());
    }
    return g;
}

std::vector<char> spatial_boundary(const ProblemSpec& spec, const SpaceTimeGrid& grid) {
    std::vector<char> mask(grid.spatial_size(), 0);
    for (std::size_t s = 0; s < grid.spatial_size(); ++s) {
        bool b = grid.on_spatial_boundary(s);
        if (!b && spec.ball) {
            const SpatialVec x = grid.spatial_point(s);
            double r2 = 0.0;
            for (int a = 0; a < grid.dim(); ++a) {
                const double dx = x[a] - spec.ball->center.x[a];
                r2 += dx * dx;
            }
            b = std::sqrt(r2) >= spec.ball->radius - 1e-9 * grid.h();
        }
        mask[s] = b ? 1 : 0;
    }
    return mask;
}

/// F(x, t, M) with the solver's treatment of the p-Laplacian direction.
double operator_value(const OperatorSpec& op, const SpaceTimeGrid& grid, std::span<const double> u, std::size_t s,
                      const SpatialVec& x, double t, const SymmetricMatrix& m) {
    if (!op.needs_direction()) return op.evaluate(x, t, m);
    const SpatialVec g = gradient_unchecked(grid, u, s);
    double n2 = 0.0;
    for (int i = 0; i < grid.dim(); ++i) n2 += g[i] * g[i];
    if (std::sqrt(n2) < 1e-8) return m.trace() - op.shift();
    return op.evaluate(x, t, m, &g);
}

struct StepStats {
    double boundary_sup = -std::numeric_limits<double>::infinity();
    double source_sup = -std::numeric_limits<double>::infinity();
    double source_linf = 0.0;
};

void step_impl(const ProblemSpec& spec, const SpaceTimeGrid& grid, const std::vector<char>& mask,
               std::span<const double> un, double tn, double dt, std::span<double> out, StepStats* stats) {
    const double limit = cfl_limit(grid.h(), grid.dim(), spec.op.pair().Lambda);
    if (dt > limit * (1.0 + 1e-12)) {
        throw CflError("dt = " + std::to_string(dt) + " exceeds the monotone limit h^2/(2 d Lambda) = " +
                       std::to_string(limit));
    }
    const SymmetricMatrix zero(grid.dim());
    for (std::size_t s = 0; s < grid.spatial_size(); ++s) {
        const SpatialVec x = grid.spatial_point(s);
        if (mask[s]) {
            out[s] = spec.boundary ? spec.boundary(x, tn + dt) : 0.0;
            if (stats) stats->boundary_sup = std::max(stats->boundary_sup, out[s]);
        } else {
            const SymmetricMatrix m = hessian_unchecked(grid, un, s);
            const double f = spec.source ? spec.source(x, tn) : 0.0;
            out[s] = un[s] + dt * (operator_value(spec.op, grid, un, s, x, tn, m) + f);
            if (stats) {
                const double feff = f + operator_value(spec.op, grid, un, s, x, tn, zero);
                stats->source_sup = std::max(stats->source_sup, feff);
                stats->source_linf = std::max(stats->source_linf, std::abs(feff));
            }
        }
        if (!std::isfinite(out[s])) throw NumericError("explicit step produced a non-finite value");
    }
}

}  // namespace

SymmetricMatrix discrete_hessian(const SpaceTimeGrid& grid, std::span<const double> slice, std::size_t s) {
    require_stencil(grid, s);
    return hessian_unchecked(grid, slice, s);
}

SymmetricMatrix discrete_hessian(const GridFunction& u, std::size_t node) {
    const auto& g = u.grid();
    return discrete_hessian(g, u.slice(g.time_level(node)), g.spatial_of(node));
}

SpatialVec discrete_gradient(const SpaceTimeGrid& grid, std::span<const double> slice, std::size_t s) {
    require_stencil(grid, s);
    return gradient_unchecked(grid, slice, s);
}

std::vector<char> boundary_mask(const ProblemSpec& spec, const SpaceTimeGrid& grid) {
    return spatial_boundary(spec, grid);
}

void step(const ProblemSpec& spec, const SpaceTimeGrid& grid, std::span<const double> un, double tn, double dt,
          std::span<double> out) {
    if (un.size() != grid.spatial_size() || out.size() != grid.spatial_size())
        throw PreconditionError("dimension", "slice size does not match grid");
    step_impl(spec, grid, spatial_boundary(spec, grid), un, tn, dt, out, nullptr);
}

ClassResidual class_residual(const GridFunction& u, const EllipticityPair& pair, double f_bound,
                             const std::vector<char>* boundary) {
    const auto& g = u.grid();
    ClassResidual r;
    r.f_bound = f_bound;
    for (int k = 0; k + 1 < g.n_t(); ++k) {
        const auto now = u.slice(k);
        const auto next = u.slice(k + 1);
        for (std::size_t s = 0; s < g.spatial_size(); ++s) {
            if (!has_stencil(g, s) || (boundary && (*boundary)[s])) continue;
            const SymmetricMatrix m = hessian_unchecked(g, now, s);
            const double ut = (next[s] - now[s]) / g.dt();
            r.lower = std::max(r.lower, ut - pucci_plus(m, pair) - f_bound);
            r.upper = std::max(r.upper, pucci_minus(m, pair) - ut - f_bound);
            ++r.nodes;
        }
    }
    return r;
}

SolveResult solve(const ProblemSpec& spec, const SchemeConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const int d = spec.domain.dim;
    if (d != spec.op.dim()) throw PreconditionError("dimension", "domain and operator dimensions differ");
    if (std::abs(spec.domain.t.hi) > 1e-12) throw PreconditionError("domain", "time interval must end at t = 0");
    const double T = -spec.domain.t.lo;
    if (!(T > 0.0)) throw PreconditionError("domain", "time interval must have positive length");
    if (!(cfg.h > 0.0)) throw PreconditionError("scheme", "h must be positive");
    if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) throw PreconditionError("scheme", "cfl_safety must be in (0, 1]");

    const double limit = cfl_limit(cfg.h, d, spec.op.pair().Lambda);
    long steps = 0;
    const bool auto_dt = !(cfg.dt > 0.0);
    if (auto_dt) {
        steps = static_cast<long>(std::ceil(T / (cfg.cfl_safety * limit) - 1e-9));
    } else {
        if (cfg.dt > limit * (1.0 + 1e-12))
            throw CflError("dt = " + std::to_string(cfg.dt) + " exceeds the monotone limit " + std::to_string(limit));
        steps = std::lround(T / cfg.dt);
        if (steps < 1 || std::abs(steps * cfg.dt - T) > 1e-9 * T)
            throw PreconditionError("scheme", "dt must divide the time interval");
    }
    steps = std::max(steps, 1L);
    long every = cfg.store_every;
    if (cfg.store_levels > 0) {
        if (cfg.store_levels < 2) throw PreconditionError("scheme", "store_levels must be at least 2");
        const long gaps = cfg.store_levels - 1;
        if (auto_dt) steps = (steps + gaps - 1) / gaps * gaps;
        if (steps % gaps != 0) throw PreconditionError("scheme", "step count is not a multiple of store_levels - 1");
        every = steps / gaps;
    } else {
        if (every < 1) throw PreconditionError("scheme", "store_every must be positive");
        if (auto_dt) steps = (steps + every - 1) / every * every;
        if (steps % every != 0) throw PreconditionError("scheme", "step count is not a multiple of store_every");
    }
    const double dt = auto_dt ? T / static_cast<double>(steps) : cfg.dt;

    const SpaceTimeGrid grid = SpaceTimeGrid::covering(spec.domain, cfg.h, dt * static_cast<double>(every));
    if (grid.n_t() != steps / every + 1) throw PreconditionError("scheme", "time grid does not match step count");

    SolveResult res;
    res.u = GridFunction(grid);
    res.boundary = spatial_boundary(spec, grid);
    res.stats = {steps, dt, static_cast<int>(every), 0.0};

    StepStats stats;
    std::vector<double> cur(grid.spatial_size());
    std::vector<double> next(grid.spatial_size());
    for (std::size_t s = 0; s < grid.spatial_size(); ++s) {
        cur[s] = spec.boundary ? spec.boundary(grid.spatial_point(s), grid.time(0)) : 0.0;
        if (!std::isfinite(cur[s])) throw NumericError("initial data is not finite");
        stats.boundary_sup = std::max(stats.boundary_sup, cur[s]);
    }
    std::copy(cur.begin(), cur.end(), res.u.slice(0).begin());

    const double t0 = grid.time(0);
    for (long n = 0; n < steps; ++n) {
        const double tn = t0 + static_cast<double>(n) * dt;
        step_impl(spec, grid, res.boundary, cur, tn, dt, next, &stats);
        std::swap(cur, next);
        if ((n + 1) % every == 0) {
            const int level = static_cast<int>((n + 1) / every);
            std::copy(cur.begin(), cur.end(), res.u.slice(level).begin());
        }
    }

    res.boundary_sup = stats.boundary_sup;
    res.source_sup = std::isfinite(stats.source_sup) ? stats.source_sup : 0.0;
    res.source_linf = stats.source_linf;

    const SymmetricMatrix zero(d);
    double acc = 0.0;
    for (int k = 0; k < grid.n_t(); ++k) {
        const auto slice = res.u.slice(k);
        for (std::size_t s = 0; s < grid.spatial_size(); ++s) {
            if (res.boundary[s]) continue;
            const SpatialVec x = grid.spatial_point(s);
            const double f = (spec.source ? spec.source(x, grid.time(k)) : 0.0) +
                             operator_value(spec.op, grid, slice, s, x, grid.time(k), zero);
            acc += std::pow(std::abs(f), d + 1);
        }
    }
    res.source_ld1 = std::pow(acc * grid.cell_measure(), 1.0 / (d + 1));
    res.residual = class_residual(res.u, spec.op.pair(), res.source_linf, &res.boundary);
    res.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

MaxPrincipleReport maximum_principle_check(const SolveResult& result) {
    MaxPrincipleReport rep;
    rep.applicable = result.source_sup <= 0.0;
    rep.boundary_sup = result.boundary_sup;
    rep.interior_sup = -std::numeric_limits<double>::infinity();
    for (double v : result.u.values()) rep.interior_sup = std::max(rep.interior_sup, v);
    rep.excess = rep.interior_sup - rep.boundary_sup;
    rep.source_ld1 = result.source_ld1;
    rep.excess_ratio = rep.source_ld1 > 0.0 ? std::max(rep.excess, 0.0) / rep.source_ld1 : 0.0;
    rep.pass = !rep.applicable || rep.excess <= 1e-12;
    return rep;
}

CaloricDerivativeReport caloric_derivative_check(const GridFunction& h, const std::vector<double>& radii, int k,
                                                 const std::array<int, kMaxDim>& beta, double tol) {
    const auto& g = h.grid();
    const int d = g.dim();
    if (k < 0 || k > 1) throw PreconditionError("order", "time derivative order must be 0 or 1");
    int order = 0;
    for (int a = 0; a < kMaxDim; ++a) {
        if (beta[a] < 0 || (a >= d && beta[a] != 0)) throw PreconditionError("order", "bad multi-index");
        order += beta[a];
    }
    if (order > 2) throw PreconditionError("order", "|beta| must be at most 2");
    if (radii.empty()) throw PreconditionError("radii", "need at least one radius");
    if (k == 1 && g.n_t() < 2) throw PreconditionError("stencil", "time derivative needs two time levels");

    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < d; ++a) {
        idx[a] = g.nearest_index(a, 0.0);
        if (std::abs(g.coord(a, idx[a])) > 1e-9 * g.h()) throw PreconditionError("origin", "origin is not a grid node");
    }
    const std::size_t s0 = g.spatial_index(idx);
    const int last = g.n_t() - 1;

    const double rmax = *std::max_element(radii.begin(), radii.end());
    const ParabolicCylinder big{Point{d, {}, 0.0}, rmax};
    double residual = 0.0;
    double lap_scale = 1.0;
    for (std::size_t node : nodes_in(g, big)) {
        const int lvl = g.time_level(node);
        const std::size_t s = g.spatial_of(node);
        if (lvl + 1 >= g.n_t() || !has_stencil(g, s)) continue;
        const double lap = hessian_unchecked(g, h.slice(lvl), s).trace();
        const double ut = (h.slice(lvl + 1)[s] - h.slice(lvl)[s]) / g.dt();
        residual = std::max(residual, std::abs(ut - lap));
        lap_scale = std::max(lap_scale, std::abs(lap));
    }
    CaloricDerivativeReport rep;
    rep.k = k;
    rep.beta = beta;
    rep.heat_residual = residual / lap_scale;
    if (rep.heat_residual > tol)
        throw PreconditionError("not_caloric", "input does not solve the heat equation: relative residual " +
                                                   std::to_string(rep.heat_residual));

    double deriv = apply_derivative(g, h.slice(last), s0, beta);
    if (k == 1) deriv = (deriv - apply_derivative(g, h.slice(last - 1), s0, beta)) / g.dt();
    deriv = std::abs(deriv);

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double r : radii) {
        double sup = 0.0;
        for (std::size_t node : nodes_in(g, ParabolicCylinder{Point{d, {}, 0.0}, r})) sup = std::max(sup, std::abs(h[node]));
        const double ratio = sup > 0.0 ? deriv * std::pow(r, 2 * k + order) / sup : 0.0;
        rep.radii.push_back(r);
        rep.derivatives.push_back(deriv);
        rep.sup_norms.push_back(sup);
        rep.ratios.push_back(ratio);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    rep.spread = hi == 0.0 ? 1.0 : (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    rep.pass = rep.spread <= 100.0;
    return rep;
}

}  // namespace aperture
