#include "aperture/goodsets.hpp"

#include "aperture/error.hpp"
#include "aperture/lp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace aperture {

double Paraboloid::operator()(const SpatialVec& x, double t) const {
    double lin = A + C * (t - t0);
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double dx = x[i] - x0[i];
        lin += B[i] * dx;
        r2 += dx * dx;
    }
    const double bump = M * (r2 + std::abs(t - t0));
    return above ? lin + bump : lin - bump;
}

namespace {

/// Minimal opening from below for the values `v` (u, or -u for above).
double opening_below(const SpaceTimeGrid& g, const std::vector<double>& v, std::size_t p0,
                     const std::vector<std::size_t>& domain, bool space_only, SpatialVec& b_out, double& c_out) {
    const int d = g.dim();
    const Point P0 = g.point(p0);
    const double u0 = v[p0];
    const int k0 = g.time_level(p0);
    const std::size_t s0 = g.spatial_of(p0);
    const auto idx = g.spatial_multi_index(s0);

    // Local slope estimates centre the LP box; they move with any added
    // affine function, which keeps the result affine invariant.
    SpatialVec bc{}, bspread{}, bfwd{}, bbwd{};
    std::array<bool, kMaxDim> both{};
    for (int a = 0; a < d; ++a) {
        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        int cnt = 0;
        if (idx[a] + 1 < g.n_x(a)) {
            const double s = (v[g.node(k0, s0 + g.stride(a))] - u0) / g.h();
            sum += s, lo = std::min(lo, s), hi = std::max(hi, s), ++cnt;
        }
        if (idx[a] > 0) {
            const double s = (u0 - v[g.node(k0, s0 - g.stride(a))]) / g.h();
            sum += s, lo = std::min(lo, s), hi = std::max(hi, s), ++cnt;
        }
        bc[a] = cnt ? sum / cnt : 0.0;
        bspread[a] = cnt ? hi - lo : 0.0;
        both[a] = cnt == 2;
        bfwd[a] = hi;
        bbwd[a] = lo;
    }
    double cc = 0.0, cspread = 0.0, cfwd = 0.0, cbwd = 0.0;
    bool cboth = false;
    if (!space_only) {
        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        int cnt = 0;
        if (k0 + 1 < g.n_t()) {
            const double s = (v[g.node(k0 + 1, s0)] - u0) / g.dt();
            sum += s, lo = std::min(lo, s), hi = std::max(hi, s), ++cnt;
        }
        if (k0 > 0) {
            const double s = (u0 - v[g.node(k0 - 1, s0)]) / g.dt();
            sum += s, lo = std::min(lo, s), hi = std::max(hi, s), ++cnt;
        }
        cc = cnt ? sum / cnt : 0.0;
        cspread = cnt ? hi - lo : 0.0;
        cboth = cnt == 2;
        cfwd = hi;
        cbwd = lo;
    }

    struct Row {
        SpatialVec dx;
        double dt;
        double w;
        double rhs;
    };
    std::vector<Row> rows;
    rows.reserve(domain.size());
    double m_feas = 0.0;
    double osc = 0.0;
    for (std::size_t q : domain) {
        if (q == p0) continue;
        const Point Q = g.point(q);
        Row r{};
        double w = std::abs(Q.t - P0.t);
        double lin = u0 + cc * (Q.t - P0.t);
        for (int a = 0; a < d; ++a) {
            r.dx[a] = Q.x[a] - P0.x[a];
            w += r.dx[a] * r.dx[a];
            lin += bc[a] * r.dx[a];
        }
        r.dt = Q.t - P0.t;
        r.w = w;
        r.rhs = v[q] - u0;
        osc = std::max(osc, std::abs(v[q] - lin));
        if (w > 0.0) m_feas = std::max(m_feas, (lin - v[q]) / w);
        rows.push_back(r);
    }
    b_out = bc;
    c_out = cc;
    if (!(m_feas > 0.0)) return 0.0;

    const int nb = d;
    const int n = nb + (space_only ? 0 : 1) + 1;
    LinearProgram lp;
    lp.n = n;
    lp.c.assign(static_cast<std::size_t>(n), 0.0);
    lp.c.back() = -1.0;
    // With both neighbours present the neighbour rows force
    // B in [bwd - M h, fwd + M h] (and C in [tb - M, tf + M]); otherwise the
    // box only has to contain one optimum and a wide margin does.
    for (int a = 0; a < d; ++a) {
        const double tiny = 1e-12 * (1.0 + std::abs(bc[a]));
        if (both[a]) {
            lp.lo.push_back(bbwd[a] - m_feas * g.h() - tiny);
            lp.hi.push_back(bfwd[a] + m_feas * g.h() + tiny);
        } else {
            const double w = bspread[a] + 2.0 * m_feas * g.h() + osc / g.h() + tiny;
            lp.lo.push_back(bc[a] - w);
            lp.hi.push_back(bc[a] + w);
        }
    }
    if (!space_only) {
        const double tiny = 1e-12 * (1.0 + std::abs(cc));
        if (cboth) {
            lp.lo.push_back(cbwd - m_feas - tiny);
            lp.hi.push_back(cfwd + m_feas + tiny);
        } else {
            const double w = cspread + 2.0 * m_feas + osc / g.dt() + tiny;
            lp.lo.push_back(cc - w);
            lp.hi.push_back(cc + w);
        }
    }
    lp.lo.push_back(0.0);
    lp.hi.push_back(m_feas);
    lp.a.reserve(rows.size() * static_cast<std::size_t>(n));
    lp.b.reserve(rows.size());
    for (const auto& r : rows) {
        // Redundant when it holds at M = 0 for every (B, C) in the box.
        double worst = 0.0;
        for (int a = 0; a < d; ++a) worst += std::max(lp.lo[a] * r.dx[a], lp.hi[a] * r.dx[a]);
        if (!space_only) worst += std::max(lp.lo[d] * r.dt, lp.hi[d] * r.dt);
        if (worst <= r.rhs) continue;
        for (int a = 0; a < d; ++a) lp.a.push_back(r.dx[a]);
        if (!space_only) lp.a.push_back(r.dt);
        lp.a.push_back(-r.w);
        lp.b.push_back(r.rhs);
    }
    const LpSolution sol = solve_lp(lp);
    if (!sol.feasible) return m_feas;

    SpatialVec b{};
    for (int a = 0; a < d; ++a) b[a] = sol.x[static_cast<std::size_t>(a)];
    const double c = space_only ? 0.0 : sol.x[static_cast<std::size_t>(d)];
    double verified = 0.0;
    for (const auto& r : rows) {
        double lin = c * r.dt;
        for (int a = 0; a < d; ++a) lin += b[a] * r.dx[a];
        const double need = lin - r.rhs;
        if (r.w > 0.0) {
            verified = std::max(verified, need / r.w);
        } else if (need > 0.0) {
            verified = std::numeric_limits<double>::infinity();
        }
    }
    if (verified < m_feas) {
        b_out = b;
        c_out = c;
        return verified;
    }
    return m_feas;
}

std::vector<double> signed_values(const GridFunction& u, bool above) {
    std::vector<double> v(u.values().begin(), u.values().end());
    if (above)
        for (double& x : v) x = -x;
    return v;
}

std::vector<std::size_t> all_nodes(const SpaceTimeGrid& g) {
    std::vector<std::size_t> out(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, hw);
    workers = std::min(workers, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

double minimal_opening(const GridFunction& u, std::size_t p0, const std::vector<std::size_t>& domain, bool above,
                       const TouchingOptions& opt, Paraboloid* witness) {
    const auto& g = u.grid();
    if (p0 >= g.size()) throw PreconditionError("node", "node index outside the grid");
    const auto v = signed_values(u, above);
    SpatialVec b{};
    double c = 0.0;
    const double m = opening_below(g, v, p0, domain, opt.space_only, b, c);
    if (witness) {
        const Point P = g.point(p0);
        witness->dim = g.dim();
        witness->A = u[p0];
        witness->C = above ? -c : c;
        for (int a = 0; a < g.dim(); ++a) witness->B[a] = above ? -b[a] : b[a];
        witness->M = m;
        witness->above = above;
        witness->x0 = P.x;
        witness->t0 = P.t;
    }
    return m;
}

bool touches_from_below(const GridFunction& u, std::size_t p0, double M, const std::vector<std::size_t>& domain,
                        const TouchingOptions& opt) {
    return minimal_opening(u, p0, domain, false, opt) <= M;
}

bool touches_from_above(const GridFunction& u, std::size_t p0, double M, const std::vector<std::size_t>& domain,
                        const TouchingOptions& opt) {
    return minimal_opening(u, p0, domain, true, opt) <= M;
}

OpeningTable compute_openings(const GridFunction& u, const ParabolicCube& k, const TouchingOptions& opt,
                              std::vector<std::size_t> domain) {
    const auto& g = u.grid();
    if (!region_within(g, k)) throw PreconditionError("outside", "cube is not contained in the grid");
    if (domain.empty()) domain = all_nodes(g);
    OpeningTable t;
    t.nodes = nodes_in(g, k);
    t.below.assign(t.nodes.size(), 0.0);
    t.above.assign(t.nodes.size(), 0.0);
    t.cube_measure = measure(g, t.nodes);
    t.cell_measure = g.cell_measure();
    t.domain_is_full_grid = domain.size() == g.size();
    const auto vb = signed_values(u, false);
    const auto va = signed_values(u, true);
    parallel_for(t.nodes.size(), opt.threads, [&](std::size_t i) {
        SpatialVec b{};
        double c = 0.0;
        t.below[i] = opening_below(g, vb, t.nodes[i], domain, opt.space_only, b, c);
        t.above[i] = opening_below(g, va, t.nodes[i], domain, opt.space_only, b, c);
    });
    return t;
}

GoodSetMask mask_at(const OpeningTable& table, double M) {
    GoodSetMask m;
    m.M = M;
    m.nodes = table.nodes;
    m.below.resize(table.nodes.size());
    m.above.resize(table.nodes.size());
    std::size_t good = 0;
    for (std::size_t i = 0; i < table.nodes.size(); ++i) {
        m.below[i] = table.below[i] <= M ? 1 : 0;
        m.above[i] = table.above[i] <= M ? 1 : 0;
        if (m.good(i)) ++good;
    }
    m.cube_measure = table.cube_measure;
    m.good_measure = static_cast<double>(good) * table.cell_measure;
    m.bad_measure = static_cast<double>(table.nodes.size() - good) * table.cell_measure;
    return m;
}

GoodSetMask good_set_mask(const GridFunction& u, double M, const ParabolicCube& k, const TouchingOptions& opt,
                          std::vector<std::size_t> domain) {
    return mask_at(compute_openings(u, k, opt, std::move(domain)), M);
}

std::vector<std::pair<int, std::size_t>> run_length(const std::vector<char>& mask) {
    std::vector<std::pair<int, std::size_t>> out;
    for (char c : mask) {
        const int v = c ? 1 : 0;
        if (!out.empty() && out.back().first == v) {
            ++out.back().second;
        } else {
            out.emplace_back(v, 1);
        }
    }
    return out;
}

double c11_bound(const GridFunction& u) {
    const auto& g = u.grid();
    if (g.dim() != 1) throw PreconditionError("dimension", "the discrete C^{1,1} bound is implemented for d = 1");
    double k2 = 0.0, kt = 0.0;
    const int nx = g.n_x(0);
    for (int k = 0; k < g.n_t(); ++k) {
        const auto s = u.slice(k);
        for (int i = 1; i + 1 < nx; ++i)
            k2 = std::max(k2, std::abs(s[static_cast<std::size_t>(i + 1)] - 2.0 * s[static_cast<std::size_t>(i)] +
                                       s[static_cast<std::size_t>(i - 1)]) /
                                  (g.h() * g.h()));
        if (k + 1 < g.n_t()) {
            const auto n = u.slice(k + 1);
            for (int i = 0; i < nx; ++i)
                kt = std::max(kt, std::abs(n[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>(i)]) / g.dt());
        }
    }
    return std::max(k2, kt);
}

ADecayReport a_decay(const std::vector<double>& openings, const std::vector<double>& measures) {
    if (openings.size() != measures.size()) throw PreconditionError("dimension", "openings and measures differ in length");
    ADecayReport rep;
    rep.openings = openings;
    rep.measures = measures;
    rep.empty = std::none_of(measures.begin(), measures.end(), [](double m) { return m > 0.0; });
    if (rep.empty) return rep;
    rep.fit = decay_exponent_fit(openings, measures);
    rep.delta = -rep.fit.exponent;
    return rep;
}

ADecayReport a_decay(const OpeningTable& table, const std::vector<double>& openings) {
    std::vector<double> measures;
    for (double M : openings) measures.push_back(mask_at(table, M).bad_measure);
    return a_decay(openings, measures);
}

AlphaBetaReport alpha_beta_sequences(const OpeningTable& table, const GridFunction& f, double M, double C1,
                                     double rho, int k_max, const std::vector<double>& radii, double p) {
    if (!(M > 1.0)) throw PreconditionError("opening", "M must exceed 1");
    if (!(C1 > 0.0)) throw PreconditionError("C1", "C1 must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw PreconditionError("rho", "rho must lie in (0, 1)");
    if (k_max < 1) throw PreconditionError("k_max", "k_max must be positive");
    if (table.nodes.size() < 100)
        throw PreconditionError("resolution", "K_1 holds fewer than 100 nodes; alpha_k would be unresolved");
    const auto& g = f.grid();
    const int d = g.dim();
    std::vector<double> pw(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pw[i] = std::pow(std::abs(f[i]), d + 1);
    const auto maximal = parabolic_maximal_field(GridFunction(g, pw), radii);

    AlphaBetaReport rep;
    rep.M = M;
    rep.C1 = C1;
    rep.rho = rho;
    rep.p = p;
    rep.domain_is_full_grid = table.domain_is_full_grid;
    for (int k = 1; k <= k_max; ++k) {
        AlphaBetaLevel lvl;
        lvl.k = k;
        const double mk = std::pow(M, k);
        const GoodSetMask mask = mask_at(table, mk);
        lvl.alpha = mask.bad_measure;
        lvl.alpha_nodes = static_cast<std::size_t>(std::llround(mask.bad_measure / table.cell_measure));
        lvl.resolved = lvl.alpha_nodes == 0 || lvl.alpha_nodes >= 10;
        const double threshold = std::pow(C1 * mk, d + 1);
        std::size_t cnt = 0;
        for (std::size_t n : table.nodes)
            if (maximal[n] >= threshold) ++cnt;
        lvl.beta = static_cast<double>(cnt) * table.cell_measure;
        rep.sum_alpha += std::pow(M, p * k) * lvl.alpha;
        rep.sum_beta += std::pow(M, p * k) * lvl.beta;
        rep.levels.push_back(lvl);
    }
    const double k1 = table.cube_measure > 0.0 ? table.cube_measure : 1.0;
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        auto& lvl = rep.levels[i];
        if (i + 1 < rep.levels.size()) {
            const auto& nx = rep.levels[i + 1];
            lvl.recursion = nx.alpha <= rho * (lvl.alpha + lvl.beta) + 1e-12 * k1;
        }
        // Envelope in fractions of |K_1|.
        double env = std::pow(rho, lvl.k);
        for (std::size_t j = 0; j < i; ++j) env += std::pow(rho, lvl.k - rep.levels[j].k) * rep.levels[j].beta / k1;
        lvl.envelope = lvl.alpha / k1 <= env + 1e-12;
    }
    return rep;
}

AlphaBetaReport alpha_beta_sequences(const GridFunction& u, const GridFunction& f, double M, double C1, double rho,
                                     int k_max, const std::vector<double>& radii, double p,
                                     const TouchingOptions& opt) {
    if (u.grid().size() != f.grid().size()) throw PreconditionError("dimension", "u and f live on different grids");
    const int d = u.grid().dim();
    const auto table = compute_openings(u, ParabolicCube{d, 1.0}, opt);
    return alpha_beta_sequences(table, f, M, C1, rho, k_max, radii, p);
}

// ---------------------------------------------------------------------------
// Covering lemma

CellSet::CellSet(int dim, int level) : dim_(dim), level_(level) {
    if (dim < 1 || dim > kMaxDim) throw PreconditionError("dimension", "dimension must be 1, 2 or 3");
    if (level < 0 || level > 6) throw PreconditionError("dyadic_level", "cell level must lie in [0, 6]");
    std::size_t n = static_cast<std::size_t>(time_cells());
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(cells_per_axis());
    bits_.assign(n, 0);
}

std::size_t CellSet::index(const DyadicCube& cell) const {
    if (cell.dim() != dim_ || cell.level() != level_) throw PreconditionError("not_aligned", "cell has the wrong level");
    std::size_t i = static_cast<std::size_t>(cell.index_t());
    for (int a = dim_ - 1; a >= 0; --a)
        i = i * static_cast<std::size_t>(cells_per_axis()) + static_cast<std::size_t>(cell.index_x()[a]);
    return i;
}

DyadicCube CellSet::cell(std::size_t i) const {
    std::array<std::int64_t, kMaxDim> ix{};
    const auto n = static_cast<std::size_t>(cells_per_axis());
    for (int a = 0; a < dim_; ++a) {
        ix[a] = static_cast<std::int64_t>(i % n);
        i /= n;
    }
    return DyadicCube(dim_, level_, ix, static_cast<std::int64_t>(i));
}

void CellSet::insert(const DyadicCube& cube) {
    if (cube.level() > level_) throw PreconditionError("not_aligned", "cube is finer than the cell level");
    insert_box(cube.bounds());
}

namespace {

struct CellRange {
    std::array<std::int64_t, kMaxDim> lo{}, hi{};
    std::int64_t tlo = 0, thi = 0;
};

bool box_range(const CellSet& s, const Box& box, CellRange& r) {
    const double side = std::ldexp(2.0, -s.level());
    const double tside = std::ldexp(1.0, -2 * s.level());
    for (int a = 0; a < s.dim(); ++a) {
        r.lo[a] = std::llround((box.x[a].lo + 1.0) / side);
        r.hi[a] = std::llround((box.x[a].hi + 1.0) / side);
        if (r.lo[a] < 0 || r.hi[a] > s.cells_per_axis() || r.lo[a] > r.hi[a]) return false;
    }
    r.tlo = std::llround((box.t.lo + 1.0) / tside);
    r.thi = std::llround((box.t.hi + 1.0) / tside);
    return r.tlo >= 0 && r.thi <= s.time_cells() && r.tlo <= r.thi;
}

template <class Fn>
void for_cells(const CellSet& s, const CellRange& r, Fn fn) {
    const auto n = static_cast<std::size_t>(s.cells_per_axis());
    std::array<std::int64_t, kMaxDim> hi = r.hi, lo = r.lo;
    for (int a = s.dim(); a < kMaxDim; ++a) lo[a] = 0, hi[a] = 1;
    for (std::int64_t t = r.tlo; t < r.thi; ++t)
        for (std::int64_t z = lo[2]; z < hi[2]; ++z)
            for (std::int64_t y = lo[1]; y < hi[1]; ++y)
                for (std::int64_t x = lo[0]; x < hi[0]; ++x) {
                    std::size_t i = static_cast<std::size_t>(t);
                    const std::int64_t c[3] = {x, y, z};
                    for (int a = s.dim() - 1; a >= 0; --a) i = i * n + static_cast<std::size_t>(c[a]);
                    fn(i);
                }
}

}  // namespace

bool CellSet::insert_box(const Box& box) {
    CellRange r;
    if (!box_range(*this, box, r)) return false;
    for_cells(*this, r, [&](std::size_t i) { bits_[i] = 1; });
    return true;
}

bool CellSet::covers_box(const Box& box) const {
    CellRange r;
    if (!box_range(*this, box, r)) return false;
    bool all = true;
    for_cells(*this, r, [&](std::size_t i) { all = all && bits_[i]; });
    return all;
}

std::size_t CellSet::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

std::size_t CellSet::count_in(const DyadicCube& cube) const {
    CellRange r;
    if (!box_range(*this, cube.bounds(), r)) return 0;
    std::size_t c = 0;
    for_cells(*this, r, [&](std::size_t i) { c += bits_[i] ? 1 : 0; });
    return c;
}

double CellSet::cell_measure() const { return DyadicCube::root(dim_).measure() / static_cast<double>(bits_.size()); }

double CellSet::measure() const { return static_cast<double>(count()) * cell_measure(); }

bool CellSet::subset_of(const CellSet& other) const {
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !other.bits_[i]) return false;
    return true;
}

namespace {

/// Every dyadic cube at levels 1..L.
std::vector<DyadicCube> cubes_up_to(int dim, int level) {
    std::vector<DyadicCube> out;
    std::vector<DyadicCube> layer{DyadicCube::root(dim)};
    for (int j = 1; j <= level; ++j) {
        std::vector<DyadicCube> next;
        for (const auto& c : layer)
            for (const auto& ch : c.subdivide()) next.push_back(ch);
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

std::size_t cells_in(const CellSet& s, const DyadicCube& c) {
    std::size_t n = std::size_t{1} << (2 * (s.level() - c.level()));
    for (int a = 0; a < s.dim(); ++a) n <<= (s.level() - c.level());
    return n;
}

}  // namespace

CoveringReport covering_lemma_verify(const CellSet& a, const CellSet& b, double rho, int m) {
    if (a.dim() != b.dim() || a.level() != b.level())
        throw PreconditionError("not_aligned", "A and B must live on the same dyadic level");
    if (!a.subset_of(b)) throw PreconditionError("not_subset", "A is not contained in B");
    if (!(rho > 0.0 && rho < 1.0 + 1e-15)) throw PreconditionError("rho", "rho must lie in (0, 1]");
    if (m < 1) throw PreconditionError("stack", "m must be positive");
    CoveringReport rep;
    rep.measure_a = a.measure();
    rep.measure_b = b.measure();
    rep.bound = rho * (m + 1.0) / m * rep.measure_b;
    const double total = static_cast<double>(a.size());
    rep.hypothesis_i = static_cast<double>(a.count()) <= rho * total * (1.0 + 1e-12);
    rep.hypothesis_ii = true;
    for (const auto& k : cubes_up_to(a.dim(), a.level())) {
        const double inside = static_cast<double>(a.count_in(k));
        if (inside > rho * static_cast<double>(cells_in(a, k)) * (1.0 + 1e-12)) {
            ++rep.dense_cubes;
            if (!b.covers_box(k.stack(m))) rep.hypothesis_ii = false;
        }
    }
    if (rep.hypothesis_i && rep.hypothesis_ii) {
        rep.conclusion_checked = true;
        rep.conclusion = rep.measure_a <= rep.bound * (1.0 + 1e-12);
    }
    return rep;
}

std::vector<CoveringInstance> random_covering_instances(int dim, int level, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto cubes = cubes_up_to(dim, level);
    std::vector<CoveringInstance> out;
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > 1000 * count + 1000) throw ConvergenceError("could not draw enough covering instances");
        const double rho = 0.05 + 0.9 * unit(rng);
        const int m = 1 + static_cast<int>(unit(rng) * 4.0);
        CellSet a(dim, level);
        const int seeds = static_cast<int>(unit(rng) * 6.0);
        for (int s = 0; s < seeds; ++s) {
            const auto& c = cubes[static_cast<std::size_t>(unit(rng) * static_cast<double>(cubes.size()))];
            const double density = 0.2 + 0.8 * unit(rng);
            CellRange r;
            box_range(a, c.bounds(), r);
            for_cells(a, r, [&](std::size_t i) {
                if (unit(rng) < density) a.insert(i);
            });
        }
        CellSet b = a;
        bool ok = true;
        for (const auto& k : cubes) {
            const double inside = static_cast<double>(a.count_in(k));
            if (inside > rho * static_cast<double>(cells_in(a, k)) * (1.0 + 1e-12)) {
                if (!b.insert_box(k.stack(m))) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok || static_cast<double>(a.count()) > rho * static_cast<double>(a.size())) continue;
        out.push_back({std::move(a), std::move(b), rho, m});
    }
    return out;
}

CoveringSweep covering_lemma_sweep(int dim, int level, std::size_t count, std::uint64_t seed) {
    CoveringSweep sw;
    for (const auto& inst : random_covering_instances(dim, level, count, seed)) {
        const auto rep = covering_lemma_verify(inst.a, inst.b, inst.rho, inst.m);
        ++sw.instances;
        if (rep.hypothesis_i && rep.hypothesis_ii && rep.conclusion) ++sw.passed;
    }
    return sw;
}

}  // namespace aperture
