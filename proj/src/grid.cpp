#include "aperture/grid.hpp"

#include "aperture/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace aperture {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) {
        throw PreconditionError("dimension", "spatial dimension must be 1, 2 or 3, got " + std::to_string(dim));
    }
}

double squared_spatial_distance(const Point& p, const SpatialVec& c, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double dx = p.x[i] - c[i];
        s += dx * dx;
    }
    return s;
}

}  // namespace

Point Point::make(std::span<const double> x, double t) {
    check_dim(static_cast<int>(x.size()));
    Point p;
    p.dim = static_cast<int>(x.size());
    std::copy(x.begin(), x.end(), p.x.begin());
    p.t = t;
    return p;
}

Point Point::make(std::initializer_list<double> x, double t) {
    return make(std::span<const double>(x.begin(), x.size()), t);
}

double parabolic_distance(const Point& p, const Point& q) {
    if (p.dim != q.dim) {
        throw PreconditionError("dimension", "parabolic_distance: points have different dimensions");
    }
    SpatialVec c = q.x;
    return std::sqrt(squared_spatial_distance(p, c, p.dim)) + std::sqrt(std::abs(p.t - q.t));
}

double Box::measure() const {
    double m = t.length();
    for (int i = 0; i < dim; ++i) m *= x[i].length();
    return m;
}

bool contains(const ParabolicCylinder& q, const Point& p, double tol) {
    if (p.dim != q.center.dim) return false;
    const double r = q.radius;
    const double dist = std::sqrt(squared_spatial_distance(p, q.center.x, p.dim));
    if (!(dist < r - tol)) return false;
    return p.t > q.center.t - r * r + tol && p.t <= q.center.t + tol;
}

bool contains(const ParabolicCube& k, const Point& p, double tol) {
    return contains(as_box(k), p, tol);
}

bool contains(const Box& b, const Point& p, double tol) {
    if (p.dim != b.dim) return false;
    for (int i = 0; i < b.dim; ++i) {
        if (p.x[i] < b.x[i].lo - tol || p.x[i] > b.x[i].hi + tol) return false;
    }
    return p.t >= b.t.lo - tol && p.t <= b.t.hi + tol;
}

Box bounding_box(const ParabolicCylinder& q) {
    Box b;
    b.dim = q.center.dim;
    for (int i = 0; i < b.dim; ++i) b.x[i] = {q.center.x[i] - q.radius, q.center.x[i] + q.radius};
    b.t = {q.center.t - q.radius * q.radius, q.center.t};
    return b;
}

Box as_box(const ParabolicCube& k) {
    Box b;
    b.dim = k.dim;
    for (int i = 0; i < b.dim; ++i) b.x[i] = {-k.r, k.r};
    b.t = {-k.r * k.r, 0.0};
    return b;
}

// ---------------------------------------------------------------------------
// Dyadic cubes

DyadicCube DyadicCube::root(int dim) {
    check_dim(dim);
    return DyadicCube(dim, 0, {0, 0, 0}, 0);
}

DyadicCube::DyadicCube(int dim, int level, std::array<std::int64_t, kMaxDim> index_x, std::int64_t index_t)
    : dim_(dim), level_(level), index_x_(index_x), index_t_(index_t) {
    check_dim(dim);
    if (level < 0 || level > 20) throw PreconditionError("dyadic_level", "dyadic level out of range");
    const std::int64_t nx = std::int64_t{1} << level;
    const std::int64_t nt = std::int64_t{1} << (2 * level);
    for (int i = 0; i < kMaxDim; ++i) {
        if (i >= dim) {
            index_x_[i] = 0;
        } else if (index_x_[i] < 0 || index_x_[i] >= nx) {
            throw PreconditionError("dyadic_index", "spatial dyadic index out of range");
        }
    }
    if (index_t < 0 || index_t >= nt) throw PreconditionError("dyadic_index", "temporal dyadic index out of range");
}

Box DyadicCube::bounds() const {
    Box b;
    b.dim = dim_;
    const double side = std::ldexp(2.0, -level_);
    const double tside = std::ldexp(1.0, -2 * level_);
    for (int i = 0; i < dim_; ++i) {
        const double lo = -1.0 + static_cast<double>(index_x_[i]) * side;
        b.x[i] = {lo, lo + side};
    }
    const double tlo = -1.0 + static_cast<double>(index_t_) * tside;
    b.t = {tlo, tlo + tside};
    return b;
}

double DyadicCube::measure() const { return bounds().measure(); }

std::vector<DyadicCube> DyadicCube::subdivide() const {
    std::vector<DyadicCube> out;
    const int nspatial = 1 << dim_;
    out.reserve(static_cast<std::size_t>(nspatial) * 4);
    for (int q = 0; q < 4; ++q) {
        for (int bits = 0; bits < nspatial; ++bits) {
            std::array<std::int64_t, kMaxDim> idx{};
            for (int i = 0; i < dim_; ++i) idx[i] = 2 * index_x_[i] + ((bits >> i) & 1);
            out.emplace_back(dim_, level_ + 1, idx, 4 * index_t_ + q);
        }
    }
    return out;
}

DyadicCube DyadicCube::predecessor() const {
    if (level_ == 0) throw PreconditionError("dyadic_level", "K_1 has no predecessor");
    std::array<std::int64_t, kMaxDim> idx{};
    for (int i = 0; i < dim_; ++i) idx[i] = index_x_[i] / 2;
    return DyadicCube(dim_, level_ - 1, idx, index_t_ / 4);
}

Box DyadicCube::stack(int m) const {
    if (m < 1) throw PreconditionError("stack", "stack height must be positive");
    Box b = predecessor().bounds();
    const double a = b.t.lo;
    const double top = b.t.hi;
    b.t = {top, top + m * (top - a)};
    return b;
}

bool DyadicCube::is_ancestor_of(const DyadicCube& other) const {
    if (other.dim_ != dim_ || other.level_ <= level_) return false;
    const int shift = other.level_ - level_;
    for (int i = 0; i < dim_; ++i) {
        if ((other.index_x_[i] >> shift) != index_x_[i]) return false;
    }
    return (other.index_t_ >> (2 * shift)) == index_t_;
}

bool contains(const DyadicCube& k, const Point& p, double tol) { return contains(k.bounds(), p, tol); }

double measure(std::span<const DyadicCube> cubes) {
    std::vector<DyadicCube> sorted(cubes.begin(), cubes.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const DyadicCube& a, const DyadicCube& b) { return a.level() < b.level() || (a.level() == b.level() && a < b); });
    std::set<DyadicCube> kept;
    double total = 0.0;
    for (const auto& c : sorted) {
        if (kept.count(c)) continue;
        bool covered = false;
        DyadicCube walk = c;
        while (walk.level() > 0) {
            walk = walk.predecessor();
            if (kept.count(walk)) {
                covered = true;
                break;
            }
        }
        if (covered) continue;
        kept.insert(c);
        total += c.measure();
    }
    return total;
}

// ---------------------------------------------------------------------------
// Grid

SpaceTimeGrid::SpaceTimeGrid(int dim, std::array<Interval, kMaxDim> axes, double h, double dt, int n_t)
    : dim_(dim), axes_(axes), h_(h), dt_(dt), n_t_(n_t) {
    check_dim(dim);
    if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("grid", "grid spacing h must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("grid", "time step dt must be positive");
    if (n_t < 1) throw PreconditionError("grid", "grid needs at least one time level");
    spatial_size_ = 1;
    for (int a = 0; a < kMaxDim; ++a) {
        if (a >= dim) {
            axes_[a] = {0.0, 0.0};
            n_x_[a] = 1;
        } else {
            const double len = axes_[a].length();
            if (!(len >= 0.0)) throw PreconditionError("grid", "axis interval is reversed");
            const double cells = len / h;
            const long n = std::lround(cells);
            if (std::abs(cells - static_cast<double>(n)) > 1e-8 * std::max(1.0, cells)) {
                throw PreconditionError("grid", "axis length is not an integer multiple of h");
            }
            n_x_[a] = static_cast<int>(n) + 1;
        }
        strides_[a] = spatial_size_;
        spatial_size_ *= static_cast<std::size_t>(n_x_[a]);
    }
}

SpaceTimeGrid SpaceTimeGrid::covering(const Box& domain, double h, double dt) {
    if (std::abs(domain.t.hi) > 1e-12) {
        throw PreconditionError("grid", "time domain must end at t = 0");
    }
    const double steps = domain.t.length() / dt;
    const long n = std::lround(steps);
    if (n < 0 || std::abs(steps - static_cast<double>(n)) > 1e-8 * std::max(1.0, steps)) {
        throw PreconditionError("grid", "time interval is not an integer multiple of dt");
    }
    return SpaceTimeGrid(domain.dim, domain.x, h, dt, static_cast<int>(n) + 1);
}

double SpaceTimeGrid::cell_measure() const { return std::pow(h_, dim_) * dt_; }

std::size_t SpaceTimeGrid::spatial_index(const std::array<int, kMaxDim>& idx) const {
    std::size_t s = 0;
    for (int a = 0; a < dim_; ++a) s += static_cast<std::size_t>(idx[a]) * strides_[a];
    return s;
}

std::array<int, kMaxDim> SpaceTimeGrid::spatial_multi_index(std::size_t s) const {
    std::array<int, kMaxDim> idx{};
    for (int a = 0; a < dim_; ++a) {
        idx[a] = static_cast<int>(s % static_cast<std::size_t>(n_x_[a]));
        s /= static_cast<std::size_t>(n_x_[a]);
    }
    return idx;
}

SpatialVec SpaceTimeGrid::spatial_point(std::size_t s) const {
    const auto idx = spatial_multi_index(s);
    SpatialVec x{};
    for (int a = 0; a < dim_; ++a) x[a] = coord(a, idx[a]);
    return x;
}

Point SpaceTimeGrid::point(std::size_t node) const {
    Point p;
    p.dim = dim_;
    p.x = spatial_point(spatial_of(node));
    p.t = time(time_level(node));
    return p;
}

int SpaceTimeGrid::nearest_index(int axis, double x) const {
    const long i = std::lround((x - axes_[axis].lo) / h_);
    return static_cast<int>(std::clamp<long>(i, 0, n_x_[axis] - 1));
}

int SpaceTimeGrid::nearest_level(double t) const {
    const long k = std::lround(static_cast<double>(n_t_ - 1) + t / dt_);
    return static_cast<int>(std::clamp<long>(k, 0, n_t_ - 1));
}

Box SpaceTimeGrid::bounds() const {
    Box b;
    b.dim = dim_;
    for (int a = 0; a < dim_; ++a) b.x[a] = {axes_[a].lo, coord(a, n_x_[a] - 1)};
    b.t = {time(0), 0.0};
    return b;
}

bool SpaceTimeGrid::on_spatial_boundary(std::size_t s) const {
    const auto idx = spatial_multi_index(s);
    for (int a = 0; a < dim_; ++a) {
        if (idx[a] == 0 || idx[a] == n_x_[a] - 1) return true;
    }
    return false;
}

namespace {

Box region_box(const Region& region) {
    return std::visit(
        [](const auto& r) -> Box {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Box>) {
                return r;
            } else if constexpr (std::is_same_v<T, ParabolicCylinder>) {
                return bounding_box(r);
            } else {
                return as_box(r);
            }
        },
        region);
}

int region_dim(const Region& region) { return region_box(region).dim; }

}  // namespace

std::vector<std::size_t> nodes_in(const SpaceTimeGrid& grid, const Region& region) {
    if (region_dim(region) != grid.dim()) {
        throw PreconditionError("dimension", "region and grid have different dimensions");
    }
    const Box bb = region_box(region);
    const double tol_x = 1e-9 * grid.h();
    const double tol_t = 1e-9 * grid.dt();
    std::array<int, kMaxDim> lo{0, 0, 0};
    std::array<int, kMaxDim> hi{0, 0, 0};
    for (int a = 0; a < grid.dim(); ++a) {
        const double l = (bb.x[a].lo - grid.axis(a).lo) / grid.h();
        const double u = (bb.x[a].hi - grid.axis(a).lo) / grid.h();
        lo[a] = std::max(0, static_cast<int>(std::floor(l)) - 1);
        hi[a] = std::min(grid.n_x(a) - 1, static_cast<int>(std::ceil(u)) + 1);
    }
    const int k_lo = std::max(0, grid.nearest_level(bb.t.lo) - 1);
    const int k_hi = std::min(grid.n_t() - 1, grid.nearest_level(bb.t.hi) + 1);

    std::vector<std::size_t> out;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double t = grid.time(k);
        if (t < bb.t.lo - 1e-6 * grid.dt() || t > bb.t.hi + 1e-6 * grid.dt()) continue;
        for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
            for (int i1 = lo[1]; i1 <= hi[1]; ++i1) {
                for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
                    const std::array<int, kMaxDim> idx{i0, i1, i2};
                    const std::size_t s = grid.spatial_index(idx);
                    const std::size_t node = grid.node(k, s);
                    const Point p = grid.point(node);
                    const bool in = std::visit(
                        [&](const auto& r) {
                            using T = std::decay_t<decltype(r)>;
                            if constexpr (std::is_same_v<T, ParabolicCylinder>) {
                                // Spatial and temporal tolerances differ; test separately.
                                const double dist = std::sqrt(squared_spatial_distance(p, r.center.x, p.dim));
                                if (!(dist < r.radius - tol_x)) return false;
                                return p.t > r.center.t - r.radius * r.radius + tol_t && p.t <= r.center.t + tol_t;
                            } else {
                                const Box b = region_box(r);
                                for (int a = 0; a < b.dim; ++a) {
                                    if (p.x[a] < b.x[a].lo - tol_x || p.x[a] > b.x[a].hi + tol_x) return false;
                                }
                                return p.t >= b.t.lo - tol_t && p.t <= b.t.hi + tol_t;
                            }
                        },
                        region);
                    if (in) out.push_back(node);
                }
            }
        }
    }
    return out;
}

bool region_within(const SpaceTimeGrid& grid, const Region& region) {
    const Box bb = region_box(region);
    const Box gb = grid.bounds();
    const double tol_x = 1e-9 * grid.h();
    const double tol_t = 1e-9 * grid.dt();
    for (int a = 0; a < grid.dim(); ++a) {
        if (bb.x[a].lo < gb.x[a].lo - tol_x || bb.x[a].hi > gb.x[a].hi + tol_x) return false;
    }
    return bb.t.lo >= gb.t.lo - tol_t && bb.t.hi <= gb.t.hi + tol_t;
}

double measure(const SpaceTimeGrid& grid, std::span<const std::size_t> nodes) {
    return static_cast<double>(nodes.size()) * grid.cell_measure();
}

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(SpaceTimeGrid grid, double fill) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

GridFunction::GridFunction(SpaceTimeGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw PreconditionError("grid_function", "value count does not match the grid node count");
    }
}

GridFunction GridFunction::sample(const SpaceTimeGrid& grid,
                                  const std::function<double(const SpatialVec&, double)>& fn) {
    GridFunction u(grid);
    for (int k = 0; k < grid.n_t(); ++k) {
        const double t = grid.time(k);
        for (std::size_t s = 0; s < grid.spatial_size(); ++s) {
            u.values_[grid.node(k, s)] = fn(grid.spatial_point(s), t);
        }
    }
    return u;
}

std::span<const double> GridFunction::slice(int k) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(k) * grid_.spatial_size(),
                                                    grid_.spatial_size());
}

std::span<double> GridFunction::slice(int k) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(k) * grid_.spatial_size(),
                                              grid_.spatial_size());
}

GridFunction GridFunction::scaled(double c) const {
    GridFunction out = *this;
    for (double& v : out.values_) v *= c;
    return out;
}

GridFunction GridFunction::shifted(double c) const {
    GridFunction out = *this;
    for (double& v : out.values_) v += c;
    return out;
}

}  // namespace aperture
