#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace aperture {

inline constexpr int kMaxDim = 3;
using SpatialVec = std::array<double, kMaxDim>;

/// A space-time point (x, t) with d = `dim` active spatial coordinates.
struct Point {
    int dim = 1;
    SpatialVec x{};
    double t = 0.0;

    static Point make(std::span<const double> x, double t);
    static Point make(std::initializer_list<double> x, double t);
};

/// |x_p - x_q| + sqrt(|t_p - t_q|). Throws PreconditionError on dimension mismatch.
double parabolic_distance(const Point& p, const Point& q);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Q_r(x0, t0) = B_r(x0) x (t0 - r^2, t0]; the ball is open.
struct ParabolicCylinder {
    Point center;
    double radius = 1.0;
};

/// K_r = [-r, r]^d x [-r^2, 0], closed.
struct ParabolicCube {
    int dim = 1;
    double r = 1.0;
};

/// Closed axis-aligned space-time box.
struct Box {
    int dim = 1;
    std::array<Interval, kMaxDim> x{};
    Interval t{};

    double measure() const;
};

bool contains(const ParabolicCylinder& q, const Point& p, double tol = 0.0);
bool contains(const ParabolicCube& k, const Point& p, double tol = 0.0);
bool contains(const Box& b, const Point& p, double tol = 0.0);

Box bounding_box(const ParabolicCylinder& q);
Box as_box(const ParabolicCube& k);

/// A node of the parabolic dyadic tree over K_1. Level k cubes have spatial
/// side 2^(1-k) and temporal side 4^(-k); every cube has 2^(d+2) children.
class DyadicCube {
public:
    static DyadicCube root(int dim);
    DyadicCube(int dim, int level, std::array<std::int64_t, kMaxDim> index_x, std::int64_t index_t);

    int dim() const { return dim_; }
    int level() const { return level_; }
    const std::array<std::int64_t, kMaxDim>& index_x() const { return index_x_; }
    std::int64_t index_t() const { return index_t_; }

    Box bounds() const;
    double measure() const;

    std::vector<DyadicCube> subdivide() const;
    /// Parent cube. Throws PreconditionError at level 0.
    DyadicCube predecessor() const;
    /// K-bar^m: m copies of the predecessor stacked on top of it in time.
    Box stack(int m) const;
    bool is_ancestor_of(const DyadicCube& other) const;

    friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
    friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;

private:
    int dim_ = 1;
    int level_ = 0;
    std::array<std::int64_t, kMaxDim> index_x_{};
    std::int64_t index_t_ = 0;
};

bool contains(const DyadicCube& k, const Point& p, double tol = 0.0);

/// Lebesgue measure of the union of a set of dyadic cubes.
double measure(std::span<const DyadicCube> cubes);

/// Uniform tensor-product space-time lattice. Spatial nodes are lo + i*h on
/// every active axis; time levels are t_k = -(n_t - 1 - k) * dt so that the
/// last level sits at t = 0.
class SpaceTimeGrid {
public:
    SpaceTimeGrid() = default;
    SpaceTimeGrid(int dim, std::array<Interval, kMaxDim> axes, double h, double dt, int n_t);

    /// Grid over `domain` (spatial box x [t.lo, 0]). The time interval length
    /// must be an integer multiple of dt up to rounding; spatial lengths must be
    /// integer multiples of h.
    static SpaceTimeGrid covering(const Box& domain, double h, double dt);

    int dim() const { return dim_; }
    double h() const { return h_; }
    double dt() const { return dt_; }
    int n_t() const { return n_t_; }
    int n_x(int axis) const { return n_x_[axis]; }
    const Interval& axis(int a) const { return axes_[a]; }
    std::size_t spatial_size() const { return spatial_size_; }
    std::size_t size() const { return spatial_size_ * static_cast<std::size_t>(n_t_); }
    double cell_measure() const;

    double coord(int axis, int i) const { return axes_[axis].lo + i * h_; }
    double time(int k) const { return -static_cast<double>(n_t_ - 1 - k) * dt_; }

    /// Spatial linear index; axis 0 varies fastest.
    std::size_t spatial_index(const std::array<int, kMaxDim>& idx) const;
    std::array<int, kMaxDim> spatial_multi_index(std::size_t s) const;
    std::size_t node(int k, std::size_t s) const { return static_cast<std::size_t>(k) * spatial_size_ + s; }
    int time_level(std::size_t node) const { return static_cast<int>(node / spatial_size_); }
    std::size_t spatial_of(std::size_t node) const { return node % spatial_size_; }
    /// Linear stride between spatial neighbours along `axis`.
    std::size_t stride(int axis) const { return strides_[axis]; }

    Point point(std::size_t node) const;
    SpatialVec spatial_point(std::size_t s) const;

    /// Nearest node index to coordinate value along an axis (clamped).
    int nearest_index(int axis, double x) const;
    int nearest_level(double t) const;
    Box bounds() const;

    /// True when the node at spatial index s is on the spatial boundary of the box.
    bool on_spatial_boundary(std::size_t s) const;

private:
    int dim_ = 1;
    std::array<Interval, kMaxDim> axes_{};
    double h_ = 1.0;
    double dt_ = 1.0;
    int n_t_ = 1;
    std::array<int, kMaxDim> n_x_{1, 1, 1};
    std::array<std::size_t, kMaxDim> strides_{1, 1, 1};
    std::size_t spatial_size_ = 1;
};

using Region = std::variant<Box, ParabolicCylinder, ParabolicCube>;

/// Node indices of `grid` lying in `region`. Endpoints are matched with a
/// tolerance of 1e-9 of the grid spacing.
std::vector<std::size_t> nodes_in(const SpaceTimeGrid& grid, const Region& region);
/// True when every node position of `region` lies inside the grid's bounds.
bool region_within(const SpaceTimeGrid& grid, const Region& region);

/// Cell-counting measure: node count x h^d x dt.
double measure(const SpaceTimeGrid& grid, std::span<const std::size_t> nodes);

/// Values of a scalar field at every node of a grid.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(SpaceTimeGrid grid, double fill = 0.0);
    GridFunction(SpaceTimeGrid grid, std::vector<double> values);

    static GridFunction sample(const SpaceTimeGrid& grid,
                               const std::function<double(const SpatialVec&, double)>& fn);

    const SpaceTimeGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t node) const { return values_[node]; }
    double& operator[](std::size_t node) { return values_[node]; }

    std::span<const double> slice(int k) const;
    std::span<double> slice(int k);

    GridFunction scaled(double c) const;
    GridFunction shifted(double c) const;

private:
    SpaceTimeGrid grid_;
    std::vector<double> values_;
};

}  // namespace aperture
