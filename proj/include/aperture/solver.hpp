#pragma once

#include "aperture/grid.hpp"
#include "aperture/operators.hpp"

#include <optional>
#include <span>
#include <vector>

namespace aperture {

/// d_t u - F(x, t, D^2 u) = f on a box (optionally intersected with a ball),
/// with Dirichlet data g on the lateral boundary and at the initial time.
struct ProblemSpec {
    OperatorSpec op;
    ScalarField source;
    ScalarField boundary;
    /// Spatial box times [t.lo, 0]; t.hi must be 0.
    Box domain;
    /// When set, nodes with |x - center| >= radius are treated as boundary.
    std::optional<ParabolicCylinder> ball;
};

/// Rewrites the problem so that F(0,0,0) = f(0,0) = 0. With F0 = F(0,0,0) and
/// c = f(0,0) + F0 the operator becomes F - F0, the source f + F0 - c and
/// the boundary data g - c t; the new unknown is u - c t. Returns c through
/// `shift`.
ProblemSpec normalize_problem(const ProblemSpec& spec, double* shift = nullptr);

struct SchemeConfig {
    double h = 1.0 / 32.0;
    /// dt <= 0 picks the largest step allowed by cfl_safety.
    double dt = 0.0;
    double cfl_safety = 0.9;
    /// Keep every store_every-th step. Ignored when store_levels > 0.
    int store_every = 1;
    /// When positive, the step count is rounded up to a multiple of
    /// store_levels - 1 and exactly store_levels time levels are kept.
    int store_levels = 0;
};

/// Largest dt for which the explicit step is monotone: h^2 / (2 d Lambda).
double cfl_limit(double h, int dim, double Lambda);

/// Second central differences at an interior node; throws PreconditionError
/// ("stencil") at nodes without a full stencil.
SymmetricMatrix discrete_hessian(const GridFunction& u, std::size_t node);
SymmetricMatrix discrete_hessian(const SpaceTimeGrid& grid, std::span<const double> slice, std::size_t s);
/// Central first differences; same stencil requirement.
SpatialVec discrete_gradient(const SpaceTimeGrid& grid, std::span<const double> slice, std::size_t s);

/// One explicit step from `un` at time tn to `out` at tn + dt. `grid`
/// provides the spatial layout. Throws CflError when dt exceeds cfl_limit
/// (with a relative slack of 1e-12) and NumericError on non-finite output.
void step(const ProblemSpec& spec, const SpaceTimeGrid& grid, std::span<const double> un, double tn, double dt,
          std::span<double> out);

/// Per spatial node: true where the value is prescribed by boundary data.
std::vector<char> boundary_mask(const ProblemSpec& spec, const SpaceTimeGrid& grid);

struct ClassResidual {
    /// max of (d_t u - M+(D^2 u) - f_bound)^+ over interior nodes.
    double lower = 0.0;
    /// max of (M-(D^2 u) - d_t u - f_bound)^+ over interior nodes.
    double upper = 0.0;
    double f_bound = 0.0;
    std::size_t nodes = 0;
};

/// Discrete S-class membership with forward time differences.
ClassResidual class_residual(const GridFunction& u, const EllipticityPair& pair, double f_bound,
                             const std::vector<char>* boundary = nullptr);

struct SolveStats {
    long steps = 0;
    double dt_step = 0.0;
    int store_every = 1;
    double wall_seconds = 0.0;
};

struct SolveResult {
    GridFunction u;
    std::vector<char> boundary;
    ClassResidual residual;
    SolveStats stats;
    /// sup over every step of the prescribed (parabolic-boundary) values.
    double boundary_sup = 0.0;
    /// sup and L^inf norm of f_eff = f + F(., ., 0) over interior nodes of all steps.
    double source_sup = 0.0;
    double source_linf = 0.0;
    /// L^{d+1} norm of f_eff over the stored interior nodes.
    double source_ld1 = 0.0;
};

SolveResult solve(const ProblemSpec& spec, const SchemeConfig& cfg);

struct MaxPrincipleReport {
    /// Assertion applies when f_eff <= 0 everywhere.
    bool applicable = false;
    bool pass = true;
    double interior_sup = 0.0;
    double boundary_sup = 0.0;
    double excess = 0.0;
    double source_ld1 = 0.0;
    /// excess / |f_eff|_{L^{d+1}}; logged only.
    double excess_ratio = 0.0;
};

/// sup u <= sup over the parabolic boundary + 1e-12.
MaxPrincipleReport maximum_principle_check(const SolveResult& result);

struct CaloricDerivativeReport {
    int k = 0;
    std::array<int, kMaxDim> beta{};
    std::vector<double> radii;
    std::vector<double> derivatives;
    std::vector<double> sup_norms;
    std::vector<double> ratios;
    double spread = 0.0;
    bool pass = false;
    double heat_residual = 0.0;
};

/// |d_t^k D^beta h(0,0)| R^(2k+|beta|) / |h|_{L^inf(Q_R)} for each R; the
/// time derivative is a backward difference at t = 0. Passes when the ratios
/// stay within a factor 100 of each other. Throws PreconditionError
/// ("not_caloric") when max |d_t h - Lap h| / max(1, max |Lap h|) over Q_R
/// exceeds `tol`.
CaloricDerivativeReport caloric_derivative_check(const GridFunction& h, const std::vector<double>& radii, int k,
                                                 const std::array<int, kMaxDim>& beta, double tol = 1e-2);

}  // namespace aperture
