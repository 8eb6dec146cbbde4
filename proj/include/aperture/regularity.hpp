#pragma once

#include "aperture/grid.hpp"
#include "aperture/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aperture {

/// 1/2 x^T D x + C t + B.x + A in coordinates relative to (center, t0).
struct QuadraticPolynomial {
    int dim = 1;
    double A = 0.0;
    SpatialVec B{};
    double C = 0.0;
    SymmetricMatrix D{1};
    SpatialVec center{};
    double t0 = 0.0;

    double operator()(const SpatialVec& x, double t) const;
    /// Number of free coefficients: 2 + d + d(d+1)/2.
    static int dimension(int d) { return 2 + d + d * (d + 1) / 2; }
};

/// B.x + A (no time dependence).
struct AffineFunction {
    int dim = 1;
    double A = 0.0;
    SpatialVec B{};

    double operator()(const SpatialVec& x) const;
};

struct DecayFit {
    double constant = 0.0;
    double exponent = 0.0;
    double r2 = 0.0;
    std::vector<double> scales;
    std::vector<double> values;
};

/// Least squares of log(value) on log(scale). Values at or below 1e-15 are
/// dropped; throws PreconditionError("too_few_scales") when fewer than 3 remain.
DecayFit decay_exponent_fit(const std::vector<double>& scales, const std::vector<double>& values);

struct HolderOptions {
    /// Full enumeration when the region has at most this many pairs.
    std::size_t pair_budget = 4'000'000;
    std::uint64_t seed = 1;
};

/// max |u(p) - u(q)| / dist(p, q)^alpha over node pairs of `region`. The
/// sampled mode compares every node with its neighbours at dyadic index
/// offsets along each axis and in time, then adds seeded random pairs.
double holder_seminorm(const GridFunction& u, double alpha, const Region& region, const HolderOptions& opt = {});

/// [d_t u]_alpha + max_ij [D_ij u]_alpha over the region nodes that carry a
/// full stencil. d_t is a forward difference (backward on the last level).
double c2alpha_seminorm(const GridFunction& u, double alpha, const Region& region, const HolderOptions& opt = {});

struct CampanatoLevel {
    double radius = 0.0;
    QuadraticPolynomial fit;
    double sup_residual = 0.0;
    double normalized = 0.0;
    std::size_t nodes = 0;
};

struct CampanatoReport {
    double value = 0.0;
    std::vector<CampanatoLevel> levels;
};

struct CampanatoOptions {
    /// Exact Chebyshev fit by linear programming (d = 1 only).
    bool exact = false;
};

/// max over radii of inf_P |u - P|_{L^inf(Q_rho)} / rho^(2+alpha), with the
/// inf replaced by least squares followed by a midrange shift of A.
CampanatoReport campanato_seminorm(const GridFunction& u, double alpha, const Point& center,
                                   const std::vector<double>& radii, const CampanatoOptions& opt = {});
/// Max of campanato_seminorm over several centers.
CampanatoReport campanato_seminorm(const GridFunction& u, double alpha, const std::vector<Point>& centers,
                                   const std::vector<double>& radii, const CampanatoOptions& opt = {});

/// Least squares fit over the nodes of `cylinder` subject to
/// C = F(0, 0, D) + f0, in coordinates relative to the cylinder center.
/// Linear operators are handled in one pass; otherwise the operator is
/// linearized at the current D and the fit repeated until D changes by less
/// than 1e-10 (ConvergenceError after 100 passes). The final C is reset to
/// F(0, 0, D) + f0 exactly and A, B are refitted.
QuadraticPolynomial constrained_polyfit(const GridFunction& u, const ParabolicCylinder& cylinder,
                                        const OperatorSpec& F, double f0 = 0.0);

struct PolySequenceLevel {
    int k = 0;
    double radius = 0.0;
    QuadraticPolynomial poly;
    double sup_error = 0.0;
    /// |dA| + r |dB| + r (|dC| + |dD|) and |dA| + r |dB| + r^2 (|dC| + |dD|)
    /// with r = rho^(k-1); zero at k = 1.
    double increment_linear = 0.0;
    double increment_quadratic = 0.0;
    double delta_D = 0.0;
};

struct PolySequenceReport {
    double rho = 0.5;
    double alpha = 0.5;
    std::vector<PolySequenceLevel> levels;
    DecayFit fit;
};

/// Constrained fits on Q_{rho^k}(0,0), k = 1..k_max, with a decay fit of the
/// sup errors against rho^k; the fitted exponent estimates 2 + alpha.
PolySequenceReport dyadic_polynomial_sequence(const GridFunction& u, const OperatorSpec& F, double rho, double alpha,
                                              int k_max, double f0 = 0.0);

struct LogLipReport {
    std::vector<double> radii;
    std::vector<double> moduli;
    double c_plain = 0.0;
    double c_log = 0.0;
    double ssr_plain = 0.0;
    double ssr_log = 0.0;
    /// "plain", "log" or "degenerate" (all moduli zero).
    std::string preferred;
};

/// m(r) = sup_{Q_r}|u - u(c) - Du(c).(x - x_c)| fitted by C r^2 and by
/// C r^2 log(1/r), one parameter each, in log space.
LogLipReport loglip_fit(const GridFunction& u, const Point& center, const std::vector<double>& radii);

/// [|u|_p^p + |u_t|_p^p + |Du|_p^p + |D^2 u|_p^p]^(1/p). Box regions use
/// trapezoid weights, other regions node count times cell measure.
double sobolev_norm(const GridFunction& u, double p, const Region& region);

/// sup over centers (region nodes at `center_stride` index spacing) and radii
/// of the L^p mean oscillation of g on Q_rho(center) intersected with region.
double pbmo_norm(const GridFunction& g, double p, const Region& region, const std::vector<double>& radii,
                 int center_stride = 1);

/// max over radii of the average of g over the nodes of Q_rho(point).
double parabolic_maximal(const GridFunction& g, const Point& point, const std::vector<double>& radii);
/// parabolic_maximal at every node.
std::vector<double> parabolic_maximal_field(const GridFunction& g, const std::vector<double>& radii);

/// Default radius list 2^-k, k = 1..5.
std::vector<double> default_radii();

}  // namespace aperture
