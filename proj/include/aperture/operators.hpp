#pragma once

#include "aperture/symmetric_matrix.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace aperture {

struct EllipticityPair {
    double lambda = 1.0;
    double Lambda = 1.0;

    /// Throws ValidationError("ellipticity") unless 0 < lambda <= Lambda.
    static EllipticityPair make(double lambda, double Lambda);
    /// (lambda, lambda * (1 + aperture)).
    static EllipticityPair from_aperture(double lambda, double aperture);
};

/// Lambda / lambda - 1.
double ellipticity_aperture(const EllipticityPair& pair);

double pucci_plus(const SymmetricMatrix& m, const EllipticityPair& pair);
double pucci_minus(const SymmetricMatrix& m, const EllipticityPair& pair);

using ScalarField = std::function<double(const SpatialVec&, double)>;
using MatrixField = std::function<SymmetricMatrix(const SpatialVec&, double)>;

struct PucciPlus {};
struct PucciMinus {};
struct ScaledTrace {
    double lambda = 1.0;
};
/// Tr(a(x,t) M) + offset(x,t); the offset is optional.
struct LinearCoefficient {
    MatrixField a;
    ScalarField offset;
};
struct IsaacsPair {
    MatrixField a;
    ScalarField f;
};
/// families[beta][gamma]; evaluates sup over beta of inf over gamma.
struct Isaacs {
    std::vector<std::vector<IsaacsPair>> families;
};
/// Tr(M) + (p - 2) <M nu, nu> for a supplied direction nu.
struct NormalizedPLaplace {
    double p = 2.0;
};

/// Ellipticity constants of the normalized p-Laplacian: (min{1,p-1}, max{1,p-1}).
EllipticityPair plaplace_pair(double p);

/// F(x, t, M) ~ Tr(a M) + c, exact on the branch that is active at M.
struct Linearization {
    SymmetricMatrix a;
    double c = 0.0;
};

class OperatorSpec {
public:
    using Variant = std::variant<PucciPlus, PucciMinus, ScaledTrace, LinearCoefficient, Isaacs, NormalizedPLaplace>;

    OperatorSpec(int dim, Variant op, EllipticityPair pair);

    static OperatorSpec pucci_plus(int dim, EllipticityPair pair);
    static OperatorSpec pucci_minus(int dim, EllipticityPair pair);
    static OperatorSpec scaled_trace(int dim, double lambda);
    static OperatorSpec linear(int dim, MatrixField a, EllipticityPair pair, ScalarField offset = {});
    static OperatorSpec isaacs(int dim, std::vector<std::vector<IsaacsPair>> families, EllipticityPair pair);
    static OperatorSpec plaplace(int dim, double p);

    int dim() const { return dim_; }
    const EllipticityPair& pair() const { return pair_; }
    const Variant& op() const { return op_; }
    std::string name() const;
    bool needs_direction() const { return std::holds_alternative<NormalizedPLaplace>(op_); }
    /// Constant subtracted from every evaluation (see normalized()).
    double shift() const { return shift_; }

    /// Throws PreconditionError("direction") for a missing or zero direction
    /// on NormalizedPLaplace, and "dimension" when M has the wrong size.
    double evaluate(const SpatialVec& x, double t, const SymmetricMatrix& m,
                    const SpatialVec* direction = nullptr) const;
    Linearization linearization(const SpatialVec& x, double t, const SymmetricMatrix& m,
                                const SpatialVec* direction = nullptr) const;

    /// Copy with F(0,0,0) subtracted so that the result vanishes at the origin.
    OperatorSpec normalized() const;

private:
    int dim_ = 1;
    Variant op_;
    EllipticityPair pair_;
    double shift_ = 0.0;
};

struct EllipticitySample {
    SpatialVec x{};
    double t = 0.0;
    SymmetricMatrix m;
    SymmetricMatrix n;
    SpatialVec direction{1.0, 0.0, 0.0};
};

struct EllipticityReport {
    bool pass = true;
    /// Largest amount by which either inequality is violated.
    double worst_violation = 0.0;
    /// Extremes of (F(M+N) - F(M)) / |N| over the samples.
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    std::size_t samples = 0;
};

/// Checks lambda |N| <= F(M+N) - F(M) <= Lambda |N| with tolerance 1e-9 and
/// |N| the trace norm. Throws PreconditionError("not_psd") for samples whose
/// N is not positive semidefinite or is zero.
EllipticityReport check_uniform_ellipticity(const OperatorSpec& f, const EllipticityPair& pair,
                                            const std::vector<EllipticitySample>& samples);

/// Random samples for check_uniform_ellipticity over the box [-1,1]^d x [-1,0].
std::vector<EllipticitySample> random_ellipticity_samples(int dim, std::size_t count, std::uint64_t seed,
                                                          double scale = 2.0);

struct OscillationReport {
    SpatialVec x0{};
    double t0 = 0.0;
    SpatialVec x{};
    double t = 0.0;
    double value = 0.0;
    std::size_t samples = 0;
    double r_max = 0.0;
};

/// Sampled sup over |M| <= r_max of |F(x,t,M) - F(x0,t0,M)| / (|M| + 1) with
/// the operator norm. The first samples are 0, +-r_max I and +-r_max e_i e_i^T,
/// followed by seeded random matrices, so a larger count never decreases the value.
OscillationReport oscillation(const OperatorSpec& f, const SpatialVec& x0, double t0, const SpatialVec& x, double t,
                              double r_max, std::size_t n_samples, std::uint64_t seed = 1);

struct CordesReport {
    /// True when the sampled aperture is below eps0, i.e. the implication applies.
    bool applicable = false;
    /// True unless applicable and some deviation reached 2 eps0.
    bool pass = true;
    double observed_Lambda = 0.0;
    double worst_deviation = 0.0;
    std::size_t samples = 0;
};

/// Max entry of |a/lambda - I| over the sample points, with Lambda taken as
/// the largest observed eigenvalue. Throws ValidationError("ellipticity")
/// when a sampled a(x,t) has an eigenvalue below lambda.
CordesReport cordes_check(const MatrixField& a, int dim, double lambda, double eps0,
                          const std::vector<std::pair<SpatialVec, double>>& points);

/// Symmetric matrix with independent entries uniform in [-scale, scale].
SymmetricMatrix random_symmetric(int dim, std::mt19937_64& rng, double scale = 1.0);
/// Random orthogonal frame (Gram-Schmidt of a Gaussian matrix) as rows.
std::array<SpatialVec, kMaxDim> random_rotation(int dim, std::mt19937_64& rng);
/// sum_i values[i] q_i q_i^T for the frame q.
SymmetricMatrix from_spectrum(int dim, const std::array<SpatialVec, kMaxDim>& frame,
                              const std::array<double, kMaxDim>& values);

}  // namespace aperture
