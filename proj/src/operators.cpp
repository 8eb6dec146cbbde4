#include "aperture/operators.hpp"

#include "aperture/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aperture {

EllipticityPair EllipticityPair::make(double lambda, double Lambda) {
    if (!(std::isfinite(lambda) && std::isfinite(Lambda)) || !(lambda > 0.0) || !(lambda <= Lambda)) {
        throw ValidationError("ellipticity", "need 0 < lambda <= Lambda, got lambda=" + std::to_string(lambda) +
                                                 " Lambda=" + std::to_string(Lambda));
    }
    return {lambda, Lambda};
}

EllipticityPair EllipticityPair::from_aperture(double lambda, double aperture) {
    if (!(aperture >= 0.0)) throw ValidationError("ellipticity", "aperture must be nonnegative");
    return make(lambda, lambda * (1.0 + aperture));
}

double ellipticity_aperture(const EllipticityPair& pair) { return pair.Lambda / pair.lambda - 1.0; }

double pucci_plus(const SymmetricMatrix& m, const EllipticityPair& pair) {
    const auto e = eigenvalues(m);
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i) s += e[i] > 0.0 ? pair.Lambda * e[i] : pair.lambda * e[i];
    return s;
}

double pucci_minus(const SymmetricMatrix& m, const EllipticityPair& pair) {
    const auto e = eigenvalues(m);
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i) s += e[i] > 0.0 ? pair.lambda * e[i] : pair.Lambda * e[i];
#ifdef APERTURE_FAULT_PUCCI_MINUS_SIGN
    // Negative-control build only.
    return -s;
#else
    return s;
#endif
}

EllipticityPair plaplace_pair(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("ellipticity", "p-Laplacian needs p in (1, inf)");
    return {std::min(1.0, p - 1.0), std::max(1.0, p - 1.0)};
}

OperatorSpec::OperatorSpec(int dim, Variant op, EllipticityPair pair) : dim_(dim), op_(std::move(op)), pair_(pair) {
    if (dim < 1 || dim > kMaxDim) throw PreconditionError("dimension", "operator dimension must be 1, 2 or 3");
    EllipticityPair::make(pair.lambda, pair.Lambda);
    if (const auto* is = std::get_if<Isaacs>(&op_)) {
        if (is->families.empty()) throw PreconditionError("empty_family", "Isaacs operator has no beta index");
        for (const auto& fam : is->families)
            if (fam.empty()) throw PreconditionError("empty_family", "Isaacs operator has an empty gamma family");
    }
}

OperatorSpec OperatorSpec::pucci_plus(int dim, EllipticityPair pair) { return {dim, PucciPlus{}, pair}; }
OperatorSpec OperatorSpec::pucci_minus(int dim, EllipticityPair pair) { return {dim, PucciMinus{}, pair}; }
OperatorSpec OperatorSpec::scaled_trace(int dim, double lambda) {
    return {dim, ScaledTrace{lambda}, EllipticityPair::make(lambda, lambda)};
}
OperatorSpec OperatorSpec::linear(int dim, MatrixField a, EllipticityPair pair, ScalarField offset) {
    return {dim, LinearCoefficient{std::move(a), std::move(offset)}, pair};
}
OperatorSpec OperatorSpec::isaacs(int dim, std::vector<std::vector<IsaacsPair>> families, EllipticityPair pair) {
    return {dim, Isaacs{std::move(families)}, pair};
}
OperatorSpec OperatorSpec::plaplace(int dim, double p) { return {dim, NormalizedPLaplace{p}, plaplace_pair(p)}; }

std::string OperatorSpec::name() const {
    static const char* names[] = {"pucci_plus", "pucci_minus", "trace", "linear", "isaacs", "plaplace"};
    return names[op_.index()];
}

namespace {

SpatialVec unit_direction(const SpatialVec* direction, int dim) {
    if (direction == nullptr) throw PreconditionError("direction", "normalized p-Laplacian needs a direction");
    double n2 = 0.0;
    for (int i = 0; i < dim; ++i) n2 += (*direction)[i] * (*direction)[i];
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw PreconditionError("direction", "direction is zero or non-finite");
    const double n = std::sqrt(n2);
    SpatialVec v{};
    for (int i = 0; i < dim; ++i) v[i] = (*direction)[i] / n;
    return v;
}

/// Index of the active (beta, gamma) pair and its value.
struct IsaacsChoice {
    std::size_t beta = 0;
    std::size_t gamma = 0;
    double value = 0.0;
};

IsaacsChoice isaacs_choice(const Isaacs& op, const SpatialVec& x, double t, const SymmetricMatrix& m) {
    IsaacsChoice best{0, 0, -std::numeric_limits<double>::infinity()};
    for (std::size_t b = 0; b < op.families.size(); ++b) {
        double inner = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t g = 0; g < op.families[b].size(); ++g) {
            const auto& pr = op.families[b][g];
            const double f = pr.f ? pr.f(x, t) : 0.0;
            const double v = pr.a(x, t).frobenius_inner(m) - f;
            if (v < inner) {
                inner = v;
                arg = g;
            }
        }
        if (inner > best.value) best = {b, arg, inner};
    }
    return best;
}

}  // namespace

double OperatorSpec::evaluate(const SpatialVec& x, double t, const SymmetricMatrix& m,
                              const SpatialVec* direction) const {
    if (m.dim() != dim_) throw PreconditionError("dimension", "matrix dimension does not match operator");
    double v = 0.0;
    switch (op_.index()) {
        case 0:
            v = aperture::pucci_plus(m, pair_);
            break;
        case 1:
            v = aperture::pucci_minus(m, pair_);
            break;
        case 2:
            v = std::get<ScaledTrace>(op_).lambda * m.trace();
            break;
        case 3: {
            const auto& op = std::get<LinearCoefficient>(op_);
            v = op.a(x, t).frobenius_inner(m) + (op.offset ? op.offset(x, t) : 0.0);
            break;
        }
        case 4:
            v = isaacs_choice(std::get<Isaacs>(op_), x, t, m).value;
            break;
        default: {
            const double p = std::get<NormalizedPLaplace>(op_).p;
            const SpatialVec nu = unit_direction(direction, dim_);
            v = m.trace() + (p - 2.0) * m.quadratic_form(nu);
            break;
        }
    }
    return v - shift_;
}

Linearization OperatorSpec::linearization(const SpatialVec& x, double t, const SymmetricMatrix& m,
                                          const SpatialVec* direction) const {
    if (m.dim() != dim_) throw PreconditionError("dimension", "matrix dimension does not match operator");
    Linearization out{SymmetricMatrix(dim_), -shift_};
    switch (op_.index()) {
        case 0:
        case 1: {
            const bool plus = op_.index() == 0;
            const auto ed = eigen_decompose(m);
            for (int i = 0; i < dim_; ++i) {
                const bool positive = ed.values[i] > 0.0;
                const double w = (positive == plus) ? pair_.Lambda : pair_.lambda;
                out.a += SymmetricMatrix::outer(dim_, ed.vectors[i], w);
            }
            break;
        }
        case 2:
            out.a = SymmetricMatrix::identity(dim_, std::get<ScaledTrace>(op_).lambda);
            break;
        case 3: {
            const auto& op = std::get<LinearCoefficient>(op_);
            out.a = op.a(x, t);
            if (op.offset) out.c += op.offset(x, t);
            break;
        }
        case 4: {
            const auto& op = std::get<Isaacs>(op_);
            const auto ch = isaacs_choice(op, x, t, m);
            const auto& pr = op.families[ch.beta][ch.gamma];
            out.a = pr.a(x, t);
            if (pr.f) out.c -= pr.f(x, t);
            break;
        }
        default: {
            const double p = std::get<NormalizedPLaplace>(op_).p;
            const SpatialVec nu = unit_direction(direction, dim_);
            out.a = SymmetricMatrix::identity(dim_) + SymmetricMatrix::outer(dim_, nu, p - 2.0);
            break;
        }
    }
    return out;
}

OperatorSpec OperatorSpec::normalized() const {
    OperatorSpec g = *this;
    const SpatialVec e1{1.0, 0.0, 0.0};
    g.shift_ = 0.0;
    g.shift_ = g.evaluate(SpatialVec{}, 0.0, SymmetricMatrix(dim_), &e1);
    return g;
}

EllipticityReport check_uniform_ellipticity(const OperatorSpec& f, const EllipticityPair& pair,
                                            const std::vector<EllipticitySample>& samples) {
    constexpr double kTol = 1e-9;
    EllipticityReport rep;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (s.n.dim() != f.dim() || s.m.dim() != f.dim())
            throw PreconditionError("dimension", "sample dimension does not match operator");
        if (min_eigenvalue(s.n) < -1e-12 * std::max(1.0, s.n.max_abs_entry()))
            throw PreconditionError("not_psd", "ellipticity sample N is not positive semidefinite");
        const double norm = trace_norm(s.n);
        if (!(norm > 0.0)) throw PreconditionError("not_psd", "ellipticity sample N is zero");
        const double diff = f.evaluate(s.x, s.t, s.m + s.n, &s.direction) - f.evaluate(s.x, s.t, s.m, &s.direction);
        const double scale = kTol * std::max(1.0, norm);
        const double low = pair.lambda * norm - diff;
        const double high = diff - pair.Lambda * norm;
        rep.worst_violation = std::max({rep.worst_violation, low, high});
        if (low > scale || high > scale) rep.pass = false;
        rep.min_ratio = std::min(rep.min_ratio, diff / norm);
        rep.max_ratio = std::max(rep.max_ratio, diff / norm);
        ++rep.samples;
    }
    if (samples.empty()) rep.min_ratio = rep.max_ratio = 0.0;
    return rep;
}

SymmetricMatrix random_symmetric(int dim, std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    SymmetricMatrix m(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) m.set(i, j, u(rng));
    return m;
}

std::array<SpatialVec, kMaxDim> random_rotation(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::array<SpatialVec, kMaxDim> q{};
    for (int i = 0; i < dim; ++i) {
        for (;;) {
            SpatialVec v{};
            for (int k = 0; k < dim; ++k) v[k] = g(rng);
            for (int j = 0; j < i; ++j) {
                double dot = 0.0;
                for (int k = 0; k < dim; ++k) dot += v[k] * q[j][k];
                for (int k = 0; k < dim; ++k) v[k] -= dot * q[j][k];
            }
            double n = 0.0;
            for (int k = 0; k < dim; ++k) n += v[k] * v[k];
            n = std::sqrt(n);
            if (n < 1e-8) continue;
            for (int k = 0; k < dim; ++k) q[i][k] = v[k] / n;
            break;
        }
    }
    return q;
}

SymmetricMatrix from_spectrum(int dim, const std::array<SpatialVec, kMaxDim>& frame,
                              const std::array<double, kMaxDim>& values) {
    SymmetricMatrix m(dim);
    for (int i = 0; i < dim; ++i) m += SymmetricMatrix::outer(dim, frame[i], values[i]);
    // Exact symmetry regardless of rounding in the outer products.
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) m.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return m;
}

std::vector<EllipticitySample> random_ellipticity_samples(int dim, std::size_t count, std::uint64_t seed,
                                                          double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(-1.0, 0.0);
    std::uniform_real_distribution<double> ue(0.0, scale);
    std::vector<EllipticitySample> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        EllipticitySample s;
        for (int i = 0; i < dim; ++i) s.x[i] = ux(rng);
        s.t = ut(rng);
        s.m = random_symmetric(dim, rng, scale);
        std::array<double, kMaxDim> spec{};
        double total = 0.0;
        for (int i = 0; i < dim; ++i) total += (spec[i] = ue(rng));
        if (total <= 0.0) spec[0] = scale;
        s.n = from_spectrum(dim, random_rotation(dim, rng), spec);
        for (int i = 0; i < dim; ++i) s.direction[i] = ux(rng);
        s.direction[0] += 2.0;  // bounded away from zero
        out.push_back(s);
    }
    return out;
}

OscillationReport oscillation(const OperatorSpec& f, const SpatialVec& x0, double t0, const SpatialVec& x, double t,
                              double r_max, std::size_t n_samples, std::uint64_t seed) {
    const int d = f.dim();
    std::vector<SymmetricMatrix> probes;
    probes.push_back(SymmetricMatrix(d));
    probes.push_back(SymmetricMatrix::identity(d, r_max));
    probes.push_back(SymmetricMatrix::identity(d, -r_max));
    for (int i = 0; i < d; ++i) {
        SpatialVec e{};
        e[i] = 1.0;
        probes.push_back(SymmetricMatrix::outer(d, e, r_max));
        probes.push_back(SymmetricMatrix::outer(d, e, -r_max));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> radius(0.0, 1.0);
    while (probes.size() < n_samples) {
        SymmetricMatrix m = random_symmetric(d, rng, 1.0);
        const double n = operator_norm(m);
        if (n > 0.0) m = m * (r_max * radius(rng) / n);
        probes.push_back(m);
    }
    if (probes.size() > n_samples) probes.resize(n_samples);

    const SpatialVec e1{1.0, 0.0, 0.0};
    OscillationReport rep{x0, t0, x, t, 0.0, probes.size(), r_max};
    for (const auto& m : probes) {
        const double diff = std::abs(f.evaluate(x, t, m, &e1) - f.evaluate(x0, t0, m, &e1));
        rep.value = std::max(rep.value, diff / (operator_norm(m) + 1.0));
    }
    return rep;
}

CordesReport cordes_check(const MatrixField& a, int dim, double lambda, double eps0,
                          const std::vector<std::pair<SpatialVec, double>>& points) {
    if (!(lambda > 0.0)) throw ValidationError("ellipticity", "lambda must be positive");
    CordesReport rep;
    std::vector<SymmetricMatrix> mats;
    mats.reserve(points.size());
    for (const auto& [x, t] : points) {
        SymmetricMatrix m = a(x, t);
        if (m.dim() != dim) throw PreconditionError("dimension", "coefficient field has the wrong dimension");
        const auto e = eigenvalues(m);
        if (e[0] < lambda * (1.0 - 1e-12))
            throw ValidationError("ellipticity", "coefficient field has an eigenvalue below lambda");
        rep.observed_Lambda = std::max(rep.observed_Lambda, e[dim - 1]);
        mats.push_back(m);
    }
    for (const auto& m : mats) {
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                rep.worst_deviation = std::max(rep.worst_deviation, std::abs(m(i, j) / lambda - (i == j ? 1.0 : 0.0)));
    }
    rep.samples = mats.size();
    rep.applicable = rep.observed_Lambda / lambda - 1.0 < eps0;
    rep.pass = !rep.applicable || rep.worst_deviation < 2.0 * eps0;
    return rep;
}

}  // namespace aperture
