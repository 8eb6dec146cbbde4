#include "aperture/symmetric_matrix.hpp"

#include "aperture/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aperture {

SymmetricMatrix::SymmetricMatrix(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw PreconditionError("dimension", "matrix dimension must be 1, 2 or 3");
}

SymmetricMatrix::SymmetricMatrix(int dim, std::initializer_list<double> row_major) : SymmetricMatrix(dim) {
    if (row_major.size() != static_cast<std::size_t>(dim * dim)) {
        throw PreconditionError("dimension", "matrix initialiser has the wrong number of entries");
    }
    auto it = row_major.begin();
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) (*this)(i, j) = *it++;
    require_symmetric();
}

SymmetricMatrix SymmetricMatrix::identity(int dim, double scale) {
    SymmetricMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = scale;
    return m;
}

SymmetricMatrix SymmetricMatrix::diagonal(std::initializer_list<double> diag) {
    SymmetricMatrix m(static_cast<int>(diag.size()));
    int i = 0;
    for (double v : diag) {
        m(i, i) = v;
        ++i;
    }
    return m;
}

SymmetricMatrix SymmetricMatrix::outer(int dim, const SpatialVec& v, double s) {
    SymmetricMatrix m(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = s * v[i] * v[j];
    return m;
}

void SymmetricMatrix::set(int i, int j, double v) {
    (*this)(i, j) = v;
    (*this)(j, i) = v;
}

double SymmetricMatrix::trace() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (*this)(i, i);
    return s;
}

double SymmetricMatrix::max_abs_entry() const {
    double m = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
}

bool SymmetricMatrix::is_symmetric(double tol) const {
    const double scale = std::max(1.0, max_abs_entry());
    for (int i = 0; i < dim_; ++i)
        for (int j = i + 1; j < dim_; ++j)
            if (std::abs((*this)(i, j) - (*this)(j, i)) > tol * scale) return false;
    return true;
}

void SymmetricMatrix::require_symmetric() const {
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            if (!std::isfinite((*this)(i, j))) throw PreconditionError("non_finite", "matrix has non-finite entries");
    if (!is_symmetric()) throw PreconditionError("non_symmetric", "matrix is not symmetric within 1e-12");
}

SymmetricMatrix SymmetricMatrix::operator+(const SymmetricMatrix& o) const {
    SymmetricMatrix r = *this;
    r += o;
    return r;
}

SymmetricMatrix& SymmetricMatrix::operator+=(const SymmetricMatrix& o) {
    if (o.dim_ != dim_) throw PreconditionError("dimension", "matrix dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
}

SymmetricMatrix SymmetricMatrix::operator-(const SymmetricMatrix& o) const { return *this + (-o); }

SymmetricMatrix SymmetricMatrix::operator-() const { return (*this) * -1.0; }

SymmetricMatrix SymmetricMatrix::operator*(double c) const {
    SymmetricMatrix r = *this;
    for (double& v : r.a_) v *= c;
    return r;
}

double SymmetricMatrix::frobenius_inner(const SymmetricMatrix& o) const {
    if (o.dim_ != dim_) throw PreconditionError("dimension", "matrix dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * o(i, j);
    return s;
}

double SymmetricMatrix::quadratic_form(const SpatialVec& v) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += v[i] * (*this)(i, j) * v[j];
    return s;
}

SpatialVec SymmetricMatrix::apply(const SpatialVec& v) const {
    SpatialVec r{};
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
}

namespace {

EigenDecomposition jacobi3(const SymmetricMatrix& m) {
    double a[3][3];
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = 0.5 * (m(i, j) + m(j, i));
    const double scale = std::max(m.max_abs_entry(), 1e-300);

    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if (std::sqrt(off) <= 1e-15 * scale) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a[i][i] < a[j][j]; });
    EigenDecomposition out;
    for (int r = 0; r < 3; ++r) {
        const int c = order[r];
        out.values[r] = a[c][c];
        out.vectors[r] = {v[0][c], v[1][c], v[2][c]};
    }
    return out;
}

}  // namespace

EigenDecomposition eigen_decompose(const SymmetricMatrix& m) {
    m.require_symmetric();
    EigenDecomposition out;
    switch (m.dim()) {
        case 1:
            out.values[0] = m(0, 0);
            out.vectors[0] = {1.0, 0.0, 0.0};
            return out;
        case 2: {
            const double a = m(0, 0);
            const double b = 0.5 * (m(0, 1) + m(1, 0));
            const double c = m(1, 1);
            const double mean = 0.5 * (a + c);
            const double radius = std::hypot(0.5 * (a - c), b);
            out.values[0] = mean - radius;
            out.values[1] = mean + radius;
            const double theta = 0.5 * std::atan2(2.0 * b, a - c);
            out.vectors[1] = {std::cos(theta), std::sin(theta), 0.0};
            out.vectors[0] = {-std::sin(theta), std::cos(theta), 0.0};
            return out;
        }
        default:
            return jacobi3(m);
    }
}

std::array<double, kMaxDim> eigenvalues(const SymmetricMatrix& m) { return eigen_decompose(m).values; }

double operator_norm(const SymmetricMatrix& m) {
    const auto e = eigenvalues(m);
    double r = 0.0;
    for (int i = 0; i < m.dim(); ++i) r = std::max(r, std::abs(e[i]));
    return r;
}

double trace_norm(const SymmetricMatrix& m) {
    const auto e = eigenvalues(m);
    double r = 0.0;
    for (int i = 0; i < m.dim(); ++i) r += std::abs(e[i]);
    return r;
}

double min_eigenvalue(const SymmetricMatrix& m) { return eigenvalues(m)[0]; }

}  // namespace aperture
