#pragma once

#include "aperture/grid.hpp"

#include <array>
#include <initializer_list>

namespace aperture {

/// Dense d x d real matrix, d <= 3, expected to be symmetric. Storage is
/// row-major in a fixed 3x3 buffer so the type stays a cheap value.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int dim);
    /// Row-major initialiser; throws PreconditionError when the entries are
    /// not symmetric within 1e-12 (relative to the largest entry).
    SymmetricMatrix(int dim, std::initializer_list<double> row_major);

    static SymmetricMatrix identity(int dim, double scale = 1.0);
    static SymmetricMatrix diagonal(std::initializer_list<double> diag);
    /// s * v v^T for a vector v with `dim` active entries.
    static SymmetricMatrix outer(int dim, const SpatialVec& v, double s = 1.0);

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return a_[3 * i + j]; }
    double& operator()(int i, int j) { return a_[3 * i + j]; }

    /// Sets (i,j) and (j,i) together.
    void set(int i, int j, double v);

    double trace() const;
    double max_abs_entry() const;
    bool is_symmetric(double tol = 1e-12) const;
    /// Throws PreconditionError when not symmetric or not finite.
    void require_symmetric() const;

    SymmetricMatrix operator+(const SymmetricMatrix& o) const;
    SymmetricMatrix operator-(const SymmetricMatrix& o) const;
    SymmetricMatrix operator-() const;
    SymmetricMatrix operator*(double c) const;
    SymmetricMatrix& operator+=(const SymmetricMatrix& o);

    /// Tr(A M) = sum_ij A_ij M_ij.
    double frobenius_inner(const SymmetricMatrix& o) const;
    double quadratic_form(const SpatialVec& v) const;
    SpatialVec apply(const SpatialVec& v) const;

private:
    int dim_ = 1;
    std::array<double, 9> a_{};
};

/// Ascending eigenvalues. Closed form for d <= 2, cyclic Jacobi for d = 3.
std::array<double, kMaxDim> eigenvalues(const SymmetricMatrix& m);

struct EigenDecomposition {
    std::array<double, kMaxDim> values{};
    /// Column j of `vectors` (as vectors[j]) is the unit eigenvector of values[j].
    std::array<SpatialVec, kMaxDim> vectors{};
};

EigenDecomposition eigen_decompose(const SymmetricMatrix& m);

/// Largest absolute eigenvalue.
double operator_norm(const SymmetricMatrix& m);
/// Sum of absolute eigenvalues (equals the trace on positive semidefinite input).
double trace_norm(const SymmetricMatrix& m);
double min_eigenvalue(const SymmetricMatrix& m);

}  // namespace aperture
