#pragma once

#include <cstdint>
#include <vector>

namespace aperture {

/// maximize c.x subject to A x <= b and lo <= x <= hi, with few variables
/// (at most 16, and only a handful is practical) and arbitrarily many rows.
/// A is row-major, rows x n.
struct LinearProgram {
    int n = 0;
    std::vector<double> c;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t rows() const { return b.size(); }
    void add_row(const std::vector<double>& row, double rhs);
};

struct LpSolution {
    bool feasible = false;
    std::vector<double> x;
    double value = 0.0;
};

/// Seidel's randomized incremental algorithm. The finite box keeps every
/// subproblem bounded. Expected cost is O(n! * rows); deterministic for a
/// given seed.
LpSolution solve_lp(const LinearProgram& lp, std::uint64_t seed = 7);

}  // namespace aperture
