#pragma once

#include "aperture/grid.hpp"
#include "aperture/regularity.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aperture {

/// L(x,t) -/+ M(|x - x0|^2 + |t - t0|) with L(x,t) = A + B.(x - x0) + C (t - t0).
struct Paraboloid {
    int dim = 1;
    double A = 0.0;
    SpatialVec B{};
    double C = 0.0;
    double M = 0.0;
    bool above = false;
    SpatialVec x0{};
    double t0 = 0.0;

    double operator()(const SpatialVec& x, double t) const;
};

struct TouchingOptions {
    /// Drop the time slope from L (affine in x only).
    bool space_only = false;
    /// Worker threads for per-node work; 0 picks the hardware count.
    int threads = 0;
};

/// Smallest opening of a paraboloid touching u from below (or above) at
/// node p0 while staying below (above) u on every node of `domain`. The LP
/// result is re-verified: the returned value is the exact opening needed by
/// the returned affine part, so it never understates the true minimum.
double minimal_opening(const GridFunction& u, std::size_t p0, const std::vector<std::size_t>& domain, bool above,
                       const TouchingOptions& opt = {}, Paraboloid* witness = nullptr);

bool touches_from_below(const GridFunction& u, std::size_t p0, double M, const std::vector<std::size_t>& domain,
                        const TouchingOptions& opt = {});
bool touches_from_above(const GridFunction& u, std::size_t p0, double M, const std::vector<std::size_t>& domain,
                        const TouchingOptions& opt = {});

/// Minimal openings at every node of a cube K, against a domain node set.
struct OpeningTable {
    std::vector<std::size_t> nodes;
    std::vector<double> below;
    std::vector<double> above;
    double cube_measure = 0.0;
    double cell_measure = 0.0;
    /// True when the domain is larger than the cube it is tested on.
    bool domain_is_full_grid = true;
};

/// `domain` empty means every node of the grid.
OpeningTable compute_openings(const GridFunction& u, const ParabolicCube& k, const TouchingOptions& opt = {},
                              std::vector<std::size_t> domain = {});

struct GoodSetMask {
    double M = 0.0;
    std::vector<std::size_t> nodes;
    std::vector<char> below;
    std::vector<char> above;
    double good_measure = 0.0;
    double bad_measure = 0.0;
    double cube_measure = 0.0;

    /// G_M = below AND above.
    bool good(std::size_t i) const { return below[i] && above[i]; }
};

GoodSetMask mask_at(const OpeningTable& table, double M);
GoodSetMask good_set_mask(const GridFunction& u, double M, const ParabolicCube& k, const TouchingOptions& opt = {},
                          std::vector<std::size_t> domain = {});

/// Run-length encoding of a mask as (value, run) pairs.
std::vector<std::pair<int, std::size_t>> run_length(const std::vector<char>& mask);

/// d = 1: max(K, T) with K the largest |second difference| and T the largest
/// |time difference quotient|. Every node then has touching paraboloids of
/// that opening from both sides, so A_M is empty for M at or above it.
double c11_bound(const GridFunction& u);

struct ADecayReport {
    std::vector<double> openings;
    std::vector<double> measures;
    /// All measures zero: "A_M empty" and no fit.
    bool empty = false;
    DecayFit fit;
    double delta = 0.0;
};

/// decay_exponent_fit of |A_M cap K| against M; delta = -exponent.
ADecayReport a_decay(const OpeningTable& table, const std::vector<double>& openings);
/// Same, from raw measures.
ADecayReport a_decay(const std::vector<double>& openings, const std::vector<double>& measures);

struct AlphaBetaLevel {
    int k = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t alpha_nodes = 0;
    /// alpha_{k+1} <= rho (alpha_k + beta_k); true on the last level.
    bool recursion = true;
    /// alpha_k <= rho^k + sum_{i<k} rho^(k-i) beta_i.
    bool envelope = true;
    /// alpha_k counted from at least 10 nodes (or exactly zero).
    bool resolved = true;
};

struct AlphaBetaReport {
    double M = 0.0;
    double C1 = 0.0;
    double rho = 0.0;
    std::vector<AlphaBetaLevel> levels;
    double sum_alpha = 0.0;
    double sum_beta = 0.0;
    double p = 0.0;
    bool domain_is_full_grid = true;
};

/// alpha_k = |A_{M^k}(u) cap K_1|, beta_k = |{K_1 nodes : m(|f|^(d+1)) >= (C1 M^k)^(d+1)}|
/// with m the centered maximal average over `radii`. Also reports
/// sum M^(p k) alpha_k and sum M^(p k) beta_k. Throws PreconditionError
/// ("resolution") when K_1 holds fewer than 100 nodes.
AlphaBetaReport alpha_beta_sequences(const GridFunction& u, const GridFunction& f, double M, double C1, double rho,
                                     int k_max, const std::vector<double>& radii, double p,
                                     const TouchingOptions& opt = {});
AlphaBetaReport alpha_beta_sequences(const OpeningTable& table, const GridFunction& f, double M, double C1,
                                     double rho, int k_max, const std::vector<double>& radii, double p);

/// Union of level-L dyadic cubes of K_1, as one flag per cube.
class CellSet {
public:
    CellSet(int dim, int level);

    int dim() const { return dim_; }
    int level() const { return level_; }
    std::size_t size() const { return bits_.size(); }
    std::int64_t cells_per_axis() const { return std::int64_t{1} << level_; }
    std::int64_t time_cells() const { return std::int64_t{1} << (2 * level_); }

    std::size_t index(const DyadicCube& cell) const;
    DyadicCube cell(std::size_t i) const;
    bool contains(std::size_t i) const { return bits_[i] != 0; }
    void insert(std::size_t i) { bits_[i] = 1; }
    void insert(const DyadicCube& cube);
    /// Inserts every cell inside a box that is aligned with the cell lattice.
    /// Returns false (and inserts nothing) when the box leaves K_1.
    bool insert_box(const Box& box);
    bool covers_box(const Box& box) const;
    std::size_t count() const;
    std::size_t count_in(const DyadicCube& cube) const;
    double measure() const;
    double cell_measure() const;
    bool subset_of(const CellSet& other) const;

private:
    int dim_;
    int level_;
    std::vector<char> bits_;
};

struct CoveringReport {
    bool hypothesis_i = false;
    bool hypothesis_ii = false;
    bool conclusion_checked = false;
    bool conclusion = true;
    double measure_a = 0.0;
    double measure_b = 0.0;
    double bound = 0.0;
    /// Cubes K (levels 1..L) with |K cap A| > rho |K|.
    std::size_t dense_cubes = 0;
};

/// Checks both hypotheses by enumerating all dyadic cubes at levels 1..L
/// and, when they hold, the conclusion |A| <= rho (m+1)/m |B|. A stack that
/// leaves K_1 cannot lie in B, so it fails hypothesis (ii). Throws
/// PreconditionError("not_aligned") on mismatched sets and ("not_subset")
/// when A is not inside B.
CoveringReport covering_lemma_verify(const CellSet& a, const CellSet& b, double rho, int m);

struct CoveringInstance {
    CellSet a;
    CellSet b;
    double rho;
    int m;
};

/// Seeded random instances that satisfy both hypotheses. B is the closure of
/// A under the stacks required by (ii); draws that violate (i) or push a
/// stack out of K_1 are rejected.
std::vector<CoveringInstance> random_covering_instances(int dim, int level, std::size_t count, std::uint64_t seed);

struct CoveringSweep {
    std::size_t instances = 0;
    std::size_t passed = 0;
};
CoveringSweep covering_lemma_sweep(int dim, int level, std::size_t count, std::uint64_t seed);

}  // namespace aperture
