#pragma once

#include "aperture/grid.hpp"

#include <memory>
#include <string>
#include <vector>

namespace aperture {

/// Closed-form scalar field over (x1..xd, t), parsed from text.
///
/// Grammar: numbers, the variables x1 x2 x3 t (x y z alias x1 x2 x3), the
/// constant pi, binary + - * / ^, unary minus, parentheses, and the functions
/// sin cos exp log sqrt abs sign min max pow. Parsing errors and references to
/// coordinates beyond `dim` throw ValidationError with code "expression".
class Expression {
public:
    Expression() = default;
    static Expression parse(const std::string& text, int dim);
    static Expression constant(double value);

    double operator()(const SpatialVec& x, double t) const;
    const std::string& source() const { return source_; }
    bool is_constant() const;

    struct Node {
        enum class Kind { Number, Var, Time, Neg, Add, Sub, Mul, Div, Pow, Call } kind = Kind::Number;
        double value = 0.0;
        int var = 0;
        std::string fn;
        std::vector<int> args;
    };

private:
    double eval(int node, const SpatialVec& x, double t) const;

    std::string source_ = "0";
    std::shared_ptr<const std::vector<Node>> nodes_;
    int root_ = -1;
};

/// Scalar field sampled on a uniform tensor grid over (x1..xd, t) and
/// evaluated by multilinear interpolation (clamped at the edges).
///
/// JSON layout: {"dim": d, "axes": [[lo, hi, n], ...], "time": [lo, hi, n],
/// "values": [...]} with axis 0 varying fastest and time slowest.
class GriddedTable {
public:
    static GriddedTable load(const std::string& path, int dim);
    static GriddedTable from_json_text(const std::string& text, int dim);

    double operator()(const SpatialVec& x, double t) const;

private:
    int dim_ = 1;
    // Axes 0..dim-1 are space, axis dim is time.
    std::vector<double> lo_, hi_;
    std::vector<int> n_;
    std::vector<double> values_;
};

}  // namespace aperture
