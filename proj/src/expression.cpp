#include "aperture/expression.hpp"

#include "aperture/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <cmath>
#include <numbers>
#include <set>

namespace aperture {

namespace {

using Node = Expression::Node;
using Kind = Expression::Node::Kind;

const std::set<std::string> kUnary = {"sin", "cos", "exp", "log", "sqrt", "abs", "sign"};
const std::set<std::string> kBinary = {"min", "max", "pow"};

class Parser {
public:
    Parser(const std::string& text, int dim, std::vector<Node>& nodes) : s_(text), dim_(dim), nodes_(nodes) {}

    int parse() {
        const int root = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ValidationError("expression", "cannot parse '" + s_ + "' at offset " + std::to_string(pos_) + ": " + why);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(Kind k, int a, int b) {
        Node n;
        n.kind = k;
        n.args = {a, b};
        return push(std::move(n));
    }

    int expr() {
        int lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = binary(Kind::Add, lhs, term());
            } else if (accept('-')) {
                lhs = binary(Kind::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    int term() {
        int lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = binary(Kind::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = binary(Kind::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    int unary() {
        if (accept('-')) {
            Node n;
            n.kind = Kind::Neg;
            n.args = {unary()};
            return push(std::move(n));
        }
        if (accept('+')) return unary();
        return power();
    }

    int power() {
        const int base = primary();
        if (accept('^')) return binary(Kind::Pow, base, unary());
        return base;
    }

    int primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = expr();
            if (!accept(')')) fail("missing ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    int number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos_ += static_cast<std::size_t>(end - begin);
        Node n;
        n.kind = Kind::Number;
        n.value = v;
        return push(std::move(n));
    }

    int variable(int axis) {
        if (axis >= dim_) fail("coordinate x" + std::to_string(axis + 1) + " exceeds dimension " + std::to_string(dim_));
        Node n;
        n.kind = Kind::Var;
        n.var = axis;
        return push(std::move(n));
    }

    int identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        if (name == "t") {
            Node n;
            n.kind = Kind::Time;
            return push(std::move(n));
        }
        if (name == "pi") {
            Node n;
            n.value = std::numbers::pi;
            return push(std::move(n));
        }
        if (name == "x" || name == "x1") return variable(0);
        if (name == "y" || name == "x2") return variable(1);
        if (name == "z" || name == "x3") return variable(2);
        const bool is_unary = kUnary.count(name) > 0;
        const bool is_binary = kBinary.count(name) > 0;
        if (!is_unary && !is_binary) fail("unknown identifier '" + name + "'");
        if (!accept('(')) fail("expected '(' after " + name);
        Node n;
        n.kind = Kind::Call;
        n.fn = name;
        n.args.push_back(expr());
        if (is_binary) {
            if (!accept(',')) fail(name + " takes two arguments");
            n.args.push_back(expr());
        }
        if (!accept(')')) fail("missing ')' after arguments of " + name);
        return push(std::move(n));
    }

    const std::string& s_;
    int dim_;
    std::vector<Node>& nodes_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
    auto nodes = std::make_shared<std::vector<Node>>();
    Parser parser(text, dim, *nodes);
    Expression e;
    e.root_ = parser.parse();
    e.nodes_ = std::move(nodes);
    e.source_ = text;
    return e;
}

Expression Expression::constant(double value) {
    auto nodes = std::make_shared<std::vector<Node>>();
    Node n;
    n.value = value;
    nodes->push_back(n);
    Expression e;
    e.root_ = 0;
    e.nodes_ = std::move(nodes);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    e.source_ = buf;
    return e;
}

bool Expression::is_constant() const {
    if (!nodes_) return true;
    for (const auto& n : *nodes_) {
        if (n.kind == Kind::Var || n.kind == Kind::Time) return false;
    }
    return true;
}

double Expression::operator()(const SpatialVec& x, double t) const {
    if (!nodes_) return 0.0;
    return eval(root_, x, t);
}

double Expression::eval(int idx, const SpatialVec& x, double t) const {
    const Node& n = (*nodes_)[static_cast<std::size_t>(idx)];
    switch (n.kind) {
        case Kind::Number:
            return n.value;
        case Kind::Var:
            return x[static_cast<std::size_t>(n.var)];
        case Kind::Time:
            return t;
        case Kind::Neg:
            return -eval(n.args[0], x, t);
        case Kind::Add:
            return eval(n.args[0], x, t) + eval(n.args[1], x, t);
        case Kind::Sub:
            return eval(n.args[0], x, t) - eval(n.args[1], x, t);
        case Kind::Mul:
            return eval(n.args[0], x, t) * eval(n.args[1], x, t);
        case Kind::Div:
            return eval(n.args[0], x, t) / eval(n.args[1], x, t);
        case Kind::Pow:
            return std::pow(eval(n.args[0], x, t), eval(n.args[1], x, t));
        case Kind::Call: {
            const double a = eval(n.args[0], x, t);
            if (n.args.size() == 2) {
                const double b = eval(n.args[1], x, t);
                if (n.fn == "min") return std::min(a, b);
                if (n.fn == "max") return std::max(a, b);
                return std::pow(a, b);
            }
            if (n.fn == "sin") return std::sin(a);
            if (n.fn == "cos") return std::cos(a);
            if (n.fn == "exp") return std::exp(a);
            if (n.fn == "log") return std::log(a);
            if (n.fn == "sqrt") return std::sqrt(a);
            if (n.fn == "abs") return std::abs(a);
            return static_cast<double>((a > 0.0) - (a < 0.0));
        }
    }
    return 0.0;
}

GriddedTable GriddedTable::from_json_text(const std::string& text, int dim) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("table", std::string("bad table JSON: ") + e.what());
    }
    GriddedTable tab;
    tab.dim_ = dim;
    try {
        if (j.at("dim").get<int>() != dim) throw ValidationError("table", "table dimension does not match problem");
        const auto& axes = j.at("axes");
        if (axes.size() != static_cast<std::size_t>(dim)) throw ValidationError("table", "table needs one axis per dimension");
        std::size_t total = 1;
        auto add_axis = [&](const nlohmann::json& a) {
            const double lo = a.at(0).get<double>();
            const double hi = a.at(1).get<double>();
            const int n = a.at(2).get<int>();
            if (n < 1 || (n > 1 && !(hi > lo))) throw ValidationError("table", "bad table axis");
            tab.lo_.push_back(lo);
            tab.hi_.push_back(hi);
            tab.n_.push_back(n);
            total *= static_cast<std::size_t>(n);
        };
        for (const auto& a : axes) add_axis(a);
        add_axis(j.at("time"));
        tab.values_ = j.at("values").get<std::vector<double>>();
        if (tab.values_.size() != total) throw ValidationError("table", "table value count does not match its axes");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("table", std::string("bad table layout: ") + e.what());
    }
    for (double v : tab.values_)
        if (!std::isfinite(v)) throw ValidationError("table", "table has non-finite values");
    return tab;
}

GriddedTable GriddedTable::load(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw ValidationError("table", "cannot open table file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), dim);
}

double GriddedTable::operator()(const SpatialVec& x, double t) const {
    const int axes = dim_ + 1;
    std::array<int, kMaxDim + 1> base{};
    std::array<double, kMaxDim + 1> frac{};
    for (int a = 0; a < axes; ++a) {
        const double c = a < dim_ ? x[static_cast<std::size_t>(a)] : t;
        if (n_[a] == 1) continue;
        const double s = (std::clamp(c, lo_[a], hi_[a]) - lo_[a]) / (hi_[a] - lo_[a]) * (n_[a] - 1);
        base[a] = std::min(static_cast<int>(std::floor(s)), n_[a] - 2);
        frac[a] = s - base[a];
    }
    double out = 0.0;
    for (int corner = 0; corner < (1 << axes); ++corner) {
        double w = 1.0;
        std::size_t idx = 0;
        std::size_t stride = 1;
        for (int a = 0; a < axes; ++a) {
            const int bit = (corner >> a) & 1;
            if (n_[a] == 1 && bit) {
                w = 0.0;
                break;
            }
            w *= bit ? frac[a] : 1.0 - frac[a];
            idx += static_cast<std::size_t>(base[a] + bit) * stride;
            stride *= static_cast<std::size_t>(n_[a]);
        }
        if (w != 0.0) out += w * values_[idx];
    }
    return out;
}

}  // namespace aperture
