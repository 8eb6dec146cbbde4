#include "aperture/experiment.hpp"

#include "aperture/error.hpp"
#include "aperture/expression.hpp"
#include "aperture/goodsets.hpp"
#include "aperture/regularity.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <sys/utsname.h>

namespace aperture {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void config_error(const std::string& msg) { throw ValidationError("config", msg); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) config_error(key + ": trailing characters in number '" + v + "'");
        return x;
    } catch (const std::invalid_argument&) {
        config_error(key + ": not a number: '" + v + "'");
    } catch (const std::out_of_range&) {
        config_error(key + ": number out of range: '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 1e9) config_error(key + ": expected an integer, got '" + v + "'");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    config_error(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& part : split(v, ',')) {
        if (part.empty()) config_error(key + ": empty list element");
        out.push_back(to_double(key, part));
    }
    if (out.empty()) config_error(key + ": empty list");
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::set<std::string>& analysis_kinds() {
    static const std::set<std::string> k{"campanato", "polyseq", "loglip", "holder",   "c2alpha", "sobolev",
                                         "pbmo",      "adecay",  "alphabeta", "maxprinciple", "residual", "c11"};
    return k;
}

const std::set<std::string>& analysis_params(const std::string& kind) {
    static const std::map<std::string, std::set<std::string>> p{
        {"campanato", {"alpha", "radii", "center", "exact"}},
        {"polyseq", {"alpha", "rho", "k_max"}},
        {"loglip", {"radii", "center"}},
        {"holder", {"alpha", "region"}},
        {"c2alpha", {"alpha", "region"}},
        {"sobolev", {"p", "region"}},
        {"pbmo", {"p", "radii", "region", "field", "stride"}},
        {"adecay", {"openings", "cube", "space_only", "threads"}},
        {"alphabeta", {"M", "C1", "rho", "k_max", "p", "radii", "space_only", "threads"}},
        {"maxprinciple", {}},
        {"residual", {}},
        {"c11", {}},
    };
    return p.at(kind);
}

const std::set<std::string>& sweep_parameters() {
    static const std::set<std::string> s{"aperture", "lambda", "Lambda", "p", "h", "dt", "cfl_safety"};
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) config_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) config_error("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) config_error("line " + std::to_string(lineno) + ": duplicate key " + key);
        kv[key] = value;
        cfg.entries.emplace_back(key, value);
    }

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (auto v = take("problem.dim")) cfg.dim = to_int("problem.dim", *v);
    if (cfg.dim < 1 || cfg.dim > kMaxDim) config_error("problem.dim must be 1, 2 or 3");
    const int d = cfg.dim;

    if (auto v = take("problem.operator")) cfg.op = *v;
    static const std::set<std::string> ops{"pucci_plus", "pucci_minus", "trace", "linear", "isaacs", "plaplace"};
    if (!ops.count(cfg.op)) config_error("problem.operator: unknown operator '" + cfg.op + "'");
    if (auto v = take("problem.lambda")) cfg.lambda = to_double("problem.lambda", *v);
    if (auto v = take("problem.Lambda")) cfg.Lambda = to_double("problem.Lambda", *v);
    if (auto v = take("problem.aperture")) cfg.aperture = to_double("problem.aperture", *v);
    if (auto v = take("problem.p")) cfg.p = to_double("problem.p", *v);
    if (auto v = take("problem.source")) cfg.source = *v;
    if (auto v = take("problem.source_table")) cfg.source_table = *v;
    if (auto v = take("problem.boundary")) cfg.boundary = *v;
    if (auto v = take("problem.boundary_table")) cfg.boundary_table = *v;
    if (auto v = take("problem.source_class")) cfg.source_class = *v;
    static const std::set<std::string> classes{"smooth", "holder", "bounded", "lp"};
    if (!classes.count(cfg.source_class)) config_error("problem.source_class: unknown class '" + cfg.source_class + "'");
    if (auto v = take("problem.source_alpha")) cfg.source_alpha = to_double("problem.source_alpha", *v);
    if (auto v = take("problem.source_p")) cfg.source_p = to_double("problem.source_p", *v);
    if (auto v = take("problem.normalize")) cfg.normalize = to_bool("problem.normalize", *v);

    cfg.domain.dim = d;
    std::vector<double> lo(static_cast<std::size_t>(d), -1.0), hi(static_cast<std::size_t>(d), 1.0);
    auto axis_list = [&](const std::string& key, std::vector<double>& dst) {
        if (auto v = take(key)) {
            auto l = to_list(key, *v);
            if (l.size() == 1) l.assign(static_cast<std::size_t>(d), l[0]);
            if (static_cast<int>(l.size()) != d) config_error(key + ": expected 1 or " + std::to_string(d) + " values");
            dst = l;
        }
    };
    axis_list("problem.domain.lo", lo);
    axis_list("problem.domain.hi", hi);
    for (int a = 0; a < d; ++a) cfg.domain.x[a] = {lo[static_cast<std::size_t>(a)], hi[static_cast<std::size_t>(a)]};
    cfg.domain.t = {-1.0, 0.0};
    if (auto v = take("problem.domain.t0")) cfg.domain.t.lo = to_double("problem.domain.t0", *v);

    const auto ball_r = take("problem.ball.radius");
    const auto ball_c = take("problem.ball.center");
    if (ball_c && !ball_r) config_error("problem.ball.center needs problem.ball.radius");
    if (ball_r) {
        ParabolicCylinder b;
        b.center.dim = d;
        b.radius = to_double("problem.ball.radius", *ball_r);
        if (ball_c) {
            const auto c = to_list("problem.ball.center", *ball_c);
            if (static_cast<int>(c.size()) != d) config_error("problem.ball.center: expected " + std::to_string(d) + " values");
            for (int a = 0; a < d; ++a) b.center.x[a] = c[static_cast<std::size_t>(a)];
        }
        cfg.ball = b;
    }

    // Coefficient and Isaacs keys.
    for (auto it = kv.begin(); it != kv.end();) {
        const std::string& key = it->first;
        if (key.rfind("problem.coeff.", 0) == 0) {
            const std::string rest = key.substr(14);
            if (rest == "offset") {
                cfg.coeff_offset = it->second;
            } else if (rest.size() == 3 && rest[0] == 'a' && rest[1] >= '1' && rest[2] >= '1' && rest[1] - '0' <= d &&
                       rest[2] - '0' <= d && rest[1] <= rest[2]) {
                cfg.coeff[rest.substr(1)] = it->second;
            } else {
                config_error("unknown key " + key + " (coefficients are a<i><j> with i <= j <= dim, or offset)");
            }
            it = kv.erase(it);
        } else if (key.rfind("problem.isaacs.", 0) == 0) {
            const auto parts = split(key.substr(15), '.');
            if (parts.size() != 3) config_error("unknown key " + key + " (expected problem.isaacs.<b>.<g>.<aij|f>)");
            const int b = to_int(key, parts[0]);
            const int g = to_int(key, parts[1]);
            const std::string& leaf = parts[2];
            const bool ok_leaf = leaf == "f" || (leaf.size() == 3 && leaf[0] == 'a' && leaf[1] >= '1' && leaf[2] >= '1' &&
                                                 leaf[1] - '0' <= d && leaf[2] - '0' <= d && leaf[1] <= leaf[2]);
            if (!ok_leaf || b < 0 || g < 0) config_error("unknown key " + key);
            cfg.isaacs[b][g][leaf] = it->second;
            it = kv.erase(it);
        } else {
            ++it;
        }
    }

    if (auto v = take("scheme.h")) cfg.scheme.h = to_double("scheme.h", *v);
    if (auto v = take("scheme.dt")) cfg.scheme.dt = to_double("scheme.dt", *v);
    if (auto v = take("scheme.cfl_safety")) cfg.scheme.cfl_safety = to_double("scheme.cfl_safety", *v);
    if (auto v = take("scheme.store_every")) cfg.scheme.store_every = to_int("scheme.store_every", *v);
    if (auto v = take("scheme.store_levels")) cfg.scheme.store_levels = to_int("scheme.store_levels", *v);
    if (!(cfg.scheme.h > 0.0)) config_error("scheme.h must be positive");
    if (!(cfg.scheme.cfl_safety > 0.0)) config_error("scheme.cfl_safety must be positive");
    if (cfg.scheme.store_every < 1) config_error("scheme.store_every must be at least 1");
    if (cfg.scheme.store_levels < 0 || cfg.scheme.store_levels == 1) config_error("scheme.store_levels must be 0 or >= 2");

    // Analyses: analysis.<id>.<param>; ids keep file order.
    std::vector<std::string> order;
    for (const auto& [key, value] : cfg.entries) {
        (void)value;
        if (key.rfind("analysis.", 0) != 0) continue;
        const auto dot = key.find('.', 9);
        if (dot == std::string::npos) config_error("unknown key " + key + " (expected analysis.<id>.<param>)");
        const std::string id = key.substr(9, dot - 9);
        if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
    }
    for (const auto& id : order) {
        AnalysisConfig a;
        a.id = id;
        const std::string prefix = "analysis." + id + ".";
        const auto kind = take(prefix + "kind");
        if (!kind) config_error(prefix + "kind is required");
        if (!analysis_kinds().count(*kind)) config_error(prefix + "kind: unknown analysis '" + *kind + "'");
        a.kind = *kind;
        for (auto it = kv.begin(); it != kv.end();) {
            if (it->first.rfind(prefix, 0) == 0) {
                const std::string param = it->first.substr(prefix.size());
                if (!analysis_params(a.kind).count(param))
                    config_error("unknown key " + it->first + " for analysis kind " + a.kind);
                a.params[param] = it->second;
                it = kv.erase(it);
            } else {
                ++it;
            }
        }
        cfg.analyses.push_back(std::move(a));
    }

    if (auto v = take("sweep.parameter")) cfg.sweep_parameter = *v;
    if (auto v = take("sweep.values")) cfg.sweep_values = to_list("sweep.values", *v);
    if (!cfg.sweep_parameter.empty() && !sweep_parameters().count(cfg.sweep_parameter))
        config_error("sweep.parameter: cannot sweep '" + cfg.sweep_parameter + "'");
    if (cfg.sweep_parameter.empty() != cfg.sweep_values.empty())
        config_error("sweep.parameter and sweep.values must be given together");

    if (auto v = take("output.dir")) cfg.out_dir = *v;
    if (auto v = take("output.formats")) {
        for (const auto& f : split(*v, ','))
            if (f != "csv" && f != "json") config_error("output.formats: unsupported format '" + f + "'");
    }
    if (auto v = take("seed")) {
        const double s = to_double("seed", *v);
        if (s < 0 || s != std::floor(s)) config_error("seed must be a non-negative integer");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = take("run.workers")) cfg.workers = to_int("run.workers", *v);
    if (cfg.workers < 1) config_error("run.workers must be at least 1");

    if (!kv.empty()) config_error("unknown key " + kv.begin()->first);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_text(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.entries) out += k + " = " + v + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Problem construction

namespace {

struct SweepOverrides {
    double lambda;
    double Lambda;
    double p;
};

SweepOverrides overrides(const ExperimentConfig& cfg, double sv) {
    SweepOverrides o{cfg.lambda, cfg.Lambda, cfg.p};
    const std::string& name = cfg.sweep_parameter;
    const bool sweeping = !name.empty() && !std::isnan(sv);
    if (sweeping && name == "lambda") o.lambda = sv;
    if (sweeping && name == "Lambda") o.Lambda = sv;
    if (sweeping && name == "p") o.p = sv;
    std::optional<double> aperture = cfg.aperture;
    if (sweeping && name == "aperture") aperture = sv;
    if (aperture) o.Lambda = o.lambda * (1.0 + *aperture);
    return o;
}

ScalarField scalar_field(const std::string& expr, const std::string& table, int dim) {
    if (!table.empty()) {
        auto t = std::make_shared<GriddedTable>(GriddedTable::load(table, dim));
        return [t](const SpatialVec& x, double s) { return (*t)(x, s); };
    }
    auto e = Expression::parse(expr, dim);
    return [e](const SpatialVec& x, double t) { return e(x, t); };
}

MatrixField matrix_field(const std::map<std::string, std::string>& entries, int dim) {
    std::vector<std::pair<std::pair<int, int>, Expression>> parts;
    for (const auto& [ij, text] : entries) {
        const std::string k = ij.front() == 'a' ? ij.substr(1) : ij;
        if (k == "f") continue;
        parts.push_back({{k[0] - '1', k[1] - '1'}, Expression::parse(text, dim)});
    }
    return [parts, dim](const SpatialVec& x, double t) {
        SymmetricMatrix m(dim);
        for (const auto& [ij, e] : parts) m.set(ij.first, ij.second, e(x, t));
        return m;
    };
}

OperatorSpec build_operator(const ExperimentConfig& cfg, const SweepOverrides& o) {
    const int d = cfg.dim;
    if (cfg.op == "plaplace") return OperatorSpec::plaplace(d, o.p);
    if (cfg.op == "trace") {
        if (o.Lambda != o.lambda)
            throw ValidationError("ellipticity", "the trace operator has zero aperture; set Lambda = lambda");
        return OperatorSpec::scaled_trace(d, o.lambda);
    }
    const auto pair = EllipticityPair::make(o.lambda, o.Lambda);
    if (cfg.op == "pucci_plus") return OperatorSpec::pucci_plus(d, pair);
    if (cfg.op == "pucci_minus") return OperatorSpec::pucci_minus(d, pair);
    if (cfg.op == "linear") {
        if (cfg.coeff.empty()) throw ValidationError("config", "linear operator needs problem.coeff.aij entries");
        ScalarField offset;
        if (!cfg.coeff_offset.empty()) offset = scalar_field(cfg.coeff_offset, "", d);
        return OperatorSpec::linear(d, matrix_field(cfg.coeff, d), pair, offset);
    }
    // isaacs
    if (cfg.isaacs.empty()) throw ValidationError("config", "isaacs operator needs problem.isaacs.<b>.<g> entries");
    std::vector<std::vector<IsaacsPair>> families;
    for (const auto& [b, row] : cfg.isaacs) {
        (void)b;
        std::vector<IsaacsPair> fam;
        for (const auto& [g, leaves] : row) {
            (void)g;
            IsaacsPair ip;
            ip.a = matrix_field(leaves, d);
            auto f = leaves.find("f");
            if (f != leaves.end()) ip.f = scalar_field(f->second, "", d);
            fam.push_back(std::move(ip));
        }
        families.push_back(std::move(fam));
    }
    return OperatorSpec::isaacs(d, std::move(families), pair);
}

}  // namespace

ProblemSpec build_problem(const ExperimentConfig& cfg, double sweep_value, double* shift) {
    const auto o = overrides(cfg, sweep_value);
    ProblemSpec spec{build_operator(cfg, o), scalar_field(cfg.source, cfg.source_table, cfg.dim),
                     scalar_field(cfg.boundary, cfg.boundary_table, cfg.dim), cfg.domain, cfg.ball};
    if (cfg.normalize) return normalize_problem(spec, shift);
    if (shift) *shift = 0.0;
    return spec;
}

SchemeConfig build_scheme(const ExperimentConfig& cfg, double sv) {
    SchemeConfig s = cfg.scheme;
    if (cfg.sweep_parameter.empty() || std::isnan(sv)) return s;
    if (cfg.sweep_parameter == "h") s.h = sv;
    if (cfg.sweep_parameter == "dt") s.dt = sv;
    if (cfg.sweep_parameter == "cfl_safety") s.cfl_safety = sv;
    return s;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

double param_or(const AnalysisConfig& a, const std::string& key, double def) {
    auto it = a.params.find(key);
    return it == a.params.end() ? def : to_double("analysis." + a.id + "." + key, it->second);
}

std::vector<double> list_or(const AnalysisConfig& a, const std::string& key, std::vector<double> def) {
    auto it = a.params.find(key);
    return it == a.params.end() ? def : to_list("analysis." + a.id + "." + key, it->second);
}

bool bool_or(const AnalysisConfig& a, const std::string& key, bool def) {
    auto it = a.params.find(key);
    return it == a.params.end() ? def : to_bool("analysis." + a.id + "." + key, it->second);
}

std::string string_or(const AnalysisConfig& a, const std::string& key, const std::string& def) {
    auto it = a.params.find(key);
    return it == a.params.end() ? def : it->second;
}

std::vector<double> sweep_points(const ExperimentConfig& cfg) {
    if (cfg.sweep_values.empty()) return {std::numeric_limits<double>::quiet_NaN()};
    return cfg.sweep_values;
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
    for (double sv : sweep_points(cfg)) {
        const auto spec = build_problem(cfg, sv);
        const auto samples = random_ellipticity_samples(cfg.dim, 256, cfg.seed, 2.0);
        const auto rep = check_uniform_ellipticity(spec.op, spec.op.pair(), samples);
        if (!rep.pass)
            throw ValidationError("ellipticity", "sampled ellipticity check failed (worst violation " +
                                                     fmt(rep.worst_violation) + ")");
        const auto scheme = build_scheme(cfg, sv);
        if (!(scheme.h > 0.0)) throw ValidationError("config", "scheme.h must be positive");
    }

    const std::string& cls = cfg.source_class;
    const bool holder = cls == "smooth" || cls == "holder";
    const bool bounded = holder || cls == "bounded";
    const double src_alpha = cls == "smooth" ? 1.0 : cfg.source_alpha;
    for (const auto& a : cfg.analyses) {
        if (a.kind == "polyseq") {
            const double alpha = param_or(a, "alpha", 0.5);
            if (!holder || src_alpha + 1e-12 < alpha)
                throw ValidationError("source_class", "analysis " + a.id +
                                                          " needs a C^alpha source with exponent at least " + fmt(alpha));
        }
        if (a.kind == "loglip" && !bounded)
            throw ValidationError("source_class", "analysis " + a.id + " needs a bounded source");
        if (a.kind == "sobolev" || a.kind == "adecay" || a.kind == "alphabeta") {
            if (!bounded && !(cls == "lp" && cfg.source_p > cfg.dim + 1))
                throw ValidationError("source_class",
                                      "analysis " + a.id + " needs an L^p source with p > d + 1 (problem.source_p)");
        }
    }
    if (bounded && cfg.source_table.empty()) {
        // Cheap probe: a bounded class must not evaluate to inf or NaN.
        const auto e = Expression::parse(cfg.source, cfg.dim);
        std::mt19937_64 rng(cfg.seed);
        for (int i = 0; i < 512; ++i) {
            SpatialVec x{};
            for (int a = 0; a < cfg.dim; ++a)
                x[a] = std::uniform_real_distribution<double>(cfg.domain.x[a].lo, cfg.domain.x[a].hi)(rng);
            const double t = std::uniform_real_distribution<double>(cfg.domain.t.lo, 0.0)(rng);
            if (!std::isfinite(e(x, t)))
                throw ValidationError("source_class", "source declared " + cls + " but evaluates to a non-finite value");
        }
    }
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_header() {
    return "schema,sweep_parameter,sweep_value,analysis,estimator,exponent,constant,r2,detail,scales,values";
}

std::string csv_row(const ResultRow& r) {
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
        return s;
    };
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ' ');
    return std::string(kCsvSchema) + "," + r.sweep_parameter + "," + fmt(r.sweep_value) + "," + r.analysis + "," +
           r.estimator + "," + fmt(r.exponent) + "," + fmt(r.constant) + "," + fmt(r.r2) + "," + detail + "," +
           join(r.scales) + "," + join(r.values);
}

std::string csv_text(const std::vector<ResultRow>& rows) {
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) out += csv_row(r) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Analyses

namespace {

Region parse_region(const AnalysisConfig& a, const ExperimentConfig& cfg) {
    const std::string text = string_or(a, "region", "cube:0.5");
    if (text == "domain") return cfg.domain;
    const auto colon = text.find(':');
    if (colon == std::string::npos) config_error("analysis." + a.id + ".region: expected domain, cube:R or cylinder:R");
    const std::string kind = text.substr(0, colon);
    const double r = to_double("analysis." + a.id + ".region", trim(text.substr(colon + 1)));
    if (kind == "cube") return ParabolicCube{cfg.dim, r};
    if (kind == "cylinder") {
        Point c;
        c.dim = cfg.dim;
        return ParabolicCylinder{c, r};
    }
    config_error("analysis." + a.id + ".region: unknown region kind '" + kind + "'");
}

Point parse_center(const AnalysisConfig& a, int dim) {
    Point c;
    c.dim = dim;
    auto it = a.params.find("center");
    if (it == a.params.end()) return c;
    const auto v = to_list("analysis." + a.id + ".center", it->second);
    if (static_cast<int>(v.size()) != dim + 1) config_error("analysis." + a.id + ".center: expected x1..xd,t");
    for (int i = 0; i < dim; ++i) c.x[i] = v[static_cast<std::size_t>(i)];
    c.t = v.back();
    return c;
}

GridFunction effective_source(const ProblemSpec& spec, const SpaceTimeGrid& grid) {
    const SymmetricMatrix zero(spec.op.dim());
    const SpatialVec e1{1.0, 0.0, 0.0};
    return GridFunction::sample(grid, [&](const SpatialVec& x, double t) {
        return (spec.source ? spec.source(x, t) : 0.0) + spec.op.evaluate(x, t, zero, &e1);
    });
}

std::vector<ResultRow> run_analysis(const AnalysisConfig& a, const ExperimentConfig& cfg, const ProblemSpec& spec,
                                    const SolveResult& sol) {
    const auto& u = sol.u;
    const int d = cfg.dim;
    std::vector<ResultRow> rows;
    ResultRow r;
    r.analysis = a.id;
    r.estimator = a.kind;
    r.exponent = r.constant = r.r2 = std::numeric_limits<double>::quiet_NaN();

    if (a.kind == "campanato") {
        CampanatoOptions opt;
        opt.exact = bool_or(a, "exact", false);
        const auto radii = list_or(a, "radii", default_radii());
        const auto rep = campanato_seminorm(u, param_or(a, "alpha", 0.5), parse_center(a, d), radii, opt);
        for (const auto& lvl : rep.levels) {
            r.scales.push_back(lvl.radius);
            r.values.push_back(lvl.sup_residual);
        }
        const auto fit = decay_exponent_fit(r.scales, r.values);
        r.exponent = fit.exponent;
        r.r2 = fit.r2;
        r.constant = rep.value;
        r.detail = "seminorm=" + fmt(rep.value) + ";fit_constant=" + fmt(fit.constant);
        rows.push_back(r);
    } else if (a.kind == "polyseq") {
        const double f0 = spec.source ? spec.source(SpatialVec{}, 0.0) : 0.0;
        const auto rep = dyadic_polynomial_sequence(u, spec.op, param_or(a, "rho", 0.5), param_or(a, "alpha", 0.5),
                                                    static_cast<int>(param_or(a, "k_max", 5)), f0);
        ResultRow inc = r;
        inc.estimator = "polyseq_increments";
        for (const auto& lvl : rep.levels) {
            r.scales.push_back(lvl.radius);
            r.values.push_back(lvl.sup_error);
            inc.scales.push_back(lvl.k);
            inc.values.push_back(lvl.delta_D);
        }
        r.exponent = rep.fit.exponent;
        r.constant = rep.fit.constant;
        r.r2 = rep.fit.r2;
        const auto& last = rep.levels.back();
        r.detail = "last_increment_linear=" + fmt(last.increment_linear) +
                   ";last_increment_quadratic=" + fmt(last.increment_quadratic);
        inc.detail = "values=|D_k-D_k-1| (operator norm)";
        rows.push_back(r);
        rows.push_back(inc);
    } else if (a.kind == "loglip") {
        const auto rep = loglip_fit(u, parse_center(a, d), list_or(a, "radii", default_radii()));
        r.scales = rep.radii;
        r.values = rep.moduli;
        r.exponent = 2.0;
        r.constant = rep.preferred == "log" ? rep.c_log : rep.c_plain;
        r.detail = "preferred=" + rep.preferred + ";c_plain=" + fmt(rep.c_plain) + ";c_log=" + fmt(rep.c_log) +
                   ";ssr_plain=" + fmt(rep.ssr_plain) + ";ssr_log=" + fmt(rep.ssr_log);
        rows.push_back(r);
    } else if (a.kind == "holder" || a.kind == "c2alpha") {
        HolderOptions opt;
        opt.seed = cfg.seed;
        const double alpha = param_or(a, "alpha", 0.5);
        const auto region = parse_region(a, cfg);
        r.constant = a.kind == "holder" ? holder_seminorm(u, alpha, region, opt) : c2alpha_seminorm(u, alpha, region, opt);
        r.detail = "alpha=" + fmt(alpha);
        rows.push_back(r);
    } else if (a.kind == "sobolev") {
        const double p = param_or(a, "p", cfg.dim + 2.0);
        r.constant = sobolev_norm(u, p, parse_region(a, cfg));
        r.detail = "p=" + fmt(p);
        rows.push_back(r);
    } else if (a.kind == "pbmo") {
        const double p = param_or(a, "p", 2.0);
        const std::string field = string_or(a, "field", "source");
        if (field != "source" && field != "u") config_error("analysis." + a.id + ".field: expected source or u");
        const GridFunction g = field == "u" ? u : effective_source(spec, u.grid());
        const auto radii = list_or(a, "radii", default_radii());
        r.constant = pbmo_norm(g, p, parse_region(a, cfg), radii, static_cast<int>(param_or(a, "stride", 1)));
        r.detail = "p=" + fmt(p) + ";field=" + field;
        rows.push_back(r);
    } else if (a.kind == "adecay") {
        TouchingOptions opt;
        opt.space_only = bool_or(a, "space_only", false);
        opt.threads = static_cast<int>(param_or(a, "threads", 0));
        const auto table = compute_openings(u, ParabolicCube{d, param_or(a, "cube", 1.0)}, opt);
        std::vector<double> openings = list_or(a, "openings", {});
        if (openings.empty()) {
            for (int i = 0; i < 8; ++i) openings.push_back(std::pow(2.0, i));
        }
        const auto rep = a_decay(table, openings);
        r.scales = rep.openings;
        r.values = rep.measures;
        if (!rep.empty) {
            r.exponent = rep.fit.exponent;
            r.constant = rep.fit.constant;
            r.r2 = rep.fit.r2;
        }
        r.detail = "delta=" + fmt(rep.delta) + ";empty=" + (rep.empty ? "1" : "0") +
                   ";cube_measure=" + fmt(table.cube_measure) +
                   ";full_domain=" + (table.domain_is_full_grid ? "1" : "0");
        rows.push_back(r);
    } else if (a.kind == "alphabeta") {
        TouchingOptions opt;
        opt.space_only = bool_or(a, "space_only", false);
        opt.threads = static_cast<int>(param_or(a, "threads", 0));
        const double p = param_or(a, "p", cfg.source_class == "lp" ? cfg.source_p : cfg.dim + 2.0);
        const auto f = effective_source(spec, u.grid());
        const auto rep = alpha_beta_sequences(u, f, param_or(a, "M", 2.0), param_or(a, "C1", 1.0),
                                              param_or(a, "rho", 0.5), static_cast<int>(param_or(a, "k_max", 6)),
                                              list_or(a, "radii", default_radii()), p, opt);
        ResultRow al = r, be = r;
        al.estimator = "alpha_k";
        be.estimator = "beta_k";
        bool rec = true, env = true, res = true;
        for (const auto& lvl : rep.levels) {
            al.scales.push_back(lvl.k);
            be.scales.push_back(lvl.k);
            al.values.push_back(lvl.alpha);
            be.values.push_back(lvl.beta);
            rec = rec && lvl.recursion;
            env = env && lvl.envelope;
            res = res && lvl.resolved;
        }
        al.constant = rep.sum_alpha;
        be.constant = rep.sum_beta;
        const std::string flags = ";recursion=" + std::string(rec ? "1" : "0") + ";envelope=" + (env ? "1" : "0") +
                                  ";resolved=" + (res ? "1" : "0") + ";full_domain=" +
                                  (rep.domain_is_full_grid ? "1" : "0");
        al.detail = "constant=sum M^pk alpha_k" + flags;
        be.detail = "constant=sum M^pk beta_k" + flags;
        rows.push_back(al);
        rows.push_back(be);
    } else if (a.kind == "maxprinciple") {
        const auto rep = maximum_principle_check(sol);
        r.constant = rep.excess;
        r.detail = std::string("applicable=") + (rep.applicable ? "1" : "0") + ";pass=" + (rep.pass ? "1" : "0") +
                   ";interior_sup=" + fmt(rep.interior_sup) + ";boundary_sup=" + fmt(rep.boundary_sup);
        rows.push_back(r);
    } else if (a.kind == "residual") {
        r.constant = std::max(sol.residual.lower, sol.residual.upper);
        r.detail = "lower=" + fmt(sol.residual.lower) + ";upper=" + fmt(sol.residual.upper) +
                   ";f_bound=" + fmt(sol.residual.f_bound);
        rows.push_back(r);
    } else if (a.kind == "c11") {
        r.constant = c11_bound(u);
        rows.push_back(r);
    }
    return rows;
}

SweepPointResult run_point(const ExperimentConfig& cfg, double sv) {
    SweepPointResult out;
    out.sweep_value = sv;
    const auto spec = build_problem(cfg, sv, &out.normalization_shift);
    const auto scheme = build_scheme(cfg, sv);
    const auto sol = solve(spec, scheme);
    out.solve_seconds = sol.stats.wall_seconds;
    out.steps = sol.stats.steps;
    out.dt = sol.stats.dt_step;
    for (const auto& a : cfg.analyses) {
        const auto t0 = Clock::now();
        auto rows = run_analysis(a, cfg, spec, sol);
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        for (auto& r : rows) {
            r.sweep_parameter = cfg.sweep_parameter.empty() ? "none" : cfg.sweep_parameter;
            r.sweep_value = std::isnan(sv) ? 0.0 : sv;
            r.runtime = secs;
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace

std::vector<SweepPointResult> run_sweep(const ExperimentConfig& cfg, int workers) {
    const auto points = sweep_points(cfg);
    std::vector<SweepPointResult> results(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    const std::size_t n_workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                results[i] = run_point(cfg, points[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    // First failure in sweep order wins, independent of scheduling.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const CflError*>(&e)) return 3;
    if (dynamic_cast<const PreconditionError*>(&e)) return 4;
    return 5;
}

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json environment() {
    nlohmann::json env;
    utsname u{};
    if (uname(&u) == 0) {
        env["system"] = u.sysname;
        env["release"] = u.release;
        env["machine"] = u.machine;
    }
    env["compiler"] = __VERSION__;
    env["cxx_standard"] = static_cast<long>(__cplusplus);
    env["hardware_threads"] = std::thread::hardware_concurrency();
    env["version"] = kVersion;
    return env;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + p.string());
    out << text;
}

}  // namespace

RunOutcome run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir,
                          const std::optional<int>& workers) {
    namespace fs = std::filesystem;
    RunOutcome outcome;
    fs::path dir = out_dir.value_or("results");
    const std::string started = utc_now();
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    bool have_cfg = false;
    try {
        if (config_path.size() > 5 && config_path.substr(config_path.size() - 5) == ".json") {
            std::ifstream in(config_path);
            if (!in) config_error("cannot read manifest " + config_path);
            nlohmann::json m;
            try {
                in >> m;
            } catch (const nlohmann::json::exception& e) {
                config_error(std::string("manifest is not valid JSON: ") + e.what());
            }
            if (!m.contains("config_text")) config_error("manifest has no config_text");
            cfg = parse_config(m["config_text"].get<std::string>());
        } else {
            cfg = load_config(config_path);
        }
        have_cfg = true;
        if (!out_dir) dir = cfg.out_dir;
        fs::create_directories(dir);
        validate_config(cfg);
        const int n_workers = workers.value_or(cfg.workers);
        const auto points = run_sweep(cfg, n_workers);

        std::vector<ResultRow> rows;
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : points) {
            nlohmann::json jp;
            jp["sweep_value"] = std::isnan(p.sweep_value) ? nlohmann::json(nullptr) : nlohmann::json(p.sweep_value);
            jp["normalization_shift"] = p.normalization_shift;
            jp["solve_seconds"] = p.solve_seconds;
            jp["steps"] = p.steps;
            jp["dt"] = p.dt;
            nlohmann::json jr = nlohmann::json::array();
            for (const auto& r : p.rows) {
                jr.push_back({{"analysis", r.analysis}, {"estimator", r.estimator}, {"runtime_seconds", r.runtime}});
                rows.push_back(r);
            }
            jp["analyses"] = jr;
            pts.push_back(jp);
        }
        write_file(dir / "results.csv", csv_text(rows));

        nlohmann::json man;
        man["schema"] = kCsvSchema;
        man["version"] = kVersion;
        man["config_path"] = config_path;
        man["config_text"] = config_text(cfg);
        nlohmann::json echo = nlohmann::json::object();
        for (const auto& [k, v] : cfg.entries) echo[k] = v;
        man["config"] = echo;
        man["seed"] = cfg.seed;
        man["workers"] = n_workers;
        man["environment"] = environment();
        man["started_utc"] = started;
        man["finished_utc"] = utc_now();
        man["total_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
        man["points"] = pts;
        man["rows"] = rows.size();
        write_file(dir / "manifest.json", man.dump(2) + "\n");
        return outcome;
    } catch (const std::exception& e) {
        outcome.exit_code = exit_code_for(e);
        const auto* err = dynamic_cast<const Error*>(&e);
        outcome.error_code = err ? err->code() : "internal";
        outcome.message = e.what();
        nlohmann::json j;
        j["code"] = outcome.error_code;
        j["message"] = outcome.message;
        j["exit_code"] = outcome.exit_code;
        j["config_path"] = config_path;
        j["category"] = outcome.exit_code == 2   ? "validation"
                        : outcome.exit_code == 3 ? "cfl"
                        : outcome.exit_code == 4 ? "precondition"
                                                 : "runtime";
        j["time_utc"] = utc_now();
        if (have_cfg) j["seed"] = cfg.seed;
        try {
            fs::create_directories(dir);
            write_file(dir / "errors.json", j.dump(2) + "\n");
        } catch (const std::exception&) {
            // Nothing more can be reported if the directory is unwritable.
        }
        return outcome;
    }
}

}  // namespace aperture
