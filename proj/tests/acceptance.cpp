// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria (capped at 125).

#include "aperture/error.hpp"
#include "aperture/experiment.hpp"
#include "aperture/goodsets.hpp"
#include "aperture/operators.hpp"
#include "aperture/regularity.hpp"
#include "aperture/solver.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace aperture;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.pass) ++failures;
    std::printf("%s %02d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

struct CsvRow {
    double sweep_value = 0.0;
    std::string analysis;
    std::string estimator;
    double exponent = 0.0;
    double r2 = 0.0;
    std::map<std::string, std::string> detail;
    std::vector<double> values;
};

std::vector<CsvRow> read_rows(const std::string& csv) {
    std::vector<CsvRow> rows;
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) {
        const auto f = split(line, ',');
        if (f.size() != 11) throw std::runtime_error("malformed CSV row: " + line);
        CsvRow r;
        r.sweep_value = std::stod(f[2]);
        r.analysis = f[3];
        r.estimator = f[4];
        r.exponent = std::stod(f[5]);
        r.r2 = std::stod(f[7]);
        for (const auto& kv : split(f[8], ';')) {
            const auto eq = kv.find('=');
            if (eq != std::string::npos) r.detail[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        for (const auto& v : split(f[10], ';'))
            if (!v.empty()) r.values.push_back(std::stod(v));
        rows.push_back(r);
    }
    return rows;
}

// Runs a shipped config into the scratch directory and returns the CSV text.
std::string run_config(const std::string& name, const std::string& tag) {
    const fs::path out = fs::path(APERTURE_SCRATCH_DIR) / tag;
    fs::remove_all(out);
    const auto res = run_experiment((fs::path(APERTURE_CONFIG_DIR) / name).string(), out.string(), std::nullopt);
    if (res.exit_code != 0) throw std::runtime_error(name + " exited " + std::to_string(res.exit_code) + ": " + res.message);
    return slurp(out / "results.csv");
}

double eigen_pucci_plus(const SymmetricMatrix& m, const EllipticityPair& p) {
    Eigen::MatrixXd e(m.dim(), m.dim());
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) e(i, j) = m(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i) {
        const double v = es.eigenvalues()(i);
        s += v > 0 ? p.Lambda * v : p.lambda * v;
    }
    return s;
}

// --- criteria ---------------------------------------------------------------

Outcome pucci_algebra() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> lam(0.1, 2.0), ap(0.0, 3.0);
    int ok = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int d = 1 + i % 3;
        const auto pair = EllipticityPair::from_aperture(lam(rng), ap(rng));
        const auto a = random_symmetric(d, rng, 3.0), b = random_symmetric(d, rng, 3.0);
        const double tol = 1e-10 * (1 + a.max_abs_entry() + b.max_abs_entry()) * pair.Lambda;
        const double pa = pucci_plus(a, pair), ma = pucci_minus(a, pair);
        const double pb = pucci_plus(b, pair), mb = pucci_minus(b, pair);
        const double pab = pucci_plus(a + b, pair), mab = pucci_minus(a + b, pair);
        const double err = std::max({std::abs(ma + pucci_plus(-a, pair)), std::abs(pa - eigen_pucci_plus(a, pair)),
                                     std::max(0.0, pab - pa - pb), std::max(0.0, ma + mb - mab),
                                     std::max(0.0, mab - (ma + pb)),
                                     std::max(0.0, (ma + pb) - pab), std::max(0.0, ma - pa)});
        worst = std::max(worst, err);
        if (err <= tol) ++ok;
    }
    return {ok == 1000, std::to_string(ok) + "/1000 matrices, worst violation " + num(worst)};
}

Outcome heat_convergence() {
    auto err = [](double h) {
        const ScalarField exact = [](const SpatialVec& x, double t) {
            return std::exp(-M_PI * M_PI * (t + 0.25)) * std::sin(M_PI * x[0]);
        };
        ProblemSpec spec{OperatorSpec::scaled_trace(1, 1.0), [](const SpatialVec&, double) { return 0.0; }, exact,
                         Box{1, {Interval{0, 1}}, Interval{-0.25, 0}}, std::nullopt};
        SchemeConfig cfg;
        cfg.h = h;
        cfg.dt = h * h / 4;
        cfg.store_levels = 2;
        const auto sol = solve(spec, cfg);
        double e = 0.0;
        for (std::size_t n = 0; n < sol.u.grid().size(); ++n) {
            const Point p = sol.u.grid().point(n);
            e = std::max(e, std::abs(sol.u[n] - exact({p.x[0], 0, 0}, p.t)));
        }
        return e;
    };
    const double e16 = err(1.0 / 16), e32 = err(1.0 / 32), e64 = err(1.0 / 64);
    const double r1 = e16 / e32, r2 = e32 / e64;
    const bool pass = r1 >= 3 && r1 <= 5 && r2 >= 3 && r2 <= 5;
    return {pass, "error ratios " + num(r1) + ", " + num(r2)};
}

Outcome max_principle() {
    std::mt19937_64 rng(303);
    int ok = 0, total = 0;
    std::string worst;
    for (int d = 1; d <= 2; ++d) {
        const auto pair = EllipticityPair::make(1.0, 2.5);
        const Box dom{d, {Interval{-1, 1}, Interval{-1, 1}}, Interval{-0.25, 0}};
        auto field = [d](const SpatialVec& x, double) {
            SymmetricMatrix a = SymmetricMatrix::identity(d, 1.5);
            a(0, 0) = 1.0 + 1.5 * x[0] * x[0];
            return a;
        };
        auto a0 = [d](const SpatialVec&, double) { return SymmetricMatrix::identity(d, 1.0); };
        auto a1 = [d](const SpatialVec&, double) { return SymmetricMatrix::identity(d, 2.5); };
        auto zero = [](const SpatialVec&, double) { return 0.0; };
        const std::vector<OperatorSpec> ops{
            OperatorSpec::pucci_plus(d, pair), OperatorSpec::pucci_minus(d, pair), OperatorSpec::scaled_trace(d, 1.7),
            OperatorSpec::linear(d, field, pair),
            OperatorSpec::isaacs(d, {{{a0, zero}, {a1, zero}}, {{field, zero}}}, pair)};
        std::uniform_real_distribution<double> u(-1, 1);
        for (const auto& op : ops) {
            for (int variant = 0; variant < 2; ++variant) {
                const double a = u(rng), b = u(rng);
                const ScalarField f = variant == 0 ? ScalarField([](const SpatialVec&, double) { return 0.0; })
                                                   : ScalarField([](const SpatialVec& x, double) { return -x[0] * x[0]; });
                ProblemSpec spec{op, f,
                                 [a, b](const SpatialVec& x, double t) { return a * std::sin(3 * x[0] + b) + std::cos(x[1] - t); },
                                 dom, std::nullopt};
                SchemeConfig cfg;
                cfg.h = d == 1 ? 1.0 / 32 : 1.0 / 8;
                const auto rep = maximum_principle_check(solve(spec, cfg));
                ++total;
                if (rep.applicable && rep.pass)
                    ++ok;
                else
                    worst = op.name() + " excess " + num(rep.excess);
            }
        }
    }
    return {ok == total && total == 20, std::to_string(ok) + "/" + std::to_string(total) + " operator/data combinations" +
                                            (worst.empty() ? "" : "; " + worst)};
}

Outcome campanato_corpus() {
    // Quadratic kernel first.
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-2, 2);
    const auto g0 = SpaceTimeGrid::covering(Box{1, {Interval{-1, 1}}, Interval{-1, 0}}, 1.0 / 16, 1.0 / 256);
    double kernel = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        const auto q = GridFunction::sample(g0, [=](const SpatialVec& x, double t) { return a + b * x[0] + c * t + d * x[0] * x[0]; });
        kernel = std::max(kernel, campanato_seminorm(q, 0.5, Point::make({0.0}, 0.0), {0.5, 0.25, 0.125}).value);
    }
    using Fn = std::function<double(const SpatialVec&, double)>;
    const std::vector<Fn> corpus{
        [](const SpatialVec& x, double) { return x[0] * x[0] * x[0]; },
        [](const SpatialVec& x, double t) { return std::sin(2 * x[0]) + t * t; },
        [](const SpatialVec& x, double t) { return std::exp(x[0] + t); },
        [](const SpatialVec& x, double t) { return std::cos(3 * x[0]) * std::exp(t); },
        [](const SpatialVec& x, double) { return std::pow(std::abs(x[0]), 2.5); },
        [](const SpatialVec& x, double t) { return x[0] * x[0] * t + t * t; },
        [](const SpatialVec& x, double t) { return std::sin(x[0]) * std::sin(t); },
        [](const SpatialVec& x, double) { return 1.0 / (1.0 + x[0] * x[0]); },
        [](const SpatialVec& x, double t) { return x[0] * x[0] * x[0] * x[0] - t; },
        [](const SpatialVec& x, double t) { return std::pow(std::abs(x[0]), 2.5) + x[0] * std::sin(t); },
    };
    double worst = 0.0;
    for (double h : {1.0 / 16, 1.0 / 32}) {
        const auto g = SpaceTimeGrid::covering(Box{1, {Interval{-1, 1}}, Interval{-1, 0}}, h, h * h);
        for (const auto& fn : corpus) {
            const auto f = GridFunction::sample(g, fn);
            const double camp = campanato_seminorm(f, 0.5, Point::make({0.0}, 0.0), {0.5, 0.25, 0.125}).value;
            const double c2a = c2alpha_seminorm(f, 0.5, ParabolicCube{1, 0.5});
            worst = std::max(worst, camp / c2a);
        }
    }
    const bool pass = kernel < 1e-10 && worst <= 10.0;
    return {pass, "kernel " + num(kernel) + ", max campanato/c2alpha ratio " + num(worst) + " over 10 fields x 2 grids"};
}

std::string schauder_csv;

Outcome schauder_exponent() {
    schauder_csv = run_config("schauder_sweep.cfg", "schauder_a");
    for (const auto& r : read_rows(schauder_csv)) {
        if (r.estimator == "polyseq" && std::abs(r.sweep_value - 0.05) < 1e-12) {
            const bool pass = r.exponent >= 2.2 && r.r2 >= 0.95;
            return {pass, "aperture 0.05: exponent " + num(r.exponent) + " (>= 2.2), r2 " + num(r.r2) + " (>= 0.95)"};
        }
    }
    return {false, "no polyseq row at aperture 0.05"};
}

Outcome loglip_model_choice() {
    auto preferred = [](const std::string& cfg, const std::string& tag) {
        const auto rows = read_rows(run_config(cfg, tag));
        for (const auto& r : rows)
            if (r.estimator == "loglip") return r.detail.at("preferred") + " (c_plain " + r.detail.at("c_plain") + ")";
        throw std::runtime_error("no loglip row in " + cfg);
    };
    const std::string sign = preferred("loglip_sign.cfg", "loglip_sign"), smooth = preferred("loglip_smooth.cfg", "loglip_smooth");
    const bool pass = sign.rfind("log", 0) == 0 && smooth.rfind("plain", 0) == 0;
    return {pass, "bounded sign source prefers " + sign + ", smooth source prefers " + smooth};
}

Outcome goodset_properties() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(-1, 1);
    const auto g = SpaceTimeGrid::covering(Box{1, {Interval{-1, 1}}, Interval{-1, 0}}, 1.0 / 8, 1.0 / 64);
    const ParabolicCube k{1, 0.5};
    TouchingOptions opt;
    opt.threads = 1;
    int ok = 0;
    std::string first_failure;
    for (int i = 0; i < 50; ++i) {
        double c[6];
        for (double& v : c) v = u(rng);
        const auto f = GridFunction::sample(g, [&c](const SpatialVec& x, double t) {
            return c[0] * std::sin(2 * x[0] + c[1]) + c[2] * x[0] * x[0] * x[0] + c[3] * t + c[4] * x[0] * t + c[5] * std::cos(t);
        });
        const double A = u(rng), B = u(rng), C = u(rng);
        GridFunction shifted(g);
        for (std::size_t n = 0; n < g.size(); ++n) {
            const Point p = g.point(n);
            shifted[n] = f[n] + A + B * p.x[0] + C * p.t;
        }
        const auto t = compute_openings(f, k, opt);
        const auto ts = compute_openings(shifted, k, opt);
        const auto tn = compute_openings(f.scaled(-1.0), k, opt);
        bool affine = true, sign = true, monotone = true;
        for (std::size_t j = 0; j < t.nodes.size(); ++j) {
            const double scale = 1e-7 * (1 + std::abs(t.below[j]) + std::abs(t.above[j]));
            affine = affine && std::abs(t.below[j] - ts.below[j]) <= scale && std::abs(t.above[j] - ts.above[j]) <= scale;
            sign = sign && t.below[j] == tn.above[j] && t.above[j] == tn.below[j];
        }
        double prev = std::numeric_limits<double>::infinity();
        for (double M : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
            const double bad = mask_at(t, M).bad_measure;
            monotone = monotone && bad <= prev;
            prev = bad;
        }
        const bool c11 = mask_at(t, c11_bound(f)).bad_measure == 0.0;
        if (affine && sign && monotone && c11)
            ++ok;
        else if (first_failure.empty())
            first_failure = "field " + std::to_string(i) + (affine ? "" : " affine") + (sign ? "" : " sign") +
                            (monotone ? "" : " monotone") + (c11 ? "" : " c11");
    }
    return {ok == 50, std::to_string(ok) + "/50 fields pass affine invariance, sign symmetry, monotone masks and the "
                                           "C11 bound" +
                          (first_failure.empty() ? "" : "; first failure: " + first_failure)};
}

Outcome adecay_spike() {
    const auto rows = read_rows(run_config("adecay_spike.cfg", "adecay_spike"));
    for (const auto& r : rows) {
        if (r.estimator != "adecay") continue;
        int nonzero = 0;
        for (double v : r.values) nonzero += v > 0.0 ? 1 : 0;
        const double delta = std::stod(r.detail.at("delta"));
        const bool pass = delta > 0 && r.r2 >= 0.9 && nonzero >= 4;
        return {pass, "delta " + num(delta) + ", r2 " + num(r.r2) + ", " + std::to_string(nonzero) + " nonzero openings"};
    }
    return {false, "no adecay row"};
}

Outcome covering() {
    const auto s = covering_lemma_sweep(1, 3, 200, 909);
    return {s.instances == 200 && s.passed == 200,
            std::to_string(s.passed) + "/" + std::to_string(s.instances) + " random instances at level 3"};
}

Outcome cordes() {
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> u(0, 1);
    const double eps0 = 0.2;
    int ok = 0;
    for (int i = 0; i < 500; ++i) {
        const int d = 1 + i % 3;
        const double lambda = 0.2 + 2 * u(rng), eta = eps0 * u(rng);
        const auto frame = random_rotation(d, rng);
        std::array<double, kMaxDim> phase{u(rng) * 6, u(rng) * 6, u(rng) * 6};
        const MatrixField a = [=](const SpatialVec& x, double t) {
            std::array<double, kMaxDim> spec{};
            for (int k = 0; k < d; ++k) spec[k] = lambda * (1 + eta * 0.5 * (1 + std::sin(3 * x[k % d] + t + phase[k])));
            return from_spectrum(d, frame, spec);
        };
        std::vector<std::pair<SpatialVec, double>> pts;
        for (int p = 0; p < 40; ++p) pts.push_back({{2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1}, -u(rng)});
        const auto rep = cordes_check(a, d, lambda, eps0, pts);
        if (rep.applicable && rep.pass) ++ok;
    }
    return {ok == 500, std::to_string(ok) + "/500 coefficient fields"};
}

Outcome plaplace_aperture() {
    int ok = 0;
    double worst = 0.0, worst_p = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double p = 1.1 + 0.15 * i;
        const double got = ellipticity_aperture(plaplace_pair(p));
        const double err = std::abs(got - std::abs(p - 2));
        if (err <= 1e-12) ++ok;
        if (err > worst) {
            worst = err;
            worst_p = p;
        }
    }
    return {ok == 20, std::to_string(ok) + "/20 exponents match |p - 2|; largest gap " + num(worst) + " at p = " + num(worst_p)};
}

Outcome determinism() {
    if (schauder_csv.empty()) schauder_csv = run_config("schauder_sweep.cfg", "schauder_a");
    const std::string again = run_config("schauder_sweep.cfg", "schauder_b");
    return {again == schauder_csv && !again.empty(), again == schauder_csv ? "byte-identical CSV across two runs"
                                                                           : "CSV differs between runs"};
}

}  // namespace

int main() {
    fs::create_directories(APERTURE_SCRATCH_DIR);
    criterion(1, "pucci-algebra", pucci_algebra);
    criterion(2, "heat-convergence", heat_convergence);
    criterion(3, "maximum-principle", max_principle);
    criterion(4, "campanato-vs-c2alpha", campanato_corpus);
    criterion(5, "schauder-exponent", schauder_exponent);
    criterion(6, "loglip-model-choice", loglip_model_choice);
    criterion(7, "good-set-properties", goodset_properties);
    criterion(8, "a-decay", adecay_spike);
    criterion(9, "covering-lemma", covering);
    criterion(10, "cordes", cordes);
    criterion(11, "plaplace-aperture", plaplace_aperture);
    criterion(12, "determinism", determinism);
    std::printf("%d/12 criteria passed\n", 12 - failures);
    return failures > 125 ? 125 : failures;
}
