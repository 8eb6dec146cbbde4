#include "aperture/verify.hpp"

#include "aperture/error.hpp"
#include "aperture/goodsets.hpp"
#include "aperture/operators.hpp"
#include "aperture/regularity.hpp"
#include "aperture/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

namespace aperture {

namespace {

using Check = std::function<std::pair<bool, std::string>()>;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void run(std::vector<PropertyResult>& out, const std::string& suite, const std::string& name, const Check& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    PropertyResult r;
    r.suite = suite;
    r.name = name;
    try {
        auto [pass, detail] = fn();
        r.pass = pass;
        r.detail = detail;
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(r);
}

double matrix_scale(const SymmetricMatrix& m) { return 1.0 + m.max_abs_entry(); }

std::vector<OperatorSpec> operator_zoo(int d, const EllipticityPair& pair, std::mt19937_64& rng) {
    std::vector<OperatorSpec> ops;
    ops.push_back(OperatorSpec::pucci_plus(d, pair));
    ops.push_back(OperatorSpec::pucci_minus(d, pair));
    ops.push_back(OperatorSpec::scaled_trace(d, pair.lambda));
    const auto frame = random_rotation(d, rng);
    std::array<double, kMaxDim> spec{};
    std::uniform_real_distribution<double> in(pair.lambda, pair.Lambda);
    for (int i = 0; i < d; ++i) spec[i] = in(rng);
    const SymmetricMatrix a = from_spectrum(d, frame, spec);
    ops.push_back(OperatorSpec::linear(d, [a](const SpatialVec&, double) { return a; }, pair));
    std::vector<std::vector<IsaacsPair>> fam(2);
    for (auto& f : fam)
        for (int g = 0; g < 2; ++g) {
            for (int i = 0; i < d; ++i) spec[i] = in(rng);
            const SymmetricMatrix ag = from_spectrum(d, random_rotation(d, rng), spec);
            const double c = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
            f.push_back({[ag](const SpatialVec&, double) { return ag; }, [c](const SpatialVec&, double) { return c; }});
        }
    ops.push_back(OperatorSpec::isaacs(d, fam, pair));
    return ops;
}

// --- operators --------------------------------------------------------------

void operators_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    const std::string s = "operators";
    run(out, s, "pucci duality M+(-M) = -M-(M)", [seed] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const int d = 1 + i % 3;
            const auto pair = EllipticityPair::make(0.5, 2.0);
            const auto m = random_symmetric(d, rng, 3.0);
            worst = std::max(worst, std::abs(pucci_plus(m * -1.0, pair) + pucci_minus(m, pair)) / matrix_scale(m));
        }
        return std::make_pair(worst <= 1e-9, "worst " + num(worst));
    });
    run(out, s, "pucci positive homogeneity", [seed] {
        std::mt19937_64 rng(seed + 1);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const int d = 1 + i % 3;
            const auto pair = EllipticityPair::make(1.0, 3.0);
            const auto m = random_symmetric(d, rng, 2.0);
            const double c = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
            worst = std::max(worst, std::abs(pucci_plus(m * c, pair) - c * pucci_plus(m, pair)) / (matrix_scale(m) * (1 + c)));
            worst = std::max(worst, std::abs(pucci_minus(m * c, pair) - c * pucci_minus(m, pair)) / (matrix_scale(m) * (1 + c)));
        }
        return std::make_pair(worst <= 1e-9, "worst " + num(worst));
    });
    run(out, s, "pucci spectral formula on rotated diagonals", [seed] {
        std::mt19937_64 rng(seed + 2);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            const int d = 1 + i % 3;
            const auto pair = EllipticityPair::make(0.7, 1.9);
            std::array<double, kMaxDim> e{};
            double plus = 0.0, minus = 0.0;
            for (int k = 0; k < d; ++k) {
                e[k] = u(rng);
                plus += e[k] > 0 ? pair.Lambda * e[k] : pair.lambda * e[k];
                minus += e[k] > 0 ? pair.lambda * e[k] : pair.Lambda * e[k];
            }
            const auto m = from_spectrum(d, random_rotation(d, rng), e);
            worst = std::max({worst, std::abs(pucci_plus(m, pair) - plus), std::abs(pucci_minus(m, pair) - minus)});
        }
        return std::make_pair(worst <= 1e-9, "worst " + num(worst));
    });
    run(out, s, "sandwich M-(M-N) <= F(M)-F(N) <= M+(M-N), all variants", [seed] {
        std::mt19937_64 rng(seed + 3);
        double worst = 0.0;
        for (int d = 1; d <= 3; ++d) {
            const auto pair = EllipticityPair::make(0.5, 1.5);
            auto ops = operator_zoo(d, pair, rng);
            ops.push_back(OperatorSpec::plaplace(d, 1.5));
            for (const auto& F : ops) {
                const auto& pr = F.pair();
                for (int i = 0; i < 100; ++i) {
                    const auto m = random_symmetric(d, rng, 2.0);
                    const auto n = random_symmetric(d, rng, 2.0);
                    SpatialVec x{}, dir{1.0, 0.0, 0.0};
                    for (int a = 0; a < d; ++a) x[a] = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
                    const double diff = F.evaluate(x, -0.5, m, &dir) - F.evaluate(x, -0.5, n, &dir);
                    const double lo = pucci_minus(m - n, pr), hi = pucci_plus(m - n, pr);
                    worst = std::max({worst, lo - diff, diff - hi});
                }
            }
        }
        return std::make_pair(worst <= 1e-9, "worst excess " + num(worst));
    });
    run(out, s, "sampled uniform ellipticity, all variants", [seed] {
        std::mt19937_64 rng(seed + 4);
        bool ok = true;
        double worst = 0.0;
        for (int d = 1; d <= 3; ++d) {
            const auto pair = EllipticityPair::make(1.0, 2.5);
            auto ops = operator_zoo(d, pair, rng);
            ops.push_back(OperatorSpec::plaplace(d, 2.7));
            for (const auto& F : ops) {
                const auto rep = check_uniform_ellipticity(F, F.pair(), random_ellipticity_samples(d, 200, seed + d));
                ok = ok && rep.pass;
                worst = std::max(worst, rep.worst_violation);
            }
        }
        return std::make_pair(ok, "worst violation " + num(worst));
    });
    run(out, s, "p-Laplacian constants min{1,p-1}, max{1,p-1}", [] {
        bool ok = true;
        for (int i = 1; i < 40; ++i) {
            const double p = 1.0 + i * 0.1;
            const auto pr = plaplace_pair(p);
            ok = ok && pr.lambda == std::min(1.0, p - 1.0) && pr.Lambda == std::max(1.0, p - 1.0);
        }
        return std::make_pair(ok, std::string("39 values of p"));
    });
    run(out, s, "Cordes implication on 500 SPD fields", [seed] {
        std::mt19937_64 rng(seed + 5);
        std::size_t passed = 0;
        for (int i = 0; i < 500; ++i) {
            const int d = 1 + i % 3;
            const double lambda = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
            const double ap = std::uniform_real_distribution<double>(0.0, 0.099)(rng);
            const auto frame = random_rotation(d, rng);
            std::array<double, kMaxDim> lo{}, hi{};
            for (int k = 0; k < d; ++k) {
                lo[k] = lambda * (1.0 + ap * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
                hi[k] = lambda * (1.0 + ap * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
            }
            lo[0] = lambda;
            const auto a0 = from_spectrum(d, frame, lo), a1 = from_spectrum(d, frame, hi);
            MatrixField a = [a0, a1](const SpatialVec& x, double) { return a0 * (0.5 - 0.5 * x[0]) + a1 * (0.5 + 0.5 * x[0]); };
            std::vector<std::pair<SpatialVec, double>> pts;
            for (int k = 0; k < 9; ++k) pts.push_back({SpatialVec{-1.0 + 0.25 * k, 0.0, 0.0}, -0.5});
            const auto rep = cordes_check(a, d, lambda, 0.1, pts);
            if (rep.applicable && rep.pass && rep.worst_deviation < 0.2) ++passed;
        }
        return std::make_pair(passed == 500, std::to_string(passed) + "/500");
    });
}

// --- solver -----------------------------------------------------------------

double heat_error(double h) {
    ProblemSpec spec{OperatorSpec::scaled_trace(1, 1.0), [](const SpatialVec&, double) { return 0.0; },
                     [](const SpatialVec& x, double t) { return std::exp(-M_PI * M_PI * t) * std::sin(M_PI * x[0]); },
                     Box{1, {Interval{0.0, 1.0}}, Interval{-1.0, 0.0}}, std::nullopt};
    SchemeConfig cfg;
    cfg.h = h;
    cfg.dt = h * h / 4.0;
    cfg.store_levels = 2;
    const auto sol = solve(spec, cfg);
    double err = 0.0;
    const auto& g = sol.u.grid();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Point p = g.point(n);
        err = std::max(err, std::abs(sol.u[n] - std::exp(-M_PI * M_PI * p.t) * std::sin(M_PI * p.x[0])));
    }
    return err;
}

void solver_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    const std::string s = "solver";
    run(out, s, "heat convergence ratio in [3,5]", [] {
        const double e1 = heat_error(1.0 / 16), e2 = heat_error(1.0 / 32);
        const double r = e1 / e2;
        return std::make_pair(r >= 3.0 && r <= 5.0, "ratio " + num(r));
    });
    run(out, s, "discrete maximum principle, f = 0", [seed] {
        std::mt19937_64 rng(seed + 10);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int passed = 0;
        const int trials = 6;
        for (int i = 0; i < trials; ++i) {
            const int d = 1 + i % 2;
            const auto pair = EllipticityPair::make(1.0, 1.0 + 2.0 * std::abs(u(rng)));
            auto ops = operator_zoo(d, pair, rng);
            const double a = u(rng), b = u(rng), c = u(rng);
            ProblemSpec spec{ops[static_cast<std::size_t>(i) % ops.size()], [](const SpatialVec&, double) { return 0.0; },
                             [a, b, c](const SpatialVec& x, double t) { return a * std::sin(3 * x[0] + b) + c * std::cos(2 * x[1] + t); },
                             Box{d, {Interval{-1, 1}, Interval{-1, 1}}, Interval{-0.25, 0.0}}, std::nullopt};
            if (std::holds_alternative<Isaacs>(spec.op.op())) {
                // Isaacs zero-order terms act as a source; drop them here.
                spec.op = OperatorSpec::pucci_plus(d, pair);
            }
            SchemeConfig cfg;
            cfg.h = d == 1 ? 1.0 / 32 : 1.0 / 8;
            const auto rep = maximum_principle_check(solve(spec, cfg));
            if (rep.applicable && rep.pass) ++passed;
        }
        return std::make_pair(passed == trials, std::to_string(passed) + "/" + std::to_string(trials));
    });
    run(out, s, "CFL refusal above h^2/(2 d Lambda)", [] {
        ProblemSpec spec{OperatorSpec::pucci_plus(1, EllipticityPair::make(1.0, 2.0)), {}, {},
                         Box{1, {Interval{-1, 1}}, Interval{-0.1, 0.0}}, std::nullopt};
        SchemeConfig cfg;
        cfg.h = 1.0 / 16;
        cfg.dt = cfl_limit(cfg.h, 1, 2.0) * 1.01;
        try {
            solve(spec, cfg);
        } catch (const CflError&) {
            return std::make_pair(true, std::string("refused"));
        }
        return std::make_pair(false, std::string("stepped past the limit"));
    });
    run(out, s, "monotone step: u >= v implies S(u) >= S(v)", [seed] {
        std::mt19937_64 rng(seed + 11);
        const auto pair = EllipticityPair::make(1.0, 2.0);
        const auto ops = operator_zoo(1, pair, rng);
        const Box dom{1, {Interval{-1, 1}}, Interval{-1, 0}};
        const SpaceTimeGrid grid = SpaceTimeGrid::covering(dom, 1.0 / 16, 1.0);
        const double dt = cfl_limit(grid.h(), 1, pair.Lambda);
        std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
        bool ok = true;
        for (const auto& op : ops) {
            ProblemSpec spec{op, {}, {}, dom, std::nullopt};
            for (int trial = 0; trial < 20; ++trial) {
                std::vector<double> a(grid.spatial_size()), b(a.size()), oa(a.size()), ob(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) {
                    a[i] = u(rng);
                    b[i] = a[i] + pos(rng);
                }
                step(spec, grid, a, -0.5, dt, oa);
                step(spec, grid, b, -0.5, dt, ob);
                for (std::size_t i = 0; i < a.size(); ++i) ok = ok && ob[i] >= oa[i] - 1e-12;
            }
        }
        return std::make_pair(ok, std::string("5 operators x 20 pairs"));
    });
    run(out, s, "normalization recovers the raw solution", [] {
        const auto pair = EllipticityPair::make(1.0, 1.5);
        LinearCoefficient lin{[](const SpatialVec&, double) { SymmetricMatrix m(1); m(0, 0) = 1.2; return m; },
                              [](const SpatialVec&, double) { return 0.7; }};
        ProblemSpec spec{OperatorSpec(1, lin, pair), [](const SpatialVec& x, double) { return 0.3 + x[0] * x[0]; },
                         [](const SpatialVec& x, double t) { return std::cos(x[0]) + t; },
                         Box{1, {Interval{-1, 1}}, Interval{-0.25, 0.0}}, std::nullopt};
        SchemeConfig cfg;
        cfg.h = 1.0 / 16;
        double c = 0.0;
        const auto raw = solve(spec, cfg);
        const auto nor = solve(normalize_problem(spec, &c), cfg);
        double worst = 0.0;
        for (std::size_t n = 0; n < raw.u.grid().size(); ++n)
            worst = std::max(worst, std::abs(raw.u[n] - (nor.u[n] + c * raw.u.grid().point(n).t)));
        return std::make_pair(worst <= 1e-10 && std::abs(c - 1.0) < 1e-12, "shift " + num(c) + ", worst " + num(worst));
    });
}

// --- regularity -------------------------------------------------------------

SpaceTimeGrid unit_grid(int d, double h, double dt) {
    Box b{d, {}, Interval{-1, 0}};
    for (int a = 0; a < d; ++a) b.x[a] = {-1, 1};
    return SpaceTimeGrid::covering(b, h, dt);
}

void regularity_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    const std::string s = "regularity";
    run(out, s, "campanato vanishes on quadratic polynomials", [seed] {
        std::mt19937_64 rng(seed + 20);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        double worst = 0.0;
        for (int d = 1; d <= 2; ++d) {
            Box b{d, {}, Interval{-0.25, 0}};
            for (int a = 0; a < d; ++a) b.x[a] = {-0.5, 0.5};
            const auto g = SpaceTimeGrid::covering(b, 1.0 / 32, 1.0 / 1024);
            for (int trial = 0; trial < 5; ++trial) {
                const double A = u(rng), C = u(rng), b0 = u(rng), b1 = u(rng), d00 = u(rng), d01 = u(rng), d11 = u(rng);
                const auto f = GridFunction::sample(g, [&](const SpatialVec& x, double t) {
                    return A + C * t + b0 * x[0] + b1 * x[1] + 0.5 * d00 * x[0] * x[0] + d01 * x[0] * x[1] +
                           0.5 * d11 * x[1] * x[1];
                });
                Point c;
                c.dim = d;
                worst = std::max(worst, campanato_seminorm(f, 0.5, c, {0.4, 0.25, 0.15}).value);
            }
        }
        return std::make_pair(worst <= 1e-10, "worst " + num(worst));
    });
    run(out, s, "decay fit recovers an exact power law", [] {
        std::vector<double> r, v;
        for (int k = 1; k <= 6; ++k) {
            r.push_back(std::pow(0.5, k));
            v.push_back(3.0 * std::pow(r.back(), 2.5));
        }
        const auto fit = decay_exponent_fit(r, v);
        const bool ok = std::abs(fit.exponent - 2.5) < 1e-12 && std::abs(fit.constant - 3.0) < 1e-10 && fit.r2 > 1 - 1e-12;
        return std::make_pair(ok, "exponent " + num(fit.exponent));
    });
    run(out, s, "Holder seminorm of x1 with alpha = 1 is 1", [] {
        const auto g = unit_grid(1, 1.0 / 16, 1.0 / 64);
        const auto f = GridFunction::sample(g, [](const SpatialVec& x, double) { return x[0]; });
        const double v = holder_seminorm(f, 1.0, ParabolicCube{1, 1.0});
        return std::make_pair(std::abs(v - 1.0) < 1e-12, "value " + num(v));
    });
    run(out, s, "Sobolev norm is absolutely homogeneous", [] {
        const auto g = unit_grid(1, 1.0 / 16, 1.0 / 64);
        const auto f = GridFunction::sample(g, [](const SpatialVec& x, double t) { return std::sin(2 * x[0]) * std::exp(t); });
        const double a = sobolev_norm(f, 3.0, ParabolicCube{1, 0.5});
        const double b = sobolev_norm(f.scaled(-2.5), 3.0, ParabolicCube{1, 0.5});
        return std::make_pair(std::abs(b - 2.5 * a) <= 1e-12 * b, "ratio " + num(b / a));
    });
    run(out, s, "p-BMO ignores constants", [] {
        const auto g = unit_grid(1, 1.0 / 16, 1.0 / 64);
        const auto f = GridFunction::sample(g, [](const SpatialVec& x, double t) { return std::abs(x[0]) + t * t; });
        const double a = pbmo_norm(f, 2.0, ParabolicCube{1, 0.5}, default_radii(), 2);
        const double b = pbmo_norm(f.shifted(7.0), 2.0, ParabolicCube{1, 0.5}, default_radii(), 2);
        return std::make_pair(std::abs(a - b) <= 1e-10 * (1 + a), num(a) + " vs " + num(b));
    });
    run(out, s, "Log-Lip fit prefers r^2 on a smooth caloric field", [] {
        const auto g = unit_grid(1, 1.0 / 64, 1.0 / 4096);
        const auto f = GridFunction::sample(g, [](const SpatialVec& x, double t) { return x[0] * x[0] + 2 * t; });
        Point c;
        const auto rep = loglip_fit(f, c, default_radii());
        return std::make_pair(rep.preferred == "plain", "preferred " + rep.preferred);
    });
}

// --- goodsets ---------------------------------------------------------------

GridFunction random_field(const SpaceTimeGrid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a = u(rng), b = u(rng), c = u(rng), w = 1.0 + 2.0 * std::abs(u(rng));
    return GridFunction::sample(g, [=](const SpatialVec& x, double t) {
        return a * std::sin(w * x[0] + b) + c * t * x[0] + 0.3 * std::abs(x[0] - 0.1 * a) + b * t;
    });
}

void goodsets_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    const std::string s = "goodsets";
    run(out, s, "stacked covering lemma, 200 instances", [seed] {
        const auto sw = covering_lemma_sweep(1, 3, 200, seed + 30);
        return std::make_pair(sw.passed == sw.instances && sw.instances == 200,
                              std::to_string(sw.passed) + "/" + std::to_string(sw.instances));
    });
    const auto g = unit_grid(1, 1.0 / 8, 1.0 / 64);
    run(out, s, "affine invariance of openings", [&g, seed] {
        std::mt19937_64 rng(seed + 31);
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            const auto u = random_field(g, rng);
            const double A = std::uniform_real_distribution<double>(-3, 3)(rng);
            const double B = std::uniform_real_distribution<double>(-3, 3)(rng);
            const double C = std::uniform_real_distribution<double>(-3, 3)(rng);
            std::vector<double> vals(g.size());
            for (std::size_t n = 0; n < g.size(); ++n) {
                const Point p = g.point(n);
                vals[n] = u[n] + A + B * p.x[0] + C * p.t;
            }
            const GridFunction v(g, vals);
            const auto tu = compute_openings(u, ParabolicCube{1, 1.0});
            const auto tv = compute_openings(v, ParabolicCube{1, 1.0});
            for (std::size_t i = 0; i < tu.nodes.size(); ++i)
                worst = std::max({worst, std::abs(tu.below[i] - tv.below[i]), std::abs(tu.above[i] - tv.above[i])});
        }
        return std::make_pair(worst <= 1e-6, "worst " + num(worst));
    });
    run(out, s, "sign symmetry below(u) = above(-u)", [&g, seed] {
        std::mt19937_64 rng(seed + 32);
        bool ok = true;
        for (int trial = 0; trial < 5; ++trial) {
            const auto u = random_field(g, rng);
            const auto a = compute_openings(u, ParabolicCube{1, 1.0});
            const auto b = compute_openings(u.scaled(-1.0), ParabolicCube{1, 1.0});
            ok = ok && a.below == b.above && a.above == b.below;
        }
        return std::make_pair(ok, std::string("5 fields, exact"));
    });
    run(out, s, "good sets grow with M", [&g, seed] {
        std::mt19937_64 rng(seed + 33);
        bool ok = true;
        for (int trial = 0; trial < 5; ++trial) {
            const auto t = compute_openings(random_field(g, rng), ParabolicCube{1, 1.0});
            GoodSetMask prev = mask_at(t, 0.0);
            for (double M : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
                const auto m = mask_at(t, M);
                for (std::size_t i = 0; i < m.nodes.size(); ++i) ok = ok && (!prev.good(i) || m.good(i));
                prev = m;
            }
        }
        return std::make_pair(ok, std::string("5 fields x 7 openings"));
    });
    run(out, s, "smooth fields have empty A_M above the C^{1,1} bound", [&g] {
        const auto u = GridFunction::sample(g, [](const SpatialVec& x, double t) { return std::sin(x[0]) * std::exp(t) + x[0] * t; });
        const double K = c11_bound(u);
        const auto t = compute_openings(u, ParabolicCube{1, 1.0});
        const auto m = mask_at(t, K);
        return std::make_pair(m.bad_measure == 0.0, "bound " + num(K) + ", bad measure " + num(m.bad_measure));
    });
}

}  // namespace

std::vector<PropertyResult> verify_suite(const std::string& suite, std::uint64_t seed) {
    std::vector<PropertyResult> out;
    const bool all = suite == "all";
    if (!all && suite != "operators" && suite != "solver" && suite != "regularity" && suite != "goodsets")
        throw ValidationError("suite", "unknown suite '" + suite + "' (operators, solver, regularity, goodsets, all)");
    if (all || suite == "operators") operators_suite(out, seed);
    if (all || suite == "solver") solver_suite(out, seed);
    if (all || suite == "regularity") regularity_suite(out, seed);
    if (all || suite == "goodsets") goodsets_suite(out, seed);
    return out;
}

std::string format_results(const std::vector<PropertyResult>& results) {
    std::string out;
    char buf[512];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%-4s  %-10s  %-58s  %7.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.suite.c_str(),
                      r.name.c_str(), r.seconds, r.detail.c_str());
        out += buf;
    }
    return out;
}

}  // namespace aperture
