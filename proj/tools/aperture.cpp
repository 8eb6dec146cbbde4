#include "aperture/error.hpp"
#include "aperture/experiment.hpp"
#include "aperture/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

const char* kSchemaText = R"(results.csv schema aperture-results/1
  schema           literal "aperture-results/1" on every row
  sweep_parameter  swept parameter name, or "none"
  sweep_value      value of the swept parameter (0 when not sweeping)
  analysis         analysis id from the config (analysis.<id>.*)
  estimator        campanato | polyseq | polyseq_increments | loglip | holder | c2alpha |
                   sobolev | pbmo | adecay | alpha_k | beta_k | maxprinciple | residual | c11
  exponent         fitted decay exponent (nan when the estimator has none)
  constant         fitted constant or the estimator value
  r2               coefficient of determination of the fit (nan when none)
  detail           semicolon separated key=value annotations
  scales           semicolon separated scales (radii, openings or k)
  values           semicolon separated values matching scales
Numbers use %.17g. Rows follow sweep order, then analysis order.
)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measurement lab for fully nonlinear parabolic equations"};
    app.require_subcommand(0, 1);
    bool version = false, schema = false;
    app.add_flag("--version", version, "Print the version");
    app.add_flag("--schema", schema, "Print the CSV schema");

    auto* run = app.add_subcommand("run", "Run an experiment config (or re-run a manifest.json)");
    std::string config;
    std::string out;
    int workers = 0;
    run->add_option("config", config, "Config file")->required();
    run->add_option("--out", out, "Output directory");
    run->add_option("--workers", workers, "Parallel sweep points")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "Run property suites");
    std::string suite;
    std::uint64_t seed = 1;
    verify->add_option("suite", suite, "operators | solver | regularity | goodsets | all")->required();
    verify->add_option("--seed", seed, "Seed for the random properties");

    CLI11_PARSE(app, argc, argv);

    if (version) {
        std::cout << "aperture " << aperture::kVersion << "\n";
        return 0;
    }
    if (schema) {
        std::cout << aperture::csv_header() << "\n\n" << kSchemaText;
        return 0;
    }
    if (*run) {
        std::optional<std::string> o;
        if (!out.empty()) o = out;
        std::optional<int> w;
        if (workers > 0) w = workers;
        const auto res = aperture::run_experiment(config, o, w);
        if (res.exit_code != 0) std::cerr << "error [" << res.error_code << "]: " << res.message << "\n";
        return res.exit_code;
    }
    if (*verify) {
        try {
            const auto results = aperture::verify_suite(suite, seed);
            std::cout << aperture::format_results(results);
            std::size_t failed = 0;
            for (const auto& r : results) failed += r.pass ? 0 : 1;
            std::cout << (results.size() - failed) << "/" << results.size() << " properties passed\n";
            return failed == 0 ? 0 : 1;
        } catch (const aperture::Error& e) {
            std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
            return 2;
        }
    }
    std::cout << app.help();
    return 0;
}
