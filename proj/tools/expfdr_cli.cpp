// expfdr: command-line front end.
//
//   expfdr analyze      --input FILE [--format raw|summary] [--theta0 X] [--q 0.05,0.1]
//                       [--estimator u|e|bootstrap|average|all] [--seed S] --out DIR
//   expfdr simulate     [--m 100] [--n 50] [--pi0 0.1,0.5,0.9] [--setting uniform|exponential]
//                       [--alloc 50:50] [--reps 1000] [--seed S] --out DIR
//   expfdr validate     --input FILE [--bootstrap 999] [--alpha 0.05] [--seed S]
//   expfdr estimate-pi0 --input FILE [--seed S]
//
// Exit codes: 0 success, 1 input error, 2 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "expfdr/expfdr.hpp"

namespace {

constexpr int kInputError = 1;
constexpr int kNumericError = 2;

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        double v = 0.0;
        if (!expfdr::detail::parse_double(expfdr::detail::trim(item), v))
            throw expfdr::input_error(std::string("bad value in ") + what + ": '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw expfdr::input_error(std::string("empty list for ") + what);
    return out;
}

expfdr::Allocation parse_allocation(const std::string& text) {
    const auto colon = text.find(':');
    expfdr::Allocation a;
    if (colon == std::string::npos || !expfdr::detail::parse_integer(text.substr(0, colon), a.left) ||
        !expfdr::detail::parse_integer(text.substr(colon + 1), a.right))
        throw expfdr::input_error("allocation must look like 50:50, got '" + text + "'");
    return a;
}

struct AnalyzeArgs {
    std::string input;
    std::string format = "raw";
    std::optional<double> theta0;
    std::string q = "0.05,0.1";
    std::string estimator = "all";
    std::uint64_t seed = 1;
    int bootstrap = 100;
    int ks_bootstrap = 999;
    std::string out;
};

void print_estimates(const expfdr::AnalysisReport& report) {
    std::printf("%-10s %s\n", "method", "pi0");
    for (const auto& e : report.estimates) std::printf("%-10s %.6f\n", e.method.c_str(), e.value);
}

int run_analyze(const AnalyzeArgs& args) {
    expfdr::AnalysisOptions options;
    options.theta0 = args.theta0;
    options.q_levels = parse_list(args.q, "--q");
    options.seed = args.seed;
    options.bootstrap.resamples = args.bootstrap;
    options.ks_resamples = args.ks_bootstrap;
    if (args.estimator != "all") {
        options.primary = expfdr::parse_estimator(args.estimator);
        options.estimators = {options.primary};
    }
    expfdr::AnalysisReport report;
    if (args.format == "raw") {
        report = expfdr::analyze(expfdr::load_segments(args.input), options);
    } else if (args.format == "summary") {
        if (args.theta0) throw expfdr::input_error("--theta0 applies to raw input only");
        report = expfdr::analyze(expfdr::load_summary(args.input), options);
    } else {
        throw expfdr::input_error("--format must be raw or summary");
    }
    expfdr::write_report(args.out, report);
    print_estimates(report);
    for (std::size_t k = 0; k < report.q_levels.size(); ++k) {
        int count = 0;
        for (const auto& s : report.segments) count += s.reject[k] ? 1 : 0;
        std::printf("rejected at q=%g (%s): %d of %zu\n", report.q_levels[k], report.primary.c_str(), count,
                    report.segments.size());
    }
    if (report.ks_failures)
        std::printf("exponentiality rejected at %g: %d segments\n", *report.ks_alpha, *report.ks_failures);
    return 0;
}

struct SimulateArgs {
    int m = 100;
    int n = 50;
    std::string pi0 = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    std::string setting = "uniform";
    std::string alloc = "50:50";
    int reps = 1000;
    std::uint64_t seed = 1;
    double q = 0.05;
    std::string problem = "one-sample-two-sided";
    unsigned threads = 1;
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    std::vector<expfdr::SimConfig> grid;
    for (double pi0 : parse_list(args.pi0, "--pi0")) {
        expfdr::SimConfig c;
        c.m = args.m;
        c.n = args.n;
        c.pi0 = pi0;
        c.setting = expfdr::parse_theta_setting(args.setting);
        c.allocation = parse_allocation(args.alloc);
        c.replications = args.reps;
        c.seed = args.seed;
        c.q = args.q;
        c.problem = expfdr::parse_test_problem(args.problem);
        c.validate();
        grid.push_back(c);
    }
    const auto rows = expfdr::run_study(grid, args.threads);
    const std::filesystem::path dir(args.out);
    std::filesystem::create_directories(dir / "plots");
    {
        std::ofstream out(dir / "study.csv");
        if (!out) throw expfdr::input_error("cannot write " + (dir / "study.csv").string());
        expfdr::write_metrics_csv(out, rows);
    }
    {
        std::ofstream out(dir / "plots" / "power_curve.csv");
        if (!out) throw expfdr::input_error("cannot write power curve");
        expfdr::write_power_curve_csv(out, rows);
    }
    expfdr::write_metrics_csv(std::cout, rows);
    return 0;
}

struct ValidateArgs {
    std::string input;
    int bootstrap = 999;
    double alpha = 0.05;
    std::uint64_t seed = 1;
};

int run_validate(const ValidateArgs& args) {
    const auto segments = expfdr::load_segments(args.input);
    int failures = 0;
    int tested = 0;
    std::printf("segment,n,ks_d,ks_pval,exponential\n");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (s.samples.size() < 3) {
            std::printf("%s,%zu,,,untested\n", s.segment_id.c_str(), s.samples.size());
            continue;
        }
        expfdr::Stream stream(args.seed, "ks", i);
        const double d = expfdr::ks_statistic_exponential(s.samples);
        const double p = expfdr::ks_exponentiality(s.samples, args.bootstrap, stream);
        ++tested;
        if (p < args.alpha) ++failures;
        std::printf("%s,%zu,%.6f,%.6f,%s\n", s.segment_id.c_str(), s.samples.size(), d, p,
                    p < args.alpha ? "no" : "yes");
    }
    std::fprintf(stderr, "%d of %d segments reject exponentiality at %g\n", failures, tested, args.alpha);
    return 0;
}

int run_estimate(const std::string& input, std::uint64_t seed, int bootstrap) {
    expfdr::AnalysisOptions options;
    options.seed = seed;
    options.bootstrap.resamples = bootstrap;
    print_estimates(expfdr::analyze(expfdr::load_summary(input), options));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"False discovery rate analysis for segmented exponential lifetime data"};
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Test every segment against theta0 and adjust for multiplicity");
    analyze->add_option("--input", analyze_args.input, "Raw long-format CSV or summary file")->required();
    analyze->add_option("--format", analyze_args.format, "raw or summary")->capture_default_str();
    analyze->add_option("--theta0", analyze_args.theta0, "Null mean (default: grand mean of all observations)");
    analyze->add_option("--q", analyze_args.q, "Comma separated FDR levels")->capture_default_str();
    analyze->add_option("--estimator", analyze_args.estimator, "u, e, bootstrap, average or all")
        ->capture_default_str();
    analyze->add_option("--seed", analyze_args.seed, "Seed for all resampling")->capture_default_str();
    analyze->add_option("--bootstrap", analyze_args.bootstrap, "Resamples of the bootstrap pi0 estimator")
        ->capture_default_str();
    analyze->add_option("--ks-bootstrap", analyze_args.ks_bootstrap, "KS resamples per segment, 0 to skip")
        ->capture_default_str();
    analyze->add_option("--out", analyze_args.out, "Output directory")->required();

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the pi0 estimators");
    simulate->add_option("--m", sim_args.m, "Tests per replication")->capture_default_str();
    simulate->add_option("--n", sim_args.n, "Observations per segment")->capture_default_str();
    simulate->add_option("--pi0", sim_args.pi0, "Comma separated true null proportions")->capture_default_str();
    simulate->add_option("--setting", sim_args.setting, "uniform or exponential")->capture_default_str();
    simulate->add_option("--alloc", sim_args.alloc, "left:right percentages of alternatives")->capture_default_str();
    simulate->add_option("--reps", sim_args.reps, "Replications per cell")->capture_default_str();
    simulate->add_option("--seed", sim_args.seed, "Master seed")->capture_default_str();
    simulate->add_option("--q", sim_args.q, "FDR level")->capture_default_str();
    simulate->add_option("--problem", sim_args.problem,
                         "one-sample-greater, one-sample-two-sided, two-sample-greater, two-sample-two-sided")
        ->capture_default_str();
    simulate->add_option("--threads", sim_args.threads, "Worker threads, 0 for all cores")->capture_default_str();
    simulate->add_option("--out", sim_args.out, "Output directory")->required();

    ValidateArgs val_args;
    auto* validate = app.add_subcommand("validate", "Bootstrap KS test of exponentiality per segment");
    validate->add_option("--input", val_args.input, "Raw long-format CSV")->required();
    validate->add_option("--bootstrap", val_args.bootstrap, "Parametric bootstrap resamples")->capture_default_str();
    validate->add_option("--alpha", val_args.alpha, "Significance level")->capture_default_str();
    validate->add_option("--seed", val_args.seed, "Seed")->capture_default_str();

    std::string est_input;
    std::uint64_t est_seed = 1;
    int est_bootstrap = 100;
    auto* estimate = app.add_subcommand("estimate-pi0", "Print all pi0 estimates for a summary file");
    estimate->add_option("--input", est_input, "Summary file with columns segment n pval del")->required();
    estimate->add_option("--seed", est_seed, "Seed")->capture_default_str();
    estimate->add_option("--bootstrap", est_bootstrap, "Resamples of the bootstrap pi0 estimator")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        if (*analyze) return run_analyze(analyze_args);
        if (*simulate) return run_simulate(sim_args);
        if (*validate) return run_validate(val_args);
        if (*estimate) return run_estimate(est_input, est_seed, est_bootstrap);
    } catch (const expfdr::numeric_error& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumericError;
    } catch (const std::exception& e) {
        // input_error, invalid_parameter and file system errors
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    }
    return 0;
}
