#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "bindy/analysis.hpp"
#include "bindy/case_study.hpp"
#include "bindy/io.hpp"
#include "bindy/run_config.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string case_name;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;
    std::string output = "out";
    std::string data_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool case_required) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    auto* c = cmd->add_option("--case", opts.case_name,
                              "case study: legendre, lynx_hare, or lorenz");
    if (case_required) c->required(false);
    cmd->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
        opts.seed_given = true;
    });
    cmd->add_option("--jobs", opts.jobs, "worker threads for multi-chain commands")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--output", opts.output, "output directory");
    cmd->add_option("--data", opts.data_path, "observational data CSV (lynx_hare)");
}

bindy::RunConfig resolve_config(const CommonOpts& opts) {
    bindy::RunConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = bindy::run_config_from_json(bindy::read_json(opts.config_path));
        if (!opts.case_name.empty()) cfg.case_id = bindy::case_from_name(opts.case_name);
    } else if (!opts.case_name.empty()) {
        cfg = bindy::default_config(bindy::case_from_name(opts.case_name));
    } else {
        throw bindy::ConfigError("either --case or --config is required");
    }
    if (opts.seed_given) cfg.seed = opts.seed;
    cfg.sampler.seed = cfg.seed;
    cfg.esindy.seed = cfg.seed;
    if (!opts.data_path.empty()) cfg.data_path = opts.data_path;
    return cfg;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const bindy::RunConfig& cfg, const std::vector<std::string>& outputs) {
    bindy::Json manifest;
    manifest["tool"] = "bindy";
    manifest["format_version"] = 1;
    manifest["command"] = command;
    manifest["case"] = bindy::case_name(cfg.case_id);
    manifest["config"] = bindy::run_config_json(cfg);
    manifest["outputs"] = outputs;
    bindy::write_json(dir / "run_manifest.json", manifest);
}

int cmd_run(const CommonOpts& opts) {
    const bindy::RunConfig cfg = resolve_config(opts);
    const bindy::CaseResult result = bindy::run_case_study(cfg);
    bindy::write_case_artifacts(opts.output, result);
    std::cout << "case " << bindy::case_name(cfg.case_id) << ": " << result.chains.size()
              << " chain(s), outputs in " << opts.output << "\n";
    for (std::size_t e = 0; e < result.summaries.size(); ++e) {
        std::cout << "  eq " << e << ": acceptance "
                  << bindy::fmt_double(result.summaries[e].acceptance_rate) << ", top model ";
        if (!result.summaries[e].top_models.empty()) {
            const auto& top = result.summaries[e].top_models.front();
            std::cout << bindy::model_to_hex(top.first, result.chains[e].n_terms) << " ("
                      << bindy::fmt_double(top.second) << ")";
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_appendix(const CommonOpts& opts, const std::string& which, int runs, int chains,
                 int iterations, bool full_grid) {
    CommonOpts local = opts;
    if (local.case_name.empty() && local.config_path.empty())
        local.case_name = which == "a" ? "legendre" : "lorenz";
    const bindy::RunConfig cfg = resolve_config(local);
    const fs::path dir = local.output;
    fs::create_directories(dir);
    std::vector<std::string> outputs;

    if (which == "a") {
        const bindy::ParameterizationSweepResult sweep =
            bindy::parameterization_sweep(cfg, runs);
        {
            std::ofstream out(dir / "appendix_a.csv", std::ios::binary);
            out << "run,term,true_coeff,inclusion,stlsq_coeff\n";
            for (std::size_t r = 0; r < sweep.runs.size(); ++r)
                for (int j = 0; j < 10; ++j)
                    out << r << ',' << j << ',' << bindy::fmt_double(sweep.runs[r].truth[j])
                        << ',' << bindy::fmt_double(sweep.runs[r].inclusion[j]) << ','
                        << bindy::fmt_double(sweep.runs[r].stlsq_coeffs[j]) << "\n";
        }
        bindy::Json summary;
        summary["n_runs"] = runs;
        summary["small_term_detection_rate"] = sweep.small_term_detection_rate;
        summary["zero_term_exclusion_rate"] = sweep.zero_term_exclusion_rate;
        summary["stlsq_small_term_rate"] = sweep.stlsq_small_term_rate;
        bindy::write_json(dir / "appendix_a_summary.json", summary);
        outputs = {"appendix_a.csv", "appendix_a_summary.json"};
        std::cout << "small-term detection rate: "
                  << bindy::fmt_double(sweep.small_term_detection_rate) << "\n";
    } else if (which == "b") {
        const bindy::ConvergenceTrace trace =
            bindy::convergence_trace(cfg, chains, iterations, local.jobs);
        std::ofstream out(dir / "appendix_b.csv", std::ios::binary);
        out << "iteration,mean_model_size\n";
        for (std::size_t t = 0; t < trace.mean_model_size.size(); ++t)
            out << t << ',' << bindy::fmt_double(trace.mean_model_size[t]) << "\n";
        outputs = {"appendix_b.csv"};
        std::cout << chains << " chains, final mean model size "
                  << bindy::fmt_double(trace.mean_model_size.back()) << "\n";
    } else if (which == "c") {
        std::vector<double> noise, lengths;
        if (full_grid) {
            for (int i = 1; i <= 15; ++i) noise.push_back(0.01 * i);
            for (int i = 1; i <= 10; ++i) lengths.push_back(static_cast<double>(i));
        } else {
            noise = {0.01, 0.05, 0.15};
            lengths = {1.0, 5.0, 10.0};
        }
        const bindy::RobustnessGrid grid = bindy::robustness_sweep(cfg, noise, lengths);
        bindy::write_robustness_csv(dir / "robustness_grid.csv", grid.cells);
        outputs = {"robustness_grid.csv"};
        std::cout << grid.cells.size() << " grid cells written\n";
    } else {
        throw bindy::ConfigError("appendix section must be a, b, or c");
    }
    write_manifest(dir, "appendix " + which, cfg, outputs);
    return 0;
}

int cmd_oracle(const CommonOpts& opts, double sigma2, bool sigma2_given) {
    const bindy::RunConfig cfg = resolve_config(opts);
    if (cfg.case_id != bindy::CaseStudy::Legendre)
        throw bindy::ConfigError("the oracle command supports the legendre case");

    const int n = cfg.data.n_samples;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
        x[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    const bindy::TermLibrary lib = bindy::build_legendre_library(x, 10);
    const Eigen::VectorXd truth = bindy::canonical_legendre_coefficients();
    const Eigen::VectorXd y_clean = lib.design * truth;
    bindy::Rng noise_rng(bindy::derive_seed(cfg.seed, 0, bindy::kNoiseStream));
    const Eigen::VectorXd y =
        bindy::add_rms_noise_vector(y_clean, cfg.data.noise_fraction, noise_rng);

    if (!sigma2_given) {
        const double rms = std::sqrt(y_clean.squaredNorm() / y_clean.size());
        sigma2 = std::pow(cfg.data.noise_fraction * rms, 2);
    }

    const bindy::Gram gram = bindy::make_gram(lib.design, y);
    const bindy::ParamPrior prior = bindy::ParamPrior::isotropic(cfg.sampler.param_prior_var, 10);
    const bindy::ExactPosterior post =
        bindy::exact_model_posterior(gram, prior, sigma2, cfg.sampler.model_prior, 10);

    const fs::path dir = opts.output;
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "oracle.csv", std::ios::binary);
        out << "model_mask_hex,probability\n";
        for (std::size_t k = 0; k < post.models.size(); ++k)
            out << bindy::model_to_hex(post.models[k], 10) << ','
                << bindy::fmt_double(post.probabilities[k]) << "\n";
    }
    write_manifest(dir, "oracle", cfg, {"oracle.csv"});

    std::size_t best = 0;
    for (std::size_t k = 1; k < post.probabilities.size(); ++k)
        if (post.probabilities[k] > post.probabilities[best]) best = k;
    std::cout << "exact posterior over " << post.models.size() << " models at sigma2 "
              << bindy::fmt_double(sigma2) << "; mode "
              << bindy::model_to_hex(post.models[best], 10) << " ("
              << bindy::fmt_double(post.probabilities[best]) << ")\n";
    return 0;
}

int cmd_baseline(const CommonOpts& opts) {
    const bindy::RunConfig cfg = resolve_config(opts);
    const fs::path dir = opts.output;
    fs::create_directories(dir);

    if (cfg.case_id == bindy::CaseStudy::Lorenz) {
        const bindy::PreparedDynamicsData data = bindy::prepare_lorenz_data(cfg);
        const std::vector<std::string> labels = bindy::term_labels(data.library);
        std::vector<bindy::InclusionRow> rows;
        for (Eigen::Index e = 0; e < 3; ++e) {
            bindy::EnsembleConfig ecfg = cfg.esindy;
            ecfg.seed = bindy::derive_seed(cfg.seed, static_cast<std::uint64_t>(e),
                                           bindy::kEnsembleStream);
            const bindy::EnsembleResult ens =
                bindy::ensemble_sindy(data.library.design, data.deriv.derivatives.col(e), ecfg);
            for (Eigen::Index j = 0; j < ens.inclusion.size(); ++j)
                rows.push_back({"esindy", static_cast<int>(e), static_cast<int>(j),
                                labels[static_cast<std::size_t>(j)], ens.inclusion[j],
                                ens.mean[j], ens.stddev[j]});
        }
        bindy::write_inclusion_csv(dir / "inclusion.csv", rows);
        write_manifest(dir, "baseline", cfg, {"inclusion.csv"});
        std::cout << "ensemble baseline written for 3 equations\n";
        return 0;
    }
    if (cfg.case_id == bindy::CaseStudy::Legendre) {
        const int n = cfg.data.n_samples;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i)
            x[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        const bindy::TermLibrary lib = bindy::build_legendre_library(x, 10);
        const Eigen::VectorXd truth = bindy::canonical_legendre_coefficients();
        bindy::Rng noise_rng(bindy::derive_seed(cfg.seed, 0, bindy::kNoiseStream));
        const Eigen::VectorXd y =
            bindy::add_rms_noise_vector(lib.design * truth, cfg.data.noise_fraction, noise_rng);
        const Eigen::VectorXd coeffs = bindy::stlsq(lib.design, y, cfg.esindy.stlsq);
        std::ofstream out(dir / "baseline_stlsq.csv", std::ios::binary);
        out << "term,label,coeff\n";
        for (Eigen::Index j = 0; j < coeffs.size(); ++j)
            out << j << ',' << lib.terms[static_cast<std::size_t>(j)].label << ','
                << bindy::fmt_double(coeffs[j]) << "\n";
        write_manifest(dir, "baseline", cfg, {"baseline_stlsq.csv"});
        std::cout << "thresholded regression baseline written\n";
        return 0;
    }
    throw bindy::ConfigError("baseline supports the lorenz and legendre cases");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian identification of nonlinear dynamics"};
    app.require_subcommand(1);

    CommonOpts run_opts, appx_opts, oracle_opts, base_opts;

    CLI::App* run = app.add_subcommand("run", "run a case study end to end");
    add_common(run, run_opts, true);

    CLI::App* appendix = app.add_subcommand("appendix", "supplementary experiments");
    std::string which;
    int runs = 100, chains = 100, iterations = 1000;
    bool full_grid = false;
    appendix->add_option("section", which, "a (parameterizations), b (chains), c (grid)")
        ->required();
    appendix->add_option("--runs", runs, "parameterizations for section a");
    appendix->add_option("--chains", chains, "chain count for section b");
    appendix->add_option("--iterations", iterations, "iterations per chain for section b");
    appendix->add_flag("--full", full_grid, "full 15x10 grid for section c");
    add_common(appendix, appx_opts, false);

    CLI::App* oracle = app.add_subcommand("oracle", "exact posterior by enumeration");
    double sigma2 = 1.0;
    bool sigma2_given = false;
    oracle->add_option("--sigma2", sigma2, "noise variance to condition on")
        ->each([&](const std::string&) { sigma2_given = true; });
    add_common(oracle, oracle_opts, true);

    CLI::App* baseline = app.add_subcommand("baseline", "non-Bayesian reference methods");
    add_common(baseline, base_opts, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (appendix->parsed())
            return cmd_appendix(appx_opts, which, runs, chains, iterations, full_grid);
        if (oracle->parsed()) return cmd_oracle(oracle_opts, sigma2, sigma2_given);
        if (baseline->parsed()) return cmd_baseline(base_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
