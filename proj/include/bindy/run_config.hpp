#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bindy/esindy.hpp"
#include "bindy/io.hpp"
#include "bindy/sampler.hpp"
#include "bindy/signal.hpp"

namespace bindy {

enum class CaseStudy { Legendre, LynxHare, Lorenz };

inline std::string case_name(CaseStudy c) {
    switch (c) {
        case CaseStudy::Legendre: return "legendre";
        case CaseStudy::LynxHare: return "lynx_hare";
        case CaseStudy::Lorenz: return "lorenz";
    }
    throw ConfigError("unknown case");
}

inline CaseStudy case_from_name(const std::string& name) {
    if (name == "legendre") return CaseStudy::Legendre;
    if (name == "lynx_hare") return CaseStudy::LynxHare;
    if (name == "lorenz") return CaseStudy::Lorenz;
    throw ConfigError("unknown case '" + name + "' (expected legendre, lynx_hare, or lorenz)");
}

struct LibraryConfig {
    std::string basis = "polynomial";  // or "legendre"
    int max_degree = 3;                // polynomial: total degree; legendre: n_terms - 1
    bool include_constant = true;
    bool normalize = false;
};

enum class DiffScheme { SmoothedFD, Central };

struct DiffConfig {
    DiffScheme scheme = DiffScheme::SmoothedFD;
    SmoothedFDConfig smoothed;
};

/// Synthetic data generation knobs (ignored for observational cases).
struct DataConfig {
    double noise_fraction = 0.025;
    double train_seconds = 10.0;
    double extrap_seconds = 5.0;
    double sample_hz = 100.0;
    std::vector<double> initial_state = {-8.0, 7.0, 27.0};
    int n_samples = 50000;  // static regression cases
};

struct RunConfig {
    CaseStudy case_id = CaseStudy::Lorenz;
    std::uint64_t seed = 0;
    LibraryConfig library;
    DiffConfig diff;
    DataConfig data;
    SamplerConfig sampler;
    EnsembleConfig esindy;
    bool run_esindy = true;
    int fan_draws = 200;
    std::string data_path;  // observational input, lynx_hare only
};

inline Json library_config_json(const LibraryConfig& c) {
    return Json{{"basis", c.basis},
                {"max_degree", c.max_degree},
                {"include_constant", c.include_constant},
                {"normalize", c.normalize}};
}

inline LibraryConfig library_config_from_json(const Json& j, LibraryConfig base = {}) {
    LibraryConfig c = base;
    if (j.contains("basis")) c.basis = j.at("basis").get<std::string>();
    if (c.basis != "polynomial" && c.basis != "legendre")
        throw ConfigError("library.basis must be 'polynomial' or 'legendre'");
    if (j.contains("max_degree")) c.max_degree = j.at("max_degree").get<int>();
    if (j.contains("include_constant")) c.include_constant = j.at("include_constant").get<bool>();
    if (j.contains("normalize")) c.normalize = j.at("normalize").get<bool>();
    return c;
}

inline Json diff_config_json(const DiffConfig& c) {
    Json j;
    j["scheme"] = c.scheme == DiffScheme::SmoothedFD ? "smoothed_fd" : "central";
    j["window"] = c.smoothed.window;
    j["poly_order"] = c.smoothed.poly_order;
    j["difference_order"] = c.smoothed.difference_order;
    j["trim"] = c.smoothed.trim < 0 ? 2 * c.smoothed.difference_order + 1 : c.smoothed.trim;
    return j;
}

inline DiffConfig diff_config_from_json(const Json& j, DiffConfig base = {}) {
    DiffConfig c = base;
    if (j.contains("scheme")) {
        const std::string s = j.at("scheme").get<std::string>();
        if (s == "smoothed_fd") c.scheme = DiffScheme::SmoothedFD;
        else if (s == "central") c.scheme = DiffScheme::Central;
        else throw ConfigError("diff.scheme must be 'smoothed_fd' or 'central'");
    }
    if (j.contains("window")) c.smoothed.window = j.at("window").get<int>();
    if (j.contains("poly_order")) c.smoothed.poly_order = j.at("poly_order").get<int>();
    if (j.contains("difference_order"))
        c.smoothed.difference_order = j.at("difference_order").get<int>();
    if (j.contains("trim")) c.smoothed.trim = j.at("trim").get<int>();
    return c;
}

inline Json ensemble_config_json(const EnsembleConfig& c) {
    Json j;
    j["n_members"] = c.n_members;
    j["data_bagging"] = c.data_bagging;
    j["library_bagging"] = c.library_bagging;
    j["n_candidates_dropped"] = c.n_candidates_dropped;
    j["stlsq"] = {{"threshold", c.stlsq.threshold},
                  {"max_sweeps", c.stlsq.max_sweeps},
                  {"ridge", c.stlsq.ridge}};
    return j;
}

inline EnsembleConfig ensemble_config_from_json(const Json& j, EnsembleConfig base = {}) {
    EnsembleConfig c = base;
    if (j.contains("n_members")) c.n_members = j.at("n_members").get<int>();
    if (j.contains("data_bagging")) c.data_bagging = j.at("data_bagging").get<bool>();
    if (j.contains("library_bagging")) c.library_bagging = j.at("library_bagging").get<bool>();
    if (j.contains("n_candidates_dropped"))
        c.n_candidates_dropped = j.at("n_candidates_dropped").get<int>();
    if (j.contains("stlsq")) {
        const Json& s = j.at("stlsq");
        if (s.contains("threshold")) c.stlsq.threshold = s.at("threshold").get<double>();
        if (s.contains("max_sweeps")) c.stlsq.max_sweeps = s.at("max_sweeps").get<int>();
        if (s.contains("ridge")) c.stlsq.ridge = s.at("ridge").get<double>();
    }
    return c;
}

inline Json data_config_json(const DataConfig& c) {
    Json j;
    j["noise_fraction"] = c.noise_fraction;
    j["train_seconds"] = c.train_seconds;
    j["extrap_seconds"] = c.extrap_seconds;
    j["sample_hz"] = c.sample_hz;
    j["initial_state"] = c.initial_state;
    j["n_samples"] = c.n_samples;
    return j;
}

inline DataConfig data_config_from_json(const Json& j, DataConfig base = {}) {
    DataConfig c = base;
    if (j.contains("noise_fraction")) c.noise_fraction = j.at("noise_fraction").get<double>();
    if (j.contains("train_seconds")) c.train_seconds = j.at("train_seconds").get<double>();
    if (j.contains("extrap_seconds")) c.extrap_seconds = j.at("extrap_seconds").get<double>();
    if (j.contains("sample_hz")) c.sample_hz = j.at("sample_hz").get<double>();
    if (j.contains("initial_state"))
        c.initial_state = j.at("initial_state").get<std::vector<double>>();
    if (j.contains("n_samples")) c.n_samples = j.at("n_samples").get<int>();
    return c;
}

/// Benchmark defaults for each case study.
inline RunConfig default_config(CaseStudy case_id) {
    RunConfig cfg;
    cfg.case_id = case_id;
    cfg.sampler.n_iterations = 6000;
    cfg.sampler.burn_in = 1000;
    cfg.sampler.initial_model = InitialModel::Full;
    cfg.sampler.initial_sigma2 = 1.0;
    cfg.sampler.param_prior_var = 1e3;

    switch (case_id) {
        case CaseStudy::Lorenz:
            cfg.library = {"polynomial", 3, true, false};
            cfg.diff.scheme = DiffScheme::SmoothedFD;
            cfg.data = {0.025, 10.0, 5.0, 100.0, {-8.0, 7.0, 27.0}, 0};
            cfg.esindy.stlsq.threshold = 0.2;
            cfg.run_esindy = true;
            break;
        case CaseStudy::Legendre:
            cfg.library = {"legendre", 9, true, false};
            cfg.data.noise_fraction = 0.05;
            cfg.data.n_samples = 50000;
            cfg.esindy.stlsq.threshold = 0.1;
            cfg.run_esindy = false;
            break;
        case CaseStudy::LynxHare:
            cfg.library = {"polynomial", 3, true, true};
            cfg.diff.scheme = DiffScheme::Central;
            cfg.sampler.model_prior = GeometricModelPrior{0.99};
            cfg.esindy.stlsq.threshold = 0.19;
            cfg.run_esindy = false;
            cfg.fan_draws = 200;
            break;
    }
    return cfg;
}

inline Json run_config_json(const RunConfig& cfg) {
    Json j;
    j["case"] = case_name(cfg.case_id);
    j["seed"] = cfg.seed;
    j["library"] = library_config_json(cfg.library);
    j["diff"] = diff_config_json(cfg.diff);
    j["data"] = data_config_json(cfg.data);
    j["sampler"] = sampler_config_json(cfg.sampler);
    j["esindy"] = ensemble_config_json(cfg.esindy);
    j["run_esindy"] = cfg.run_esindy;
    j["fan_draws"] = cfg.fan_draws;
    j["data_path"] = cfg.data_path;
    return j;
}

inline RunConfig run_config_from_json(const Json& j) {
    const CaseStudy case_id =
        j.contains("case") ? case_from_name(j.at("case").get<std::string>()) : CaseStudy::Lorenz;
    RunConfig cfg = default_config(case_id);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("library")) cfg.library = library_config_from_json(j.at("library"), cfg.library);
    if (j.contains("diff")) cfg.diff = diff_config_from_json(j.at("diff"), cfg.diff);
    if (j.contains("data")) cfg.data = data_config_from_json(j.at("data"), cfg.data);
    if (j.contains("sampler")) cfg.sampler = sampler_config_from_json(j.at("sampler"), cfg.sampler);
    if (j.contains("esindy")) cfg.esindy = ensemble_config_from_json(j.at("esindy"), cfg.esindy);
    if (j.contains("run_esindy")) cfg.run_esindy = j.at("run_esindy").get<bool>();
    if (j.contains("fan_draws")) cfg.fan_draws = j.at("fan_draws").get<int>();
    if (j.contains("data_path")) cfg.data_path = j.at("data_path").get<std::string>();
    cfg.sampler.seed = cfg.seed;
    cfg.esindy.seed = cfg.seed;
    return cfg;
}

}  // namespace bindy
