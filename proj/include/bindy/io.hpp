#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bindy/analysis.hpp"
#include "bindy/errors.hpp"
#include "bindy/sampler.hpp"
#include "bindy/signal.hpp"
#include "bindy/term_library.hpp"

namespace bindy {

using Json = nlohmann::ordered_json;

/// Shortest-width full-precision float formatting shared by every CSV writer,
/// so identical runs produce byte-identical files.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(context + ": cannot parse number '" + s + "'");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chain CSV: iteration, accepted, sigma2, model_mask_hex, param_0..param_{D-1}
// with coefficients of inactive terms left empty.
// ---------------------------------------------------------------------------

inline void write_chain_csv(const std::filesystem::path& path, const Chain& chain) {
    std::ofstream out = detail::open_out(path);
    out << "iteration,accepted,sigma2,model_mask_hex";
    for (int j = 0; j < chain.n_terms; ++j) out << ",param_" << j;
    out << "\n";
    for (std::size_t it = 0; it < chain.samples.size(); ++it) {
        const ChainSample& s = chain.samples[it];
        out << it << ',' << (s.accepted ? 1 : 0) << ',' << fmt_double(s.sigma2) << ','
            << model_to_hex(s.model, chain.n_terms);
        Eigen::Index k = 0;
        for (int j = 0; j < chain.n_terms; ++j) {
            out << ',';
            if (model_has_term(s.model, j)) out << fmt_double(s.coeffs[k++]);
        }
        out << "\n";
    }
}

inline Chain read_chain_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 5 || header[0] != "iteration" || header[3] != "model_mask_hex")
        throw InputError(path.string() + ": unrecognized chain header");

    Chain chain;
    chain.n_terms = static_cast<int>(header.size()) - 4;
    long accepted = 0;
    for (long row = 1; std::getline(in, line); ++row) {
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        const std::string ctx = path.string() + " row " + std::to_string(row);
        if (f.size() != header.size()) throw InputError(ctx + ": wrong field count");
        ChainSample s;
        s.accepted = f[1] == "1";
        s.sigma2 = detail::parse_double(f[2], ctx);
        s.model = model_from_hex(f[3]);
        const std::vector<int> idx = model_term_indices(s.model);
        s.coeffs.resize(static_cast<Eigen::Index>(idx.size()));
        Eigen::Index k = 0;
        for (int j = 0; j < chain.n_terms; ++j) {
            const std::string& field = f[static_cast<std::size_t>(4 + j)];
            if (model_has_term(s.model, j)) {
                s.coeffs[k++] = detail::parse_double(field, ctx);
            } else if (!field.empty()) {
                throw InputError(ctx + ": coefficient present for inactive term " +
                                 std::to_string(j));
            }
        }
        accepted += s.accepted ? 1 : 0;
        chain.samples.push_back(std::move(s));
    }
    if (chain.samples.empty()) throw InputError(path.string() + ": no samples");
    chain.acceptance_rate = static_cast<double>(accepted) / chain.samples.size();
    return chain;
}

// ---------------------------------------------------------------------------
// JSON echoes and summaries
// ---------------------------------------------------------------------------

inline Json sampler_config_json(const SamplerConfig& cfg) {
    Json j;
    j["n_iterations"] = cfg.n_iterations;
    j["burn_in"] = cfg.burn_in;
    j["seed"] = cfg.seed;
    switch (cfg.initial_model) {
        case InitialModel::Full: j["initial_model"] = "full"; break;
        case InitialModel::Empty: j["initial_model"] = "empty"; break;
        case InitialModel::PriorDraw: j["initial_model"] = "prior_draw"; break;
    }
    j["initial_sigma2"] = cfg.initial_sigma2;
    j["param_prior_var"] = cfg.param_prior_var;
    j["noise_prior"] = {{"a0", cfg.noise_prior.a0}, {"b0", cfg.noise_prior.b0}};
    if (std::holds_alternative<FlatModelPrior>(cfg.model_prior)) {
        j["model_prior"] = "flat";
    } else if (const auto* g = std::get_if<GeometricModelPrior>(&cfg.model_prior)) {
        j["model_prior"] = {{"geometric", g->theta}};
    } else {
        j["model_prior"] = {{"per_term", std::get<PerTermModelPrior>(cfg.model_prior).inclusion}};
    }
    j["update_noise"] = cfg.update_noise;
    return j;
}

inline SamplerConfig sampler_config_from_json(const Json& j, SamplerConfig base = {}) {
    SamplerConfig cfg = base;
    if (j.contains("n_iterations")) cfg.n_iterations = j.at("n_iterations").get<int>();
    if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("initial_model")) {
        const std::string name = j.at("initial_model").get<std::string>();
        if (name == "full") cfg.initial_model = InitialModel::Full;
        else if (name == "empty") cfg.initial_model = InitialModel::Empty;
        else if (name == "prior_draw") cfg.initial_model = InitialModel::PriorDraw;
        else throw ConfigError("unknown initial_model '" + name + "'");
    }
    if (j.contains("initial_sigma2")) cfg.initial_sigma2 = j.at("initial_sigma2").get<double>();
    if (j.contains("param_prior_var")) cfg.param_prior_var = j.at("param_prior_var").get<double>();
    if (j.contains("noise_prior")) {
        cfg.noise_prior.a0 = j.at("noise_prior").value("a0", cfg.noise_prior.a0);
        cfg.noise_prior.b0 = j.at("noise_prior").value("b0", cfg.noise_prior.b0);
    }
    if (j.contains("model_prior")) {
        const Json& mp = j.at("model_prior");
        if (mp.is_string() && mp.get<std::string>() == "flat") {
            cfg.model_prior = FlatModelPrior{};
        } else if (mp.is_object() && mp.contains("geometric")) {
            cfg.model_prior = GeometricModelPrior{mp.at("geometric").get<double>()};
        } else if (mp.is_object() && mp.contains("per_term")) {
            cfg.model_prior = PerTermModelPrior{mp.at("per_term").get<std::vector<double>>()};
        } else {
            throw ConfigError("unknown model_prior specification");
        }
    }
    if (j.contains("update_noise")) cfg.update_noise = j.at("update_noise").get<bool>();
    return cfg;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out = detail::open_out(path);
    out << j.dump(2) << "\n";
}

inline Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline Json summary_json(const PosteriorSummary& s, const std::vector<std::string>& labels) {
    Json j;
    j["n_samples_used"] = s.n_samples_used;
    j["acceptance_rate"] = s.acceptance_rate;
    j["sigma2_mean"] = s.sigma2_mean;
    Json terms = Json::array();
    for (std::size_t k = 0; k < s.terms.size(); ++k) {
        const TermSummary& t = s.terms[k];
        Json e;
        e["term"] = k;
        e["label"] = k < labels.size() ? labels[k] : "";
        e["inclusion"] = t.inclusion;
        e["cond_count"] = t.cond_count;
        e["cond_mean"] = t.cond_count > 0 ? Json(t.cond_mean) : Json(nullptr);
        e["cond_std"] = t.cond_count > 1 ? Json(t.cond_std) : Json(nullptr);
        e["marg_mean"] = t.marg_mean;
        e["marg_std"] = t.marg_std;
        terms.push_back(std::move(e));
    }
    j["terms"] = std::move(terms);
    Json models = Json::array();
    for (const auto& [mask, freq] : s.top_models) {
        Json e;
        e["model_mask_hex"] = model_to_hex(mask, static_cast<int>(s.terms.size()));
        e["frequency"] = freq;
        models.push_back(std::move(e));
    }
    j["top_models"] = std::move(models);
    return j;
}

// ---------------------------------------------------------------------------
// Tabular outputs
// ---------------------------------------------------------------------------

struct InclusionRow {
    std::string method;  // "bindy" or "esindy"
    int equation = 0;
    int term = 0;
    std::string label;
    double inclusion = 0.0;
    double mean = 0.0;    // conditional for bindy, all-members for esindy
    double stddev = 0.0;  // likewise
};

inline void write_inclusion_csv(const std::filesystem::path& path,
                                const std::vector<InclusionRow>& rows) {
    std::ofstream out = detail::open_out(path);
    out << "method,equation,term,label,inclusion,mean,stddev\n";
    for (const InclusionRow& r : rows) {
        out << r.method << ',' << r.equation << ',' << r.term << ',' << r.label << ','
            << fmt_double(r.inclusion) << ',' << fmt_double(r.mean) << ','
            << fmt_double(r.stddev) << "\n";
    }
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<TraceReport>& reports,
                            const std::vector<std::string>& labels) {
    std::ofstream out = detail::open_out(path);
    out << "equation,trace,shift,pass\n";
    for (std::size_t eq = 0; eq < reports.size(); ++eq) {
        const TraceReport& r = reports[eq];
        for (std::size_t j = 0; j < r.term_shift.size(); ++j) {
            out << eq << ',' << (j < labels.size() ? labels[j] : "term_" + std::to_string(j))
                << ',' << fmt_double(r.term_shift[j]) << ','
                << (r.term_shift[j] < 3.0 ? 1 : 0) << "\n";
        }
        out << eq << ",sigma2," << fmt_double(r.sigma2_shift) << ','
            << (r.sigma2_shift < 3.0 ? 1 : 0) << "\n";
    }
}

inline void write_fan_csv(const std::filesystem::path& path,
                          const std::vector<IntegrationResult>& fans) {
    std::ofstream out = detail::open_out(path);
    if (fans.empty()) throw InputError("write_fan_csv: no draws");
    const Eigen::Index s = fans.front().series.n_channels();
    out << "draw_id,t";
    for (Eigen::Index c = 0; c < s; ++c) out << ",x_" << c;
    out << ",diverged\n";
    for (std::size_t k = 0; k < fans.size(); ++k) {
        const IntegrationResult& fan = fans[k];
        for (Eigen::Index i = 0; i < fan.series.n_samples(); ++i) {
            out << k << ',' << fmt_double(fan.series.time[i]);
            for (Eigen::Index c = 0; c < s; ++c)
                out << ',' << fmt_double(fan.series.values(i, c));
            const bool bad = fan.diverged && i >= fan.diverged_at;
            out << ',' << (bad ? 1 : 0) << "\n";
        }
    }
}

struct MseRow {
    std::string method;
    int equation = 0;
    double median_mse = 0.0;
    int n_draws = 0;
};

inline void write_mse_csv(const std::filesystem::path& path, const std::vector<MseRow>& rows) {
    std::ofstream out = detail::open_out(path);
    out << "method,equation,median_mse,n_draws\n";
    for (const MseRow& r : rows)
        out << r.method << ',' << r.equation << ',' << fmt_double(r.median_mse) << ','
            << r.n_draws << "\n";
}

struct RobustnessCell {
    double noise_fraction = 0.0;
    double train_seconds = 0.0;
    double score = 0.0;  // product over equations of the true-model frequency
};

inline void write_robustness_csv(const std::filesystem::path& path,
                                 const std::vector<RobustnessCell>& cells) {
    std::ofstream out = detail::open_out(path);
    out << "noise_fraction,train_seconds,score\n";
    for (const RobustnessCell& c : cells)
        out << fmt_double(c.noise_fraction) << ',' << fmt_double(c.train_seconds) << ','
            << fmt_double(c.score) << "\n";
}

// ---------------------------------------------------------------------------
// Observational data ingest: year, prey, predator counts
// ---------------------------------------------------------------------------

struct FieldData {
    TimeSeries series;
    std::vector<std::string> channels;
};

/// Reads an annual two-species abundance table (header `year,<prey>,<pred>`).
/// Errors name the offending row.
inline FieldData ingest_two_species_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() != 3 || header[0] != "year")
        throw InputError(path.string() + ": expected header 'year,<prey>,<predator>'");

    std::vector<double> years;
    std::vector<double> a, b;
    for (long row = 1; std::getline(in, line); ++row) {
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        const std::string ctx = path.string() + " row " + std::to_string(row);
        if (f.size() != 3) throw InputError(ctx + ": expected 3 fields, got " +
                                            std::to_string(f.size()));
        years.push_back(detail::parse_double(f[0], ctx));
        a.push_back(detail::parse_double(f[1], ctx));
        b.push_back(detail::parse_double(f[2], ctx));
        if (!(a.back() >= 0.0) || !(b.back() >= 0.0))
            throw InputError(ctx + ": negative abundance");
        if (years.size() > 1 && !(years.back() == years[years.size() - 2] + 1.0))
            throw InputError(ctx + ": years must increase by exactly 1");
    }
    if (years.size() < 3) throw InputError(path.string() + ": need at least 3 rows");

    FieldData data;
    data.channels = {header[1], header[2]};
    data.series.time = Eigen::Map<Eigen::VectorXd>(years.data(), static_cast<Eigen::Index>(years.size()));
    data.series.values.resize(static_cast<Eigen::Index>(years.size()), 2);
    for (std::size_t i = 0; i < years.size(); ++i) {
        data.series.values(static_cast<Eigen::Index>(i), 0) = a[i];
        data.series.values(static_cast<Eigen::Index>(i), 1) = b[i];
    }
    return data;
}

}  // namespace bindy
