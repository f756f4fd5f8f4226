#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "bindy/bayes.hpp"
#include "bindy/dynamics.hpp"
#include "bindy/errors.hpp"
#include "bindy/model_space.hpp"
#include "bindy/sampler.hpp"
#include "bindy/term_library.hpp"

namespace bindy {

inline double median(std::vector<double> v) {
    if (v.empty()) throw InputError("median: empty input");
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
    return 0.5 * (v[n / 2 - 1] + hi);
}

/// Per-term posterior statistics from one chain.  Conditional moments are over
/// the iterations where the term is active; when there are none (or only one,
/// for the standard deviation) the corresponding count makes that explicit and
/// the moment is NaN rather than zero.  Marginal moments treat an inactive
/// term's coefficient as exactly zero.
struct TermSummary {
    double inclusion = 0.0;
    long cond_count = 0;
    double cond_mean = std::numeric_limits<double>::quiet_NaN();
    double cond_std = std::numeric_limits<double>::quiet_NaN();
    double marg_mean = 0.0;
    double marg_std = 0.0;
};

struct PosteriorSummary {
    std::vector<TermSummary> terms;
    std::vector<std::pair<ModelIndex, double>> top_models;  // descending frequency
    double sigma2_mean = 0.0;
    double acceptance_rate = 0.0;
    int n_samples_used = 0;
};

inline PosteriorSummary summarize_chain(const Chain& chain, int burn_in = -1,
                                        std::size_t max_models = 16) {
    const int burn = burn_in < 0 ? chain.config.burn_in : burn_in;
    const int total = static_cast<int>(chain.samples.size());
    if (burn < 0 || burn >= total) throw InputError("summarize_chain: burn-in out of range");
    const int used = total - burn;

    PosteriorSummary s;
    s.terms.resize(static_cast<std::size_t>(chain.n_terms));
    s.acceptance_rate = chain.acceptance_rate;
    s.n_samples_used = used;

    std::vector<double> sum(static_cast<std::size_t>(chain.n_terms), 0.0);
    std::vector<double> sumsq(static_cast<std::size_t>(chain.n_terms), 0.0);
    std::map<ModelIndex, long> model_counts;
    double sigma2_sum = 0.0;

    for (int it = burn; it < total; ++it) {
        const ChainSample& smp = chain.samples[static_cast<std::size_t>(it)];
        sigma2_sum += smp.sigma2;
        ++model_counts[smp.model];
        const std::vector<int> idx = model_term_indices(smp.model);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double c = smp.coeffs[static_cast<Eigen::Index>(k)];
            auto& term = s.terms[static_cast<std::size_t>(idx[k])];
            ++term.cond_count;
            sum[static_cast<std::size_t>(idx[k])] += c;
            sumsq[static_cast<std::size_t>(idx[k])] += c * c;
        }
    }
    s.sigma2_mean = sigma2_sum / used;

    for (std::size_t j = 0; j < s.terms.size(); ++j) {
        TermSummary& t = s.terms[j];
        t.inclusion = static_cast<double>(t.cond_count) / used;
        if (t.cond_count > 0) {
            t.cond_mean = sum[j] / static_cast<double>(t.cond_count);
            if (t.cond_count > 1) {
                const double ss = sumsq[j] - static_cast<double>(t.cond_count) * t.cond_mean * t.cond_mean;
                t.cond_std = std::sqrt(std::max(0.0, ss / static_cast<double>(t.cond_count - 1)));
            }
        }
        t.marg_mean = sum[j] / static_cast<double>(used);
        const double marg_ss = sumsq[j] - static_cast<double>(used) * t.marg_mean * t.marg_mean;
        t.marg_std = used > 1 ? std::sqrt(std::max(0.0, marg_ss / static_cast<double>(used - 1))) : 0.0;
    }

    std::vector<std::pair<ModelIndex, double>> freq;
    freq.reserve(model_counts.size());
    for (const auto& [m, c] : model_counts)
        freq.emplace_back(m, static_cast<double>(c) / used);
    std::stable_sort(freq.begin(), freq.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (freq.size() > max_models) freq.resize(max_models);
    s.top_models = std::move(freq);
    return s;
}

/// Fraction of post-burn-in iterations spent exactly at `model`.
inline double model_frequency(const Chain& chain, ModelIndex model, int burn_in = -1) {
    const int burn = burn_in < 0 ? chain.config.burn_in : burn_in;
    const int total = static_cast<int>(chain.samples.size());
    if (burn < 0 || burn >= total) throw InputError("model_frequency: burn-in out of range");
    long hits = 0;
    for (int it = burn; it < total; ++it)
        hits += chain.samples[static_cast<std::size_t>(it)].model == model ? 1 : 0;
    return static_cast<double>(hits) / (total - burn);
}

struct ExactPosterior {
    std::vector<ModelIndex> models;  // ascending mask
    std::vector<double> probabilities;
};

/// Normalized posterior over every model of a small dictionary by exhaustive
/// evidence evaluation at a fixed noise variance.
inline ExactPosterior exact_model_posterior(const Gram& gram, const ParamPrior& prior,
                                            double sigma2, const ModelPrior& model_prior,
                                            int n_terms) {
    ExactPosterior out;
    out.models = enumerate_models(n_terms);
    std::vector<double> logs;
    logs.reserve(out.models.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (ModelIndex m : out.models) {
        const double lp = log_model_prior(model_prior, m, n_terms);
        logs.push_back(log_model_evidence(gram, m, prior, sigma2, lp).value);
        max_log = std::max(max_log, logs.back());
    }
    double z = 0.0;
    for (double l : logs) z += std::exp(l - max_log);
    out.probabilities.reserve(logs.size());
    for (double l : logs) out.probabilities.push_back(std::exp(l - max_log) / z);
    return out;
}

/// Split-half stationarity check on one chain.  Each monitored trace (marginal
/// coefficient per term, with inactive treated as zero, plus the noise
/// variance) is compared between the two halves of the post-burn-in run via
///   shift = |mean2 - mean1| / sqrt(var1/n1 + var2/n2),
/// and the chain passes when every shift stays below 3.
struct TraceReport {
    std::vector<double> term_shift;
    double sigma2_shift = 0.0;
    bool converged = false;
};

inline TraceReport trace_report(const Chain& chain, int burn_in = -1) {
    const int burn = burn_in < 0 ? chain.config.burn_in : burn_in;
    const int total = static_cast<int>(chain.samples.size());
    if (burn < 0 || total - burn < 4) throw InputError("trace_report: too few samples");

    const int used = total - burn;
    const int n1 = used / 2;
    const int n2 = used - n1;

    auto shift_of = [&](auto&& value_at) {
        double m1 = 0.0, m2 = 0.0;
        for (int i = 0; i < n1; ++i) m1 += value_at(burn + i);
        for (int i = 0; i < n2; ++i) m2 += value_at(burn + n1 + i);
        m1 /= n1;
        m2 /= n2;
        double v1 = 0.0, v2 = 0.0;
        for (int i = 0; i < n1; ++i) v1 += std::pow(value_at(burn + i) - m1, 2);
        for (int i = 0; i < n2; ++i) v2 += std::pow(value_at(burn + n1 + i) - m2, 2);
        v1 /= (n1 - 1);
        v2 /= (n2 - 1);
        const double denom = std::sqrt(v1 / n1 + v2 / n2);
        if (denom == 0.0) return m1 == m2 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::abs(m2 - m1) / denom;
    };

    auto coeff_at = [&](int it, int term) {
        const ChainSample& smp = chain.samples[static_cast<std::size_t>(it)];
        if (!model_has_term(smp.model, term)) return 0.0;
        const std::vector<int> idx = model_term_indices(smp.model);
        const auto pos = std::lower_bound(idx.begin(), idx.end(), term) - idx.begin();
        return smp.coeffs[static_cast<Eigen::Index>(pos)];
    };

    TraceReport rep;
    rep.term_shift.resize(static_cast<std::size_t>(chain.n_terms));
    bool ok = true;
    for (int j = 0; j < chain.n_terms; ++j) {
        rep.term_shift[static_cast<std::size_t>(j)] =
            shift_of([&](int it) { return coeff_at(it, j); });
        ok = ok && rep.term_shift[static_cast<std::size_t>(j)] < 3.0;
    }
    rep.sigma2_shift =
        shift_of([&](int it) { return chain.samples[static_cast<std::size_t>(it)].sigma2; });
    rep.converged = ok && rep.sigma2_shift < 3.0;
    return rep;
}

/// Mean model size across chains at each iteration, for multi-chain
/// convergence traces.
inline std::vector<double> model_size_trace(const std::vector<Chain>& chains) {
    if (chains.empty()) throw InputError("model_size_trace: no chains");
    const std::size_t iters = chains.front().samples.size();
    std::vector<double> trace(iters, 0.0);
    for (const Chain& c : chains) {
        if (c.samples.size() != iters)
            throw InputError("model_size_trace: chains have different lengths");
        for (std::size_t t = 0; t < iters; ++t)
            trace[t] += model_size(c.samples[t].model);
    }
    for (double& v : trace) v /= static_cast<double>(chains.size());
    return trace;
}

/// Draw whole systems from per-equation chains (sample k of every chain forms
/// one system), map coefficients back to raw term units, and integrate each
/// from `x0`.  Draw positions are evenly spaced over the post-burn-in samples.
inline std::vector<IntegrationResult> simulate_posterior_fan(
    const std::vector<Chain>& eq_chains, const TermLibrary& library, const Eigen::VectorXd& x0,
    double dt, int n_steps, int n_draws, double t0 = 0.0) {
    if (eq_chains.empty()) throw InputError("simulate_posterior_fan: no chains");
    if (static_cast<Eigen::Index>(eq_chains.size()) != x0.size())
        throw InputError("simulate_posterior_fan: one chain per state equation required");
    if (n_draws < 1) throw InputError("simulate_posterior_fan: n_draws must be >= 1");

    const int total = static_cast<int>(eq_chains.front().samples.size());
    const int burn = eq_chains.front().config.burn_in;
    for (const Chain& c : eq_chains)
        if (static_cast<int>(c.samples.size()) != total || c.config.burn_in != burn)
            throw InputError("simulate_posterior_fan: chains must share length and burn-in");
    const int kept = total - burn;
    if (kept < 1) throw InputError("simulate_posterior_fan: no post-burn-in samples");

    const Eigen::Index s = x0.size();
    const Eigen::Index d = library.n_terms();
    std::vector<IntegrationResult> fans;
    fans.reserve(static_cast<std::size_t>(n_draws));
    for (int k = 0; k < n_draws; ++k) {
        const int pos = burn + static_cast<int>((static_cast<long long>(k) * kept) / n_draws);
        DictionaryModel model;
        model.terms = library.terms;
        model.coefficients.setZero(s, d);
        for (Eigen::Index e = 0; e < s; ++e) {
            const ChainSample& smp =
                eq_chains[static_cast<std::size_t>(e)].samples[static_cast<std::size_t>(pos)];
            const std::vector<int> idx = model_term_indices(smp.model);
            const Eigen::VectorXd raw = denormalize_coefficients(library, smp.coeffs, idx);
            for (std::size_t a = 0; a < idx.size(); ++a)
                model.coefficients(e, idx[a]) = raw[static_cast<Eigen::Index>(a)];
        }
        fans.push_back(rk4_integrate(model.rhs(), x0, dt, n_steps, t0));
    }
    return fans;
}

/// Per-draw, per-channel mean squared error of fan trajectories against a
/// reference series on the same grid.  Once a draw diverges, every remaining
/// sample of every channel contributes the cap (2 * max |reference|)^2 for
/// that channel, so early blow-ups are penalized but stay finite.
struct FanMseStats {
    Eigen::MatrixXd per_draw;  // n_draws x S
    Eigen::VectorXd median_mse;
};

inline FanMseStats trajectory_mse_stats(const std::vector<IntegrationResult>& fans,
                                        const TimeSeries& reference) {
    if (fans.empty()) throw InputError("trajectory_mse_stats: no draws");
    const Eigen::Index n = reference.n_samples();
    const Eigen::Index s = reference.n_channels();

    Eigen::VectorXd cap(s);
    for (Eigen::Index c = 0; c < s; ++c) {
        const double m = reference.values.col(c).cwiseAbs().maxCoeff();
        cap[c] = 4.0 * m * m;
    }

    FanMseStats stats;
    stats.per_draw.resize(static_cast<Eigen::Index>(fans.size()), s);
    for (std::size_t k = 0; k < fans.size(); ++k) {
        const IntegrationResult& fan = fans[k];
        if (fan.series.n_samples() != n || fan.series.n_channels() != s)
            throw InputError("trajectory_mse_stats: draw grid does not match the reference");
        const Eigen::Index good = fan.diverged ? fan.diverged_at : n;
        for (Eigen::Index c = 0; c < s; ++c) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < good; ++i)
                acc += std::pow(fan.series.values(i, c) - reference.values(i, c), 2);
            acc += cap[c] * static_cast<double>(n - good);
            stats.per_draw(static_cast<Eigen::Index>(k), c) = acc / static_cast<double>(n);
        }
    }

    stats.median_mse.resize(s);
    for (Eigen::Index c = 0; c < s; ++c) {
        std::vector<double> col(fans.size());
        for (std::size_t k = 0; k < fans.size(); ++k)
            col[k] = stats.per_draw(static_cast<Eigen::Index>(k), c);
        stats.median_mse[c] = median(std::move(col));
    }
    return stats;
}

}  // namespace bindy
