#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "bindy/bayes.hpp"
#include "bindy/errors.hpp"
#include "bindy/model_space.hpp"
#include "bindy/rng.hpp"

namespace bindy {

enum class InitialModel { Full, Empty, PriorDraw };

struct SamplerConfig {
    int n_iterations = 6000;
    int burn_in = 1000;
    std::uint64_t seed = 0;
    InitialModel initial_model = InitialModel::Full;
    double initial_sigma2 = 1.0;
    double param_prior_var = 1e3;
    NoisePrior noise_prior;
    ModelPrior model_prior = FlatModelPrior{};
    bool update_noise = true;
};

struct ChainSample {
    ModelIndex model = 0;
    double sigma2 = 1.0;
    bool accepted = false;
    Eigen::VectorXd coeffs;  // active terms only, ascending term index
};

struct Chain {
    std::vector<ChainSample> samples;  // one per iteration, burn-in included
    int n_terms = 0;
    double acceptance_rate = 0.0;
    SamplerConfig config;
};

struct SamplerState {
    ModelIndex model = 0;
    double sigma2 = 1.0;
};

struct StepResult {
    bool accepted = false;
    Eigen::VectorXd coeffs;
};

/// One transition with an externally supplied structure proposal.  The move is
/// accepted with probability min(1, exp(jump ratio + evidence difference)); the
/// coefficients are then refreshed from their conditional posterior and, if
/// requested, the noise variance from its inverse-gamma conditional.  The
/// acceptance test never looks at the current coefficients.
inline StepResult step_with_proposal(const Gram& gram, const ParamPrior& prior,
                                     const NoisePrior& noise_prior,
                                     const ModelPrior& model_prior, int n_terms,
                                     SamplerState& state, ModelIndex proposed,
                                     double log_jump_ratio, bool update_noise,
                                     Rng& accept_rng, Rng& draw_rng) {
    const LogEvidence current = log_model_evidence(
        gram, state.model, prior, state.sigma2,
        log_model_prior(model_prior, state.model, n_terms));
    const LogEvidence candidate = log_model_evidence(
        gram, proposed, prior, state.sigma2,
        log_model_prior(model_prior, proposed, n_terms));

    StepResult result;
    const double log_alpha = log_jump_ratio + candidate.value - current.value;
    result.accepted = std::log(accept_rng.uniform01_pos()) < log_alpha;

    const GaussianParamPosterior& post = result.accepted ? candidate.posterior : current.posterior;
    if (result.accepted) state.model = proposed;
    result.coeffs = post.sample(draw_rng);

    if (update_noise) {
        const double rss = residual_sum_squares(gram, state.model, result.coeffs);
        state.sigma2 = gibbs_noise_update(noise_prior, gram.n, rss, draw_rng);
    }
    return result;
}

inline ModelIndex initial_model_for(const SamplerConfig& cfg, int n_terms, Rng& rng) {
    switch (cfg.initial_model) {
        case InitialModel::Full: return full_model(n_terms);
        case InitialModel::Empty: return 0;
        case InitialModel::PriorDraw: return draw_model_from_prior(cfg.model_prior, n_terms, rng);
    }
    throw ConfigError("run_chain: unknown initial model");
}

/// Run one chain on a single response.  Bit-reproducible for a fixed config:
/// structure proposals, acceptance tests, and parameter/noise draws each use
/// their own substream derived from (seed, chain_index).
inline Chain run_chain(const Gram& gram, int n_terms, const SamplerConfig& cfg,
                       int chain_index = 0) {
    if (n_terms < 1 || n_terms > kMaxLibraryTerms)
        throw InputError("run_chain: dictionary size must be in [1, 64]");
    if (gram.gtg.rows() != n_terms)
        throw InputError("run_chain: sufficient statistics do not match dictionary size");
    if (cfg.n_iterations < 1) throw ConfigError("run_chain: n_iterations must be >= 1");
    if (cfg.burn_in < 0 || cfg.burn_in >= cfg.n_iterations)
        throw ConfigError("run_chain: burn_in must be in [0, n_iterations)");
    if (!(cfg.initial_sigma2 > 0.0)) throw ConfigError("run_chain: initial_sigma2 must be positive");

    ChainRngs rngs = ChainRngs::make(cfg.seed, static_cast<std::uint64_t>(chain_index));
    const ParamPrior prior = ParamPrior::isotropic(cfg.param_prior_var, n_terms);

    Chain chain;
    chain.n_terms = n_terms;
    chain.config = cfg;
    chain.samples.reserve(static_cast<std::size_t>(cfg.n_iterations));

    SamplerState state;
    state.model = initial_model_for(cfg, n_terms, rngs.jump);
    state.sigma2 = cfg.initial_sigma2;

    int n_accepted = 0;
    for (int it = 0; it < cfg.n_iterations; ++it) {
        const BitFlipProposal prop = propose_bitflip(state.model, n_terms, rngs.jump);
        const StepResult step =
            step_with_proposal(gram, prior, cfg.noise_prior, cfg.model_prior, n_terms, state,
                               prop.proposed, prop.log_jump_ratio, cfg.update_noise,
                               rngs.accept, rngs.draw);
        n_accepted += step.accepted ? 1 : 0;
        chain.samples.push_back({state.model, state.sigma2, step.accepted, step.coeffs});
    }
    chain.acceptance_rate = static_cast<double>(n_accepted) / cfg.n_iterations;
    return chain;
}

/// Independent chains with per-chain derived seeds.  The result is identical
/// for any job count; threads only partition the chain indices.
inline std::vector<Chain> run_chains_parallel(const Gram& gram, int n_terms,
                                              const SamplerConfig& cfg, int n_chains,
                                              int n_jobs = 1) {
    if (n_chains < 1) throw ConfigError("run_chains_parallel: n_chains must be >= 1");
    std::vector<Chain> chains(static_cast<std::size_t>(n_chains));
    const int jobs = std::max(1, std::min(n_jobs, n_chains));
    if (jobs == 1) {
        for (int c = 0; c < n_chains; ++c)
            chains[static_cast<std::size_t>(c)] = run_chain(gram, n_terms, cfg, c);
        return chains;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int c = next.fetch_add(1); c < n_chains; c = next.fetch_add(1)) {
            try {
                chains[static_cast<std::size_t>(c)] = run_chain(gram, n_terms, cfg, c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return chains;
}

}  // namespace bindy
