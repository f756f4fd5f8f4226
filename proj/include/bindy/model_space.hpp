#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bindy/errors.hpp"
#include "bindy/rng.hpp"

namespace bindy {

/// A model is a subset of dictionary terms, encoded as a bitmask (bit j set
/// iff term j is active).  Dictionaries are capped at 64 terms.
using ModelIndex = std::uint64_t;

inline constexpr int kMaxLibraryTerms = 64;

inline int model_size(ModelIndex m) { return std::popcount(m); }

inline bool model_has_term(ModelIndex m, int j) { return (m >> j) & 1ull; }

inline ModelIndex full_model(int n_terms) {
    return n_terms >= 64 ? ~0ull : ((1ull << n_terms) - 1ull);
}

inline std::vector<int> model_term_indices(ModelIndex m) {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(std::popcount(m)));
    while (m) {
        idx.push_back(std::countr_zero(m));
        m &= m - 1;
    }
    return idx;
}

/// Lowercase fixed-width hex, (n_terms + 3) / 4 digits.
inline std::string model_to_hex(ModelIndex m, int n_terms) {
    const int digits = (n_terms + 3) / 4;
    std::string out(static_cast<std::size_t>(digits), '0');
    static const char* hexch = "0123456789abcdef";
    for (int i = digits - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hexch[m & 0xf];
        m >>= 4;
    }
    return out;
}

inline ModelIndex model_from_hex(const std::string& hex) {
    if (hex.empty() || hex.size() > 16) throw InputError("model_from_hex: bad mask '" + hex + "'");
    ModelIndex m = 0;
    for (char c : hex) {
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else throw InputError("model_from_hex: bad mask '" + hex + "'");
        m = (m << 4) | static_cast<ModelIndex>(v);
    }
    return m;
}

struct FlatModelPrior {};

struct GeometricModelPrior {
    double theta = 0.99;  // per-term continuation; larger favors sparser models
};

struct PerTermModelPrior {
    std::vector<double> inclusion;  // p_j in (0, 1), one per dictionary term
};

using ModelPrior = std::variant<FlatModelPrior, GeometricModelPrior, PerTermModelPrior>;

/// Unnormalized log prior mass of a model under the given prior family.
inline double log_model_prior(const ModelPrior& prior, ModelIndex m, int n_terms) {
    if (std::holds_alternative<FlatModelPrior>(prior)) return 0.0;
    if (const auto* g = std::get_if<GeometricModelPrior>(&prior)) {
        if (!(g->theta > 0.0 && g->theta < 1.0))
            throw ConfigError("geometric model prior requires theta in (0, 1)");
        return model_size(m) * std::log1p(-g->theta) + std::log(g->theta);
    }
    const auto& p = std::get<PerTermModelPrior>(prior).inclusion;
    if (static_cast<int>(p.size()) != n_terms)
        throw ConfigError("per-term model prior size does not match dictionary size");
    double lp = 0.0;
    for (int j = 0; j < n_terms; ++j) {
        if (!(p[static_cast<std::size_t>(j)] > 0.0 && p[static_cast<std::size_t>(j)] < 1.0))
            throw ConfigError("per-term inclusion probabilities must lie in (0, 1)");
        lp += model_has_term(m, j) ? std::log(p[static_cast<std::size_t>(j)])
                                   : std::log1p(-p[static_cast<std::size_t>(j)]);
    }
    return lp;
}

struct BitFlipProposal {
    ModelIndex proposed;
    int flipped_term;
    double log_jump_ratio;  // symmetric kernel: always 0
};

/// Flip one uniformly chosen bit.  Symmetric, so the proposal contributes
/// nothing to the acceptance ratio.
inline BitFlipProposal propose_bitflip(ModelIndex m, int n_terms, Rng& rng) {
    const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n_terms)));
    return {m ^ (1ull << j), j, 0.0};
}

/// Independent per-term inclusion draw matching the prior's marginals.  For the
/// geometric prior the implied shared inclusion probability is (1-theta)/(2-theta).
inline ModelIndex draw_model_from_prior(const ModelPrior& prior, int n_terms, Rng& rng) {
    ModelIndex m = 0;
    for (int j = 0; j < n_terms; ++j) {
        double p = 0.5;
        if (const auto* g = std::get_if<GeometricModelPrior>(&prior))
            p = (1.0 - g->theta) / (2.0 - g->theta);
        else if (const auto* pt = std::get_if<PerTermModelPrior>(&prior))
            p = pt->inclusion.at(static_cast<std::size_t>(j));
        if (rng.bernoulli(p)) m |= (1ull << j);
    }
    return m;
}

/// All 2^n_terms models, ascending by mask.  Guarded to keep exhaustive
/// enumeration cheap enough for exact-posterior cross-checks.
inline std::vector<ModelIndex> enumerate_models(int n_terms) {
    if (n_terms < 0 || n_terms > 20)
        throw InputError("enumerate_models: supported for dictionaries of at most 20 terms");
    std::vector<ModelIndex> all;
    all.reserve(1ull << n_terms);
    for (ModelIndex m = 0; m < (1ull << n_terms); ++m) all.push_back(m);
    return all;
}

}  // namespace bindy
