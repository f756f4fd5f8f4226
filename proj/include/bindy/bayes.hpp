#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "bindy/errors.hpp"
#include "bindy/model_space.hpp"
#include "bindy/rng.hpp"

namespace bindy {

/// Zero-mean Gaussian prior on the coefficients of the active terms, with an
/// independent variance per dictionary term.
struct ParamPrior {
    Eigen::VectorXd var0;  // length = dictionary size

    static ParamPrior isotropic(double v, Eigen::Index n_terms) {
        if (!(v > 0.0)) throw ConfigError("param prior variance must be positive");
        return {Eigen::VectorXd::Constant(n_terms, v)};
    }
};

/// Inverse-gamma prior on the observation noise variance.  a0 = b0 = 0 is the
/// scale-invariant improper limit.
struct NoisePrior {
    double a0 = 0.0;
    double b0 = 0.0;
};

/// Sufficient statistics of a single-response linear regression, precomputed so
/// the sampler never touches the N-row design matrix inside the loop.
struct Gram {
    Eigen::MatrixXd gtg;  // D x D
    Eigen::VectorXd gty;  // D
    double yty = 0.0;
    Eigen::Index n = 0;
};

inline Gram make_gram(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    if (design.rows() != y.size())
        throw InputError("make_gram: design and response row counts differ");
    if (design.cols() > kMaxLibraryTerms)
        throw InputError("make_gram: dictionaries are capped at 64 terms");
    Gram g;
    g.gtg = design.transpose() * design;
    g.gty = design.transpose() * y;
    g.yty = y.squaredNorm();
    g.n = design.rows();
    return g;
}

/// Gaussian conditional posterior over the coefficients of one model's active
/// terms.  Stored via the Cholesky factor of the precision matrix; the
/// covariance factor is recovered on demand.
struct GaussianParamPosterior {
    Eigen::VectorXd mean;              // d
    Eigen::MatrixXd precision_chol;    // d x d lower L with L L^T = Sigma^{-1}
    double log_det_cov = 0.0;          // log |Sigma|
    double quad_form = 0.0;            // mean^T Sigma^{-1} mean

    Eigen::Index dim() const { return mean.size(); }

    /// One draw from N(mean, Sigma).  Consumes dim() normals in index order.
    Eigen::VectorXd sample(Rng& rng) const {
        Eigen::VectorXd z(dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
        if (dim() == 0) return z;
        return mean + precision_chol.transpose()
                          .triangularView<Eigen::Upper>()
                          .solve(z);
    }

    /// Dense covariance, for reporting and cross-checks only.
    Eigen::MatrixXd covariance() const {
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim(), dim());
        const Eigen::MatrixXd pinv_l = precision_chol.triangularView<Eigen::Lower>().solve(eye);
        return pinv_l.transpose() * pinv_l;
    }
};

namespace detail {

// Cholesky with escalating diagonal jitter.  Returns the lower factor; throws
// NumericalError once jitter reaches 1e-4 of the mean diagonal.
inline Eigen::MatrixXd robust_llt(const Eigen::MatrixXd& p, const std::string& context) {
    Eigen::LLT<Eigen::MatrixXd> llt(p);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double scale = p.diagonal().mean();
    double jitter = 1e-10 * scale;
    const double max_jitter = 1e-4 * scale;
    while (jitter <= max_jitter) {
        Eigen::MatrixXd pj = p;
        pj.diagonal().array() += jitter;
        llt.compute(pj);
        if (llt.info() == Eigen::Success) return llt.matrixL();
        jitter *= 10.0;
    }
    throw NumericalError(context + ": Cholesky factorization failed for a " +
                         std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                         " precision matrix even with diagonal jitter up to " +
                         std::to_string(max_jitter));
}

}  // namespace detail

/// Conditional posterior of the active coefficients given the model, the noise
/// variance, and the regression sufficient statistics:
///   Sigma_m = [Theta_m^T Theta_m / sigma2 + V0_m^{-1}]^{-1}
///   mu_m    = Sigma_m Theta_m^T y / sigma2
inline GaussianParamPosterior conjugate_update(const Gram& gram, ModelIndex model,
                                               const ParamPrior& prior, double sigma2) {
    if (!(sigma2 > 0.0)) throw InputError("conjugate_update: sigma2 must be positive");
    if (prior.var0.size() != gram.gtg.rows())
        throw ConfigError("conjugate_update: prior variance length does not match dictionary");

    const std::vector<int> idx = model_term_indices(model);
    const Eigen::Index d = static_cast<Eigen::Index>(idx.size());

    GaussianParamPosterior post;
    post.mean.resize(d);
    post.precision_chol.resize(d, d);
    if (d == 0) return post;

    Eigen::MatrixXd precision(d, d);
    Eigen::VectorXd rhs(d);
    const double inv_s2 = 1.0 / sigma2;
    for (Eigen::Index a = 0; a < d; ++a) {
        const int ja = idx[static_cast<std::size_t>(a)];
        for (Eigen::Index b = 0; b < d; ++b)
            precision(a, b) = gram.gtg(ja, idx[static_cast<std::size_t>(b)]) * inv_s2;
        precision(a, a) += 1.0 / prior.var0[ja];
        rhs[a] = gram.gty[ja] * inv_s2;
    }

    post.precision_chol = detail::robust_llt(precision, "conjugate_update");
    const auto lower = post.precision_chol.triangularView<Eigen::Lower>();
    const Eigen::VectorXd half = lower.solve(rhs);  // L^{-1} rhs
    post.mean = post.precision_chol.transpose().triangularView<Eigen::Upper>().solve(half);
    post.log_det_cov = -2.0 * post.precision_chol.diagonal().array().log().sum();
    post.quad_form = half.squaredNorm();  // mean^T P mean = |L^{-1} rhs|^2
    return post;
}

/// Log of the terms of the marginal likelihood p(y | m, sigma2) that depend on
/// the model, plus the log model prior:
///   log p(m) - (1/2) sum_{j in m} log var0_j + (1/2) log|Sigma_m|
///            + (1/2) mu_m^T Sigma_m^{-1} mu_m
/// Model-independent factors are dropped, so only differences between models
/// under the same data and sigma2 are meaningful.  The empty model evaluates to
/// exactly log p(m).
struct LogEvidence {
    double value = 0.0;
    GaussianParamPosterior posterior;
};

inline LogEvidence log_model_evidence(const Gram& gram, ModelIndex model,
                                      const ParamPrior& prior, double sigma2,
                                      double log_prior) {
    LogEvidence ev;
    ev.posterior = conjugate_update(gram, model, prior, sigma2);
    double log_prior_det = 0.0;
    for (int j : model_term_indices(model)) log_prior_det += std::log(prior.var0[j]);
    ev.value = log_prior - 0.5 * log_prior_det + 0.5 * ev.posterior.log_det_cov +
               0.5 * ev.posterior.quad_form;
    return ev;
}

/// Residual sum of squares |y - Theta_m xi|^2 from the sufficient statistics.
inline double residual_sum_squares(const Gram& gram, ModelIndex model,
                                   const Eigen::VectorXd& coeffs) {
    const std::vector<int> idx = model_term_indices(model);
    if (static_cast<Eigen::Index>(idx.size()) != coeffs.size())
        throw InputError("residual_sum_squares: coefficient count does not match model size");
    double cross = 0.0, quad = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        cross += coeffs[static_cast<Eigen::Index>(a)] * gram.gty[idx[a]];
        for (std::size_t b = 0; b < idx.size(); ++b)
            quad += coeffs[static_cast<Eigen::Index>(a)] * gram.gtg(idx[a], idx[b]) *
                    coeffs[static_cast<Eigen::Index>(b)];
    }
    return gram.yty - 2.0 * cross + quad;
}

/// Gibbs update of the noise variance: sigma2 | rest ~ InvGamma(a0 + n/2,
/// b0 + rss/2), drawn as b / Gamma(a, scale 1).
inline double gibbs_noise_update(const NoisePrior& prior, Eigen::Index n, double residual_ss,
                                 Rng& rng) {
    const double a = prior.a0 + 0.5 * static_cast<double>(n);
    const double b = prior.b0 + 0.5 * residual_ss;
    if (!(a > 0.0) || !(b > 0.0))
        throw NumericalError("gibbs_noise_update: degenerate posterior (a = " +
                             std::to_string(a) + ", b = " + std::to_string(b) + ")");
    return b / rng.gamma(a);
}

}  // namespace bindy
