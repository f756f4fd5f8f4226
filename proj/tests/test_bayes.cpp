#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "bindy/bayes.hpp"
#include "bindy/model_space.hpp"
#include "bindy/rng.hpp"

using namespace bindy;

namespace {

struct Problem {
    Eigen::MatrixXd design;
    Eigen::VectorXd y;
    Gram gram;
};

Problem random_problem(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    Problem p;
    p.design.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) p.design(i, j) = rng.normal();
    p.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.y[i] = rng.normal();
    p.gram = make_gram(p.design, p.y);
    return p;
}

Eigen::MatrixXd restrict_cols(const Eigen::MatrixXd& m, ModelIndex model) {
    const std::vector<int> idx = model_term_indices(model);
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    return out;
}

// Direct dense conditional posterior, deliberately via explicit inversion.
struct DensePosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

DensePosterior dense_posterior(const Problem& p, ModelIndex model, const ParamPrior& prior,
                               double sigma2) {
    const std::vector<int> idx = model_term_indices(model);
    const Eigen::MatrixXd theta = restrict_cols(p.design, model);
    Eigen::MatrixXd precision = theta.transpose() * theta / sigma2;
    for (std::size_t k = 0; k < idx.size(); ++k)
        precision(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +=
            1.0 / prior.var0[idx[k]];
    DensePosterior dp;
    dp.cov = precision.inverse();
    dp.mean = dp.cov * (theta.transpose() * p.y) / sigma2;
    return dp;
}

// Marginal log-likelihood through the observation-space covariance
// sigma2 I + Theta_m V0_m Theta_m^T, an algebraically independent route.
double dense_log_marginal(const Problem& p, ModelIndex model, const ParamPrior& prior,
                          double sigma2) {
    const std::vector<int> idx = model_term_indices(model);
    const Eigen::MatrixXd theta = restrict_cols(p.design, model);
    const Eigen::Index n = p.design.rows();
    Eigen::MatrixXd cov = sigma2 * Eigen::MatrixXd::Identity(n, n);
    for (std::size_t k = 0; k < idx.size(); ++k)
        cov += prior.var0[idx[k]] * theta.col(static_cast<Eigen::Index>(k)) *
               theta.col(static_cast<Eigen::Index>(k)).transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    const double quad = p.y.dot(llt.solve(p.y));
    return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

}  // namespace

TEST_CASE("conjugate update agrees with a dense direct solve") {
    const Problem p = random_problem(50, 6, 31);
    const ParamPrior prior = ParamPrior::isotropic(1e3, 6);
    Rng mask_rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelIndex m = mask_rng.uniform_below(64);
        const double sigma2 = 0.2 + mask_rng.uniform01() * 3.0;
        const GaussianParamPosterior post = conjugate_update(p.gram, m, prior, sigma2);
        const DensePosterior dp = dense_posterior(p, m, prior, sigma2);
        REQUIRE(post.dim() == model_size(m));
        if (post.dim() == 0) continue;
        CHECK((post.mean - dp.mean).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + dp.mean.cwiseAbs().maxCoeff()));
        CHECK((post.covariance() - dp.cov).cwiseAbs().maxCoeff() <
              1e-8 * (1.0 + dp.cov.cwiseAbs().maxCoeff()));
        const double log_det_dense = std::log(dp.cov.determinant());
        CHECK(post.log_det_cov == Catch::Approx(log_det_dense).margin(1e-8));
        const double quad_dense = dp.mean.dot(dp.cov.inverse() * dp.mean);
        CHECK(post.quad_form == Catch::Approx(quad_dense).epsilon(1e-8));
    }
}

TEST_CASE("scalar conjugate update has the closed-form value") {
    Eigen::MatrixXd design = Eigen::MatrixXd::Ones(4, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
    const Gram gram = make_gram(design, y);
    const ParamPrior prior = ParamPrior::isotropic(1e3, 1);
    const GaussianParamPosterior post = conjugate_update(gram, 0b1, prior, 1.0);
    CHECK(post.covariance()(0, 0) == Catch::Approx(1.0 / 4.001).epsilon(1e-12));
    CHECK(post.mean[0] == Catch::Approx(4.0 / 4.001).epsilon(1e-12));
}

TEST_CASE("evidence of the empty model reduces to the log prior") {
    const Problem p = random_problem(30, 4, 33);
    const ParamPrior prior = ParamPrior::isotropic(1e3, 4);
    CHECK(log_model_evidence(p.gram, 0, prior, 1.3, 0.0).value == 0.0);
    CHECK(log_model_evidence(p.gram, 0, prior, 1.3, -2.5).value == -2.5);
}

TEST_CASE("evidence differences match the dense marginal likelihood") {
    const Problem p = random_problem(40, 5, 34);
    const ParamPrior prior = ParamPrior::isotropic(1e3, 5);
    Rng rng(35);
    for (int trial = 0; trial < 15; ++trial) {
        const ModelIndex m1 = rng.uniform_below(32);
        const ModelIndex m2 = rng.uniform_below(32);
        const double sigma2 = 0.5 + rng.uniform01() * 2.0;
        const double impl = log_model_evidence(p.gram, m1, prior, sigma2, 0.0).value -
                            log_model_evidence(p.gram, m2, prior, sigma2, 0.0).value;
        const double dense =
            dense_log_marginal(p, m1, prior, sigma2) - dense_log_marginal(p, m2, prior, sigma2);
        CHECK(impl == Catch::Approx(dense).margin(1e-8));
    }
}

TEST_CASE("exactly duplicated columns give exactly equal single-term evidence") {
    Problem p = random_problem(60, 4, 36);
    p.design.col(3) = p.design.col(1);
    p.gram = make_gram(p.design, p.y);
    const ParamPrior prior = ParamPrior::isotropic(1e3, 4);
    const double ev1 = log_model_evidence(p.gram, 0b0010, prior, 1.0, 0.0).value;
    const double ev3 = log_model_evidence(p.gram, 0b1000, prior, 1.0, 0.0).value;
    CHECK(ev1 == ev3);
}

TEST_CASE("residual sum of squares matches the direct norm") {
    const Problem p = random_problem(45, 6, 37);
    Rng rng(38);
    for (int trial = 0; trial < 10; ++trial) {
        const ModelIndex m = 1 + rng.uniform_below(63);
        const std::vector<int> idx = model_term_indices(m);
        Eigen::VectorXd coeffs(static_cast<Eigen::Index>(idx.size()));
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) coeffs[k] = rng.normal();
        const double direct = (p.y - restrict_cols(p.design, m) * coeffs).squaredNorm();
        CHECK(residual_sum_squares(p.gram, m, coeffs) ==
              Catch::Approx(direct).epsilon(1e-10));
    }
    CHECK(residual_sum_squares(p.gram, 0, Eigen::VectorXd()) ==
          Catch::Approx(p.y.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("posterior sampling reproduces mean and covariance") {
    const Problem p = random_problem(80, 3, 39);
    const ParamPrior prior = ParamPrior::isotropic(10.0, 3);
    const GaussianParamPosterior post = conjugate_update(p.gram, 0b111, prior, 1.0);
    Rng rng(40);
    const int n = 40000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = post.sample(rng);
        mean += x;
        second += x * x.transpose();
    }
    mean /= n;
    const Eigen::MatrixXd cov = second / n - mean * mean.transpose();
    const Eigen::MatrixXd truth = post.covariance();
    const double sd_scale = std::sqrt(truth.diagonal().maxCoeff());
    CHECK((mean - post.mean).cwiseAbs().maxCoeff() < 5.0 * sd_scale / std::sqrt(double(n)));
    CHECK((cov - truth).cwiseAbs().maxCoeff() < 0.05 * truth.diagonal().maxCoeff());
}

TEST_CASE("noise variance draws follow the conditional inverse-gamma moments") {
    Rng rng(41);
    const NoisePrior prior;  // improper limit
    const Eigen::Index n = 100;
    const double rss = 50.0;
    const double a = 0.5 * n;
    const double b = 0.5 * rss;
    const int draws = 100000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double s2 = gibbs_noise_update(prior, n, rss, rng);
        REQUIRE(s2 > 0.0);
        sum += s2;
    }
    const double mean = sum / draws;
    CHECK(std::abs(mean - b / (a - 1.0)) < 0.02 * b / (a - 1.0));
    CHECK_THROWS_AS(gibbs_noise_update(prior, 0, 0.0, rng), NumericalError);
}

TEST_CASE("informative noise prior shifts the conditional") {
    Rng rng(42);
    NoisePrior prior;
    prior.a0 = 3.0;
    prior.b0 = 4.0;
    const int draws = 100000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) sum += gibbs_noise_update(prior, 10, 2.0, rng);
    const double a = 3.0 + 5.0;
    const double b = 4.0 + 1.0;
    CHECK(std::abs(sum / draws - b / (a - 1.0)) < 0.03 * b / (a - 1.0));
}

TEST_CASE("diagonal jitter rescues a singular but semidefinite precision") {
    Eigen::MatrixXd singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    const Eigen::MatrixXd l = detail::robust_llt(singular, "test");
    CHECK(l.rows() == 2);

    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(detail::robust_llt(indefinite, "test"), NumericalError);
}

TEST_CASE("configuration errors are reported") {
    const Problem p = random_problem(10, 2, 43);
    CHECK_THROWS_AS(ParamPrior::isotropic(0.0, 2), ConfigError);
    const ParamPrior prior = ParamPrior::isotropic(1.0, 2);
    CHECK_THROWS_AS(conjugate_update(p.gram, 0b1, prior, 0.0), InputError);
    const ParamPrior wrong = ParamPrior::isotropic(1.0, 3);
    CHECK_THROWS_AS(conjugate_update(p.gram, 0b1, wrong, 1.0), ConfigError);
    Eigen::VectorXd short_y(5);
    CHECK_THROWS_AS(make_gram(p.design, short_y), InputError);
}
