#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "bindy/errors.hpp"
#include "bindy/rng.hpp"
#include "bindy/signal.hpp"

using namespace bindy;

namespace {

TimeSeries cubic_series(int n, double h) {
    TimeSeries s;
    s.time.resize(n);
    s.values.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        s.time[i] = t;
        s.values(i, 0) = 2.0 - 3.0 * t + 0.5 * t * t + 0.25 * t * t * t;
        s.values(i, 1) = -1.0 + 4.0 * t - 2.0 * t * t + 1.5 * t * t * t;
    }
    return s;
}

Eigen::MatrixXd cubic_derivs(const TimeSeries& s) {
    Eigen::MatrixXd d(s.n_samples(), 2);
    for (Eigen::Index i = 0; i < s.n_samples(); ++i) {
        const double t = s.time[i];
        d(i, 0) = -3.0 + 1.0 * t + 0.75 * t * t;
        d(i, 1) = 4.0 - 4.0 * t + 4.5 * t * t;
    }
    return d;
}

}  // namespace

TEST_CASE("smoothing preserves cubics exactly, including boundary windows") {
    const TimeSeries s = cubic_series(50, 0.01);
    SmoothedFDConfig cfg;
    cfg.trim = 0;
    const DerivativeEstimate est = smoothed_finite_difference(s, cfg);
    REQUIRE(est.smoothed.rows() == 50);
    for (Eigen::Index i = 0; i < 50; ++i) {
        CHECK(std::abs(est.smoothed(i, 0) - s.values(i, 0)) < 1e-11);
        CHECK(std::abs(est.smoothed(i, 1) - s.values(i, 1)) < 1e-11);
    }
}

TEST_CASE("fourth-order differencing of the smoothed signal is exact on cubics") {
    const TimeSeries s = cubic_series(50, 0.01);
    const Eigen::MatrixXd truth = cubic_derivs(s);

    SmoothedFDConfig cfg;
    cfg.difference_order = 4;
    cfg.trim = 0;  // expose the one-sided boundary stencils
    const DerivativeEstimate est = smoothed_finite_difference(s, cfg);
    REQUIRE(est.kept_indices.size() == 50);
    for (Eigen::Index i = 0; i < 50; ++i) {
        CHECK(std::abs(est.derivatives(i, 0) - truth(i, 0)) < 1e-9);
        CHECK(std::abs(est.derivatives(i, 1) - truth(i, 1)) < 1e-9);
    }
}

TEST_CASE("second-order differencing carries the classical truncation error") {
    const TimeSeries s = cubic_series(50, 0.01);
    const Eigen::MatrixXd truth = cubic_derivs(s);
    const DerivativeEstimate est = smoothed_finite_difference(s, {});
    // (h^2 / 6) * f''' with f''' = 1.5 and 9.0 for the two channels
    const double h2 = 0.01 * 0.01;
    for (std::size_t k = 0; k < est.kept_indices.size(); ++k) {
        const Eigen::Index i = est.kept_indices[k];
        const Eigen::Index r = static_cast<Eigen::Index>(k);
        CHECK(est.derivatives(r, 0) - truth(i, 0) == Catch::Approx(h2 * 1.5 / 6.0).margin(1e-10));
        CHECK(est.derivatives(r, 1) - truth(i, 1) == Catch::Approx(h2 * 9.0 / 6.0).margin(1e-10));
    }
}

TEST_CASE("interior response for window 5 order 3 is the differenced smoothing kernel") {
    const int n = 11;
    const double h = 0.1;
    // [-3, 12, 17, 12, -3] / 35 convolved with the central difference
    const double expected[7] = {3.0, -12.0, -20.0, 0.0, 20.0, 12.0, -3.0};
    for (int k = 0; k < n; ++k) {
        TimeSeries s;
        s.time.resize(n);
        s.values = Eigen::MatrixXd::Zero(n, 1);
        for (int i = 0; i < n; ++i) s.time[i] = i * h;
        s.values(k, 0) = 1.0;
        const DerivativeEstimate est = smoothed_finite_difference(s, {});
        REQUIRE(est.kept_indices == std::vector<int>{5});
        const double w = (k >= 2 && k <= 8) ? expected[k - 2] / (70.0 * h) : 0.0;
        CHECK(est.derivatives(0, 0) == Catch::Approx(w).margin(1e-12));
    }
}

TEST_CASE("default trim follows the difference order") {
    const TimeSeries s = cubic_series(40, 0.05);
    const DerivativeEstimate est = smoothed_finite_difference(s, {});
    REQUIRE(est.kept_indices.size() == 30);
    CHECK(est.kept_indices.front() == 5);
    CHECK(est.kept_indices.back() == 34);

    SmoothedFDConfig cfg;
    cfg.difference_order = 4;
    const DerivativeEstimate est4 = smoothed_finite_difference(s, cfg);
    CHECK(est4.kept_indices.front() == 9);

    cfg.difference_order = 2;
    cfg.trim = 2;
    const DerivativeEstimate est2 = smoothed_finite_difference(s, cfg);
    CHECK(est2.kept_indices.front() == 2);
}

TEST_CASE("smoothing attenuates noise relative to raw differencing") {
    Rng rng(51);
    const int n = 2001;
    const double h = 0.01;
    TimeSeries s;
    s.time.resize(n);
    s.values.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        s.time[i] = i * h;
        s.values(i, 0) = std::sin(s.time[i]) + 0.01 * rng.normal();
    }
    const DerivativeEstimate sg = smoothed_finite_difference(s, {});
    const DerivativeEstimate cd = central_difference(s);
    double sg_err = 0.0, cd_err = 0.0;
    for (std::size_t k = 0; k < sg.kept_indices.size(); ++k) {
        const int i = sg.kept_indices[k];
        const double truth = std::cos(s.time[i]);
        sg_err += std::pow(sg.derivatives(static_cast<Eigen::Index>(k), 0) - truth, 2);
        cd_err += std::pow(cd.derivatives(i, 0) - truth, 2);
    }
    CHECK(sg_err < cd_err);
}

TEST_CASE("central differences are exact on quadratics everywhere") {
    const int n = 30;
    const double h = 0.1;
    TimeSeries s;
    s.time.resize(n);
    s.values.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        s.time[i] = t;
        s.values(i, 0) = 1.0 + 2.0 * t - 3.0 * t * t;
    }
    const DerivativeEstimate est = central_difference(s);
    REQUIRE(est.kept_indices.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        CHECK(est.derivatives(i, 0) == Catch::Approx(2.0 - 6.0 * s.time[i]).margin(1e-10));
}

TEST_CASE("central differences have the expected cubic truncation error") {
    const int n = 21;
    const double h = 0.1;
    TimeSeries s;
    s.time.resize(n);
    s.values.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        s.time[i] = t;
        s.values(i, 0) = t * t * t;
    }
    const DerivativeEstimate est = central_difference(s);
    for (int i = 1; i + 1 < n; ++i) {
        const double t = s.time[i];
        CHECK(est.derivatives(i, 0) == Catch::Approx(3.0 * t * t + h * h).margin(1e-10));
    }
}

TEST_CASE("noise injection scales with the uncentered channel RMS") {
    const int n = 20000;
    TimeSeries s;
    s.time.resize(n);
    s.values.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        s.time[i] = i * 0.01;
        s.values(i, 0) = 5.0;  // constant channel: RMS is 5
        s.values(i, 1) = std::sin(s.time[i]);
    }
    Rng rng(52);
    const TimeSeries noisy = add_rms_noise(s, 0.1, rng);
    const Eigen::VectorXd delta0 = noisy.values.col(0) - s.values.col(0);
    const double sd0 = std::sqrt(delta0.squaredNorm() / n);
    CHECK(sd0 == Catch::Approx(0.1 * 5.0).epsilon(0.03));
    CHECK(std::abs(delta0.mean()) < 5.0 * 0.5 / std::sqrt(double(n)));

    const double rms1 = std::sqrt(s.values.col(1).squaredNorm() / n);
    const Eigen::VectorXd delta1 = noisy.values.col(1) - s.values.col(1);
    CHECK(std::sqrt(delta1.squaredNorm() / n) == Catch::Approx(0.1 * rms1).epsilon(0.03));

    Rng rng_a(53), rng_b(53);
    const TimeSeries n1 = add_rms_noise(s, 0.1, rng_a);
    const TimeSeries n2 = add_rms_noise(s, 0.1, rng_b);
    CHECK(n1.values.isApprox(n2.values, 0.0));
}

TEST_CASE("centered noise injection scales with the channel standard deviation") {
    const int n = 20000;
    TimeSeries s;
    s.time.resize(n);
    s.values.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        s.time[i] = i * 0.01;
        s.values(i, 0) = 5.0;  // constant channel: the spread is zero
        s.values(i, 1) = 3.0 + std::sin(s.time[i]);
    }
    Rng rng(54);
    const TimeSeries noisy = add_rms_noise(s, 0.1, rng, /*centered=*/true);
    CHECK(noisy.values.col(0) == s.values.col(0));

    const double mean1 = s.values.col(1).mean();
    const double sd1 = std::sqrt((s.values.col(1).array() - mean1).square().mean());
    const Eigen::VectorXd delta1 = noisy.values.col(1) - s.values.col(1);
    CHECK(std::sqrt(delta1.squaredNorm() / n) == Catch::Approx(0.1 * sd1).epsilon(0.03));
}

TEST_CASE("input validation") {
    TimeSeries s = cubic_series(10, 0.1);
    SmoothedFDConfig cfg;

    cfg.window = 4;
    CHECK_THROWS_AS(smoothed_finite_difference(s, cfg), ConfigError);
    cfg.window = 5;
    cfg.poly_order = 5;
    CHECK_THROWS_AS(smoothed_finite_difference(s, cfg), ConfigError);
    cfg.poly_order = 3;
    cfg.difference_order = 3;
    CHECK_THROWS_AS(smoothed_finite_difference(s, cfg), ConfigError);
    cfg.difference_order = 2;
    cfg.trim = 5;
    CHECK_THROWS_AS(smoothed_finite_difference(s, cfg), InputError);  // nothing kept

    TimeSeries tiny = cubic_series(4, 0.1);
    CHECK_THROWS_AS(smoothed_finite_difference(tiny, {}), InputError);

    TimeSeries uneven = cubic_series(10, 0.1);
    uneven.time[5] += 0.03;
    CHECK_THROWS_AS(central_difference(uneven), InputError);

    Rng rng(1);
    CHECK_THROWS_AS(add_rms_noise(s, -0.1, rng), InputError);
}
