#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bindy/errors.hpp"
#include "bindy/rng.hpp"

namespace bindy {

/// Uniformly sampled multichannel signal: row i of `values` is the state at
/// `time[i]`.
struct TimeSeries {
    Eigen::VectorXd time;    // N
    Eigen::MatrixXd values;  // N x S

    Eigen::Index n_samples() const { return time.size(); }
    Eigen::Index n_channels() const { return values.cols(); }
};

namespace detail {

inline double uniform_step(const Eigen::VectorXd& t) {
    if (t.size() < 2) throw InputError("signal: at least two samples required");
    const double h = (t[t.size() - 1] - t[0]) / static_cast<double>(t.size() - 1);
    if (!(h > 0.0)) throw InputError("signal: time must be strictly increasing");
    for (Eigen::Index i = 1; i < t.size(); ++i)
        if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw InputError("signal: non-uniform sampling grid");
    return h;
}

}  // namespace detail

/// Add iid Gaussian noise at `fraction` of each channel's root-mean-square
/// level: uncentered by default, or the centered RMS (the channel standard
/// deviation) when `centered` is set.  Draws are consumed channel by channel,
/// then sample by sample, so results are reproducible for a fixed generator
/// state.
inline TimeSeries add_rms_noise(const TimeSeries& series, double fraction, Rng& rng,
                                bool centered = false) {
    if (fraction < 0.0) throw InputError("add_rms_noise: fraction must be non-negative");
    TimeSeries out = series;
    const Eigen::Index n = series.values.rows();
    for (Eigen::Index j = 0; j < series.values.cols(); ++j) {
        const double mean = centered ? series.values.col(j).mean() : 0.0;
        const double rms = std::sqrt(
            (series.values.col(j).array() - mean).square().sum() / static_cast<double>(n));
        const double sd = fraction * rms;
        for (Eigen::Index i = 0; i < n; ++i) out.values(i, j) += sd * rng.normal();
    }
    return out;
}

struct SmoothedFDConfig {
    int window = 5;            // odd, >= 3
    int poly_order = 3;        // >= 1, < window
    int difference_order = 2;  // accuracy order of the difference stage, 2 or 4
    int trim = -1;             // samples dropped at each end; -1 = 2*difference_order + 1
};

/// Derivatives restricted to the retained sample range after boundary trimming.
/// `kept_indices[i]` is the row of the input series that `derivatives.row(i)`
/// (and any downstream regression row) refers to.  `smoothed` holds the state
/// estimate the differences were taken on, over the full input grid.
struct DerivativeEstimate {
    Eigen::MatrixXd derivatives;   // N_kept x S
    Eigen::MatrixXd smoothed;      // N x S
    std::vector<int> kept_indices; // ascending, into the original series
};

/// Polynomial-smoothed finite differences: a Savitzky-Golay value filter
/// (least-squares polynomial of order `poly_order` over each sliding window,
/// evaluated at the sample; boundary samples are fit on shifted windows)
/// followed by a central finite difference of accuracy order
/// `difference_order` on the smoothed signal.  For window 5 and order 3 the
/// smoothing kernel is [-3, 12, 17, 12, -3] / 35.  Samples too close to an
/// end for the central stencil use one-sided stencils of the same order; the
/// default trim of 2*difference_order + 1 removes them.
inline DerivativeEstimate smoothed_finite_difference(const TimeSeries& series,
                                                     const SmoothedFDConfig& cfg) {
    const int w = cfg.window;
    const int p = cfg.poly_order;
    if (w < 3 || w % 2 == 0) throw ConfigError("smoothed_finite_difference: window must be odd and >= 3");
    if (p < 1 || p >= w) throw ConfigError("smoothed_finite_difference: poly_order must be in [1, window)");
    if (cfg.difference_order != 2 && cfg.difference_order != 4)
        throw ConfigError("smoothed_finite_difference: difference_order must be 2 or 4");
    const int trim = cfg.trim < 0 ? 2 * cfg.difference_order + 1 : cfg.trim;

    const Eigen::Index n = series.n_samples();
    if (n < w) throw InputError("smoothed_finite_difference: series shorter than window");
    if (n < cfg.difference_order + 1)
        throw InputError("smoothed_finite_difference: series shorter than the difference stencil");
    if (2 * static_cast<Eigen::Index>(trim) >= n)
        throw InputError("smoothed_finite_difference: trim leaves no samples");
    const double h = detail::uniform_step(series.time);
    const int half = w / 2;

    // Value stencils of the local fit in integer window coordinates
    // u = -half..half.  One stencil per in-window offset covers both the
    // interior (offset = half) and the shifted boundary windows.
    Eigen::MatrixXd vand(w, p + 1);
    for (int r = 0; r < w; ++r)
        for (int q = 0; q <= p; ++q)
            vand(r, q) = std::pow(static_cast<double>(r - half), q);
    const Eigen::MatrixXd pinv =
        vand.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(w, w));

    Eigen::MatrixXd stencil(w, w);  // row o: smoothed-value weights at offset o
    for (int o = 0; o < w; ++o) {
        const double u = static_cast<double>(o - half);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(w);
        for (int q = 0; q <= p; ++q)
            row += std::pow(u, q) * pinv.row(q);
        stencil.row(o) = row;
    }

    Eigen::MatrixXd smoothed(n, series.n_channels());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index start = std::clamp<Eigen::Index>(i - half, 0, n - w);
        const int offset = static_cast<int>(i - start);
        smoothed.row(i) = stencil.row(offset) * series.values.middleRows(start, w);
    }

    const Eigen::MatrixXd& f = smoothed;
    Eigen::MatrixXd all(n, series.n_channels());
    if (cfg.difference_order == 2) {
        all.row(0) = (-3.0 * f.row(0) + 4.0 * f.row(1) - f.row(2)) / (2.0 * h);
        for (Eigen::Index i = 1; i + 1 < n; ++i)
            all.row(i) = (f.row(i + 1) - f.row(i - 1)) / (2.0 * h);
        all.row(n - 1) = (3.0 * f.row(n - 1) - 4.0 * f.row(n - 2) + f.row(n - 3)) / (2.0 * h);
    } else {
        all.row(0) = (-25.0 * f.row(0) + 48.0 * f.row(1) - 36.0 * f.row(2) + 16.0 * f.row(3) -
                      3.0 * f.row(4)) /
                     (12.0 * h);
        all.row(1) = (-3.0 * f.row(0) - 10.0 * f.row(1) + 18.0 * f.row(2) - 6.0 * f.row(3) +
                      f.row(4)) /
                     (12.0 * h);
        for (Eigen::Index i = 2; i + 2 < n; ++i)
            all.row(i) =
                (f.row(i - 2) - 8.0 * f.row(i - 1) + 8.0 * f.row(i + 1) - f.row(i + 2)) /
                (12.0 * h);
        all.row(n - 2) = (3.0 * f.row(n - 1) + 10.0 * f.row(n - 2) - 18.0 * f.row(n - 3) +
                          6.0 * f.row(n - 4) - f.row(n - 5)) /
                         (12.0 * h);
        all.row(n - 1) = (25.0 * f.row(n - 1) - 48.0 * f.row(n - 2) + 36.0 * f.row(n - 3) -
                          16.0 * f.row(n - 4) + 3.0 * f.row(n - 5)) /
                         (12.0 * h);
    }

    DerivativeEstimate est;
    est.derivatives = all.middleRows(trim, n - 2 * trim);
    est.smoothed = std::move(smoothed);
    est.kept_indices.reserve(static_cast<std::size_t>(n - 2 * trim));
    for (Eigen::Index i = trim; i < n - trim; ++i) est.kept_indices.push_back(static_cast<int>(i));
    return est;
}

/// Second-order central differences with one-sided second-order stencils at
/// the two endpoints.  No samples are dropped.
inline DerivativeEstimate central_difference(const TimeSeries& series) {
    const Eigen::Index n = series.n_samples();
    if (n < 3) throw InputError("central_difference: at least three samples required");
    const double h = detail::uniform_step(series.time);
    const Eigen::MatrixXd& x = series.values;

    DerivativeEstimate est;
    est.derivatives.resize(n, series.n_channels());
    est.derivatives.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) / (2.0 * h);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        est.derivatives.row(i) = (x.row(i + 1) - x.row(i - 1)) / (2.0 * h);
    est.derivatives.row(n - 1) = (3.0 * x.row(n - 1) - 4.0 * x.row(n - 2) + x.row(n - 3)) / (2.0 * h);
    est.smoothed = x;
    est.kept_indices.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) est.kept_indices.push_back(static_cast<int>(i));
    return est;
}

}  // namespace bindy
