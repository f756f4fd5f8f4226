#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

#include "bindy/errors.hpp"
#include "bindy/signal.hpp"
#include "bindy/term_library.hpp"

namespace bindy {

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

inline OdeRhs lorenz_rhs(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0) {
    return [=](double, const Eigen::VectorXd& x) {
        Eigen::VectorXd dx(3);
        dx[0] = sigma * (x[1] - x[0]);
        dx[1] = x[0] * (rho - x[2]) - x[1];
        dx[2] = x[0] * x[1] - beta * x[2];
        return dx;
    };
}

/// Two-species interaction model in the form
///   dx1/dt = c11 x1 + c12 x1 x2,   dx2/dt = c21 x2 + c22 x1 x2.
inline OdeRhs lotka_volterra_rhs(double c11, double c12, double c21, double c22) {
    return [=](double, const Eigen::VectorXd& x) {
        Eigen::VectorXd dx(2);
        dx[0] = c11 * x[0] + c12 * x[0] * x[1];
        dx[1] = c21 * x[1] + c22 * x[0] * x[1];
        return dx;
    };
}

/// A concrete dynamical system assembled from dictionary terms: one row of
/// `coefficients` per state equation, one column per term (zero = inactive).
/// Coefficients are in raw (unnormalized) term units.
struct DictionaryModel {
    std::vector<TermDescriptor> terms;
    Eigen::MatrixXd coefficients;  // S x D

    OdeRhs rhs() const {
        if (coefficients.cols() != static_cast<Eigen::Index>(terms.size()))
            throw InputError("DictionaryModel: coefficient columns do not match term count");
        return [model = *this](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return model.coefficients * evaluate_terms(model.terms, x);
        };
    }
};

inline constexpr double kDivergenceThreshold = 1e6;

struct IntegrationResult {
    TimeSeries series;
    bool diverged = false;
    int diverged_at = -1;  // first sample index past the threshold, -1 if none
};

/// Classical fourth-order Runge-Kutta on a fixed grid of `n_steps` steps.
/// Integration stops once the state leaves [-1e6, 1e6] or turns non-finite;
/// remaining rows are NaN and the result is flagged.
inline IntegrationResult rk4_integrate(const OdeRhs& rhs, const Eigen::VectorXd& x0, double dt,
                                       int n_steps, double t0 = 0.0) {
    if (!(dt > 0.0)) throw InputError("rk4_integrate: dt must be positive");
    if (n_steps < 1) throw InputError("rk4_integrate: n_steps must be >= 1");

    const Eigen::Index s = x0.size();
    IntegrationResult out;
    out.series.time.resize(n_steps + 1);
    out.series.values.setConstant(n_steps + 1, s, std::numeric_limits<double>::quiet_NaN());

    auto bad = [](const Eigen::VectorXd& x) {
        return !x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceThreshold;
    };

    for (int i = 0; i <= n_steps; ++i) out.series.time[i] = t0 + i * dt;
    Eigen::VectorXd x = x0;
    out.series.values.row(0) = x.transpose();
    if (bad(x)) {
        out.diverged = true;
        out.diverged_at = 0;
        return out;
    }
    for (int i = 0; i < n_steps; ++i) {
        const double t = out.series.time[i];
        const Eigen::VectorXd k1 = rhs(t, x);
        const Eigen::VectorXd k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = rhs(t + dt, x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (bad(x)) {
            out.diverged = true;
            out.diverged_at = i + 1;
            return out;
        }
        out.series.values.row(i + 1) = x.transpose();
    }
    return out;
}

}  // namespace bindy
