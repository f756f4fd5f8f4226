#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bindy/errors.hpp"
#include "bindy/rng.hpp"

namespace bindy {

struct StlsqConfig {
    double threshold = 0.1;  // coefficients below this magnitude are pruned
    int max_sweeps = 20;
    double ridge = 1e-5;
};

namespace detail {

inline Eigen::VectorXd stlsq_solve_active(const Eigen::MatrixXd& gtg, const Eigen::VectorXd& gty,
                                          const std::vector<int>& active, double ridge) {
    const Eigen::Index d = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd g(d, d);
    Eigen::VectorXd b(d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index c = 0; c < d; ++c)
            g(a, c) = gtg(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(c)]);
        g(a, a) += ridge;
        b[a] = gty[active[static_cast<std::size_t>(a)]];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw NumericalError("stlsq: ridge-regularized normal equations are not positive definite");
    return llt.solve(b);
}

}  // namespace detail

/// Sequentially thresholded least squares on precomputed sufficient statistics.
/// Columns listed in `candidates` compete; everything else stays zero.  The
/// active set only shrinks, so the sweep count is bounded by the column count.
inline Eigen::VectorXd stlsq_gram(const Eigen::MatrixXd& gtg, const Eigen::VectorXd& gty,
                                  const std::vector<int>& candidates, const StlsqConfig& cfg) {
    if (!(cfg.threshold >= 0.0)) throw ConfigError("stlsq: threshold must be non-negative");
    if (!(cfg.ridge >= 0.0)) throw ConfigError("stlsq: ridge must be non-negative");
    if (cfg.max_sweeps < 1) throw ConfigError("stlsq: max_sweeps must be >= 1");

    std::vector<int> active = candidates;
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(gtg.rows());
    if (active.empty()) return coeffs;

    Eigen::VectorXd xi;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        xi = detail::stlsq_solve_active(gtg, gty, active, cfg.ridge);
        std::vector<int> survivors;
        survivors.reserve(active.size());
        for (std::size_t k = 0; k < active.size(); ++k)
            if (std::abs(xi[static_cast<Eigen::Index>(k)]) >= cfg.threshold)
                survivors.push_back(active[k]);
        if (survivors.size() == active.size()) break;
        active = std::move(survivors);
        if (active.empty()) return coeffs;
        xi = detail::stlsq_solve_active(gtg, gty, active, cfg.ridge);
    }
    for (std::size_t k = 0; k < active.size(); ++k)
        coeffs[active[k]] = xi[static_cast<Eigen::Index>(k)];
    return coeffs;
}

inline Eigen::VectorXd stlsq(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                             const StlsqConfig& cfg) {
    if (design.rows() != y.size()) throw InputError("stlsq: design and response row counts differ");
    std::vector<int> all(static_cast<std::size_t>(design.cols()));
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    return stlsq_gram(design.transpose() * design, design.transpose() * y, all, cfg);
}

struct EnsembleConfig {
    int n_members = 5000;
    bool data_bagging = true;     // bootstrap resample of the rows, size N
    bool library_bagging = true;  // drop candidate columns per member
    int n_candidates_dropped = 1;
    StlsqConfig stlsq;
    std::uint64_t seed = 0;
};

struct EnsembleResult {
    Eigen::MatrixXd member_coeffs;  // n_members x D, zeros for pruned or dropped terms
    Eigen::VectorXd inclusion;      // fraction of members with a nonzero coefficient
    Eigen::VectorXd mean;           // over all members, zeros included
    Eigen::VectorXd stddev;         // likewise, sample standard deviation
};

/// Bagged sequentially-thresholded regression.  Each member refits on a
/// bootstrap resample of the rows and, independently, a library with
/// `n_candidates_dropped` randomly removed columns; every fit is kept.
/// Member k draws from a generator seeded by (seed, k), so results do not
/// depend on evaluation order.
inline EnsembleResult ensemble_sindy(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                     const EnsembleConfig& cfg) {
    const Eigen::Index n = design.rows();
    const Eigen::Index d = design.cols();
    if (n != y.size()) throw InputError("ensemble_sindy: design and response row counts differ");
    if (cfg.n_members < 1) throw ConfigError("ensemble_sindy: n_members must be >= 1");
    if (cfg.library_bagging &&
        (cfg.n_candidates_dropped < 1 || cfg.n_candidates_dropped >= d))
        throw ConfigError("ensemble_sindy: n_candidates_dropped must leave at least one column");

    EnsembleResult out;
    out.member_coeffs.setZero(cfg.n_members, d);

    std::vector<int> counts(static_cast<std::size_t>(n));
    std::vector<char> dropped(static_cast<std::size_t>(d));
    for (int member = 0; member < cfg.n_members; ++member) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(member), 4));

        Eigen::MatrixXd gtg;
        Eigen::VectorXd gty;
        if (cfg.data_bagging) {
            std::fill(counts.begin(), counts.end(), 0);
            for (Eigen::Index i = 0; i < n; ++i)
                ++counts[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(n)))];
            Eigen::VectorXd w(n);
            for (Eigen::Index i = 0; i < n; ++i) w[i] = counts[static_cast<std::size_t>(i)];
            gtg = design.transpose() * w.asDiagonal() * design;
            gty = design.transpose() * w.cwiseProduct(y);
        } else {
            gtg = design.transpose() * design;
            gty = design.transpose() * y;
        }

        std::vector<int> candidates;
        candidates.reserve(static_cast<std::size_t>(d));
        if (cfg.library_bagging) {
            std::fill(dropped.begin(), dropped.end(), 0);
            for (int k = 0; k < cfg.n_candidates_dropped; ++k) {
                std::uint64_t j;
                do {
                    j = rng.uniform_below(static_cast<std::uint64_t>(d));
                } while (dropped[static_cast<std::size_t>(j)]);
                dropped[static_cast<std::size_t>(j)] = 1;
            }
            for (int j = 0; j < d; ++j)
                if (!dropped[static_cast<std::size_t>(j)]) candidates.push_back(j);
        } else {
            for (int j = 0; j < d; ++j) candidates.push_back(j);
        }

        out.member_coeffs.row(member) = stlsq_gram(gtg, gty, candidates, cfg.stlsq).transpose();
    }

    out.inclusion.resize(d);
    out.mean.resize(d);
    out.stddev.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto col = out.member_coeffs.col(j);
        out.inclusion[j] =
            static_cast<double>((col.array() != 0.0).count()) / static_cast<double>(cfg.n_members);
        out.mean[j] = col.mean();
        const double ss = (col.array() - out.mean[j]).square().sum();
        out.stddev[j] = cfg.n_members > 1 ? std::sqrt(ss / (cfg.n_members - 1)) : 0.0;
    }
    return out;
}

}  // namespace bindy
