#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bindy/errors.hpp"

namespace bindy {

enum class BasisKind { Monomial, Legendre };

/// One candidate basis function: a monomial multi-index over the state variables,
/// or a Legendre polynomial of given degree (univariate problems).
struct TermDescriptor {
    std::vector<int> exponents;  // one entry per state variable; Legendre: {degree}
    std::string label;
    BasisKind kind = BasisKind::Monomial;

    int total_degree() const {
        int d = 0;
        for (int e : exponents) d += e;
        return d;
    }
    bool is_constant() const { return kind == BasisKind::Monomial && total_degree() == 0; }
};

/// A symbolic dictionary together with its evaluated design matrix (rows = samples,
/// columns = terms, in a deterministic graded-lexicographic order).
struct TermLibrary {
    std::vector<TermDescriptor> terms;
    Eigen::MatrixXd design;        // N x D
    bool normalized = false;
    Eigen::VectorXd column_scales; // D; identity when not normalized

    Eigen::Index n_terms() const { return static_cast<Eigen::Index>(terms.size()); }
};

namespace detail {

inline std::string monomial_label(const std::vector<int>& exps) {
    std::string out;
    for (std::size_t j = 0; j < exps.size(); ++j) {
        if (exps[j] == 0) continue;
        if (!out.empty()) out += "*";
        out += "x" + std::to_string(j + 1);
        if (exps[j] > 1) out += "^" + std::to_string(exps[j]);
    }
    return out.empty() ? "1" : out;
}

// Exponent tuples of total degree exactly `degree`, emitted in descending
// lexicographic order (earlier variables take the higher powers first).
inline void emit_degree(std::vector<int>& cur, std::size_t pos, int degree,
                        std::vector<std::vector<int>>& out) {
    if (pos + 1 == cur.size()) {
        cur[pos] = degree;
        out.push_back(cur);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        cur[pos] = e;
        emit_degree(cur, pos + 1, degree - e, out);
    }
    cur[pos] = 0;
}

inline double legendre_value(int degree, double x) {
    if (degree == 0) return 1.0;
    double pkm1 = 1.0, pk = x;
    for (int k = 1; k < degree; ++k) {
        const double pkp1 = ((2.0 * k + 1.0) * x * pk - k * pkm1) / (k + 1.0);
        pkm1 = pk;
        pk = pkp1;
    }
    return pk;
}

}  // namespace detail

/// Evaluate a term list at one state point.
inline Eigen::VectorXd evaluate_terms(const std::vector<TermDescriptor>& terms,
                                      const Eigen::VectorXd& state) {
    if (!state.allFinite()) throw InputError("evaluate_terms: non-finite state");
    Eigen::VectorXd out(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const TermDescriptor& t = terms[i];
        if (t.kind == BasisKind::Legendre) {
            out[static_cast<Eigen::Index>(i)] = detail::legendre_value(t.exponents.at(0), state[0]);
            continue;
        }
        double v = 1.0;
        for (std::size_t j = 0; j < t.exponents.size(); ++j) {
            for (int e = 0; e < t.exponents[j]; ++e) v *= state[static_cast<Eigen::Index>(j)];
        }
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

/// All monomials of total degree <= max_degree over the columns of `states`,
/// graded-lexicographic, constant first (iff include_constant).
inline TermLibrary build_polynomial_library(const Eigen::MatrixXd& states, int max_degree,
                                            bool include_constant) {
    if (max_degree < 1) throw InputError("build_polynomial_library: max_degree must be >= 1");
    if (states.rows() < 1 || states.cols() < 1)
        throw InputError("build_polynomial_library: empty state matrix");
    if (!states.allFinite()) throw InputError("build_polynomial_library: non-finite state values");

    const std::size_t S = static_cast<std::size_t>(states.cols());
    std::vector<std::vector<int>> exps;
    std::vector<int> cur(S, 0);
    for (int g = include_constant ? 0 : 1; g <= max_degree; ++g)
        detail::emit_degree(cur, 0, g, exps);

    TermLibrary lib;
    lib.terms.reserve(exps.size());
    for (auto& e : exps)
        lib.terms.push_back({e, detail::monomial_label(e), BasisKind::Monomial});

    const Eigen::Index N = states.rows();
    const Eigen::Index D = static_cast<Eigen::Index>(lib.terms.size());
    lib.design.resize(N, D);
    for (Eigen::Index i = 0; i < N; ++i)
        lib.design.row(i) = evaluate_terms(lib.terms, states.row(i).transpose()).transpose();
    lib.column_scales = Eigen::VectorXd::Ones(D);
    return lib;
}

/// First n_terms Legendre polynomials P_0..P_{n-1} evaluated on x in [-1, 1].
inline TermLibrary build_legendre_library(const Eigen::VectorXd& x, int n_terms) {
    if (n_terms < 1) throw InputError("build_legendre_library: n_terms must be >= 1");
    if (x.size() < 1) throw InputError("build_legendre_library: empty sample vector");
    if (!x.allFinite() || x.minCoeff() < -1.0 || x.maxCoeff() > 1.0)
        throw InputError("build_legendre_library: samples must lie in [-1, 1]");

    TermLibrary lib;
    lib.terms.reserve(static_cast<std::size_t>(n_terms));
    for (int k = 0; k < n_terms; ++k)
        lib.terms.push_back({{k}, "P" + std::to_string(k), BasisKind::Legendre});

    const Eigen::Index N = x.size();
    lib.design.resize(N, n_terms);
    // three-term recurrence column by column
    lib.design.col(0).setOnes();
    if (n_terms > 1) lib.design.col(1) = x;
    for (int k = 1; k + 1 < n_terms; ++k)
        lib.design.col(k + 1) =
            ((2.0 * k + 1.0) * x.array() * lib.design.col(k).array() -
             static_cast<double>(k) * lib.design.col(k - 1).array()) /
            (k + 1.0);
    lib.column_scales = Eigen::VectorXd::Ones(n_terms);
    return lib;
}

/// Rescale each column to unit sample standard deviation, recording the original
/// scales so fitted coefficients can be mapped back to raw units.  The constant
/// column (sample std zero by construction) keeps scale 1.
inline TermLibrary normalize_columns(const TermLibrary& lib) {
    if (lib.normalized) return lib;  // idempotent
    const Eigen::Index N = lib.design.rows();
    const Eigen::Index D = lib.design.cols();

    TermLibrary out = lib;
    out.normalized = true;
    out.column_scales.resize(D);
    for (Eigen::Index j = 0; j < D; ++j) {
        const double mean = lib.design.col(j).mean();
        const double ss = (lib.design.col(j).array() - mean).square().sum();
        const double sd = N > 1 ? std::sqrt(ss / static_cast<double>(N - 1)) : 0.0;
        if (sd <= 0.0) {
            if (!lib.terms[static_cast<std::size_t>(j)].is_constant())
                throw InputError("normalize_columns: zero-variance column for term '" +
                                 lib.terms[static_cast<std::size_t>(j)].label + "'");
            out.column_scales[j] = 1.0;
            continue;
        }
        out.column_scales[j] = sd;
        out.design.col(j) /= sd;
    }
    return out;
}

/// Map coefficients fitted against the normalized design back to raw-library units.
inline Eigen::VectorXd denormalize_coefficients(const TermLibrary& lib,
                                                const Eigen::VectorXd& coeffs,
                                                const std::vector<int>& term_indices) {
    Eigen::VectorXd out = coeffs;
    if (!lib.normalized) return out;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] /= lib.column_scales[term_indices[static_cast<std::size_t>(i)]];
    return out;
}

}  // namespace bindy
