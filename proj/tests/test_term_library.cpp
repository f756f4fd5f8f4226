#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "bindy/errors.hpp"
#include "bindy/rng.hpp"
#include "bindy/term_library.hpp"

using namespace bindy;

namespace {

Eigen::MatrixXd random_states(Eigen::Index n, Eigen::Index s, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(n, s);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < s; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("two-variable quadratic dictionary is graded-lexicographic") {
    const Eigen::MatrixXd states = random_states(5, 2, 1);
    const TermLibrary lib = build_polynomial_library(states, 2, true);
    REQUIRE(lib.n_terms() == 6);
    CHECK(lib.terms[0].label == "1");
    CHECK(lib.terms[1].label == "x1");
    CHECK(lib.terms[2].label == "x2");
    CHECK(lib.terms[3].label == "x1^2");
    CHECK(lib.terms[4].label == "x1*x2");
    CHECK(lib.terms[5].label == "x2^2");
}

TEST_CASE("three-variable cubic dictionary has 20 ordered terms") {
    const Eigen::MatrixXd states = random_states(8, 3, 2);
    const TermLibrary lib = build_polynomial_library(states, 3, true);
    REQUIRE(lib.n_terms() == 20);
    const std::vector<std::string> expected = {
        "1",      "x1",      "x2",      "x3",      "x1^2",     "x1*x2",   "x1*x3",
        "x2^2",   "x2*x3",   "x3^2",    "x1^3",    "x1^2*x2",  "x1^2*x3", "x1*x2^2",
        "x1*x2*x3", "x1*x3^2", "x2^3",  "x2^2*x3", "x2*x3^2",  "x3^3"};
    for (std::size_t j = 0; j < expected.size(); ++j) CHECK(lib.terms[j].label == expected[j]);
}

TEST_CASE("design matrix matches direct monomial evaluation") {
    const Eigen::MatrixXd states = random_states(20, 3, 3);
    const TermLibrary lib = build_polynomial_library(states, 3, true);
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        const double x1 = states(i, 0), x2 = states(i, 1), x3 = states(i, 2);
        CHECK(lib.design(i, 0) == 1.0);
        CHECK(lib.design(i, 5) == Catch::Approx(x1 * x2).margin(1e-14));
        CHECK(lib.design(i, 14) == Catch::Approx(x1 * x2 * x3).margin(1e-14));
        CHECK(lib.design(i, 19) == Catch::Approx(x3 * x3 * x3).margin(1e-14));
        const Eigen::VectorXd row = evaluate_terms(lib.terms, states.row(i).transpose());
        CHECK((row.transpose() - lib.design.row(i)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("constant column can be excluded") {
    const Eigen::MatrixXd states = random_states(5, 2, 4);
    const TermLibrary lib = build_polynomial_library(states, 2, false);
    REQUIRE(lib.n_terms() == 5);
    CHECK(lib.terms[0].label == "x1");
}

TEST_CASE("bounded orthogonal basis matches the recurrence pointwise") {
    Eigen::VectorXd x(3);
    x << -1.0, 0.5, 1.0;
    const TermLibrary lib = build_legendre_library(x, 4);
    REQUIRE(lib.n_terms() == 4);
    CHECK(lib.terms[2].label == "P2");
    CHECK(lib.design(1, 0) == 1.0);
    CHECK(lib.design(1, 1) == 0.5);
    CHECK(lib.design(1, 2) == Catch::Approx(-0.125).margin(1e-15));
    CHECK(lib.design(1, 3) == Catch::Approx(-0.4375).margin(1e-15));
    CHECK(lib.design(0, 3) == Catch::Approx(-1.0).margin(1e-15));
    CHECK(lib.design(2, 3) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("bounded basis columns are numerically orthogonal on a fine grid") {
    const int n = 20001;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = -1.0 + 2.0 * i / (n - 1.0);
    const TermLibrary lib = build_legendre_library(x, 6);
    const double h = 2.0 / (n - 1.0);
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b) {
            const Eigen::VectorXd prod = lib.design.col(a).cwiseProduct(lib.design.col(b));
            // trapezoid rule: half weight at the interval endpoints
            const double dot = (prod.sum() - 0.5 * (prod[0] + prod[n - 1])) * h;
            CHECK(std::abs(dot) < 1e-6);
        }
}

TEST_CASE("out-of-range samples are rejected for the bounded basis") {
    Eigen::VectorXd x(2);
    x << 0.0, 1.5;
    CHECK_THROWS_AS(build_legendre_library(x, 3), InputError);
}

TEST_CASE("normalization yields unit sample deviation and is idempotent") {
    const Eigen::MatrixXd states = random_states(100, 2, 5);
    const TermLibrary lib = build_polynomial_library(states, 2, true);
    const TermLibrary norm = normalize_columns(lib);
    REQUIRE(norm.normalized);
    CHECK(norm.column_scales[0] == 1.0);  // constant column untouched
    CHECK(norm.design.col(0).isApproxToConstant(1.0));
    for (Eigen::Index j = 1; j < norm.n_terms(); ++j) {
        const double mean = norm.design.col(j).mean();
        const double sd = std::sqrt((norm.design.col(j).array() - mean).square().sum() /
                                    (norm.design.rows() - 1.0));
        CHECK(sd == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(norm.column_scales[j] > 0.0);
        CHECK((norm.design.col(j) * norm.column_scales[j]).isApprox(lib.design.col(j), 1e-12));
    }
    const TermLibrary again = normalize_columns(norm);
    CHECK(again.design.isApprox(norm.design, 0.0));
    CHECK(again.column_scales.isApprox(norm.column_scales, 0.0));
}

TEST_CASE("zero-variance non-constant column is reported by label") {
    Eigen::MatrixXd states(4, 2);
    states << 1.0, 0.5, 1.0, 0.7, 1.0, 0.2, 1.0, 0.9;  // x1 constant
    const TermLibrary lib = build_polynomial_library(states, 2, true);
    CHECK_THROWS_WITH(normalize_columns(lib), Catch::Matchers::ContainsSubstring("x1"));
}

TEST_CASE("denormalization maps coefficients back to raw units") {
    const Eigen::MatrixXd states = random_states(60, 2, 6);
    const TermLibrary norm = normalize_columns(build_polynomial_library(states, 2, true));
    Eigen::VectorXd coeffs(2);
    coeffs << 2.0, -3.0;
    const std::vector<int> idx = {1, 4};
    const Eigen::VectorXd raw = denormalize_coefficients(norm, coeffs, idx);
    CHECK(raw[0] == Catch::Approx(2.0 / norm.column_scales[1]));
    CHECK(raw[1] == Catch::Approx(-3.0 / norm.column_scales[4]));

    const TermLibrary plain = build_polynomial_library(states, 2, true);
    CHECK(denormalize_coefficients(plain, coeffs, idx).isApprox(coeffs, 0.0));
}

TEST_CASE("input validation") {
    const Eigen::MatrixXd states = random_states(5, 2, 7);
    CHECK_THROWS_AS(build_polynomial_library(states, 0, true), InputError);
    CHECK_THROWS_AS(build_polynomial_library(Eigen::MatrixXd(), 2, true), InputError);
    Eigen::MatrixXd nan_states = states;
    nan_states(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_polynomial_library(nan_states, 2, true), InputError);
    CHECK_THROWS_AS(build_legendre_library(Eigen::VectorXd(), 3), InputError);
}
