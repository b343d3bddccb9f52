#include "morin/linalg.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace morin::linalg;

namespace {

Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

// Rank-k product of random factors.
Mat random_rank(std::size_t r, std::size_t c, std::size_t k, std::mt19937_64& rng) {
    return random_mat(r, k, rng) * random_mat(k, c, rng);
}

}  // namespace

TEST_CASE("rank examples") {
    // Columns V1 = (-2 x2, 2 x1, 0), V2 = (-2 x3, 0, 2 x1) at (0, 1, 0).
    Mat v = Mat::from_rows({{-2, 0}, {0, 0}, {0, 0}});
    CHECK(numeric_rank(v, 1e-8).rank == 1);
    CHECK(numeric_rank(Mat::identity(3), 1e-8).rank == 3);
    RankReport r = numeric_rank(Mat::from_rows({{1, 2}, {2, 4}}), 1e-8);
    CHECK(r.rank == 1);
    CHECK(r.singular_values.size() == 2);
    CHECK(r.singular_values[0] >= r.singular_values[1]);
    CHECK(r.gap_ratio > 1e10);
    CHECK(numeric_rank(Mat(3, 2), 1e-8).rank == 0);
}

TEST_CASE("full rank gap ratio measures the margin above the threshold") {
    Mat m = Mat::from_rows({{1, 0}, {0, 1e-4}});
    RankReport r = numeric_rank(m, 1e-8);
    CHECK(r.rank == 2);
    CHECK(r.gap_ratio == doctest::Approx(1e4));
}

TEST_CASE("determinant examples") {
    // rows: grad f, grad f_x1, grad(2 x3) at (1, 2, 0) for f = x1^2 - x1 x2 + x3^2
    Mat m = Mat::from_rows({{2 * 1 - 2, -1, 0}, {2, -1, 0}, {0, 0, 2}});
    CHECK(determinant(m) == doctest::Approx(4.0));
    CHECK(determinant(Mat::identity(4)) == 1.0);
    CHECK(determinant(Mat::from_rows({{1, 2}, {3, 4}})) == doctest::Approx(-2.0));
    CHECK(determinant(Mat::from_rows({{0, 1}, {1, 0}})) == doctest::Approx(-1.0));
    CHECK_THROWS(determinant(Mat(2, 3)));
}

TEST_CASE("svd reconstructs and is orthonormal") {
    std::mt19937_64 rng(1);
    for (auto [r, c] : std::vector<std::pair<int, int>>{{5, 3}, {3, 5}, {4, 4}, {1, 3}}) {
        Mat a = random_mat(r, c, rng);
        Svd d = svd(a);
        std::size_t k = std::min(r, c);
        REQUIRE(d.s.size() == k);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
                double s = 0;
                for (std::size_t t = 0; t < k; ++t) s += d.u(i, t) * d.s[t] * d.v(j, t);
                CHECK(s == doctest::Approx(a(i, j)).epsilon(1e-12));
            }
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t q = 0; q < k; ++q) {
                double s = 0;
                for (int j = 0; j < c; ++j) s += d.v(j, p) * d.v(j, q);
                CHECK(std::abs(s - (p == q ? 1.0 : 0.0)) < 1e-12);
            }
    }
}

TEST_CASE("rank is invariant under permutations and moderate scaling") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t k = 1 + static_cast<std::size_t>(trial % 4);
        Mat a = random_rank(5, 4, k, rng);
        std::size_t base = numeric_rank(a, 1e-8).rank;
        CHECK(base == k);
        std::vector<std::size_t> rows{0, 1, 2, 3, 4};
        std::vector<std::size_t> cols{0, 1, 2, 3};
        std::shuffle(rows.begin(), rows.end(), rng);
        std::shuffle(cols.begin(), cols.end(), rng);
        CHECK(numeric_rank(a.select_rows(rows).select_cols(cols), 1e-8).rank == base);
        for (double s : {1e-3, 0.5, 1e3}) {
            Mat b = a;
            for (std::size_t i = 0; i < 5; ++i)
                for (std::size_t j = 0; j < 4; ++j) b(i, j) *= s;
            CHECK(numeric_rank(b, 1e-8).rank == base);
        }
    }
}

TEST_CASE("determinant is multiplicative") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Mat a = random_mat(5, 5, rng);
        Mat b = random_mat(5, 5, rng);
        double lhs = determinant(a * b);
        double rhs = determinant(a) * determinant(b);
        CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("least squares") {
    std::vector<double> b{1.5, -2, 7};
    LeastSquares id = least_squares(Mat::identity(3), b);
    for (int i = 0; i < 3; ++i) CHECK(id.solution[i] == doctest::Approx(b[i]));
    CHECK(id.residual_norm <= 1e-14);
    CHECK_FALSE(id.rank_deficient);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 30; ++trial) {
        Mat a = random_mat(7, 3, rng);
        std::vector<double> s{g(rng), g(rng), g(rng)};
        std::vector<double> rhs = a.apply(s);
        LeastSquares ls = least_squares(a, rhs);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(ls.solution[i] - s[i]) <= 1e-8);
        CHECK(ls.residual_norm <= 1e-10);
    }

    Mat deficient = Mat::from_rows({{1, 2}, {2, 4}, {3, 6}});
    LeastSquares d = least_squares(deficient, std::vector<double>{1, 2, 3});
    CHECK(d.rank_deficient);
    CHECK(d.residual_norm <= 1e-10);

    Mat incons = Mat::from_rows({{1}, {1}});
    LeastSquares avg = least_squares(incons, std::vector<double>{0, 2});
    CHECK(avg.solution[0] == doctest::Approx(1.0));
    CHECK(avg.residual_norm == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("minimum norm solve and null space") {
    Mat a = Mat::from_rows({{1, 1, 0}, {0, 1, 1}});
    std::vector<double> b{2, 3};
    std::vector<double> x = min_norm_solve(a, b);
    // closed form A^T (A A^T)^{-1} b with A A^T = [[2,1],[1,2]]
    double y0 = (2 * b[0] - b[1]) / 3.0;
    double y1 = (2 * b[1] - b[0]) / 3.0;
    CHECK(x[0] == doctest::Approx(y0));
    CHECK(x[1] == doctest::Approx(y0 + y1));
    CHECK(x[2] == doctest::Approx(y1));

    Mat ns = null_space(a, 1e-8);
    REQUIRE(ns.rows() == 1);
    std::vector<double> v(ns.row(0).begin(), ns.row(0).end());
    CHECK(norm(v) == doctest::Approx(1.0));
    for (double r : a.apply(v)) CHECK(std::abs(r) < 1e-12);

    std::vector<double> w{1, 2, 3};
    std::vector<double> p = project_out_rows(a, w, 1e-8);
    for (double r : a.apply(p)) CHECK(std::abs(r) < 1e-12);
}
