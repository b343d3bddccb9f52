#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace morin::linalg {

constexpr std::size_t kMaxDim = 64;

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Mat identity(std::size_t n);
    static Mat from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Mat transpose() const;
    Mat operator*(const Mat& other) const;
    std::vector<double> apply(std::span<const double> x) const;
    Mat stack(const Mat& below) const;
    Mat select_rows(const std::vector<std::size_t>& idx) const;
    Mat select_cols(const std::vector<std::size_t>& idx) const;
    double frobenius() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct RankReport {
    std::size_t rank = 0;
    std::vector<double> singular_values;
    double tolerance_used = 0.0;
    // sigma_r / sigma_{r+1} below full rank; at full rank the margin sigma_min / (tol * sigma_max).
    double gap_ratio = 0.0;
};

struct Svd {
    Mat u;                       // rows x k, orthonormal columns
    std::vector<double> s;       // k = min(rows, cols), descending
    Mat v;                       // cols x k, orthonormal columns
};

struct LeastSquares {
    std::vector<double> solution;
    double residual_norm = 0.0;
    std::size_t rank = 0;
    double gap_ratio = 0.0;
    bool rank_deficient = false;
};

Svd svd(const Mat& a);
std::vector<double> singular_values(const Mat& a);
RankReport numeric_rank(const Mat& a, double tol);
double determinant(const Mat& a);
LeastSquares least_squares(const Mat& a, std::span<const double> b, double tol = 1e-12);
// Minimum-norm solution through the pseudo-inverse; singular values below rcond * sigma_max are dropped.
std::vector<double> min_norm_solve(const Mat& a, std::span<const double> b, double rcond = 1e-12);
// Orthonormal basis (as rows) of the null space of a, using the rank decision of numeric_rank.
Mat null_space(const Mat& a, double tol);
// Component of v orthogonal to the row space of a (rows need not be independent).
std::vector<double> project_out_rows(const Mat& a, std::span<const double> v, double tol);

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace morin::linalg
