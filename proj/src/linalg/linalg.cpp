#include "morin/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace morin::linalg {

Mat::Mat(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    assert(rows <= kMaxDim && cols <= kMaxDim);
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
    std::size_t c = rows.empty() ? 0 : rows.front().size();
    Mat m(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != c) throw std::invalid_argument("Mat::from_rows: ragged rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat Mat::operator*(const Mat& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("Mat::operator*: shape mismatch");
    Mat r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            double a = (*this)(i, k);
            for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
        }
    return r;
}

std::vector<double> Mat::apply(std::span<const double> x) const {
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) y[i] = dot(row(i), x);
    return y;
}

Mat Mat::stack(const Mat& below) const {
    if (rows_ == 0) return below;
    if (below.rows_ == 0) return *this;
    if (cols_ != below.cols_) throw std::invalid_argument("Mat::stack: column mismatch");
    Mat r(rows_ + below.rows_, cols_);
    std::copy(data_.begin(), data_.end(), r.data_.begin());
    std::copy(below.data_.begin(), below.data_.end(), r.data_.begin() + static_cast<std::ptrdiff_t>(data_.size()));
    return r;
}

Mat Mat::select_rows(const std::vector<std::size_t>& idx) const {
    Mat r(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) std::copy(row(idx[i]).begin(), row(idx[i]).end(), r.row(i).begin());
    return r;
}

Mat Mat::select_cols(const std::vector<std::size_t>& idx) const {
    Mat r(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) r(i, j) = (*this)(i, idx[j]);
    return r;
}

double Mat::frobenius() const { return norm(data_); }

double norm(std::span<const double> v) {
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x / scale) * (x / scale);
    return scale * std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols); v is cols x cols.
void jacobi(Mat& w, Mat& v) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    v = Mat::identity(n);
    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += w(i, p) * w(i, p);
                    beta += w(i, q) * w(i, q);
                    gamma += w(i, p) * w(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    double a = w(i, p), b = w(i, q);
                    w(i, p) = c * a - s * b;
                    w(i, q) = s * a + c * b;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double a = v(i, p), b = v(i, q);
                    v(i, p) = c * a - s * b;
                    v(i, q) = s * a + c * b;
                }
            }
        }
        if (!rotated) break;
    }
}

struct FullSvd {
    Mat u;
    std::vector<double> s;
    Mat v;
};

// Tall case only: returns u (m x n), s (n), v (n x n) sorted descending.
FullSvd tall_svd(const Mat& a) {
    Mat w = a;
    Mat v;
    jacobi(w, v);
    const std::size_t n = a.cols();
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) col[i] = w(i, j);
        s[j] = norm(col);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });
    FullSvd r{Mat(a.rows(), n), std::vector<double>(n), Mat(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t j = order[k];
        r.s[k] = s[j];
        for (std::size_t i = 0; i < a.rows(); ++i) r.u(i, k) = s[j] > 0.0 ? w(i, j) / s[j] : 0.0;
        for (std::size_t i = 0; i < n; ++i) r.v(i, k) = v(i, j);
    }
    return r;
}

// Full right singular basis for any shape (pads short matrices with zero rows).
FullSvd right_basis(const Mat& a) {
    if (a.rows() >= a.cols()) return tall_svd(a);
    Mat padded(a.cols(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) padded(i, j) = a(i, j);
    return tall_svd(padded);
}

}  // namespace

Svd svd(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) return {};
    if (a.rows() >= a.cols()) {
        FullSvd f = tall_svd(a);
        return {f.u, f.s, f.v};
    }
    FullSvd f = tall_svd(a.transpose());
    return {f.v, f.s, f.u};
}

std::vector<double> singular_values(const Mat& a) { return svd(a).s; }

RankReport numeric_rank(const Mat& a, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("numeric_rank: tol must be positive");
    RankReport r;
    r.singular_values = singular_values(a);
    r.tolerance_used = tol;
    const auto& s = r.singular_values;
    const double inf = std::numeric_limits<double>::infinity();
    if (s.empty()) {
        r.gap_ratio = inf;
        return r;
    }
    if (s[0] <= tol) {
        r.gap_ratio = s[0] > 0.0 ? tol / s[0] : inf;
        return r;
    }
    while (r.rank < s.size() && s[r.rank] > tol * s[0]) ++r.rank;
    if (r.rank < s.size()) r.gap_ratio = s[r.rank] > 0.0 ? s[r.rank - 1] / s[r.rank] : inf;
    else r.gap_ratio = s.back() / (tol * s[0]);
    return r;
}

double determinant(const Mat& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("determinant: matrix is not square");
    Mat lu = a;
    const std::size_t n = a.rows();
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (lu(p, k) == 0.0) return 0.0;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(p, j), lu(k, j));
            det = -det;
        }
        det *= lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = lu(i, k) / lu(k, k);
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
        }
    }
    return det;
}

LeastSquares least_squares(const Mat& a, std::span<const double> b, double tol) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m < n) throw std::invalid_argument("least_squares: more unknowns than equations");
    if (b.size() != m) throw std::invalid_argument("least_squares: right-hand side length mismatch");
    Mat r = a;
    std::vector<double> qb(b.begin(), b.end());
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> colnorm(n);
    auto column_norm = [&](std::size_t j, std::size_t from) {
        double s = 0.0;
        for (std::size_t i = from; i < m; ++i) s += r(i, j) * r(i, j);
        return s;
    };
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        double best_norm = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double c = column_norm(j, k);
            if (c > best_norm) {
                best_norm = c;
                best = j;
            }
        }
        if (best != k) {
            for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, best));
            std::swap(perm[k], perm[best]);
        }
        double alpha = std::sqrt(std::max(best_norm, 0.0));
        if (alpha == 0.0) continue;
        if (r(k, k) > 0) alpha = -alpha;
        std::vector<double> v(m, 0.0);
        for (std::size_t i = k; i < m; ++i) v[i] = r(i, k);
        v[k] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i] * r(i, j);
            s = 2.0 * s / vnorm2;
            for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i];
        }
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += v[i] * qb[i];
        s = 2.0 * s / vnorm2;
        for (std::size_t i = k; i < m; ++i) qb[i] -= s * v[i];
    }
    std::size_t rank = 0;
    double r00 = n ? std::abs(r(0, 0)) : 0.0;
    while (rank < n && std::abs(r(rank, rank)) > tol * r00 && r00 > 0.0) ++rank;
    std::vector<double> z(rank, 0.0);
    for (std::size_t ii = rank; ii-- > 0;) {
        double s = qb[ii];
        for (std::size_t j = ii + 1; j < rank; ++j) s -= r(ii, j) * z[j];
        z[ii] = s / r(ii, ii);
    }
    LeastSquares out;
    out.solution.assign(n, 0.0);
    for (std::size_t i = 0; i < rank; ++i) out.solution[perm[i]] = z[i];
    std::vector<double> res = a.apply(out.solution);
    for (std::size_t i = 0; i < m; ++i) res[i] -= b[i];
    out.residual_norm = norm(res);
    RankReport rr = numeric_rank(a, 1e-8);
    out.rank = rr.rank;
    out.gap_ratio = rr.gap_ratio;
    out.rank_deficient = rr.rank < n || rr.gap_ratio < 10.0;
    return out;
}

std::vector<double> min_norm_solve(const Mat& a, std::span<const double> b, double rcond) {
    Svd d = svd(a);
    std::vector<double> x(a.cols(), 0.0);
    if (d.s.empty() || d.s[0] == 0.0) return x;
    for (std::size_t k = 0; k < d.s.size(); ++k) {
        if (d.s[k] <= rcond * d.s[0]) break;
        double c = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) c += d.u(i, k) * b[i];
        c /= d.s[k];
        for (std::size_t j = 0; j < a.cols(); ++j) x[j] += c * d.v(j, k);
    }
    return x;
}

Mat null_space(const Mat& a, double tol) {
    FullSvd f = right_basis(a);
    RankReport rr = numeric_rank(a, tol);
    const std::size_t n = a.cols();
    Mat basis(n - rr.rank, n);
    for (std::size_t k = rr.rank; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) basis(k - rr.rank, j) = f.v(j, k);
    return basis;
}

std::vector<double> project_out_rows(const Mat& a, std::span<const double> v, double tol) {
    std::vector<double> out(v.begin(), v.end());
    if (a.rows() == 0) return out;
    FullSvd f = right_basis(a);
    RankReport rr = numeric_rank(a, tol);
    for (std::size_t k = 0; k < rr.rank; ++k) {
        double c = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) c += f.v(j, k) * v[j];
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] -= c * f.v(j, k);
    }
    return out;
}

}  // namespace morin::linalg
