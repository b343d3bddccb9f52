#include "morin/chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morin::model {

std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    if (k > n) return out;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        out.push_back(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

std::size_t equation_count(const Scene& scene, std::size_t depth) {
    if (depth == 0) return scene.codim();
    return scene.codim() + (scene.manifold_dim() - scene.n() + 1) + (depth - 1);
}

bool evaluate_chart(const StratumChart& chart, std::span<const double> x, ChartValues& out) {
    const std::size_t q = chart.equations.size();
    const std::size_t n = x.size();
    const std::size_t a = chart.audits.size();
    thread_local std::vector<double> buf;
    thread_local std::vector<double> work;
    buf.resize(chart.tape->output_count());
    if (!chart.tape->evaluate(x, buf, work)) return false;
    out.equations.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(q));
    out.gradients = linalg::Mat(q, n);
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < n; ++j) out.gradients(i, j) = buf[q + i * n + j];
    out.audits.assign(buf.begin() + static_cast<std::ptrdiff_t>(q + q * n), buf.begin() + static_cast<std::ptrdiff_t>(q + q * n + a));
    out.pivot = buf[q + q * n + a];
    return true;
}

double ChartMargins::worst() const {
    double w = std::min(pivot, minors);
    for (double s : supplements) w = std::min(w, s);
    return w;
}

linalg::Mat normalized_rows(const linalg::Mat& m, double tol) {
    linalg::Mat r = m;
    double big = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) big = std::max(big, linalg::norm(m.row(i)));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double nr = linalg::norm(m.row(i));
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = (nr > tol * big && nr > 0.0) ? m(i, j) / nr : 0.0;
    }
    return r;
}

IntersectionDim intersection_dimension(const linalg::Mat& omega, const linalg::Mat& constraint_grads,
                                       const linalg::Mat& conormal, double tol) {
    auto rank = [&](const linalg::Mat& m) { return linalg::numeric_rank(normalized_rows(m, tol), tol); };
    linalg::RankReport a = rank(omega.stack(constraint_grads));
    linalg::RankReport b = rank(conormal);
    linalg::RankReport ab = rank(omega.stack(conormal));
    IntersectionDim r;
    long d = static_cast<long>(a.rank) + static_cast<long>(b.rank) - static_cast<long>(ab.rank) - static_cast<long>(constraint_grads.rows());
    r.dim = static_cast<std::size_t>(std::max(0L, d));
    r.gap = std::min({a.gap_ratio, b.gap_ratio, ab.gap_ratio});
    return r;
}

}  // namespace morin::model
