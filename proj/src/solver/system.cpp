#include "morin/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morin::solver {

double SolveOptions::diameter() const {
    double s = 0.0;
    for (const auto& [lo, hi] : box) s += (hi - lo) * (hi - lo);
    return std::sqrt(s);
}

bool SolveOptions::inside(std::span<const double> x, double slack) const {
    for (std::size_t i = 0; i < box.size(); ++i)
        if (x[i] < box[i].first - slack || x[i] > box[i].second + slack) return false;
    return true;
}

double Equations::audit(std::span<const double>) const { return 0.0; }

namespace {

std::vector<Expr> with_gradients(const std::vector<Expr>& eqs, std::size_t dim) {
    std::vector<Expr> out = eqs;
    for (const Expr& e : eqs)
        for (std::size_t j = 0; j < dim; ++j) out.push_back(expr::differentiate(e, j));
    return out;
}

}  // namespace

ExprEquations::ExprEquations(std::vector<Expr> equations, std::size_t unknowns, std::vector<Expr> audits)
    : equations_(std::move(equations)),
      audits_(std::move(audits)),
      unknowns_(unknowns),
      tape_(with_gradients(equations_, unknowns)),
      audit_tape_(with_gradients(audits_, unknowns)) {}

bool ExprEquations::evaluate(std::span<const double> x, std::vector<double>& r, linalg::Mat& jac) const {
    const std::size_t q = equations_.size();
    thread_local std::vector<double> buf;
    thread_local std::vector<double> work;
    buf.resize(tape_.output_count());
    if (!tape_.evaluate(x, buf, work)) return false;
    r.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(q));
    jac = linalg::Mat(q, unknowns_);
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < unknowns_; ++j) jac(i, j) = buf[q + i * unknowns_ + j];
    return true;
}

double ExprEquations::audit(std::span<const double> x) const {
    const std::size_t a = audits_.size();
    if (a == 0) return 0.0;
    std::vector<double> buf(audit_tape_.output_count());
    std::vector<double> work;
    if (!audit_tape_.evaluate(x, buf, work)) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
        double g = 0.0;
        for (std::size_t j = 0; j < unknowns_; ++j) g += buf[a + i * unknowns_ + j] * buf[a + i * unknowns_ + j];
        worst = std::max(worst, std::abs(buf[i]) / std::max(1.0, std::sqrt(g)));
    }
    return worst;
}

double scaled_residual(const std::vector<double>& r, const linalg::Mat& jac) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double v = r[i] / std::max(1.0, linalg::norm(jac.row(i)));
        s += v * v;
    }
    return std::sqrt(s);
}

NewtonResult gauss_newton(const Equations& eq, Point x0, const SolveOptions& opts) {
    NewtonResult res;
    res.x = std::move(x0);
    std::vector<double> r;
    linalg::Mat jac;
    if (!eq.evaluate(res.x, r, jac)) return res;
    double f = scaled_residual(r, jac);
    const double limit = 10.0 * opts.diameter();
    Point start = res.x;
    for (std::size_t it = 0; it < opts.newton_max_iter; ++it) {
        res.iterations = it;
        if (f <= opts.tol_residual) {
            res.converged = true;
            break;
        }
        std::vector<double> step = linalg::min_norm_solve(jac, r, 1e-12);
        double lambda = 1.0;
        bool accepted = false;
        Point trial(res.x.size());
        std::vector<double> rt;
        linalg::Mat jt;
        for (int half = 0; half < 12; ++half, lambda *= 0.5) {
            for (std::size_t j = 0; j < trial.size(); ++j) trial[j] = res.x[j] - lambda * step[j];
            if (!eq.evaluate(trial, rt, jt)) continue;
            double ft = scaled_residual(rt, jt);
            if (ft < f) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        res.x = trial;
        r = std::move(rt);
        jac = std::move(jt);
        f = scaled_residual(r, jac);
        double moved = 0.0;
        for (std::size_t j = 0; j < opts.box.size(); ++j) moved += (res.x[j] - start[j]) * (res.x[j] - start[j]);
        if (std::sqrt(moved) > limit) break;
    }
    if (f <= opts.tol_residual) res.converged = true;
    res.residual_norm = f;
    return res;
}

linalg::RankReport jacobian_rank(const Equations& eq, std::span<const double> x, double tol) {
    std::vector<double> r;
    linalg::Mat jac;
    if (!eq.evaluate(x, r, jac)) return {};
    linalg::Mat n = jac;
    for (std::size_t i = 0; i < n.rows(); ++i) {
        double s = linalg::norm(jac.row(i));
        for (std::size_t j = 0; j < n.cols(); ++j) n(i, j) = s > 0.0 ? jac(i, j) / s : 0.0;
    }
    return linalg::numeric_rank(n, tol);
}

bool lex_less(const Point& a, const Point& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

std::vector<Point> grid_points(const std::vector<std::pair<double, double>>& box, std::size_t per_axis) {
    const std::size_t d = box.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= per_axis;
    std::vector<Point> out(total, Point(d));
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t a = d; a-- > 0;) {
            std::size_t k = rest % per_axis;
            rest /= per_axis;
            double h = (box[a].second - box[a].first) / static_cast<double>(per_axis);
            out[idx][a] = box[a].first + (static_cast<double>(k) + 0.5) * h;
        }
    }
    return out;
}

}  // namespace morin::solver
