#include "morin/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morin::solver {

namespace {

double dist(std::span<const double> a, std::span<const double> b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

// Unit tangent of the solution curve: null direction of the row-normalized Jacobian.
bool tangent(const Equations& eq, std::span<const double> x, double tol, std::vector<double>& t) {
    std::vector<double> r;
    linalg::Mat jac;
    if (!eq.evaluate(x, r, jac)) return false;
    for (std::size_t i = 0; i < jac.rows(); ++i) {
        double s = linalg::norm(jac.row(i));
        for (std::size_t j = 0; j < jac.cols(); ++j) jac(i, j) = s > 0.0 ? jac(i, j) / s : 0.0;
    }
    const std::size_t n = jac.cols();
    if (jac.rows() + 1 < n) return false;
    if (jac.rows() < n) jac = jac.stack(linalg::Mat(n - jac.rows(), n));
    linalg::Svd d = linalg::svd(jac);
    // Smallest singular direction; the next one must stay well above it.
    const std::size_t k = n - 1;
    if (d.s[0] <= 0.0 || d.s[k - 1] < tol * d.s[0]) return false;
    t.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) t[j] = d.v(j, k);
    return true;
}

struct Walk {
    std::vector<Point> points;
    bool closed = false;
    bool complete = true;
};

Walk walk(const Equations& eq, const Point& start, const std::vector<double>& dir0, const SolveOptions& opts) {
    Walk w;
    w.points.push_back(start);
    const double h0 = opts.step();
    const double hmin = 1e-4 * h0;
    const std::size_t d = opts.box.size();
    const double max_arc = 200.0 * opts.diameter();
    const double audit_limit = 10.0 * opts.tol_residual;
    SolveOptions corr = opts;
    corr.newton_max_iter = 12;
    std::vector<double> dir = dir0;
    Point x = start;
    double h = h0;
    double arc = 0.0;
    while (arc < max_arc) {
        std::vector<double> t;
        if (!tangent(eq, x, 1e-3, t)) {
            w.complete = false;
            break;
        }
        if (linalg::dot(t, dir) < 0.0)
            for (double& v : t) v = -v;
        bool ok = false;
        Point next;
        std::vector<double> tn;
        while (h >= hmin) {
            Point pred(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) pred[j] = x[j] + h * t[j];
            NewtonResult c = gauss_newton(eq, pred, corr);
            if (c.converged && dist(c.x, pred, d) <= 0.5 * h && dist(c.x, x, d) >= 0.3 * h && eq.audit(c.x) <= audit_limit &&
                tangent(eq, c.x, 1e-3, tn)) {
                double cosang = std::abs(linalg::dot(tn, t));
                if (cosang >= std::cos(0.5)) {
                    next = c.x;
                    ok = true;
                    break;
                }
            }
            h *= 0.5;
        }
        if (!ok) {
            w.complete = false;
            break;
        }
        arc += dist(next, x, d);
        dir = t;
        x = next;
        if (!opts.inside(x, 0.0)) {
            w.points.push_back(x);
            break;
        }
        // Closure: back within one step of the start after leaving it.
        if (arc > 3.0 * h0 && dist(x, start, d) < 0.75 * h0) {
            w.points.push_back(start);
            w.closed = true;
            break;
        }
        w.points.push_back(x);
        h = std::min(h0, 1.5 * h);
    }
    if (arc >= max_arc) w.complete = false;
    return w;
}

double polyline_length(const std::vector<Point>& p, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) s += dist(p[i], p[i - 1], d);
    return s;
}

void canonicalize(CurveComponent& c) {
    auto& p = c.points;
    if (p.size() < 2) return;
    if (c.closed) {
        p.pop_back();
        auto it = std::min_element(p.begin(), p.end(), lex_less);
        std::rotate(p.begin(), it, p.end());
        if (p.size() > 2 && lex_less(p.back(), p[1])) std::reverse(p.begin() + 1, p.end());
        p.push_back(p.front());
    } else if (lex_less(p.back(), p.front())) {
        std::reverse(p.begin(), p.end());
    }
}

}  // namespace

double distance_to_polyline(const std::vector<Point>& poly, std::span<const double> x) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t d = x.size();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        best = std::min(best, dist(poly[i], x, d));
        if (i == 0) continue;
        const Point& a = poly[i - 1];
        const Point& b = poly[i];
        double ab = 0.0;
        double ax = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            ab += (b[j] - a[j]) * (b[j] - a[j]);
            ax += (x[j] - a[j]) * (b[j] - a[j]);
        }
        if (ab <= 0.0) continue;
        double s = std::clamp(ax / ab, 0.0, 1.0);
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double v = a[j] + s * (b[j] - a[j]) - x[j];
            q += v * v;
        }
        best = std::min(best, std::sqrt(q));
    }
    return best;
}

std::vector<CurveComponent> trace_curves(const Equations& eq, const std::vector<Point>& seeds, const SolveOptions& opts) {
    std::vector<CurveComponent> out;
    const std::size_t d = opts.box.size();
    const double cover = 0.25 * opts.step();
    std::vector<NewtonResult> starts = newton_batch(eq, seeds, opts, opts.exec);
    for (const NewtonResult& s : starts) {
        if (!s.converged || !opts.inside(s.x, 0.0) || eq.audit(s.x) > 10.0 * opts.tol_residual) continue;
        bool covered = false;
        for (const CurveComponent& c : out)
            if (distance_to_polyline(c.points, std::span<const double>(s.x).first(d)) < cover) covered = true;
        if (covered) continue;
        std::vector<double> t;
        if (!tangent(eq, s.x, 1e-3, t)) continue;
        Walk fwd = walk(eq, s.x, t, opts);
        CurveComponent c;
        c.complete = fwd.complete;
        if (fwd.closed) {
            c.points = std::move(fwd.points);
            c.closed = true;
        } else {
            std::vector<double> back = t;
            for (double& v : back) v = -v;
            Walk bwd = walk(eq, s.x, back, opts);
            c.complete = c.complete && bwd.complete;
            c.points.assign(bwd.points.rbegin(), bwd.points.rend());
            c.points.insert(c.points.end(), fwd.points.begin() + 1, fwd.points.end());
        }
        c.arc_length = polyline_length(c.points, d);
        out.push_back(std::move(c));
    }
    for (CurveComponent& c : out) canonicalize(c);
    std::sort(out.begin(), out.end(), [](const CurveComponent& a, const CurveComponent& b) { return lex_less(a.points.front(), b.points.front()); });
    return out;
}

}  // namespace morin::solver
