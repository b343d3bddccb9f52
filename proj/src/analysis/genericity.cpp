#include "morin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace morin::analysis {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<Point> thin(const std::vector<Point>& pts, double spacing) {
    std::vector<Point> out;
    for (const Point& p : pts) {
        bool near = false;
        for (const Point& q : out)
            if (distance(p, q) < spacing) {
                near = true;
                break;
            }
        if (!near) out.push_back(p);
    }
    return out;
}

std::string format_point(std::span<const double> x) {
    std::string s = "(";
    char buf[32];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", x[i]);
        s += buf;
    }
    return s + ")";
}

std::string subscript(std::size_t k) {
    static const char* digits[] = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
    std::string s;
    for (char c : std::to_string(k)) s += digits[c - '0'];
    return s;
}

std::string superscript(std::size_t k) {
    static const char* digits[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
    std::string s;
    for (char c : std::to_string(k)) s += digits[c - '0'];
    return s;
}

std::string format_rank(const RankCheck& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "rank %zu of %zu, gap ratio %.3g", r.rank, r.rows, r.gap);
    return buf;
}

// Points where the coframe rank on TM is at most n - 2: all (c + n - 1)-minors of [omega; grad G] vanish.
std::vector<Point> rank_drop_points(Context& ctx, std::size_t per_axis) {
    const model::Scene& sc = ctx.scene();
    const std::size_t dim = sc.ambient_dim;
    if (sc.n() < 2) return {};
    std::vector<std::vector<Expr>> rows = sc.coframe;
    for (const Expr& g : sc.constraints) {
        std::vector<Expr> grad;
        for (std::size_t j = 0; j < dim; ++j) grad.push_back(expr::simplify(expr::differentiate(g, j)));
        rows.push_back(grad);
    }
    const std::size_t size = sc.codim() + sc.n() - 1;
    std::vector<Expr> eqs = sc.constraints;
    for (const auto& rs : model::combinations(rows.size(), size)) {
        for (const auto& cs : model::combinations(dim, size)) {
            std::vector<std::vector<Expr>> m;
            for (std::size_t r : rs) {
                std::vector<Expr> row;
                for (std::size_t c : cs) row.push_back(rows[r][c]);
                m.push_back(row);
            }
            Expr d = expr::simplify(expr::symbolic_determinant(m));
            if (!d.is_zero()) eqs.push_back(d);
        }
    }
    solver::ExprEquations sys(eqs, dim);
    std::vector<solver::SolvedPoint> pts = solver::solve_from_seeds(sys, solver::grid_points(ctx.solve().box, per_axis), ctx.solve());
    std::vector<Point> out;
    for (const auto& p : pts) out.push_back(p.x);
    return thin(out, 0.05 * ctx.solve().diameter());
}

}  // namespace

std::vector<Point> manifold_samples(Context& ctx, std::size_t per_axis) {
    std::vector<Point> seeds = solver::grid_points(ctx.solve().box, per_axis);
    if (ctx.scene().codim() == 0) return seeds;
    solver::ExprEquations g(ctx.scene().constraints, ctx.dim());
    std::vector<solver::NewtonResult> runs = solver::newton_batch(g, seeds, ctx.solve(), ctx.solve().exec);
    std::vector<Point> pts;
    for (const auto& r : runs)
        if (r.converged && ctx.solve().inside(r.x)) pts.push_back(r.x);
    return thin(pts, 0.5 * ctx.solve().diameter() / static_cast<double>(per_axis));
}

CorankReport check_corank1(Context& ctx, const Strata& strata, std::size_t per_axis) {
    CorankReport rep;
    const std::size_t n = ctx.n();
    std::size_t unsure = 0;
    for (const Point& x : manifold_samples(ctx, per_axis)) {
        linalg::RankReport r = ctx.atlas().coframe_rank(x);
        ++rep.samples;
        ++rep.rank_counts[r.rank];
        if (r.gap_ratio < kGapRatio) {
            ++unsure;
            continue;
        }
        if (r.rank + 2 <= n && rep.violations.size() < 10)
            rep.violations.push_back({"coframe rank at most n-2", x, "rank " + std::to_string(r.rank) + " on TM"});
    }
    for (const Point& x : rank_drop_points(ctx, per_axis)) {
        linalg::RankReport r = ctx.atlas().coframe_rank(x);
        if (r.rank + 2 <= n && rep.violations.size() < 10) rep.violations.push_back({"coframe rank at most n-2", x, "rank " + std::to_string(r.rank) + " on TM at a solved point"});
    }
    // Transversality: the Sigma^1 chart gradients have full rank along Sigma^1.
    if (const StratumResult* s1 = strata.at(1)) {
        for (const Point& x : thin(s1->cloud(), ctx.solve().step() * 2.0)) {
            auto chart = try_chart(ctx.atlas(), x, 1);
            if (!chart) {
                ++unsure;
                continue;
            }
            RankCheck rc = gradient_rank(*chart, x, ctx.atlas().tol());
            if (rc.verdict == Verdict::inconclusive)
                ++unsure;
            else if (rc.verdict == Verdict::no)
                rep.violations.push_back({"Sigma^1 not transversal", x, format_rank(rc)});
        }
    }
    rep.verdict = !rep.violations.empty() ? Verdict::no : unsure > 0 ? Verdict::inconclusive : Verdict::yes;
    return rep;
}

MorinReport check_morin(Context& ctx, const Strata& strata, std::size_t k_max) {
    MorinReport rep;
    model::Atlas& atlas = ctx.atlas();
    const double tol = atlas.tol();
    k_max = std::min(k_max, ctx.n());
    bool failed = false;
    bool unsure = false;
    for (std::size_t k = 2; k <= k_max; ++k) {
        const StratumResult* s = strata.at(k);
        if (!s) continue;
        DepthCheck dc;
        dc.depth = k;
        for (const Witness& w : s->degenerate) {
            auto chart = try_chart(atlas, w.x, k);
            std::string detail = "∇δ" + subscript(k) + " ≈ 0 on Σ" + superscript(k - 1) + " (lies in the conormal span); " + w.detail;
            if (chart) detail += "; " + format_rank(gradient_rank(*chart, w.x, tol));
            dc.witnesses.push_back({"condition (ii) rank failure", w.x, detail});
            ++dc.condition_ii_failures;
        }
        std::vector<Point> pts;
        for (const auto& p : s->points) pts.push_back(p.x);
        std::vector<Point> rest = thin(s->cloud(), ctx.solve().step() * 2.0);
        if (s->points.empty()) pts = rest;
        for (const Point& x : pts) {
            ++dc.points;
            auto chart = try_chart(atlas, x, k);
            linalg::Mat omega;
            std::vector<double> g;
            linalg::Mat grad;
            model::ChartValues v;
            if (!chart || !atlas.coframe_at(x, omega) || !atlas.constraints_at(x, g, grad) || !model::evaluate_chart(*chart, x, v)) {
                ++dc.inconclusive;
                dc.condition_ii.push_back({});
                continue;
            }
            // Condition (i): the supplementing coframe members meet the lower conormal space in dimension 0 or 1.
            const std::size_t q = v.equations.size();
            std::vector<std::size_t> lower(q - 1);
            for (std::size_t i = 0; i + 1 < q; ++i) lower[i] = i;
            model::IntersectionDim id =
                model::intersection_dimension(omega.select_rows(chart->supplements.back().col_indices), grad, v.gradients.select_rows(lower), tol);
            if (id.gap < kGapRatio)
                ++dc.inconclusive;
            else if (id.dim > 1) {
                ++dc.condition_i_failures;
                dc.witnesses.push_back({"condition (i) failure", x, "intersection dimension " + std::to_string(id.dim)});
            }
            // Condition (ii): the chart gradients including grad delta_k have full rank.
            RankCheck rc = gradient_rank(*chart, x, tol);
            dc.condition_ii.push_back(rc);
            if (rc.verdict == Verdict::inconclusive)
                ++dc.inconclusive;
            else if (rc.verdict == Verdict::no) {
                ++dc.condition_ii_failures;
                dc.witnesses.push_back({"condition (ii) rank failure", x, "at " + format_point(x) + ": " + format_rank(rc)});
            }
        }
        failed = failed || dc.condition_i_failures > 0 || dc.condition_ii_failures > 0;
        unsure = unsure || dc.inconclusive > 0;
        rep.depths.push_back(std::move(dc));
    }
    rep.verdict = failed ? Verdict::no : unsure ? Verdict::inconclusive : Verdict::yes;
    return rep;
}

}  // namespace morin::analysis
