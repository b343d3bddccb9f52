#include "morin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace morin::analysis {

namespace {

std::vector<Expr> gradient_of(const Expr& e, std::size_t dim) {
    std::vector<Expr> g;
    for (std::size_t j = 0; j < dim; ++j) g.push_back(expr::simplify(expr::differentiate(e, j)));
    return g;
}

// Critical points of x -> a.x on M: G = 0 and a = J_G^T mu, in unknowns (x, mu).
std::vector<Expr> height_system(const model::Scene& sc, std::span<const double> a) {
    const std::size_t dim = sc.ambient_dim;
    std::vector<std::vector<Expr>> grads;
    for (const Expr& g : sc.constraints) grads.push_back(gradient_of(g, dim));
    std::vector<Expr> eqs = sc.constraints;
    for (std::size_t s = 0; s < dim; ++s) {
        std::vector<Expr> terms{Expr::constant(expr::Rational(a[s]))};
        for (std::size_t i = 0; i < grads.size(); ++i) terms.push_back(-(Expr::variable(dim + i) * grads[i][s]));
        eqs.push_back(expr::simplify(expr::sum(terms)));
    }
    return eqs;
}

// Chart-free version for the grid scan: G and the (c + 1)-minors of [grad G; a].
std::vector<Expr> height_oracle_system(const model::Scene& sc, std::span<const double> a) {
    const std::size_t dim = sc.ambient_dim;
    std::vector<std::vector<Expr>> rows;
    for (const Expr& g : sc.constraints) rows.push_back(gradient_of(g, dim));
    std::vector<Expr> arow;
    for (double v : a) arow.push_back(Expr::constant(expr::Rational(v)));
    rows.push_back(arow);
    std::vector<Expr> eqs = sc.constraints;
    for (const auto& cols : model::combinations(dim, rows.size())) {
        std::vector<std::vector<Expr>> m;
        for (const auto& r : rows) {
            std::vector<Expr> row;
            for (std::size_t c : cols) row.push_back(r[c]);
            m.push_back(std::move(row));
        }
        Expr d = expr::simplify(expr::symbolic_determinant(m));
        if (!d.is_zero()) eqs.push_back(d);
    }
    return eqs;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

Compactness check_compactness(Context& ctx, std::size_t grid) {
    Compactness c;
    c.grid = grid;
    const auto& box = ctx.solve().box;
    if (ctx.scene().codim() == 0) {
        c.detail = "M is open in R^" + std::to_string(ctx.dim()) + "; not compact";
        return c;
    }
    solver::OracleSystem sys(ctx.scene().constraints, ctx.dim());
    solver::OracleOptions o = ctx.oracle_options(grid);
    o.refine_levels = 0;
    // M itself is a surface-sized cell set, far above the point-cluster default.
    o.cell_budget = 50 * grid * grid * grid;
    solver::OracleResult r = solver::grid_oracle(sys, o);
    if (r.budget_exhausted) {
        c.detail = "grid scan exceeded its cell budget";
        return c;
    }
    double inset = std::numeric_limits<double>::infinity();
    for (const auto& cl : r.clusters)
        for (const Point& p : cl.members)
            for (std::size_t j = 0; j < box.size(); ++j) {
                double w = box[j].second - box[j].first;
                inset = std::min(inset, std::min(p[j] - box[j].first, box[j].second - p[j]) / w);
            }
    c.min_inset = r.clusters.empty() ? 0.5 : inset;
    c.ok = c.min_inset > 0.05;
    c.detail = r.clusters.empty() ? "M is empty in the box"
               : c.ok           ? "M stays at least 5% of the box width from every face"
                                : "M reaches within " + format_double(100.0 * c.min_inset) + "% of the box width of a face";
    return c;
}

MorseResult euler_via_morse(Context& ctx, std::uint64_t seed) {
    MorseResult m;
    const model::Scene& sc = ctx.scene();
    const std::size_t dim = ctx.dim();
    const std::size_t c = sc.codim();
    if (c == 0) {
        m.detail = "needs an implicit manifold";
        return m;
    }
    const double tol = ctx.atlas().tol();
    for (std::size_t attempt = 0; attempt < 10; ++attempt) {
        m.attempts = attempt + 1;
        m.direction = draw_covector(seed ^ 0x9e3779b97f4a7c15ULL, attempt, dim);
        m.critical_points.clear();
        m.indices.clear();
        solver::ExprEquations sys(height_system(sc, m.direction), dim + c);
        solver::OracleSystem osys(height_oracle_system(sc, m.direction), dim);
        solver::OracleOptions o = ctx.oracle_options(ctx.solve().grid);
        o.refine_levels = 0;
        solver::OracleResult r = solver::grid_oracle(osys, o);
        std::vector<Point> seeds;
        for (const auto& cl : r.clusters) {
            for (const Point& p : {cl.best_cell, cl.centroid}) {
                std::vector<double> g;
                linalg::Mat grad;
                if (!ctx.atlas().constraints_at(p, g, grad)) continue;
                linalg::LeastSquares ls = linalg::least_squares(grad.transpose(), m.direction);
                Point s = p;
                s.insert(s.end(), ls.solution.begin(), ls.solution.end());
                seeds.push_back(std::move(s));
            }
        }
        std::vector<solver::SolvedPoint> pts = solver::solve_from_seeds(sys, seeds, ctx.solve());
        bool degenerate = false;
        long chi = 0;
        for (const auto& p : pts) {
            std::vector<double> res;
            linalg::Mat jac;
            if (!sys.evaluate(p.x, res, jac)) {
                degenerate = true;
                break;
            }
            // Hessian of the Lagrangian on TM: the x-block of the multiplier rows.
            linalg::Mat h(dim, dim);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j) h(i, j) = jac(c + i, j);
            std::vector<double> g;
            linalg::Mat grad;
            ctx.atlas().constraints_at(std::span<const double>(p.x.data(), dim), g, grad);
            linalg::Mat t = linalg::null_space(grad, tol);
            linalg::Mat red = t * h * t.transpose();
            linalg::RankReport rep = linalg::numeric_rank(red, tol);
            if (rep.rank != red.rows() || rep.gap_ratio < kGapRatio) {
                degenerate = true;
                break;
            }
            int sign = linalg::determinant(red) > 0.0 ? 1 : -1;
            ZeroRecord z;
            z.x.assign(p.x.begin(), p.x.begin() + static_cast<std::ptrdiff_t>(dim));
            z.multipliers.assign(p.x.begin() + static_cast<std::ptrdiff_t>(dim), p.x.end());
            z.residual = p.residual_norm;
            z.nondegenerate = Verdict::yes;
            z.bordered_det = linalg::determinant(jac);
            z.bordered_gap = rep.gap_ratio;
            m.critical_points.push_back(std::move(z));
            m.indices.push_back(sign);
            chi += sign;
        }
        if (degenerate || r.budget_exhausted) continue;
        m.ok = true;
        m.chi = chi;
        m.detail = std::to_string(pts.size()) + " nondegenerate critical points";
        return m;
    }
    m.detail = "no Morse height function found in 10 draws";
    return m;
}

CongruenceReport euler_congruence(Context& ctx, const Strata& strata, std::uint64_t seed) {
    CongruenceReport rep;
    const std::size_t n = ctx.n();
    rep.compactness = check_compactness(ctx, ctx.solve().grid);
    bool generic = false;
    for (std::size_t attempt = 0; attempt < 10 && !generic; ++attempt) {
        std::vector<double> a;
        const auto& given = ctx.scene().covector;
        if (attempt == 0 && given)
            a = *given;
        else
            a = draw_covector(seed, given ? attempt - 1 : attempt, n);
        rep.draws.push_back(a);
        rep.zeros = analyze_zeros(ctx, strata, a);
        generic = rep.zeros.generic();
        if (!generic) rep.notes.push_back("covector " + std::to_string(attempt + 1) + " not generic; redrawn");
    }
    rep.unrestricted_count = rep.zeros.unrestricted.size();
    rep.chi_m_mod2 = static_cast<int>(rep.unrestricted_count % 2);
    long rhs = 0;
    for (std::size_t k = 1; k < n; ++k) {
        const auto& z = rep.zeros.restricted[k];
        rep.restricted_counts[k] = z.size();
        rep.chi_closure[k] = static_cast<long>(z.size() % 2);
        rhs += rep.chi_closure[k];
        std::size_t split = 0;
        for (const ZeroRecord& r : z)
            if (r.type == static_cast<int>(k) || r.type == static_cast<int>(k + 1)) ++split;
        rep.decomposition[k] = split == z.size();
    }
    bool top_definite = true;
    if (const StratumResult* top = strata.at(n)) {
        for (const auto& cl : top->classes) {
            if (cl.type == static_cast<int>(n))
                ++rep.top_points;
            else
                top_definite = false;
        }
    }
    rep.chi_closure[n] = static_cast<long>(rep.top_points);
    rhs += static_cast<long>(rep.top_points);
    rep.rhs_mod2 = static_cast<int>(rhs % 2);
    rep.congruence_holds = rep.chi_m_mod2 == rep.rhs_mod2;

    if (n >= 2) {
        if (const StratumResult* s = strata.at(n - 1); s && s->dimension == 1 && s->samples.empty()) {
            long chi = 0;
            bool complete = true;
            for (const auto& c : s->curves) {
                if (!c.closed) ++chi;
                complete = complete && c.complete;
            }
            if (complete) rep.chi_curves = chi;
        }
    }
    if (ctx.dim() == 3 && ctx.scene().codim() == 1 && rep.compactness.ok) rep.morse = euler_via_morse(ctx, seed);

    bool definite = generic && top_definite;
    for (const auto& [k, ok] : rep.decomposition) definite = definite && ok;
    if (!rep.compactness.ok) {
        rep.verdict = Verdict::inconclusive;
        rep.notes.push_back("compactness not established: " + rep.compactness.detail);
    } else if (!definite) {
        rep.verdict = Verdict::inconclusive;
    } else {
        rep.verdict = rep.congruence_holds ? Verdict::yes : Verdict::no;
    }
    rep.notes.push_back("congruence verified at resolution " + std::to_string(ctx.solve().grid));
    return rep;
}

}  // namespace morin::analysis
