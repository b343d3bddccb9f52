#include "morin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace morin::analysis {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<double> xi_at(const std::vector<Expr>& xi, std::span<const double> x) {
    std::vector<double> v;
    for (const Expr& e : xi) v.push_back(expr::evaluate(e, x));
    return v;
}

std::shared_ptr<const model::StratumChart> chart_for(Context& ctx, std::span<const double> x, std::size_t depth) {
    if (depth == 0) return ctx.atlas().chart_at(x, 0);
    return try_chart(ctx.atlas(), x, depth);
}

// Seeds on the curves of a stratum: sign changes and local minima of phi along each polyline. Segments
// next to a local minimum of |phi| are subdivided and projected back onto the stratum, since two zeros
// closer than a step cancel in sign.
template <class Phi>
std::vector<Point> curve_seeds(Context& ctx, std::size_t depth, const std::vector<solver::CurveComponent>& curves, Phi phi,
                               bool signed_values) {
    ChartEquations eq(ctx.atlas(), depth);
    // Unit tangent of the stratum at x oriented along `chord`; the chord itself where the chart fails.
    auto tangent = [&](const Point& x, const std::vector<double>& chord) {
        std::vector<double> r;
        linalg::Mat jac;
        if (!signed_values || !eq.evaluate(x, r, jac)) return chord;
        linalg::Mat ns = linalg::null_space(jac, ctx.atlas().tol());
        if (ns.rows() != 1) return chord;
        std::vector<double> t(ns.row(0).begin(), ns.row(0).end());
        if (linalg::dot(t, chord) < 0.0)
            for (double& v : t) v = -v;
        return t;
    };
    constexpr int kSubdivisions = 16;
    std::vector<Point> seeds;
    auto lerp = [](const Point& a, const Point& b, double t) {
        Point s(a.size());
        for (std::size_t j = 0; j < s.size(); ++j) s[j] = a[j] + t * (b[j] - a[j]);
        return s;
    };
    auto scan = [&](const std::vector<Point>& p, const std::vector<double>& f, bool wrap) {
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            if (signed_values && ((f[i] < 0.0) != (f[i + 1] < 0.0) || f[i] == 0.0))
                seeds.push_back(lerp(p[i], p[i + 1], f[i] == f[i + 1] ? 0.0 : f[i] / (f[i] - f[i + 1])));
            std::size_t prev = i == 0 ? (wrap ? p.size() - 2 : i) : i - 1;
            if (prev != i && std::abs(f[i]) <= std::abs(f[prev]) && std::abs(f[i]) <= std::abs(f[i + 1])) seeds.push_back(p[i]);
        }
    };
    for (const auto& c : curves) {
        const auto& p = c.points;
        if (p.size() < 3) continue;
        std::vector<double> f(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::size_t a = i == 0 ? (c.closed ? p.size() - 2 : 0) : i - 1;
            std::size_t b = i + 1 == p.size() ? (c.closed ? 1 : i) : i + 1;
            std::vector<double> t(p[i].size());
            for (std::size_t j = 0; j < t.size(); ++j) t[j] = p[b][j] - p[a][j];
            f[i] = phi(p[i], tangent(p[i], t));
        }
        const std::size_t before = seeds.size();
        scan(p, f, c.closed);
        std::vector<std::size_t> minima;
        for (std::size_t k = before; k < seeds.size(); ++k)
            for (std::size_t i = 0; i < p.size(); ++i)
                if (seeds[k] == p[i]) minima.push_back(i);
        for (std::size_t i : minima) {
            for (std::size_t lo : {i == 0 ? (c.closed ? p.size() - 2 : i) : i - 1, i}) {
                std::size_t hi = lo + 1;
                if (hi >= p.size()) continue;
                std::vector<Point> q;
                std::vector<double> g;
                std::vector<double> t(p[lo].size());
                for (std::size_t j = 0; j < t.size(); ++j) t[j] = p[hi][j] - p[lo][j];
                for (int k = 0; k <= kSubdivisions; ++k) {
                    solver::NewtonResult nr = solver::gauss_newton(eq, lerp(p[lo], p[hi], static_cast<double>(k) / kSubdivisions), ctx.solve());
                    if (!nr.converged) continue;
                    q.push_back(nr.x);
                    g.push_back(phi(q.back(), tangent(q.back(), t)));
                }
                scan(q, g, false);
            }
        }
    }
    return seeds;
}

std::vector<Point> oracle_seeds(Context& ctx, const std::vector<Expr>& eqs) {
    solver::OracleSystem sys(eqs, ctx.dim());
    solver::OracleOptions o = ctx.oracle_options(ctx.solve().grid);
    o.refine_levels = 0;
    solver::OracleResult r = solver::grid_oracle(sys, o);
    std::vector<Point> seeds;
    for (const auto& c : r.clusters) {
        seeds.push_back(c.best_cell);
        seeds.push_back(c.centroid);
    }
    return seeds;
}

// Norm of xi after removing its component along the constraint gradients.
double tangential_norm(Context& ctx, const std::vector<Expr>& xi, std::span<const double> x) {
    std::vector<double> v = xi_at(xi, x);
    std::vector<double> g;
    linalg::Mat grad;
    if (ctx.scene().codim() == 0 || !ctx.atlas().constraints_at(x, g, grad)) return linalg::norm(v);
    return linalg::norm(linalg::project_out_rows(grad, v, ctx.atlas().tol()));
}

std::vector<ZeroRecord> dedup(Context& ctx, std::vector<ZeroRecord> recs) {
    std::vector<ZeroRecord> out;
    for (auto& r : recs) {
        bool merged = false;
        for (auto& o : out) {
            if (distance(r.x, o.x) <= ctx.same_point()) {
                if (r.residual < o.residual) o = r;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const ZeroRecord& a, const ZeroRecord& b) { return solver::lex_less(a.x, b.x); });
    return out;
}

std::vector<ZeroRecord> solve_seeds(Context& ctx, const std::vector<Point>& seeds, std::size_t depth, std::span<const double> a) {
    std::vector<std::optional<ZeroRecord>> found(seeds.size());
    const long count = static_cast<long>(seeds.size());
    if (ctx.solve().exec == solver::Exec::serial) {
        for (long i = 0; i < count; ++i) found[i] = zero_at(ctx, seeds[i], depth, a);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < count; ++i) found[i] = zero_at(ctx, seeds[i], depth, a);
    }
    std::vector<ZeroRecord> recs;
    for (auto& f : found)
        if (f && ctx.solve().inside(f->x)) recs.push_back(std::move(*f));
    return dedup(ctx, std::move(recs));
}

void finish(Context& ctx, std::vector<ZeroRecord>& recs, std::span<const double> a) {
    for (auto& r : recs) {
        r.type = classify_point(ctx, r.x).type;
        nondegeneracy(ctx, r, a);
    }
}

}  // namespace

std::vector<double> draw_covector(std::uint64_t seed, std::size_t attempt, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<double> a(n);
    for (std::size_t k = 0; k <= attempt; ++k) {
        double s = 0.0;
        do {
            s = 0.0;
            for (double& v : a) {
                v = gauss(rng);
                s += v * v;
            }
        } while (s == 0.0);
        s = std::sqrt(s);
        for (double& v : a) v /= s;
    }
    return a;
}

std::optional<ZeroRecord> zero_at(Context& ctx, std::span<const double> x, std::size_t depth, std::span<const double> a) {
    const std::size_t dim = ctx.dim();
    std::vector<double> coeffs(a.begin(), a.end());
    Point y(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dim));
    std::shared_ptr<const model::StratumChart> chart;
    solver::NewtonResult nr;
    // One re-anchoring pass: the chart selected at the converged point must be the chart solved in.
    for (int pass = 0; pass < 2; ++pass) {
        chart = chart_for(ctx, y, depth);
        if (!chart) return std::nullopt;
        model::ChartValues v;
        if (!model::evaluate_chart(*chart, y, v)) return std::nullopt;
        std::vector<double> xi;
        try {
            xi = xi_at(xi_components(ctx.scene(), coeffs), y);
        } catch (const expr::DomainError&) {
            return std::nullopt;
        }
        linalg::LeastSquares ls = linalg::least_squares(v.gradients.transpose(), xi);
        Point start = y;
        start.insert(start.end(), ls.solution.begin(), ls.solution.end());
        auto sys = ctx.augmented(*chart, coeffs);
        nr = solver::gauss_newton(*sys, start, ctx.solve());
        if (!nr.converged) return std::nullopt;
        y.assign(nr.x.begin(), nr.x.begin() + static_cast<std::ptrdiff_t>(dim));
        auto again = chart_for(ctx, y, depth);
        if (again && again->key == chart->key) break;
        if (pass == 1) return std::nullopt;
    }
    auto sys = ctx.augmented(*chart, coeffs);
    if (sys->audit(nr.x) > 10.0 * ctx.solve().tol_residual) return std::nullopt;
    ZeroRecord r;
    r.x = y;
    r.depth = depth;
    r.multipliers.assign(nr.x.begin() + static_cast<std::ptrdiff_t>(dim), nr.x.end());
    r.chart = chart->key;
    r.residual = nr.residual_norm;
    return r;
}

void nondegeneracy(Context& ctx, ZeroRecord& rec, std::span<const double> a) {
    auto chart = chart_for(ctx, rec.x, rec.depth);
    rec.nondegenerate = Verdict::inconclusive;
    if (!chart || chart->key != rec.chart) return;
    auto sys = ctx.augmented(*chart, std::vector<double>(a.begin(), a.end()));
    Point z = rec.x;
    z.insert(z.end(), rec.multipliers.begin(), rec.multipliers.end());
    std::vector<double> r;
    linalg::Mat jac;
    if (!sys->evaluate(z, r, jac)) return;
    rec.bordered_det = linalg::determinant(jac);
    const double tol = ctx.atlas().tol();
    linalg::RankReport rep = linalg::numeric_rank(model::normalized_rows(jac, tol), tol);
    rec.bordered_gap = rep.gap_ratio;
    if (rep.gap_ratio >= kGapRatio) rec.nondegenerate = rep.rank == jac.rows() ? Verdict::yes : Verdict::no;
}

std::vector<ZeroRecord> find_xi_zeros(Context& ctx, const Strata& strata, std::span<const double> a) {
    std::vector<Expr> xi = xi_components(ctx.scene(), a);
    const StratumResult* s1 = strata.at(1);
    std::vector<Point> seeds;
    if (s1 && !s1->curves.empty()) {
        seeds = curve_seeds(
            ctx, 1, s1->curves, [&](const Point& x, const std::vector<double>&) { return tangential_norm(ctx, xi, x); }, false);
    } else if (!s1 || !s1->empty()) {
        seeds = oracle_seeds(ctx, zero_equations(ctx.scene(), 0, xi));
    }
    std::vector<ZeroRecord> out = solve_seeds(ctx, seeds, 0, a);
    finish(ctx, out, a);
    return out;
}

std::vector<ZeroRecord> find_restricted_zeros(Context& ctx, const Strata& strata, std::size_t depth, std::span<const double> a) {
    const StratumResult* s = strata.at(depth);
    if (!s || s->empty()) return {};
    std::vector<Expr> xi = xi_components(ctx.scene(), a);
    std::vector<Point> seeds;
    if (s->dimension == 0) {
        for (const auto& p : s->points) seeds.push_back(p.x);
    } else if (!s->curves.empty()) {
        seeds = curve_seeds(
            ctx, depth, s->curves, [&](const Point& x, const std::vector<double>& t) { return linalg::dot(xi_at(xi, x), t); }, true);
    } else {
        seeds = oracle_seeds(ctx, zero_equations(ctx.scene(), depth, xi));
    }
    std::vector<ZeroRecord> out = solve_seeds(ctx, seeds, depth, a);
    finish(ctx, out, a);
    return out;
}

bool ZeroAnalysis::generic() const { return checks.all_nondegenerate && checks.exclusion && checks.restricted_exclusion; }

ZeroAnalysis analyze_zeros(Context& ctx, const Strata& strata, std::span<const double> a) {
    ZeroAnalysis z;
    z.a.assign(a.begin(), a.end());
    const std::size_t n = ctx.n();
    ZeroChecks& ck = z.checks;
    z.unrestricted = find_xi_zeros(ctx, strata, a);
    for (std::size_t k = 1; k < n; ++k) z.restricted[k] = find_restricted_zeros(ctx, strata, k, a);

    auto cloud = [&](std::size_t k) {
        const StratumResult* s = strata.at(k);
        return s ? s->cloud() : std::vector<Point>{};
    };
    auto min_distance = [](const Point& x, const std::vector<Point>& pts) {
        double best = -1.0;
        for (const Point& p : pts) {
            double d = distance(x, p);
            if (best < 0.0 || d < best) best = d;
        }
        return best;
    };

    // Zeros of xi lie on Sigma^1 and away from Sigma^2.
    std::vector<Point> s2 = cloud(2);
    for (const ZeroRecord& r : z.unrestricted) {
        auto c1 = try_chart(ctx.atlas(), r.x, 1);
        double res = c1 ? chart_residual(*c1, r.x) : std::numeric_limits<double>::infinity();
        ck.max_sigma1_residual = std::max(ck.max_sigma1_residual, res);
        if (!(res <= 10.0 * ctx.solve().tol_residual)) {
            ck.zeros_on_sigma1 = false;
            ck.failures.push_back({"zero of xi off Sigma^1", r.x, "chart residual " + std::to_string(res)});
        }
        double d = min_distance(r.x, s2);
        if (d >= 0.0 && (ck.min_distance_to_sigma2 < 0.0 || d < ck.min_distance_to_sigma2)) ck.min_distance_to_sigma2 = d;
        if (d >= 0.0 && d <= 1e-3) {
            ck.exclusion = false;
            ck.failures.push_back({"zero of xi on Sigma^2", r.x, "distance " + std::to_string(d)});
        }
    }
    // Zeros of xi|Sigma^k stay off Sigma^{k+2}.
    for (std::size_t k = 1; k < n; ++k) {
        if (k + 2 > n) continue;
        ck.restricted_exclusion_vacuous = false;
        std::vector<Point> far = cloud(k + 2);
        for (const ZeroRecord& r : z.restricted[k]) {
            double d = min_distance(r.x, far);
            if (d >= 0.0 && d <= 1e-3) {
                ck.restricted_exclusion = false;
                ck.failures.push_back({"zero of xi|Sigma^" + std::to_string(k) + " on Sigma^" + std::to_string(k + 2), r.x, ""});
            }
        }
    }
    // Every A_n point is a zero of xi|Sigma^{n-1}.
    if (n >= 2) {
        if (const StratumResult* top = strata.at(n)) {
            for (const auto& p : top->points) {
                double d = -1.0;
                for (const ZeroRecord& r : z.restricted[n - 1]) {
                    double e = distance(r.x, p.x);
                    if (d < 0.0 || e < d) d = e;
                }
                if (d < 0.0 || d > ctx.same_point()) {
                    ck.top_forcing = false;
                    ck.failures.push_back({"A_n point missing from the zeros of xi|Sigma^" + std::to_string(n - 1), p.x, ""});
                }
            }
        }
    }
    auto all_yes = [&](const std::vector<ZeroRecord>& v) {
        for (const ZeroRecord& r : v)
            if (r.nondegenerate != Verdict::yes) {
                ck.all_nondegenerate = false;
                ck.failures.push_back({"zero not definitely nondegenerate", r.x,
                                       "depth " + std::to_string(r.depth) + ", verdict " + to_string(r.nondegenerate)});
            }
    };
    all_yes(z.unrestricted);
    for (const auto& [k, v] : z.restricted) all_yes(v);
    // At A_1 zeros the unrestricted and Sigma^1-restricted verdicts agree.
    if (n >= 2) {
        for (const ZeroRecord& r : z.unrestricted) {
            if (r.type != 1) continue;
            std::optional<ZeroRecord> rr;
            for (const ZeroRecord& q : z.restricted[1])
                if (distance(q.x, r.x) <= ctx.same_point()) rr = q;
            if (!rr) {
                rr = zero_at(ctx, r.x, 1, a);
                if (rr) nondegeneracy(ctx, *rr, a);
            }
            if (!rr || rr->nondegenerate != r.nondegenerate) {
                ck.a1_equivalence = false;
                ck.failures.push_back({"A1 zero: restricted and unrestricted verdicts differ", r.x, ""});
            }
        }
    }
    // At A_{k+1} points the depth-k and depth-(k+1) augmented systems are solved in place or not at all.
    for (std::size_t k = 1; k < n; ++k) {
        const StratumResult* s = strata.at(k + 1);
        if (!s) continue;
        for (std::size_t i = 0; i < s->points.size(); ++i) {
            if (s->classes[i].type != static_cast<int>(k + 1)) continue;
            const Point& x = s->points[i].x;
            auto here = [&](std::size_t depth) {
                std::optional<ZeroRecord> r = zero_at(ctx, x, depth, a);
                return r && distance(r->x, x) <= ctx.same_point();
            };
            if (here(k) != here(k + 1)) {
                ck.restriction_equivalence = false;
                ck.failures.push_back({"restriction equivalence fails", x, "depth " + std::to_string(k)});
            }
        }
    }
    return z;
}

}  // namespace morin::analysis
