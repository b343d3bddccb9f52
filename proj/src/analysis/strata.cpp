#include "morin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morin::analysis {

std::vector<Point> StratumResult::cloud() const {
    std::vector<Point> out;
    for (const auto& p : points) out.push_back(p.x);
    for (const auto& c : curves) {
        std::size_t end = c.closed ? c.points.size() - 1 : c.points.size();
        out.insert(out.end(), c.points.begin(), c.points.begin() + static_cast<std::ptrdiff_t>(end));
    }
    out.insert(out.end(), samples.begin(), samples.end());
    return out;
}

const StratumResult* Strata::at(std::size_t depth) const {
    for (const auto& l : levels)
        if (l.depth == depth) return &l;
    return nullptr;
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// Points at least `spacing` apart, in input order.
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

std::vector<Point> oracle_seeds(Context& ctx, const std::vector<Expr>& eqs, std::size_t& cells) {
    solver::OracleSystem sys(eqs, ctx.dim());
    solver::OracleOptions o = ctx.oracle_options(ctx.solve().grid);
    o.refine_levels = 0;
    solver::OracleResult r = solver::grid_oracle(sys, o);
    cells += r.cells_tested;
    double diag = 0.0;
    for (double h : r.cell_size) diag += h * h;
    const double spacing = 5.0 * std::sqrt(diag);
    std::vector<Point> seeds;
    for (const auto& c : r.clusters) {
        seeds.push_back(c.best_cell);
        std::vector<Point> t = thin(c.members, spacing);
        seeds.insert(seeds.end(), t.begin(), t.end());
    }
    return seeds;
}

struct DeltaAt {
    bool ok = false;
    std::shared_ptr<const model::StratumChart> chart;
    double value = 0.0;
    double scaled = 0.0;    // |delta| / |grad delta|
    double hadamard = 0.0;  // |det| / product of row norms of the delta matrix
};

DeltaAt delta_at(Context& ctx, std::span<const double> x, std::size_t depth) {
    DeltaAt d;
    d.chart = try_chart(ctx.atlas(), x, depth);
    model::ChartValues v;
    linalg::Mat omega;
    if (!d.chart || !model::evaluate_chart(*d.chart, x, v) || !ctx.atlas().coframe_at(x, omega)) return d;
    const std::size_t q = v.equations.size();
    d.value = v.equations.back();
    double g = linalg::norm(v.gradients.row(q - 1));
    d.scaled = g > 0.0 ? std::abs(d.value) / g : std::numeric_limits<double>::infinity();
    std::vector<std::size_t> lower(q - 1);
    for (std::size_t i = 0; i + 1 < q; ++i) lower[i] = i;
    linalg::Mat m = v.gradients.select_rows(lower).stack(omega.select_rows(d.chart->supplements.back().col_indices));
    double prod = 1.0;
    for (std::size_t i = 0; i < m.rows(); ++i) prod *= linalg::norm(m.row(i));
    d.hadamard = prod > 0.0 ? std::abs(linalg::determinant(m)) / prod : 0.0;
    d.ok = true;
    return d;
}

// Seeds for the zeros of delta_depth along the curves of the stratum below.
std::vector<Point> delta_seeds(Context& ctx, const StratumResult& lower, std::size_t depth, StratumResult& out) {
    std::vector<Point> seeds;
    const double step = ctx.solve().step();
    for (const auto& curve : lower.curves) {
        const auto& p = curve.points;
        std::vector<DeltaAt> d;
        std::size_t valid = 0;
        std::size_t flat = 0;
        for (const Point& x : p) {
            d.push_back(delta_at(ctx, x, depth));
            if (d.back().ok) {
                ++valid;
                if (d.back().hadamard <= 1e-6) ++flat;
            }
        }
        if (valid > 0 && 2 * flat >= valid) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (d[i].ok && d[i].hadamard <= 1e-6) {
                    out.degenerate.push_back({"delta_" + std::to_string(depth) + " vanishes along Sigma^" + std::to_string(depth - 1), p[i],
                                              std::to_string(flat) + " of " + std::to_string(valid) + " curve vertices"});
                    break;
                }
            }
            continue;
        }
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            if (!d[i].ok) continue;
            // Compare signs inside one chart: evaluate the chart of vertex i at vertex i + 1.
            model::ChartValues v;
            if (model::evaluate_chart(*d[i].chart, p[i + 1], v)) {
                double a = d[i].value;
                double b = v.equations.back();
                if ((a < 0.0) != (b < 0.0) || a == 0.0) {
                    double t = (a == b) ? 0.0 : a / (a - b);
                    Point s(p[i].size());
                    for (std::size_t j = 0; j < s.size(); ++j) s[j] = p[i][j] + t * (p[i + 1][j] - p[i][j]);
                    seeds.push_back(std::move(s));
                }
            }
            if (i > 0 && d[i - 1].ok && d[i + 1].ok && d[i].scaled <= d[i - 1].scaled && d[i].scaled <= d[i + 1].scaled && d[i].scaled < step)
                seeds.push_back(p[i]);
        }
    }
    return seeds;
}

std::vector<Point> project_samples(Context& ctx, const std::vector<Point>& seeds, std::size_t depth) {
    ChartEquations eq(ctx.atlas(), depth);
    std::vector<solver::NewtonResult> runs = solver::newton_batch(eq, seeds, ctx.solve(), ctx.solve().exec);
    std::vector<Point> pts;
    for (const auto& r : runs)
        if (r.converged && ctx.solve().inside(r.x)) pts.push_back(r.x);
    std::vector<Point> out = thin(pts, ctx.solve().step());
    std::sort(out.begin(), out.end(), solver::lex_less);
    return out;
}

void finish_points(Context& ctx, StratumResult& s) {
    for (const auto& p : s.points) {
        s.classes.push_back(classify_point(ctx, p.x));
        auto chart = try_chart(ctx.atlas(), p.x, s.depth);
        s.charts.push_back(chart ? chart->key : "");
    }
}

}  // namespace

Strata compute_strata(Context& ctx, std::size_t k_max) {
    Strata out;
    const std::size_t n = ctx.n();
    k_max = std::min(k_max, n);
    for (std::size_t k = 1; k <= k_max; ++k) {
        StratumResult s;
        s.depth = k;
        s.dimension = n - k;
        const StratumResult* lower = out.at(k - 1);
        if (k >= 2 && ctx.scene().hints.count(k)) {
            model::Atlas::HintAudit audit = ctx.atlas().audit_hint(k, lower ? lower->cloud() : std::vector<Point>{});
            out.hints.push_back({k, audit.accepted, audit.samples, audit.reason});
        }
        if (k >= 2 && (!lower || lower->empty())) {
            out.levels.push_back(std::move(s));
            continue;
        }
        std::vector<Point> seeds;
        if (k >= 2 && !lower->curves.empty())
            seeds = delta_seeds(ctx, *lower, k, s);
        else
            seeds = oracle_seeds(ctx, sigma_equations(ctx.scene(), k), s.oracle_cells);
        ChartEquations eq(ctx.atlas(), k);
        if (s.dimension == 0) {
            s.points = solver::solve_from_seeds(eq, seeds, ctx.solve(), &s.stats);
            finish_points(ctx, s);
        } else if (s.dimension == 1) {
            s.curves = solver::trace_curves(eq, seeds, ctx.solve());
        } else {
            s.samples = project_samples(ctx, seeds, k);
        }
        out.levels.push_back(std::move(s));
    }
    return out;
}

}  // namespace morin::analysis
