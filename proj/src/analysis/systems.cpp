#include "morin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace morin::analysis {

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::inconclusive: break;
    }
    return "inconclusive";
}

Context::Context(model::Scene scene, solver::Exec exec) : atlas_(scene) {
    solve_.box = scene.box.bounds;
    solve_.tol_residual = scene.tol.residual;
    solve_.tol_rank = scene.tol.rank;
    solve_.grid = scene.grid;
    solve_.exec = exec;
}

solver::OracleOptions Context::oracle_options(std::size_t grid) const {
    solver::OracleOptions o;
    o.box = solve_.box;
    o.grid = grid;
    o.refine_levels = 8;
    o.exec = solve_.exec;
    return o;
}

std::shared_ptr<const solver::ExprEquations> Context::augmented(const model::StratumChart& chart, const std::vector<double>& xi_coeffs) {
    std::string key = chart.key;
    char buf[32];
    for (double v : xi_coeffs) {
        std::snprintf(buf, sizeof buf, "|%.17g", v);
        key += buf;
    }
    std::lock_guard lock(mutex_);
    if (auto it = augmented_.find(key); it != augmented_.end()) return it->second;
    const std::size_t dim = scene().ambient_dim;
    const std::size_t q = chart.equations.size();
    std::vector<Expr> xi = xi_components(scene(), xi_coeffs);
    std::vector<Expr> eqs = chart.equations;
    for (std::size_t s = 0; s < dim; ++s) {
        std::vector<Expr> terms{xi[s]};
        for (std::size_t i = 0; i < q; ++i) terms.push_back(-(Expr::variable(dim + i) * chart.conormal_gradients[i][s]));
        eqs.push_back(expr::sum(terms));
    }
    auto sys = std::make_shared<const solver::ExprEquations>(eqs, dim + q, chart.audits);
    augmented_[key] = sys;
    return sys;
}

std::vector<Expr> xi_components(const model::Scene& scene, std::span<const double> a) {
    std::vector<Expr> xi;
    for (std::size_t s = 0; s < scene.ambient_dim; ++s) {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < scene.n(); ++i)
            if (a[i] != 0.0) terms.push_back(Expr::constant(expr::Rational(a[i])) * scene.coframe[i][s]);
        xi.push_back(terms.empty() ? Expr::constant(0L) : expr::simplify(expr::sum(terms)));
    }
    return xi;
}

namespace {

std::vector<Expr> gradient_of(const Expr& e, std::size_t dim) {
    std::vector<Expr> g;
    for (std::size_t j = 0; j < dim; ++j) g.push_back(expr::simplify(expr::differentiate(e, j)));
    return g;
}

Expr minor(const std::vector<std::vector<Expr>>& rows, const std::vector<std::size_t>& cols) {
    std::vector<std::vector<Expr>> m;
    for (const auto& r : rows) {
        std::vector<Expr> row;
        for (std::size_t c : cols) row.push_back(r[c]);
        m.push_back(std::move(row));
    }
    return expr::simplify(expr::symbolic_determinant(m));
}

void push_nonzero(std::vector<Expr>& out, Expr e) {
    if (!e.is_zero()) out.push_back(std::move(e));
}

}  // namespace

std::vector<Expr> sigma_equations(const model::Scene& scene, std::size_t depth) {
    const std::size_t dim = scene.ambient_dim;
    const std::size_t n = scene.n();
    std::vector<Expr> eqs = scene.constraints;
    if (depth == 0) return eqs;
    std::vector<std::vector<Expr>> rows = scene.coframe;
    for (const Expr& g : scene.constraints) rows.push_back(gradient_of(g, dim));
    for (const auto& cols : model::combinations(dim, rows.size())) push_nonzero(eqs, minor(rows, cols));
    std::vector<std::size_t> all(dim);
    for (std::size_t j = 0; j < dim; ++j) all[j] = j;
    for (std::size_t d = 2; d <= depth; ++d) {
        std::vector<std::vector<Expr>> grads;
        for (const Expr& e : eqs) grads.push_back(gradient_of(e, dim));
        std::vector<Expr> next;
        for (std::size_t j = 1; j < n && j <= dim; ++j) {
            if (dim - j > grads.size()) continue;
            for (const auto& om : model::combinations(n, j)) {
                for (const auto& gs : model::combinations(grads.size(), dim - j)) {
                    std::vector<std::vector<Expr>> m;
                    for (std::size_t i : om) m.push_back(scene.coframe[i]);
                    for (std::size_t i : gs) m.push_back(grads[i]);
                    push_nonzero(next, minor(m, all));
                }
            }
        }
        eqs.insert(eqs.end(), next.begin(), next.end());
    }
    return eqs;
}

std::vector<Expr> zero_equations(const model::Scene& scene, std::size_t depth, std::span<const Expr> xi) {
    const std::size_t dim = scene.ambient_dim;
    std::vector<Expr> eqs = sigma_equations(scene, depth);
    const std::size_t r = depth == 0 ? scene.codim() : dim - scene.n() + depth;
    std::vector<std::vector<Expr>> grads;
    for (const Expr& e : eqs) grads.push_back(gradient_of(e, dim));
    std::vector<Expr> out = eqs;
    std::vector<Expr> xrow(xi.begin(), xi.end());
    for (const auto& gs : model::combinations(grads.size(), r)) {
        std::vector<std::vector<Expr>> m;
        for (std::size_t i : gs) m.push_back(grads[i]);
        m.push_back(xrow);
        for (const auto& cols : model::combinations(dim, r + 1)) push_nonzero(out, minor(m, cols));
    }
    return out;
}

std::shared_ptr<const model::StratumChart> try_chart(model::Atlas& atlas, std::span<const double> x, std::size_t depth) {
    try {
        return atlas.chart_at(x, depth);
    } catch (const model::GenericityError&) {
    } catch (const model::ChartSwitchRequest&) {
    } catch (const expr::DomainError&) {
    }
    return nullptr;
}

double chart_residual(const model::StratumChart& chart, std::span<const double> x) {
    model::ChartValues v;
    if (!model::evaluate_chart(chart, x, v)) return std::numeric_limits<double>::infinity();
    return solver::scaled_residual(v.equations, v.gradients);
}

bool ChartEquations::evaluate(std::span<const double> x, std::vector<double>& r, linalg::Mat& jac) const {
    auto chart = try_chart(*atlas_, x, depth_);
    if (!chart) return false;
    model::ChartValues v;
    if (!model::evaluate_chart(*chart, x, v)) return false;
    r = std::move(v.equations);
    jac = std::move(v.gradients);
    return true;
}

double ChartEquations::audit(std::span<const double> x) const {
    auto chart = try_chart(*atlas_, x, depth_);
    if (!chart) return std::numeric_limits<double>::infinity();
    model::ChartValues v;
    if (!model::evaluate_chart(*chart, x, v)) return std::numeric_limits<double>::infinity();
    // Discarded minors vanish with the kept ones; relative to the pivot they share its scale.
    double worst = 0.0;
    for (double a : v.audits) worst = std::max(worst, std::abs(a));
    return worst / std::max(1.0, std::abs(v.pivot));
}

}  // namespace morin::analysis
