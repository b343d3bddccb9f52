#include "morin/chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace morin::model {

namespace {

std::string join(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

double minor_of(const linalg::Mat& b, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    if (rows.empty()) return 1.0;
    return linalg::determinant(b.select_rows(rows).select_cols(cols));
}

std::vector<Expr> simplified_gradient(const Expr& e, std::size_t dim) {
    std::vector<Expr> g = expr::gradient(e, dim);
    for (Expr& d : g) d = expr::simplify(d);
    return g;
}

// Row vectors stacked; omega rows share one scale so that small rows stay small.
linalg::Mat scaled_stack(const linalg::Mat& omega, const linalg::Mat& unit_rows) {
    double big = 0.0;
    for (std::size_t i = 0; i < omega.rows(); ++i) big = std::max(big, linalg::norm(omega.row(i)));
    linalg::Mat w = omega;
    if (big > 0.0)
        for (std::size_t i = 0; i < w.rows(); ++i)
            for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) /= big;
    return w.stack(unit_rows);
}

// Unit conormal rows over candidate coframe rows; a nearly vanishing member scores as nearly dependent.
linalg::Mat supplement_stack(const linalg::Mat& conormal, const linalg::Mat& omega, const std::vector<std::size_t>& cols) {
    linalg::Mat unit(0, omega.cols());
    return normalized_rows(conormal, 1e-12).stack(scaled_stack(omega, unit).select_rows(cols));
}

}  // namespace

Atlas::Atlas(const Scene& scene) : scene_(scene) {
    const std::size_t dim = scene_.ambient_dim;
    std::vector<Expr> cons = scene_.constraints;
    for (const Expr& g : scene_.constraints)
        for (const Expr& d : simplified_gradient(g, dim)) cons.push_back(d);
    constraint_tape_ = expr::Tape(cons);
    std::vector<Expr> co;
    for (const auto& row : scene_.coframe)
        for (const Expr& e : row) co.push_back(e);
    coframe_tape_ = expr::Tape(co);
}

bool Atlas::constraints_at(std::span<const double> x, std::vector<double>& g, linalg::Mat& grad) const {
    const std::size_t c = scene_.codim();
    const std::size_t dim = scene_.ambient_dim;
    std::vector<double> buf(constraint_tape_.output_count());
    std::vector<double> work;
    if (!constraint_tape_.evaluate(x, buf, work)) return false;
    g.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(c));
    grad = linalg::Mat(c, dim);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < dim; ++j) grad(i, j) = buf[c + i * dim + j];
    return true;
}

bool Atlas::coframe_at(std::span<const double> x, linalg::Mat& omega) const {
    const std::size_t dim = scene_.ambient_dim;
    omega = linalg::Mat(scene_.n(), dim);
    std::vector<double> buf(coframe_tape_.output_count());
    std::vector<double> work;
    if (!coframe_tape_.evaluate(x, buf, work)) return false;
    for (std::size_t i = 0; i < scene_.n(); ++i)
        for (std::size_t j = 0; j < dim; ++j) omega(i, j) = buf[i * dim + j];
    return true;
}

linalg::RankReport Atlas::coframe_rank(std::span<const double> x) const {
    std::vector<double> g;
    linalg::Mat grad;
    linalg::Mat omega;
    if (!constraints_at(x, g, grad) || !coframe_at(x, omega)) throw expr::DomainError("coframe not defined at point");
    linalg::RankReport r = linalg::numeric_rank(scaled_stack(omega, normalized_rows(grad, tol())), tol());
    r.rank = r.rank >= scene_.codim() ? r.rank - scene_.codim() : 0;
    return r;
}

double Atlas::best_pivot_abs(const linalg::Mat& omega) const {
    const std::size_t n = scene_.n();
    linalg::Mat b = omega.transpose();
    double best = 0.0;
    for (const auto& rows : combinations(scene_.ambient_dim, n - 1))
        for (const auto& cols : combinations(n, n - 1)) best = std::max(best, std::abs(minor_of(b, rows, cols)));
    return best;
}

PivotSelection Atlas::select_pivot(std::span<const double> anchor) const {
    const std::size_t n = scene_.n();
    linalg::Mat omega;
    if (!coframe_at(anchor, omega)) throw GenericityError("coframe not defined at anchor");
    linalg::Mat b = omega.transpose();
    PivotSelection best;
    double best_abs = -1.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) scale = std::max(scale, std::abs(b(i, j)));
    for (const auto& rows : combinations(scene_.ambient_dim, n - 1)) {
        for (const auto& cols : combinations(n, n - 1)) {
            double v = minor_of(b, rows, cols);
            if (std::abs(v) > best_abs) {
                best_abs = std::abs(v);
                best = {rows, cols, v};
            }
        }
    }
    if (n > 1 && best_abs <= tol() * std::pow(std::max(scale, 1e-300), static_cast<double>(n - 1)))
        throw GenericityError("coframe rank below n-1: no nonvanishing pivot minor");
    return best;
}

std::shared_ptr<const Atlas::Sigma1Family> Atlas::family(const PivotSelection& pivot) {
    std::lock_guard lock(mutex_);
    std::string key = "R" + join(pivot.row_indices) + "|C" + join(pivot.col_indices);
    if (auto it = families_.find(key); it != families_.end()) return it->second;

    const std::size_t n = scene_.n();
    const std::size_t dim = scene_.ambient_dim;
    std::size_t free_col = 0;
    while (std::find(pivot.col_indices.begin(), pivot.col_indices.end(), free_col) != pivot.col_indices.end()) ++free_col;
    std::vector<std::size_t> cols = pivot.col_indices;
    cols.push_back(free_col);
    // Entry (row, col) of the component matrix is component row of coframe member col.
    auto entry = [&](std::size_t row, std::size_t col) { return scene_.coframe[col][row]; };

    auto f = std::make_shared<Sigma1Family>();
    f->pivot = pivot;
    std::vector<std::vector<Expr>> pm(n - 1, std::vector<Expr>(n - 1));
    for (std::size_t a = 0; a + 1 < n; ++a)
        for (std::size_t b = 0; b + 1 < n; ++b) pm[a][b] = entry(pivot.row_indices[a], pivot.col_indices[b]);
    f->pivot_minor = expr::simplify(expr::symbolic_determinant(pm));
    for (std::size_t i = 0; i < dim; ++i) {
        if (std::find(pivot.row_indices.begin(), pivot.row_indices.end(), i) != pivot.row_indices.end()) continue;
        std::vector<std::size_t> rows = pivot.row_indices;
        rows.push_back(i);
        std::vector<std::vector<Expr>> m(n, std::vector<Expr>(n));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) m[a][b] = entry(rows[a], cols[b]);
        Expr minor = expr::simplify(expr::symbolic_determinant(m));
        f->rows.push_back(i);
        f->gradients.push_back(simplified_gradient(minor, dim));
        f->minors.push_back(minor);
    }
    std::vector<Expr> flat;
    for (const auto& g : f->gradients) flat.insert(flat.end(), g.begin(), g.end());
    f->gradient_tape = std::make_shared<const expr::Tape>(flat);
    families_[key] = f;
    return f;
}

std::shared_ptr<const StratumChart> Atlas::finish(std::shared_ptr<StratumChart> chart) {
    std::lock_guard lock(mutex_);
    if (auto it = charts_.find(chart->key); it != charts_.end()) return it->second;
    std::vector<Expr> outputs = chart->equations;
    for (const auto& g : chart->conormal_gradients) outputs.insert(outputs.end(), g.begin(), g.end());
    outputs.insert(outputs.end(), chart->audits.begin(), chart->audits.end());
    outputs.push_back(chart->pivot_minor);
    chart->tape = std::make_shared<const expr::Tape>(outputs);
    charts_[chart->key] = chart;
    return chart;
}

std::shared_ptr<const StratumChart> Atlas::build_sigma1_chart(const PivotSelection& pivot, std::span<const double> anchor) {
    const std::size_t dim = scene_.ambient_dim;
    const std::size_t keep = scene_.manifold_dim() - scene_.n() + 1;
    auto fam = family(pivot);

    std::vector<double> g;
    linalg::Mat grad;
    if (!constraints_at(anchor, g, grad)) throw GenericityError("constraints not defined at anchor");
    linalg::Mat basis = normalized_rows(grad, tol());

    std::vector<double> flat(fam->gradient_tape->output_count());
    std::vector<double> work;
    if (!fam->gradient_tape->evaluate(anchor, flat, work)) throw GenericityError("minor gradients not defined at anchor");
    std::vector<std::vector<double>> cand(fam->minors.size(), std::vector<double>(dim));
    double big = 0.0;
    for (std::size_t i = 0; i < fam->minors.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) cand[i][j] = flat[i * dim + j];
        big = std::max(big, linalg::norm(cand[i]));
    }
    // Greedy max-volume: each step keeps the minor whose gradient leaves the current span the most.
    std::vector<bool> used(cand.size(), false);
    std::vector<std::size_t> picked;
    for (std::size_t step = 0; step < keep; ++step) {
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (used[i]) continue;
            std::vector<double> r = basis.rows() ? linalg::project_out_rows(basis, cand[i], tol()) : cand[i];
            double s = big > 0.0 ? linalg::norm(r) / big : 0.0;
            if (s > best) {
                best = s;
                arg = i;
            }
        }
        if (best < 1e-6) throw GenericityError("not corank 1 transversal: bordered minors have dependent gradients at anchor");
        used[arg] = true;
        picked.push_back(arg);
        std::vector<double> unit = cand[arg];
        double nu = linalg::norm(unit);
        for (double& v : unit) v /= nu;
        basis = basis.stack(linalg::Mat::from_rows({unit}));
    }
    std::sort(picked.begin(), picked.end());

    auto chart = std::make_shared<StratumChart>();
    chart->depth = 1;
    chart->pivot = pivot;
    chart->pivot_minor = fam->pivot_minor;
    for (std::size_t i = 0; i < scene_.codim(); ++i) {
        chart->equations.push_back(scene_.constraints[i]);
        chart->labels.push_back("G" + std::to_string(i + 1));
        chart->conormal_gradients.push_back(simplified_gradient(scene_.constraints[i], dim));
    }
    chart->minor_gradient_tape = fam->gradient_tape;
    chart->kept_minors = picked;
    std::vector<std::size_t> rows;
    for (std::size_t i : picked) {
        chart->equations.push_back(fam->minors[i]);
        chart->labels.push_back("M" + std::to_string(fam->rows[i] + 1));
        chart->conormal_gradients.push_back(fam->gradients[i]);
        chart->minor_rows.push_back(fam->rows[i]);
        rows.push_back(fam->rows[i]);
    }
    for (std::size_t i = 0; i < fam->minors.size(); ++i)
        if (!used[i]) chart->audits.push_back(fam->minors[i]);
    chart->key = "d1|R" + join(pivot.row_indices) + "|C" + join(pivot.col_indices) + "|M" + join(rows);
    return finish(chart);
}

SupplementSelection Atlas::select_supplement(const StratumChart& previous, std::span<const double> anchor) const {
    const std::size_t n = scene_.n();
    const std::size_t k = previous.depth + 1;
    const std::size_t r = n - k + 1;
    const std::size_t q0 = equation_count(scene_, k - 2);
    ChartValues vals;
    linalg::Mat omega;
    if (!evaluate_chart(previous, anchor, vals) || !coframe_at(anchor, omega)) throw ChartSwitchRequest("chart not defined at anchor");
    std::vector<std::size_t> lower(q0);
    for (std::size_t i = 0; i < q0; ++i) lower[i] = i;
    linalg::Mat conormal = vals.gradients.select_rows(lower);

    SupplementSelection best;
    best.depth = k;
    best.margin = -1.0;
    for (const auto& cols : combinations(n, r)) {
        linalg::RankReport rep = linalg::numeric_rank(supplement_stack(conormal, omega, cols), tol());
        if (rep.rank != q0 + r) continue;
        double score = rep.singular_values.back();
        if (score > best.margin) {
            best.col_indices = cols;
            best.margin = score;
        }
    }
    if (best.margin < 0.0) throw ChartSwitchRequest("no coframe subset supplements the conormal space at anchor");
    return best;
}

Expr Atlas::build_delta(const StratumChart& previous, const SupplementSelection& supplement) const {
    std::vector<std::vector<Expr>> m = previous.conormal_gradients;
    for (std::size_t j : supplement.col_indices) m.push_back(scene_.coframe[j]);
    return expr::simplify(expr::symbolic_determinant(m));
}

std::shared_ptr<const StratumChart> Atlas::extend(const std::shared_ptr<const StratumChart>& previous, std::span<const double> x, bool use_hints) {
    const std::size_t k = previous->depth + 1;
    SupplementSelection supp = select_supplement(*previous, x);
    bool hinted = use_hints && hint_active(k);
    std::string key = previous->key + "|S" + std::to_string(k) + ":" + join(supp.col_indices) + (hinted ? "h" : "");
    {
        std::lock_guard lock(mutex_);
        if (auto it = charts_.find(key); it != charts_.end()) return it->second;
    }
    auto chart = std::make_shared<StratumChart>(*previous);
    chart->depth = k;
    chart->tape.reset();
    chart->supplements.push_back(supp);
    Expr delta = hinted ? scene_.hints.at(k) : build_delta(*previous, supp);
    chart->equations.push_back(delta);
    chart->labels.push_back("delta_" + std::to_string(k));
    chart->conormal_gradients.push_back(simplified_gradient(delta, scene_.ambient_dim));
    chart->key = key;
    return finish(chart);
}

std::shared_ptr<const StratumChart> Atlas::chart_at_impl(std::span<const double> x, std::size_t depth, bool use_hints) {
    if (depth == 0) {
        std::lock_guard lock(mutex_);
        if (auto it = charts_.find("d0"); it != charts_.end()) return it->second;
        auto chart = std::make_shared<StratumChart>();
        chart->pivot_minor = Expr::constant(1L);
        for (std::size_t i = 0; i < scene_.codim(); ++i) {
            chart->equations.push_back(scene_.constraints[i]);
            chart->labels.push_back("G" + std::to_string(i + 1));
            chart->conormal_gradients.push_back(simplified_gradient(scene_.constraints[i], scene_.ambient_dim));
        }
        chart->key = "d0";
        return finish(chart);
    }
    std::shared_ptr<const StratumChart> chart = build_sigma1_chart(select_pivot(x), x);
    for (std::size_t d = 2; d <= depth; ++d) chart = extend(chart, x, use_hints);
    return chart;
}

std::shared_ptr<const StratumChart> Atlas::chart_at(std::span<const double> x, std::size_t depth) {
    return chart_at_impl(x, depth, true);
}

std::vector<std::shared_ptr<const StratumChart>> Atlas::build_chain(std::size_t k_max, const std::vector<std::vector<double>>& anchors) {
    std::vector<std::shared_ptr<const StratumChart>> out;
    std::vector<std::string> keys;
    for (const auto& a : anchors) {
        for (std::size_t d = 1; d <= k_max; ++d) {
            std::shared_ptr<const StratumChart> c;
            try {
                c = chart_at(a, d);
            } catch (const GenericityError&) {
                break;
            } catch (const ChartSwitchRequest&) {
                break;
            }
            if (std::find(keys.begin(), keys.end(), c->key) == keys.end()) {
                keys.push_back(c->key);
                out.push_back(c);
            }
        }
    }
    return out;
}

double Atlas::minor_margin(const StratumChart& chart, std::span<const double> x, const ChartValues& vals) const {
    const std::size_t c = scene_.codim();
    const std::size_t dim = scene_.ambient_dim;
    const std::size_t count = chart.minor_gradient_tape->output_count() / dim;
    if (count == chart.kept_minors.size()) return 1.0;
    std::vector<double> buf(chart.minor_gradient_tape->output_count());
    std::vector<double> work;
    if (!chart.minor_gradient_tape->evaluate(x, buf, work)) return 0.0;
    linalg::Mat all(count, dim);
    double big = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < dim; ++j) all(i, j) = buf[i * dim + j];
        big = std::max(big, linalg::norm(all.row(i)));
    }
    if (big == 0.0) return 0.0;
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < dim; ++j) all(i, j) /= big;
    std::vector<std::size_t> lower(c);
    for (std::size_t i = 0; i < c; ++i) lower[i] = i;
    linalg::Mat g = normalized_rows(vals.gradients.select_rows(lower), tol());
    auto score = [&](const std::vector<std::size_t>& subset) {
        std::vector<double> s = linalg::singular_values(g.stack(all.select_rows(subset)));
        return s.empty() ? 1.0 : s.back();
    };
    double top = 0.0;
    for (const auto& subset : combinations(count, chart.kept_minors.size())) top = std::max(top, score(subset));
    return top > 0.0 ? score(chart.kept_minors) / top : 0.0;
}

ChartMargins Atlas::margins(const StratumChart& chart, std::span<const double> x) const {
    ChartMargins m;
    if (chart.depth == 0) {
        m.pivot = 1.0;
        m.evaluated = true;
        return m;
    }
    ChartValues vals;
    linalg::Mat omega;
    if (!evaluate_chart(chart, x, vals) || !coframe_at(x, omega)) return m;
    double best = best_pivot_abs(omega);
    m.pivot = best > 0.0 ? std::abs(vals.pivot) / best : 0.0;
    m.minors = minor_margin(chart, x, vals);
    const std::size_t n = scene_.n();
    for (const SupplementSelection& s : chart.supplements) {
        const std::size_t q0 = equation_count(scene_, s.depth - 2);
        const std::size_t r = n - s.depth + 1;
        std::vector<std::size_t> lower(q0);
        for (std::size_t i = 0; i < q0; ++i) lower[i] = i;
        linalg::Mat conormal = vals.gradients.select_rows(lower);
        auto score = [&](const std::vector<std::size_t>& cols) {
            linalg::RankReport rep = linalg::numeric_rank(supplement_stack(conormal, omega, cols), tol());
            return rep.rank == q0 + r ? rep.singular_values.back() : 0.0;
        };
        double top = 0.0;
        for (const auto& cols : combinations(n, r)) top = std::max(top, score(cols));
        m.supplements.push_back(top > 0.0 ? score(s.col_indices) / top : 0.0);
    }
    m.evaluated = true;
    return m;
}

bool Atlas::chart_valid(const StratumChart& chart, std::span<const double> x, double threshold) const {
    ChartMargins m = margins(chart, x);
    return m.evaluated && m.worst() >= threshold;
}

std::shared_ptr<const StratumChart> Atlas::keep_or_switch(const std::shared_ptr<const StratumChart>& current, std::span<const double> x) {
    ChartMargins m = margins(*current, x);
    if (m.evaluated && m.worst() >= kSwitchRatio) return current;
    return chart_at(x, current->depth);
}

bool Atlas::project_to_lower(const StratumChart& chart, std::vector<double>& y) const {
    const std::size_t q = chart.equations.size() - 1;
    std::vector<std::size_t> lower(q);
    for (std::size_t i = 0; i < q; ++i) lower[i] = i;
    ChartValues v;
    for (int it = 0; it < 30; ++it) {
        if (!evaluate_chart(chart, y, v)) return false;
        std::vector<double> r(v.equations.begin(), v.equations.begin() + static_cast<std::ptrdiff_t>(q));
        if (linalg::norm(r) <= 1e-12) return true;
        std::vector<double> step = linalg::min_norm_solve(v.gradients.select_rows(lower), r);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] -= step[j];
    }
    return false;
}

Atlas::HintAudit Atlas::audit_hint(std::size_t depth, const std::vector<std::vector<double>>& samples) {
    HintAudit audit;
    auto it = scene_.hints.find(depth);
    if (it == scene_.hints.end()) {
        audit.reason = "no hint for this depth";
        return audit;
    }
    const Expr& hint = it->second;
    std::vector<Expr> hint_grad = simplified_gradient(hint, scene_.ambient_dim);
    const double small = 1e-6 * scene_.box.diameter();
    bool have_ratio = false;
    // A nonvanishing factor cannot flip sign between nearby samples joined inside one chart.
    struct Signed {
        std::string key;
        std::vector<double> x;
        int sign;
    };
    std::vector<Signed> signs;
    const double near = 0.1 * scene_.box.diameter();
    for (const auto& x : samples) {
        std::shared_ptr<const StratumChart> chart;
        try {
            chart = chart_at_impl(x, depth, false);
        } catch (const std::exception&) {
            continue;
        }
        if (!chart_valid(*chart, x)) continue;
        ChartValues vals;
        if (!evaluate_chart(*chart, x, vals)) continue;
        double a = vals.equations.back();
        double na = linalg::norm(vals.gradients.row(vals.gradients.rows() - 1));
        double h = 0.0;
        std::vector<double> gh(scene_.ambient_dim);
        try {
            h = expr::evaluate(hint, x);
            for (std::size_t j = 0; j < gh.size(); ++j) gh[j] = expr::evaluate(hint_grad[j], x);
        } catch (const expr::DomainError&) {
            audit.reason = "hint not defined at a stratum sample";
            return audit;
        }
        double nh = linalg::norm(gh);
        // Distance-like magnitudes: zero sets must agree.
        bool za = std::abs(a) <= small * std::max(na, 1e-300);
        bool zh = std::abs(h) <= small * std::max(nh, 1e-300);
        if (za != zh) {
            audit.reason = "hint and automatic equation disagree on vanishing";
            return audit;
        }
        if (!za) {
            double ratio = a / h;
            if (!std::isfinite(ratio) || ratio == 0.0) {
                audit.reason = "hint ratio not finite";
                return audit;
            }
            have_ratio = true;
            int sg = ratio > 0.0 ? 1 : -1;
            for (const Signed& o : signs) {
                double d = 0.0;
                for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - o.x[j]) * (x[j] - o.x[j]);
                if (o.key != chart->key || o.sign == sg || std::sqrt(d) >= near) continue;
                bool valid_between = true;
                std::vector<double> y(x.size());
                for (int t = 1; t < 16 && valid_between; ++t) {
                    for (std::size_t j = 0; j < y.size(); ++j) y[j] = x[j] + (o.x[j] - x[j]) * t / 16.0;
                    valid_between = project_to_lower(*chart, y) && chart_valid(*chart, y, kSwitchRatio);
                }
                if (valid_between) {
                    audit.reason = "hint ratio changes sign between nearby samples";
                    return audit;
                }
            }
            signs.push_back({chart->key, x, sg});
        }
        ++audit.samples;
    }
    if (audit.samples < 5 || !have_ratio) {
        audit.reason = "too few valid stratum samples (" + std::to_string(audit.samples) + ")";
        return audit;
    }
    std::lock_guard lock(mutex_);
    hints_active_[depth] = true;
    audit.accepted = true;
    audit.reason = "proportional at " + std::to_string(audit.samples) + " samples";
    return audit;
}

bool Atlas::hint_active(std::size_t depth) const {
    std::lock_guard lock(mutex_);
    auto it = hints_active_.find(depth);
    return it != hints_active_.end() && it->second;
}

std::size_t Atlas::chart_count() const {
    std::lock_guard lock(mutex_);
    return charts_.size();
}

}  // namespace morin::model
