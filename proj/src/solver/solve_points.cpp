#include "morin/solver.hpp"

#include <algorithm>
#include <cmath>

namespace morin::solver {

std::vector<SolvedPoint> solve_from_seeds(const Equations& eq, const std::vector<Point>& seeds, const SolveOptions& opts,
                                          SolveStats* stats) {
    SolveStats local;
    local.seeds = seeds.size();
    std::vector<NewtonResult> runs = newton_batch(eq, seeds, opts, opts.exec);
    std::vector<SolvedPoint> found;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const NewtonResult& r = runs[i];
        if (!r.converged) continue;
        ++local.converged;
        if (!opts.inside(r.x)) {
            ++local.outside;
            continue;
        }
        SolvedPoint p;
        p.x = r.x;
        p.residual_norm = r.residual_norm;
        p.audit_residual = eq.audit(r.x);
        if (p.audit_residual > 10.0 * opts.tol_residual) {
            ++local.audit_rejected;
            continue;
        }
        p.converged_from = i;
        found.push_back(std::move(p));
    }
    // Dedup in seed order so that the result does not depend on thread scheduling.
    const double radius = opts.dedup_radius * opts.diameter();
    const std::size_t d = opts.box.size();
    std::vector<SolvedPoint> kept;
    for (SolvedPoint& p : found) {
        bool merged = false;
        for (SolvedPoint& q : kept) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (p.x[j] - q.x[j]) * (p.x[j] - q.x[j]);
            if (std::sqrt(s) <= radius) {
                if (p.residual_norm < q.residual_norm) q = p;
                merged = true;
                ++local.duplicates;
                break;
            }
        }
        if (!merged) kept.push_back(std::move(p));
    }
    for (SolvedPoint& p : kept) p.jacobian_rank = jacobian_rank(eq, p.x, opts.tol_rank);
    std::sort(kept.begin(), kept.end(), [](const SolvedPoint& a, const SolvedPoint& b) { return lex_less(a.x, b.x); });
    if (stats) *stats = local;
    return kept;
}

}  // namespace morin::solver
