#include "morin/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace morin::analysis {

std::string Classification::label() const {
    if (type < 0) return "inconclusive";
    if (type == 0) return "regular";
    return "A" + std::to_string(type);
}

RankCheck gradient_rank(const model::StratumChart& chart, std::span<const double> x, double tol) {
    RankCheck rc;
    model::ChartValues v;
    if (!model::evaluate_chart(chart, x, v)) return rc;
    rc.rows = v.gradients.rows();
    linalg::RankReport rep = linalg::numeric_rank(model::normalized_rows(v.gradients, tol), tol);
    rc.rank = rep.rank;
    rc.full = rep.rank == rc.rows;
    rc.gap = rep.gap_ratio;
    if (v.gradients.rows() == v.gradients.cols()) rc.determinant = linalg::determinant(v.gradients);
    if (rc.gap >= kGapRatio) rc.verdict = rc.full ? Verdict::yes : Verdict::no;
    return rc;
}

Classification classify_point(Context& ctx, std::span<const double> x) {
    Classification c;
    c.x.assign(x.begin(), x.end());
    model::Atlas& atlas = ctx.atlas();
    const std::size_t n = ctx.n();
    const double tol = atlas.tol();
    linalg::RankReport r = atlas.coframe_rank(x);
    c.gap = r.gap_ratio;
    if (r.rank == n) {
        c.type = c.gap >= kGapRatio ? 0 : -1;
        return c;
    }
    if (r.rank + 1 != n) return c;
    c.intersection_dims.push_back(0);
    linalg::Mat omega;
    std::vector<double> g;
    linalg::Mat grad;
    if (!atlas.coframe_at(x, omega) || !atlas.constraints_at(x, g, grad)) return c;
    int type = static_cast<int>(n);
    for (std::size_t d = 1; d < n; ++d) {
        auto chart = try_chart(atlas, x, d);
        model::ChartValues v;
        if (!chart || !model::evaluate_chart(*chart, x, v)) return c;
        model::IntersectionDim id = model::intersection_dimension(omega, grad, v.gradients, tol);
        c.intersection_dims.push_back(id.dim);
        c.gap = std::min(c.gap, id.gap);
        if (id.dim == d) continue;
        if (id.dim + 1 == d) {
            type = static_cast<int>(d);
            break;
        }
        return c;
    }
    c.type = c.gap >= kGapRatio ? type : -1;
    return c;
}

}  // namespace morin::analysis
