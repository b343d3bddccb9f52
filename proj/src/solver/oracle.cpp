#include "morin/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace morin::solver {

namespace {

using Index = std::vector<long>;

struct Cell {
    Index idx;  // integer coordinates at the current level
    double score = 0.0;
};

Point center_of(const Index& idx, const std::vector<std::pair<double, double>>& box, const std::vector<double>& h) {
    Point c(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) c[a] = box[a].first + (static_cast<double>(idx[a]) + 0.5) * h[a];
    return c;
}

double half_diagonal(const std::vector<double>& h) {
    double s = 0.0;
    for (double v : h) s += v * v;
    return 0.5 * std::sqrt(s);
}

// Children of each cell after one bisection per axis.
std::vector<Index> children(const std::vector<Cell>& cells, std::size_t d) {
    std::vector<Index> out;
    out.reserve(cells.size() << d);
    for (const Cell& c : cells) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
            Index k(d);
            for (std::size_t a = 0; a < d; ++a) k[a] = 2 * c.idx[a] + static_cast<long>((mask >> a) & 1);
            out.push_back(std::move(k));
        }
    }
    return out;
}

std::vector<Cell> test(const OracleSystem& sys, const std::vector<Index>& idx, const std::vector<std::pair<double, double>>& box,
                       const std::vector<double>& h, Exec exec, std::size_t& tested) {
    std::vector<Point> centers;
    centers.reserve(idx.size());
    for (const Index& k : idx) centers.push_back(center_of(k, box, h));
    std::vector<double> scores;
    std::vector<char> pass = cell_test_batch(sys, centers, half_diagonal(h), scores, exec);
    tested += idx.size();
    std::vector<Cell> out;
    for (std::size_t i = 0; i < idx.size(); ++i)
        if (pass[i]) out.push_back({idx[i], scores[i]});
    return out;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Groups of cells touching across faces, edges or corners.
std::vector<std::vector<std::size_t>> components(const std::vector<Cell>& cells, std::size_t d) {
    std::map<Index, std::size_t> where;
    for (std::size_t i = 0; i < cells.size(); ++i) where[cells[i].idx] = i;
    UnionFind uf(cells.size());
    std::size_t neighbours = 1;
    for (std::size_t a = 0; a < d; ++a) neighbours *= 3;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t m = 0; m < neighbours; ++m) {
            Index k = cells[i].idx;
            std::size_t rest = m;
            for (std::size_t a = 0; a < d; ++a) {
                k[a] += static_cast<long>(rest % 3) - 1;
                rest /= 3;
            }
            auto it = where.find(k);
            if (it != where.end()) uf.unite(i, it->second);
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < cells.size(); ++i) groups[uf.find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, g] : groups) out.push_back(std::move(g));
    return out;
}

Point centroid(const std::vector<Point>& pts) {
    Point c(pts.front().size(), 0.0);
    for (const Point& p : pts)
        for (std::size_t a = 0; a < c.size(); ++a) c[a] += p[a];
    for (double& v : c) v /= static_cast<double>(pts.size());
    return c;
}

double extent_of(const std::vector<Point>& pts, const Point& c) {
    double e = 0.0;
    for (const Point& p : pts) {
        double s = 0.0;
        for (std::size_t a = 0; a < c.size(); ++a) s += (p[a] - c[a]) * (p[a] - c[a]);
        e = std::max(e, std::sqrt(s));
    }
    return e;
}

}  // namespace

OracleResult grid_oracle(const OracleSystem& sys, const OracleOptions& opts) {
    OracleResult res;
    const std::size_t d = opts.box.size();
    std::size_t base = opts.grid;
    std::size_t levels = 0;
    while (base > 8 && base % 2 == 0) {
        base /= 2;
        ++levels;
    }
    std::vector<double> h(d);
    for (std::size_t a = 0; a < d; ++a) h[a] = (opts.box[a].second - opts.box[a].first) / static_cast<double>(base);

    std::vector<Index> idx;
    {
        std::size_t total = 1;
        for (std::size_t a = 0; a < d; ++a) total *= base;
        for (std::size_t i = 0; i < total; ++i) {
            Index k(d);
            std::size_t rest = i;
            for (std::size_t a = d; a-- > 0;) {
                k[a] = static_cast<long>(rest % base);
                rest /= base;
            }
            idx.push_back(std::move(k));
        }
    }
    std::vector<Cell> cells = test(sys, idx, opts.box, h, opts.exec, res.cells_tested);
    for (std::size_t l = 0; l < levels; ++l) {
        if ((cells.size() << d) + res.cells_tested > opts.cell_budget) {
            res.budget_exhausted = true;
            return res;
        }
        for (double& v : h) v *= 0.5;
        cells = test(sys, children(cells, d), opts.box, h, opts.exec, res.cells_tested);
    }
    res.cell_size = h;

    for (const auto& group : components(cells, d)) {
        OracleCluster cl;
        double best = std::numeric_limits<double>::infinity();
        cl.boundary_inset = std::numeric_limits<double>::infinity();
        for (std::size_t i : group) {
            Point c = center_of(cells[i].idx, opts.box, h);
            if (cells[i].score < best) {
                best = cells[i].score;
                cl.best_cell = c;
            }
            for (std::size_t a = 0; a < d; ++a)
                cl.boundary_inset = std::min({cl.boundary_inset, c[a] - opts.box[a].first, opts.box[a].second - c[a]});
            cl.members.push_back(std::move(c));
        }
        cl.cells = group.size();
        cl.centroid = centroid(cl.members);
        cl.extent = extent_of(cl.members, cl.centroid);
        // Local bisection: a point cluster shrinks with the cells, a curve cluster does not.
        std::vector<Cell> local;
        for (std::size_t i : group) local.push_back(cells[i]);
        std::vector<double> hl = h;
        const std::size_t probe = 2;
        const std::size_t depth = std::max(probe, opts.refine_levels);
        bool vanished = false;
        for (std::size_t l = 0; l <= depth; ++l) {
            std::vector<Point> pts;
            for (const Cell& c : local) pts.push_back(center_of(c.idx, opts.box, hl));
            if (l == probe) {
                double e = extent_of(pts, centroid(pts));
                cl.point_like = e <= std::max(0.5 * cl.extent, half_diagonal(h));
                if (!cl.point_like) break;
            }
            if (l >= probe) cl.centroid = centroid(pts);
            if (l == depth) break;
            if ((local.size() << d) + res.cells_tested > opts.cell_budget) {
                res.budget_exhausted = true;
                break;
            }
            for (double& v : hl) v *= 0.5;
            std::vector<Cell> next = test(sys, children(local, d), opts.box, hl, opts.exec, res.cells_tested);
            if (next.empty()) {
                vanished = true;
                break;
            }
            local = std::move(next);
        }
        // No cell survives a finer test: the coarse cells passed only to first order.
        if (vanished) {
            ++res.discarded;
            continue;
        }
        res.clusters.push_back(std::move(cl));
    }
    std::sort(res.clusters.begin(), res.clusters.end(), [](const OracleCluster& a, const OracleCluster& b) { return lex_less(a.centroid, b.centroid); });
    return res;
}

}  // namespace morin::solver
