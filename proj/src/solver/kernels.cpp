#include "morin/solver.hpp"

#include <cmath>

namespace morin::solver {

OracleSystem::OracleSystem(const std::vector<Expr>& equations, std::size_t dim) : dim_(dim) {
    for (const Expr& e : equations) {
        std::vector<Expr> out{e};
        for (std::size_t j = 0; j < dim; ++j) out.push_back(expr::differentiate(e, j));
        tapes_.emplace_back(out);
    }
}

bool OracleSystem::cell_passes(std::span<const double> center, double radius, double* score) const {
    thread_local std::vector<double> buf;
    thread_local std::vector<double> work;
    buf.resize(dim_ + 1);
    double worst = 0.0;
    for (const expr::Tape& t : tapes_) {
        if (!t.evaluate(center, buf, work)) return false;
        double g = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) g += buf[1 + j] * buf[1 + j];
        g = std::sqrt(g);
        double v = std::abs(buf[0]);
        if (v > 2.0 * g * radius) return false;
        worst = std::max(worst, g > 0.0 ? v / g : 0.0);
    }
    if (score) *score = worst;
    return true;
}

std::vector<char> cell_test_batch(const OracleSystem& sys, const std::vector<Point>& centers, double radius,
                                  std::vector<double>& scores, Exec exec) {
    const long n = static_cast<long>(centers.size());
    std::vector<char> pass(centers.size(), 0);
    scores.assign(centers.size(), 0.0);
    if (exec == Exec::serial) {
        for (long i = 0; i < n; ++i) pass[i] = sys.cell_passes(centers[i], radius, &scores[i]) ? 1 : 0;
    } else {
#pragma omp parallel for schedule(dynamic, 64)
        for (long i = 0; i < n; ++i) pass[i] = sys.cell_passes(centers[i], radius, &scores[i]) ? 1 : 0;
    }
    return pass;
}

std::vector<NewtonResult> newton_batch(const Equations& eq, const std::vector<Point>& seeds, const SolveOptions& opts, Exec exec) {
    const long n = static_cast<long>(seeds.size());
    std::vector<NewtonResult> out(seeds.size());
    if (exec == Exec::serial) {
        for (long i = 0; i < n; ++i) out[i] = gauss_newton(eq, seeds[i], opts);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < n; ++i) out[i] = gauss_newton(eq, seeds[i], opts);
    }
    return out;
}

}  // namespace morin::solver
