#pragma once

#include "morin/expr.hpp"
#include "morin/linalg.hpp"
#include "morin/tape.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace morin::solver {

using expr::Expr;
using Point = std::vector<double>;

enum class Exec { serial, parallel };

struct SolveOptions {
    std::vector<std::pair<double, double>> box;  // applies to the leading box.size() unknowns
    double tol_residual = 1e-10;
    double tol_rank = 1e-8;
    std::size_t grid = 64;
    std::size_t newton_max_iter = 50;
    double dedup_radius = 1e-6;  // relative to the box diameter
    double trace_step = 0.0;     // arc-length step; 0 means 1% of the box diameter
    Exec exec = Exec::parallel;

    double diameter() const;
    double step() const { return trace_step > 0.0 ? trace_step : 0.01 * diameter(); }
    bool inside(std::span<const double> x, double slack = 1e-9) const;
};

// A square or overdetermined (or, for curves, one-short) smooth system.
class Equations {
public:
    virtual ~Equations() = default;
    virtual std::size_t unknowns() const = 0;
    // Residual and Jacobian; false where undefined.
    virtual bool evaluate(std::span<const double> x, std::vector<double>& r, linalg::Mat& jac) const = 0;
    // Largest scaled audit residual at a solved point; 0 when there are no audits.
    virtual double audit(std::span<const double> x) const;
};

// Equations given as expressions, compiled into one tape.
class ExprEquations : public Equations {
public:
    ExprEquations(std::vector<Expr> equations, std::size_t unknowns, std::vector<Expr> audits = {});

    std::size_t unknowns() const override { return unknowns_; }
    bool evaluate(std::span<const double> x, std::vector<double>& r, linalg::Mat& jac) const override;
    double audit(std::span<const double> x) const override;
    const std::vector<Expr>& equations() const { return equations_; }
    const std::vector<Expr>& audits() const { return audits_; }

private:
    std::vector<Expr> equations_;
    std::vector<Expr> audits_;
    std::size_t unknowns_;
    expr::Tape tape_;        // equations, gradients row-major
    expr::Tape audit_tape_;  // audits, gradients row-major
};

// Residual with each row divided by max(1, |gradient row|).
double scaled_residual(const std::vector<double>& r, const linalg::Mat& jac);

struct NewtonResult {
    Point x;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Damped Gauss-Newton with pseudo-inverse steps (minimum-norm for underdetermined systems).
NewtonResult gauss_newton(const Equations& eq, Point x0, const SolveOptions& opts);

struct SolvedPoint {
    Point x;
    double residual_norm = 0.0;
    double audit_residual = 0.0;
    linalg::RankReport jacobian_rank;
    std::size_t converged_from = 0;
};

struct SolveStats {
    std::size_t seeds = 0;
    std::size_t converged = 0;
    std::size_t outside = 0;
    std::size_t audit_rejected = 0;
    std::size_t duplicates = 0;
};

// Kernels with a serial reference and an OpenMP variant producing identical results.
std::vector<NewtonResult> newton_batch(const Equations& eq, const std::vector<Point>& seeds, const SolveOptions& opts, Exec exec);

// Gauss-Newton from every seed; keeps converged points inside the box that pass the audits,
// dedups by radius (lower residual wins) and sorts lexicographically.
std::vector<SolvedPoint> solve_from_seeds(const Equations& eq, const std::vector<Point>& seeds, const SolveOptions& opts,
                                          SolveStats* stats = nullptr);

// Row-normalized Jacobian rank at x.
linalg::RankReport jacobian_rank(const Equations& eq, std::span<const double> x, double tol);

struct CurveComponent {
    std::vector<Point> points;
    bool closed = false;
    bool complete = true;  // false after step-size collapse
    double arc_length = 0.0;
};

// Distance from x to the polyline.
double distance_to_polyline(const std::vector<Point>& poly, std::span<const double> x);

// Predictor-corrector tracing of a one-dimensional solution set from seeds; starts and steps must
// pass the audits, and seeds already covered by a traced component are skipped. Output is canonical:
// closed loops start at their lexicographically smallest vertex, components sorted by first vertex.
std::vector<CurveComponent> trace_curves(const Equations& eq, const std::vector<Point>& seeds, const SolveOptions& opts);

// Chart-free equations for the grid oracle, each compiled with its gradient.
class OracleSystem {
public:
    OracleSystem(const std::vector<Expr>& equations, std::size_t dim);
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return tapes_.size(); }
    // Cell test: every equation satisfies |f(c)| <= 2 |grad f(c)| r. Writes a distance-like score.
    bool cell_passes(std::span<const double> center, double radius, double* score = nullptr) const;

private:
    std::size_t dim_;
    std::vector<expr::Tape> tapes_;
};

std::vector<char> cell_test_batch(const OracleSystem& sys, const std::vector<Point>& centers, double radius,
                                  std::vector<double>& scores, Exec exec);

struct OracleOptions {
    std::vector<std::pair<double, double>> box;
    std::size_t grid = 128;
    std::size_t refine_levels = 0;    // local bisections below grid resolution for point clusters (at least 2 probe levels)
    std::size_t cell_budget = 200000;
    Exec exec = Exec::parallel;
};

struct OracleCluster {
    Point centroid;
    Point best_cell;      // cell center with the smallest score
    double extent = 0.0;  // largest distance from centroid to a cell center
    std::size_t cells = 0;
    bool point_like = false;
    double boundary_inset = 0.0;  // smallest distance of a cell center to the box boundary
    std::vector<Point> members;   // cell centers at grid resolution
};

struct OracleResult {
    std::vector<OracleCluster> clusters;
    std::size_t cells_tested = 0;
    bool budget_exhausted = false;
    std::size_t discarded = 0;      // clusters with no surviving cell under local bisection
    std::vector<double> cell_size;  // per axis at grid resolution
};

// Exhaustive hierarchical scan over the box; clusters of surviving cells at grid resolution,
// point-like clusters refined further. Deterministic order (by centroid).
OracleResult grid_oracle(const OracleSystem& sys, const OracleOptions& opts);

// Uniform grid of cell centers.
std::vector<Point> grid_points(const std::vector<std::pair<double, double>>& box, std::size_t per_axis);

bool lex_less(const Point& a, const Point& b);

}  // namespace morin::solver
