#pragma once

#include "morin/chart.hpp"
#include "morin/scene.hpp"
#include "morin/solver.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace morin::analysis {

using expr::Expr;
using solver::Point;

enum class Verdict { yes, no, inconclusive };
std::string to_string(Verdict v);

// Rank decisions are definite only with at least this gap ratio.
inline constexpr double kGapRatio = 1e2;

struct Witness {
    std::string condition;
    Point x;
    std::string detail;
};

// Scene, atlas and solver settings shared by the analyses.
class Context {
public:
    explicit Context(model::Scene scene, solver::Exec exec = solver::Exec::parallel);

    const model::Scene& scene() const { return atlas_.scene(); }
    model::Atlas& atlas() { return atlas_; }
    const solver::SolveOptions& solve() const { return solve_; }
    solver::OracleOptions oracle_options(std::size_t grid) const;
    std::size_t dim() const { return scene().ambient_dim; }
    std::size_t n() const { return scene().n(); }
    // Distance below which two points are the same point.
    double same_point() const { return solve_.dedup_radius * solve_.diameter(); }

    // Augmented system {E = 0, xi - J_E^T lambda = 0} in (x, lambda) for the equations of a chart, cached.
    std::shared_ptr<const solver::ExprEquations> augmented(const model::StratumChart& chart, const std::vector<double>& xi_coeffs);

private:
    model::Atlas atlas_;
    solver::SolveOptions solve_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const solver::ExprEquations>> augmented_;
};

// ---- equation systems ----

// xi_s = sum_i a_i omega_i^s in ambient components.
std::vector<Expr> xi_components(const model::Scene& scene, std::span<const double> a);

// Chart-free equations of Sigma^depth: constraints, maximal minors of [omega; grad G], then for each
// further depth the N x N minors of [omega; grad Eq] using between 1 and n-1 coframe rows.
std::vector<Expr> sigma_equations(const model::Scene& scene, std::size_t depth);
// Chart-free equations of the zeros of xi restricted to Sigma^depth (depth 0 is M itself).
std::vector<Expr> zero_equations(const model::Scene& scene, std::size_t depth, std::span<const Expr> xi);

// Equations of the depth-k chart selected at each point.
class ChartEquations : public solver::Equations {
public:
    ChartEquations(model::Atlas& atlas, std::size_t depth) : atlas_(&atlas), depth_(depth) {}
    std::size_t unknowns() const override { return atlas_->scene().ambient_dim; }
    bool evaluate(std::span<const double> x, std::vector<double>& r, linalg::Mat& jac) const override;
    double audit(std::span<const double> x) const override;

private:
    model::Atlas* atlas_;
    std::size_t depth_;
};

// Chart selection at x without exceptions.
std::shared_ptr<const model::StratumChart> try_chart(model::Atlas& atlas, std::span<const double> x, std::size_t depth);
// Scaled residual of a chart's equations at x; infinity where undefined.
double chart_residual(const model::StratumChart& chart, std::span<const double> x);

// ---- classification and genericity ----

struct RankCheck {
    std::size_t rows = 0;
    std::size_t rank = 0;
    bool full = false;
    double gap = 0.0;          // see linalg::RankReport::gap_ratio
    double determinant = 0.0;  // of the raw gradient matrix when square
    Verdict verdict = Verdict::inconclusive;
};

// Rank of the gradients of all equations of a chart (row-normalized).
RankCheck gradient_rank(const model::StratumChart& chart, std::span<const double> x, double tol);

struct Classification {
    Point x;
    int type = -1;  // 0 regular, k for A_k, -1 inconclusive
    std::vector<std::size_t> intersection_dims;  // entry d: dim(<omega> ∩ N*Sigma^d)
    double gap = 0.0;                            // smallest rank gap used in the decisions
    std::string label() const;
};

Classification classify_point(Context& ctx, std::span<const double> x);

struct StratumResult {
    std::size_t depth = 0;
    std::size_t dimension = 0;  // n - depth
    std::vector<solver::CurveComponent> curves;
    std::vector<solver::SolvedPoint> points;
    std::vector<Point> samples;  // strata of dimension >= 2
    std::vector<Classification> classes;
    std::vector<std::string> charts;  // chart key per point
    std::vector<Witness> degenerate;  // delta_depth vanishing along the lower stratum
    solver::SolveStats stats;
    std::size_t oracle_cells = 0;

    bool empty() const { return curves.empty() && points.empty() && samples.empty(); }
    // Points, curve vertices or samples.
    std::vector<Point> cloud() const;
};

struct HintRecord {
    std::size_t depth = 0;
    bool accepted = false;
    std::size_t samples = 0;
    std::string reason;
};

struct Strata {
    std::vector<StratumResult> levels;  // depth 1 upward
    std::vector<HintRecord> hints;
    const StratumResult* at(std::size_t depth) const;
};

Strata compute_strata(Context& ctx, std::size_t k_max);

struct CorankReport {
    Verdict verdict = Verdict::inconclusive;
    std::size_t samples = 0;
    std::map<std::size_t, std::size_t> rank_counts;  // coframe rank on TM -> samples
    std::vector<Witness> violations;
};

// Points of M from grid seeds projected by Gauss-Newton.
std::vector<Point> manifold_samples(Context& ctx, std::size_t per_axis);
CorankReport check_corank1(Context& ctx, const Strata& strata, std::size_t per_axis);

struct DepthCheck {
    std::size_t depth = 0;
    std::size_t points = 0;
    std::size_t condition_i_failures = 0;
    std::size_t condition_ii_failures = 0;
    std::size_t inconclusive = 0;
    std::vector<RankCheck> condition_ii;  // per solved point
    std::vector<Witness> witnesses;
};

struct MorinReport {
    Verdict verdict = Verdict::inconclusive;
    std::vector<DepthCheck> depths;
};

MorinReport check_morin(Context& ctx, const Strata& strata, std::size_t k_max);

// ---- zeros of xi ----

// Uniform unit vector in R^n; attempt selects the draw in the seeded stream.
std::vector<double> draw_covector(std::uint64_t seed, std::size_t attempt, std::size_t n);

struct ZeroRecord {
    Point x;
    std::size_t depth = 0;
    std::vector<double> multipliers;
    std::string chart;
    double residual = 0.0;
    Verdict nondegenerate = Verdict::inconclusive;
    double bordered_det = 0.0;
    double bordered_gap = 0.0;
    int type = -1;
};

std::vector<ZeroRecord> find_xi_zeros(Context& ctx, const Strata& strata, std::span<const double> a);
std::vector<ZeroRecord> find_restricted_zeros(Context& ctx, const Strata& strata, std::size_t depth, std::span<const double> a);
// Solves the depth-k augmented system at a known point (multipliers by least squares, then Newton).
std::optional<ZeroRecord> zero_at(Context& ctx, std::span<const double> x, std::size_t depth, std::span<const double> a);
// Bordered determinant of the augmented Jacobian and its tri-state verdict.
void nondegeneracy(Context& ctx, ZeroRecord& record, std::span<const double> a);

struct ZeroChecks {
    bool zeros_on_sigma1 = true;
    double max_sigma1_residual = 0.0;
    double min_distance_to_sigma2 = -1.0;  // -1 when Sigma^2 is empty
    bool exclusion = true;
    bool restricted_exclusion = true;     // zeros of xi|Sigma^k off Sigma^{k+2}
    bool restricted_exclusion_vacuous = true;
    bool top_forcing = true;              // every A_n point is a zero of xi|Sigma^{n-1}
    bool all_nondegenerate = true;
    bool a1_equivalence = true;           // restricted and unrestricted verdicts agree at A1 zeros
    bool restriction_equivalence = true;  // at A_{k+1} points, depth k and k+1 residuals agree
    std::vector<Witness> failures;
};

struct ZeroAnalysis {
    std::vector<double> a;
    std::vector<ZeroRecord> unrestricted;
    std::map<std::size_t, std::vector<ZeroRecord>> restricted;
    ZeroChecks checks;
    bool generic() const;
};

ZeroAnalysis analyze_zeros(Context& ctx, const Strata& strata, std::span<const double> a);

// ---- Euler characteristic ----

struct Compactness {
    bool ok = false;
    double min_inset = 0.0;  // smallest distance of an M cell to the box boundary, relative to the face width
    std::size_t grid = 0;
    std::string detail;
};

Compactness check_compactness(Context& ctx, std::size_t grid);

struct MorseResult {
    bool ok = false;
    long chi = 0;
    std::vector<double> direction;
    std::size_t attempts = 0;
    std::vector<ZeroRecord> critical_points;
    std::vector<int> indices;  // (-1)^Morse index per critical point
    std::string detail;
};

// Sum of (-1)^index over critical points of a height function on M (surfaces in R^3).
MorseResult euler_via_morse(Context& ctx, std::uint64_t seed);

struct CongruenceReport {
    std::vector<std::vector<double>> draws;  // every covector tried, last one used
    ZeroAnalysis zeros;
    std::size_t unrestricted_count = 0;
    std::map<std::size_t, std::size_t> restricted_counts;
    std::size_t top_points = 0;               // #A_n
    int chi_m_mod2 = 0;
    std::map<std::size_t, long> chi_closure;  // parity for k < n, exact count for k = n
    int rhs_mod2 = 0;
    bool congruence_holds = false;
    std::map<std::size_t, bool> decomposition;  // #Z(xi|Sigma^k) = #A_k zeros + #A_{k+1} zeros
    std::optional<long> chi_curves;             // closed 1-dimensional Sigma^{n-1}
    std::optional<MorseResult> morse;
    Compactness compactness;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::string> notes;
};

CongruenceReport euler_congruence(Context& ctx, const Strata& strata, std::uint64_t seed);

}  // namespace morin::analysis
