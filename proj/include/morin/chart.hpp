#pragma once

#include "morin/linalg.hpp"
#include "morin/scene.hpp"
#include "morin/tape.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace morin::model {

class GenericityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChartSwitchRequest : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PivotSelection {
    std::vector<std::size_t> row_indices;  // ambient coordinates
    std::vector<std::size_t> col_indices;  // coframe members
    double minor_value_at_anchor = 0.0;
};

struct SupplementSelection {
    std::size_t depth = 0;
    std::vector<std::size_t> col_indices;
    double margin = 0.0;  // smallest singular value of the row-normalized stack at the anchor
};

struct StratumChart {
    std::size_t depth = 0;
    PivotSelection pivot;
    std::vector<std::size_t> minor_rows;  // bordering ambient row of each kept minor
    std::vector<SupplementSelection> supplements;
    std::vector<Expr> equations;  // constraints, kept minors, delta_2..delta_k
    std::vector<std::string> labels;
    std::vector<Expr> audits;     // discarded minors
    std::vector<std::vector<Expr>> conormal_gradients;
    Expr pivot_minor;
    std::string key;
    // Layout: equations, gradients (row-major), audits, pivot minor.
    std::shared_ptr<const expr::Tape> tape;
    // Gradients of every bordered minor of the pivot (row-major) and the positions of the kept ones.
    std::shared_ptr<const expr::Tape> minor_gradient_tape;
    std::vector<std::size_t> kept_minors;

    std::size_t equation_count() const { return equations.size(); }
};

struct ChartValues {
    std::vector<double> equations;
    linalg::Mat gradients;
    std::vector<double> audits;
    double pivot = 0.0;
};

bool evaluate_chart(const StratumChart& chart, std::span<const double> x, ChartValues& out);

struct ChartMargins {
    double pivot = 0.0;                 // |pivot minor| over the best candidate minor
    double minors = 1.0;                // conditioning of the kept minors over the best subset
    std::vector<double> supplements;    // per depth, margin over the best candidate margin
    bool evaluated = false;

    double worst() const;
};

// Number of equations of a depth-k chart: c + (m - n + 1) + (k - 1); depth 0 is the constraints alone.
std::size_t equation_count(const Scene& scene, std::size_t depth);

// Unit rows; rows negligible against the largest row become zero.
linalg::Mat normalized_rows(const linalg::Mat& m, double tol);

// dim(<omega> ∩ span(conormal)) inside T*M, with constraint gradients adjoined to both sides.
struct IntersectionDim {
    std::size_t dim = 0;
    double gap = 0.0;
};
IntersectionDim intersection_dimension(const linalg::Mat& omega, const linalg::Mat& constraint_grads,
                                       const linalg::Mat& conormal, double tol);

class Atlas {
public:
    explicit Atlas(const Scene& scene);

    const Scene& scene() const { return scene_; }

    // Numeric evaluation of scene data.
    bool constraints_at(std::span<const double> x, std::vector<double>& g, linalg::Mat& grad) const;
    bool coframe_at(std::span<const double> x, linalg::Mat& omega) const;
    // Coframe rank on T_xM, i.e. rank([omega; grad G]) - c.
    linalg::RankReport coframe_rank(std::span<const double> x) const;

    PivotSelection select_pivot(std::span<const double> anchor) const;
    std::shared_ptr<const StratumChart> build_sigma1_chart(const PivotSelection& pivot, std::span<const double> anchor);
    SupplementSelection select_supplement(const StratumChart& previous, std::span<const double> anchor) const;
    Expr build_delta(const StratumChart& previous, const SupplementSelection& supplement) const;

    // Chart of the given depth whose selections are made at x (cached by selection key).
    std::shared_ptr<const StratumChart> chart_at(std::span<const double> x, std::size_t depth);
    // Charts for depths 1..k_max anchored at each anchor; anchors that leave a stratum stop early.
    std::vector<std::shared_ptr<const StratumChart>> build_chain(std::size_t k_max, const std::vector<std::vector<double>>& anchors);
    // Keeps the current chart while its margins stay above the switching threshold.
    std::shared_ptr<const StratumChart> keep_or_switch(const std::shared_ptr<const StratumChart>& current, std::span<const double> x);

    ChartMargins margins(const StratumChart& chart, std::span<const double> x) const;
    bool chart_valid(const StratumChart& chart, std::span<const double> x, double threshold = 1e-3) const;

    // Hint handling: audit against automatic deltas at stratum samples, then install.
    struct HintAudit {
        bool accepted = false;
        std::size_t samples = 0;
        std::string reason;
    };
    HintAudit audit_hint(std::size_t depth, const std::vector<std::vector<double>>& samples);
    bool hint_active(std::size_t depth) const;

    std::size_t chart_count() const;
    double tol() const { return scene_.tol.rank; }

    static constexpr double kSwitchRatio = 0.25;

private:
    struct Sigma1Family {
        PivotSelection pivot;
        Expr pivot_minor;
        std::vector<std::size_t> rows;  // bordering rows, ascending
        std::vector<Expr> minors;
        std::vector<std::vector<Expr>> gradients;
        std::shared_ptr<const expr::Tape> gradient_tape;
    };

    std::shared_ptr<const Sigma1Family> family(const PivotSelection& pivot);
    std::shared_ptr<const StratumChart> finish(std::shared_ptr<StratumChart> chart);
    std::shared_ptr<const StratumChart> extend(const std::shared_ptr<const StratumChart>& previous, std::span<const double> x, bool use_hints);
    std::shared_ptr<const StratumChart> chart_at_impl(std::span<const double> x, std::size_t depth, bool use_hints);
    double best_pivot_abs(const linalg::Mat& omega) const;
    // Newton projection onto the zero set of all but the last chart equation.
    bool project_to_lower(const StratumChart& chart, std::vector<double>& y) const;
    double minor_margin(const StratumChart& chart, std::span<const double> x, const ChartValues& vals) const;

    Scene scene_;
    expr::Tape constraint_tape_;  // G then grad G row-major
    expr::Tape coframe_tape_;
    mutable std::recursive_mutex mutex_;
    std::map<std::string, std::shared_ptr<const Sigma1Family>> families_;
    std::map<std::string, std::shared_ptr<const StratumChart>> charts_;
    std::map<std::size_t, bool> hints_active_;
};

std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k);

}  // namespace morin::model
