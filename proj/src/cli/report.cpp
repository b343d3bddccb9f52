#include "morin/cli.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace morin::cli {

using namespace morin::analysis;

namespace {

// Non-finite margins become strings so the report stays valid JSON without losing them.
Json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Json rank_json(const RankCheck& r) {
    return Json{{"rows", r.rows},
                {"rank", r.rank},
                {"full", r.full},
                {"gap_ratio", number(r.gap)},
                {"determinant", number(r.determinant)},
                {"verdict", to_string(r.verdict)}};
}

Json curve_json(const solver::CurveComponent& c) {
    Json v = Json::array();
    for (const auto& p : c.points) v.push_back(point_json(p));
    return Json{{"closed", c.closed}, {"complete", c.complete}, {"arc_length", number(c.arc_length)}, {"vertices", std::move(v)}};
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

Json point_json(std::span<const double> x) {
    Json p = Json::array();
    for (double v : x) p.push_back(number(v));
    return p;
}

Json witness_json(const Witness& w) { return Json{{"condition", w.condition}, {"x", point_json(w.x)}, {"detail", w.detail}}; }

Json strata_json(const Strata& s) {
    Json levels = Json::array();
    for (const StratumResult& l : s.levels) {
        Json points = Json::array();
        for (std::size_t i = 0; i < l.points.size(); ++i) {
            const Classification& c = l.classes[i];
            Json dims = Json::array();
            for (std::size_t d : c.intersection_dims) dims.push_back(d);
            points.push_back(Json{{"x", point_json(l.points[i].x)},
                                  {"residual", number(l.points[i].residual_norm)},
                                  {"type", c.label()},
                                  {"intersection_dims", std::move(dims)},
                                  {"gap_ratio", number(c.gap)},
                                  {"chart", l.charts[i]}});
        }
        Json curves = Json::array();
        for (const auto& c : l.curves) curves.push_back(curve_json(c));
        Json samples = Json::array();
        for (const auto& p : l.samples) samples.push_back(point_json(p));
        Json degenerate = Json::array();
        for (const auto& w : l.degenerate) degenerate.push_back(witness_json(w));
        levels.push_back(Json{{"depth", l.depth},
                              {"dimension", l.dimension},
                              {"points", std::move(points)},
                              {"curves", std::move(curves)},
                              {"samples", std::move(samples)},
                              {"degenerate", std::move(degenerate)},
                              {"solver",
                               {{"seeds", l.stats.seeds},
                                {"converged", l.stats.converged},
                                {"outside", l.stats.outside},
                                {"audit_rejected", l.stats.audit_rejected},
                                {"duplicates", l.stats.duplicates},
                                {"oracle_cells", l.oracle_cells}}}});
    }
    Json hints = Json::array();
    for (const auto& h : s.hints)
        hints.push_back(Json{{"depth", h.depth}, {"accepted", h.accepted}, {"samples", h.samples}, {"reason", h.reason}});
    return Json{{"levels", std::move(levels)}, {"hints", std::move(hints)}};
}

Json zero_json(const ZeroRecord& z) {
    Json t;
    if (z.type < 0)
        t = "inconclusive";
    else if (z.type == 0)
        t = "regular";
    else
        t = "A" + std::to_string(z.type);
    return Json{{"x", point_json(z.x)},
                {"depth", z.depth},
                {"type", std::move(t)},
                {"multipliers", point_json(z.multipliers)},
                {"chart", z.chart},
                {"residual", number(z.residual)},
                {"nondegenerate", to_string(z.nondegenerate)},
                {"bordered_det", number(z.bordered_det)},
                {"bordered_gap", number(z.bordered_gap)}};
}

Json zero_checks_json(const ZeroChecks& c) {
    Json failures = Json::array();
    for (const auto& w : c.failures) failures.push_back(witness_json(w));
    return Json{{"zeros_on_sigma1", c.zeros_on_sigma1},
                {"max_sigma1_residual", number(c.max_sigma1_residual)},
                {"min_distance_to_sigma2", c.min_distance_to_sigma2 < 0.0 ? Json(nullptr) : number(c.min_distance_to_sigma2)},
                {"exclusion", c.exclusion},
                {"restricted_exclusion", c.restricted_exclusion},
                {"restricted_exclusion_vacuous", c.restricted_exclusion_vacuous},
                {"top_forcing", c.top_forcing},
                {"all_nondegenerate", c.all_nondegenerate},
                {"a1_equivalence", c.a1_equivalence},
                {"restriction_equivalence", c.restriction_equivalence},
                {"failures", std::move(failures)}};
}

Json corank_json(const CorankReport& r) {
    Json counts = Json::object();
    for (const auto& [rank, count] : r.rank_counts) counts[std::to_string(rank)] = count;
    Json v = Json::array();
    for (const auto& w : r.violations) v.push_back(witness_json(w));
    return Json{{"verdict", to_string(r.verdict)}, {"samples", r.samples}, {"rank_counts", std::move(counts)}, {"violations", std::move(v)}};
}

Json morin_json(const MorinReport& r) {
    Json depths = Json::array();
    for (const DepthCheck& d : r.depths) {
        Json ranks = Json::array();
        for (const auto& rc : d.condition_ii) ranks.push_back(rank_json(rc));
        Json w = Json::array();
        for (const auto& x : d.witnesses) w.push_back(witness_json(x));
        depths.push_back(Json{{"depth", d.depth},
                              {"points", d.points},
                              {"condition_i_failures", d.condition_i_failures},
                              {"condition_ii_failures", d.condition_ii_failures},
                              {"inconclusive", d.inconclusive},
                              {"condition_ii", std::move(ranks)},
                              {"witnesses", std::move(w)}});
    }
    return Json{{"verdict", to_string(r.verdict)}, {"depths", std::move(depths)}};
}

Json congruence_json(const CongruenceReport& r) {
    Json draws = Json::array();
    for (const auto& a : r.draws) draws.push_back(point_json(a));
    Json restricted = Json::object();
    for (const auto& [k, c] : r.restricted_counts) restricted[std::to_string(k)] = c;
    Json closure = Json::object();
    for (const auto& [k, c] : r.chi_closure) closure[std::to_string(k)] = c;
    Json decomposition = Json::object();
    for (const auto& [k, ok] : r.decomposition) decomposition[std::to_string(k)] = ok;
    Json zeros = Json::array();
    for (const auto& z : r.zeros.unrestricted) zeros.push_back(zero_json(z));
    for (const auto& [k, v] : r.zeros.restricted)
        for (const auto& z : v) zeros.push_back(zero_json(z));
    Json morse = nullptr;
    if (r.morse) {
        Json pts = Json::array();
        for (std::size_t i = 0; i < r.morse->critical_points.size(); ++i)
            pts.push_back(Json{{"x", point_json(r.morse->critical_points[i].x)}, {"sign", r.morse->indices[i]}});
        morse = Json{{"ok", r.morse->ok},
                     {"chi", r.morse->chi},
                     {"direction", point_json(r.morse->direction)},
                     {"attempts", r.morse->attempts},
                     {"critical_points", std::move(pts)},
                     {"detail", r.morse->detail}};
    }
    return Json{{"verdict", to_string(r.verdict)},
                {"congruence_holds", r.congruence_holds},
                {"chi_m_mod2", r.chi_m_mod2},
                {"chi_closure", std::move(closure)},
                {"rhs_mod2", r.rhs_mod2},
                {"counts", {{"unrestricted", r.unrestricted_count}, {"restricted", std::move(restricted)}, {"top_points", r.top_points}}},
                {"decomposition", std::move(decomposition)},
                {"chi_curves", r.chi_curves ? Json(*r.chi_curves) : Json(nullptr)},
                {"euler_via_morse", std::move(morse)},
                {"compactness",
                 {{"ok", r.compactness.ok}, {"min_inset", number(r.compactness.min_inset)}, {"grid", r.compactness.grid}, {"detail", r.compactness.detail}}},
                {"covector", point_json(r.zeros.a)},
                {"draws", std::move(draws)},
                {"zeros", std::move(zeros)},
                {"checks", zero_checks_json(r.zeros.checks)},
                {"notes", r.notes}};
}

Json oracle_json(const solver::OracleResult& r) {
    Json clusters = Json::array();
    for (const auto& c : r.clusters)
        clusters.push_back(Json{{"centroid", point_json(c.centroid)},
                                {"best_cell", point_json(c.best_cell)},
                                {"extent", number(c.extent)},
                                {"cells", c.cells},
                                {"point_like", c.point_like},
                                {"boundary_inset", number(c.boundary_inset)}});
    return Json{{"clusters", std::move(clusters)},
                {"cells_tested", r.cells_tested},
                {"budget_exhausted", r.budget_exhausted},
                {"discarded", r.discarded},
                {"cell_size", point_json(r.cell_size)}};
}

void write_csv(const std::string& path, std::size_t dim, const std::vector<CsvRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (std::size_t j = 0; j < dim; ++j) f << "x" << j + 1 << ",";
    f << "depth,type\n";
    char buf[32];
    for (const CsvRow& r : rows) {
        for (double v : r.x) {
            std::snprintf(buf, sizeof buf, "%.17g,", v);
            f << buf;
        }
        f << r.depth << "," << r.type << "\n";
    }
}

}  // namespace morin::cli
